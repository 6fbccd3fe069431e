use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use poset_hdx::constructors::{from_facets, gaussian_binomial, grassmannian, jitter_weights, standard, FacetList};
use poset_hdx::io::{parse_poset, poset_to_json};
use poset_hdx::linalg::jacobi_eigen;
use poset_hdx::operators::{down_operator, down_up_walk, up_down_walk, up_operator, weighted_inner_product};
use poset_hdx::poset::validate_poset;
use poset_hdx::spectral::{nonzero_eigenvalues, weighted_spectrum};
use poset_hdx::theorems::{fixed_points, posetification_link_oracle, random_cochain, trickle_map, OracleCase};
use poset_hdx::WeightedPoset;

fn triangles(n: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push(vec![a, b, c]);
            }
        }
    }
    out
}

/// A nonempty set of triangles on six vertices, optionally with jittered weights.
fn complex() -> impl Strategy<Value = WeightedPoset> {
    let all = triangles(6);
    (proptest::sample::subsequence(all.clone(), 1..=all.len()), any::<u64>(), prop::bool::ANY).prop_map(|(facets, seed, jit)| {
        let wp = standard(from_facets(&FacetList::new(facets).unwrap()).unwrap()).unwrap();
        if jit {
            jitter_weights(&wp, 0.2, 0.2, seed)
        } else {
            wp
        }
    })
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobi_agrees_with_nalgebra(m in (1usize..12).prop_flat_map(symmetric)) {
        let ours = jacobi_eigen(&m);
        let theirs = sorted_desc(SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect());
        for (a, b) in ours.values.iter().zip(&theirs) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        // columns are eigenvectors
        for (i, &l) in ours.values.iter().enumerate() {
            let v = ours.vectors.column(i);
            prop_assert!((&m * v - v * l).norm() < 1e-8);
        }
    }

    #[test]
    fn weights_are_valid_and_round_trip(wp in complex()) {
        prop_assert!(validate_poset(&wp.poset, &wp.weights).is_valid());
        let back = parse_poset(&poset_to_json(&wp).unwrap()).unwrap();
        for x in wp.poset.ids() {
            prop_assert!((back.m(x) - wp.m(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn up_and_down_are_adjoint(wp in complex(), seed in any::<u64>()) {
        for k in -1..wp.d() {
            let f = random_cochain(&wp, k, seed);
            let g = random_cochain(&wp, k + 1, seed ^ 1);
            let uf = up_operator(&wp, k).unwrap().apply(&f).unwrap();
            let dg = down_operator(&wp, k + 1).unwrap().apply(&g).unwrap();
            let lhs = weighted_inner_product(&wp, &uf, &g).unwrap();
            let rhs = weighted_inner_product(&wp, &f, &dg).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_spectra_are_stochastic_and_paired(wp in complex()) {
        for k in -1..wp.d() {
            let op = up_down_walk(&wp, k).unwrap();
            let plus = weighted_spectrum(&op).unwrap();
            prop_assert!(plus.eigenvalues.iter().all(|&l| (-1e-10..=1.0 + 1e-10).contains(&l)));
            // independent eigensolver on the symmetrized matrix
            let theirs = sorted_desc(SymmetricEigen::new(op.symmetrized()).eigenvalues.iter().copied().collect());
            for (a, b) in plus.eigenvalues.iter().zip(&theirs) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let minus = weighted_spectrum(&down_up_walk(&wp, k + 1).unwrap()).unwrap();
            let (a, b) = (nonzero_eigenvalues(&plus, 1e-9), nonzero_eigenvalues(&minus, 1e-9));
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn oracle_multisets_are_traceless(p in 1usize..5, q in 2usize..6) {
        let s = posetification_link_oracle(&OracleCase::Bouquet { p }, q).unwrap();
        prop_assert_eq!(s.len(), p * q + 1);
        prop_assert!(s.iter().sum::<f64>().abs() < 1e-10);
        let s = posetification_link_oracle(&OracleCase::Single, q).unwrap();
        prop_assert!(s.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn fixed_points_are_fixed(c in 0.05f64..2.0, b in 0.0f64..0.2) {
        for x in fixed_points(c, b) {
            prop_assert!((trickle_map(x, c, b) - x).abs() < 1e-9);
        }
    }
}

#[test]
fn grassmannian_levels_are_gaussian_binomials() {
    for (q, n, d) in [(2usize, 4usize, 2i32), (3, 3, 1), (2, 5, 2)] {
        let g = grassmannian(q, n, d).unwrap();
        for i in 0..=d {
            let want = gaussian_binomial(n as u32, (i + 1) as u32, q as u64).unwrap();
            assert_eq!(g.poset.level_size(i) as u128, want, "q={q} n={n} rank {i}");
        }
    }
}
