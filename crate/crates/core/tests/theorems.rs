use poset_hdx::constructors::{from_facets, grassmannian, jitter_weights, standard, BipartiteGraphSpec, FacetList};
use poset_hdx::poset::{Cochain, WeightedPoset};
use poset_hdx::properties::check_ul;
use poset_hdx::theorems::*;
use poset_hdx::HdxError;

fn delta4() -> WeightedPoset {
    standard(from_facets(&FacetList::complete(5, 2).unwrap()).unwrap()).unwrap()
}

fn f24() -> WeightedPoset {
    standard(grassmannian(2, 4, 2).unwrap().poset).unwrap()
}

fn hexagon_fan() -> FacetList {
    FacetList::new((1..=6).map(|i| vec![0, i, i % 6 + 1]).collect()).unwrap()
}

#[test]
fn localization_identities_on_complete_fixtures() {
    for wp in [delta4(), f24()] {
        let ul = check_ul(&wp);
        for (k, l) in [(-1, 0), (-1, 2), (0, 1), (0, 2), (1, 2)] {
            let r = verify_basic_localization(&wp, k, l, 20, 1).unwrap();
            assert!(r.pass, "basic ({k},{l}): {:?}", r.residuals);
        }
        for l in 0..2 {
            assert!(verify_up_localization(&wp, &ul, l, 20, 2).unwrap().pass);
            assert!(verify_adjacency_localization(&wp, l, 20, 3).unwrap().pass);
        }
        let t = verify_trickling_localization(&wp, 20, 4).unwrap();
        assert!(t.pass, "{:?}", t.residuals);
    }
}

#[test]
fn smallest_link_reduces_to_plain_inner_product() {
    let r = verify_basic_localization(&f24(), -1, 1, 10, 7).unwrap();
    assert!(r.residuals["inner_product"] < 1e-14);
}

#[test]
fn jittered_weights_use_the_approximate_bound() {
    let wp = jitter_weights(&delta4(), 0.01, 0.01, 11);
    let ul = check_ul(&wp);
    assert!(!ul.exact);
    let r = verify_up_localization(&wp, &ul, 1, 100, 5).unwrap();
    assert_eq!(r.details["mode"], "approximate");
    assert!(r.pass, "{}", r.details);
    assert!(matches!(verify_trickling_localization(&wp, 5, 0), Err(HdxError::NonStandardScheme | HdxError::TLViolated(_))));
}

#[test]
fn decomposition_bound_on_delta4() {
    let wp = delta4();
    let ul = check_ul(&wp);
    let b = bound_up_norm(&wp, &ul, 1, &[0.5, 0.5]).unwrap();
    assert!((b.bound - 2.0 / 3.0).abs() < 1e-10, "{}", b.bound);
    assert!((b.measured - 4.0 / 9.0).abs() < 1e-10);
    assert!(b.verdict);
    assert_eq!(b.details["top_eigenvector"]["pass"], true);
}

#[test]
fn decomposition_bound_on_grassmannian() {
    let wp = f24();
    let ul = check_ul(&wp);
    let b = bound_up_norm(&wp, &ul, 1, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
    assert!((b.bound - 3.0 / 7.0).abs() < 1e-10, "{}", b.bound);
    // (6/7)·(1/6) + 1/7 from the q-Johnson graph on lines
    assert!((b.measured - 2.0 / 7.0).abs() < 1e-10, "{}", b.measured);
    assert!(b.verdict);
}

#[test]
fn decomposition_rejects_constants() {
    let wp = delta4();
    let ul = check_ul(&wp);
    let ones = Cochain::new(1, vec![1.0; 10]);
    assert!(matches!(ko_decomposition(&wp, &ul, 1, &[0.5, 0.5], &ones), Err(HdxError::NotMeanZero(_))));
}

#[test]
fn alev_lau_on_grassmannian() {
    let b = alev_lau_bound(&f24(), 1).unwrap();
    assert!(b.verdict, "{b:?}");
}

#[test]
fn trickling_is_attained_on_complete_fixtures() {
    let t = trickle_verify(&delta4()).unwrap();
    assert_eq!(t.mode, "structural");
    let root = t.levels.last().unwrap();
    assert!((root.hi + 0.25).abs() < 1e-10 && (root.measured_max + 0.25).abs() < 1e-10);
    assert!(t.verdict);
    let t = trickle_verify(&f24()).unwrap();
    let root = t.levels.last().unwrap();
    assert!((root.hi + 1.0 / 14.0).abs() < 1e-10);
    assert!((root.measured_max + 1.0 / 14.0).abs() < 1e-10);
    assert_eq!(root.fixed_points.len(), 2);
    assert!((root.fixed_points[1] - 0.5).abs() < 1e-12);
}

#[test]
fn eposet_forward_is_tight() {
    let b = eposet_forward(&delta4()).unwrap();
    assert!((b.measured - 2.0 / 9.0).abs() < 1e-10 && (b.bound - 2.0 / 9.0).abs() < 1e-10);
    assert!(b.verdict);
    let b = eposet_forward(&f24()).unwrap();
    assert!((b.measured - 1.0 / 7.0).abs() < 1e-10 && (b.bound - 1.0 / 7.0).abs() < 1e-10);
}

#[test]
fn eposet_converse_runs_on_grassmannian() {
    assert!(at_most_one_common_cover(&f24()));
    assert!(eposet_converse(&f24()).unwrap().verdict);
}

#[test]
fn eposet_decomposition_reconstructs() {
    let wp = delta4();
    let f = Cochain::new(1, (0..10).map(|i| (i as f64 * 1.7).sin()).collect());
    let dec = eposet_decomposition(&wp, 1, &f, None).unwrap();
    assert_eq!(dec.components.len(), 3);
    assert!(dec.reconstruction_residual < 1e-10);
    let ones = Cochain::new(1, vec![1.0; 10]);
    let dec = eposet_decomposition(&wp, 1, &ones, None).unwrap();
    assert!(dec.component_norms[1] < 1e-10 && dec.component_norms[2] < 1e-10);
    assert!(dec.components[0].values.iter().all(|v| (v - 1.0).abs() < 1e-10));
}

#[test]
fn posetified_simplex_matches_grassmannian_links() {
    let x = FacetList::new(vec![vec![1, 2, 3]]).unwrap();
    let rep = posetification_certificate(&x, 2).unwrap();
    assert!(rep.oracle_pass && rep.lambda_min_ok && rep.verdict, "{rep:?}");
}

#[test]
fn hexagon_vertex_link_matches_gprime() {
    let rep = posetification_certificate(&hexagon_fan(), 2).unwrap();
    let want = posetification_link_oracle(&OracleCase::Gprime(BipartiteGraphSpec::cycle(6).unwrap()), 2).unwrap();
    let hub = rep
        .rows
        .iter()
        .find(|r| matches!(r.case, LinkCase::Gprime { vertices: 6, edges: 6 }))
        .expect("C_6 link present");
    assert!(hub.pass, "{hub:?}");
    let oracle = hub.oracle.as_ref().unwrap();
    assert!(oracle.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(rep.oracle_pass && rep.lambda_min_ok, "{rep:?}");
}
