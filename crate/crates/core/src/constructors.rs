//! Builders: simplicial complexes, Grassmannian posets, posetifications,
//! and the small graphs that appear as posetification links.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HdxError, Result};
use crate::field::GaloisField;
use crate::operators::LinearOp;
use crate::par;
use crate::poset::{GradedPoset, WeightScheme, WeightedPoset};

pub const DEFAULT_MAX_ELEMENTS: usize = 200_000;
pub const MAX_ELEMENTS_ENV: &str = "POSET_HDX_MAX_ELEMENTS";

/// Element cap from the environment, falling back to the default.
pub fn element_cap() -> usize {
    std::env::var(MAX_ELEMENTS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_ELEMENTS)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FacetList {
    pub facets: Vec<Vec<u32>>,
}

impl FacetList {
    pub fn new(facets: Vec<Vec<u32>>) -> Result<Self> {
        if facets.is_empty() {
            return Err(HdxError::BadArgs("no facets".into()));
        }
        let mut out = Vec::with_capacity(facets.len());
        for f in facets {
            let mut s = f.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != f.len() {
                return Err(HdxError::BadArgs(format!("facet {f:?} repeats a vertex")));
            }
            if s.is_empty() {
                return Err(HdxError::BadArgs("empty facet".into()));
            }
            out.push(s);
        }
        let size = out[0].len();
        if let Some(f) = out.iter().find(|f| f.len() != size) {
            return Err(HdxError::NonPure(size, f.len()));
        }
        out.sort();
        out.dedup();
        Ok(FacetList { facets: out })
    }

    pub fn dim(&self) -> i32 {
        self.facets[0].len() as i32 - 1
    }
    pub fn vertices(&self) -> Vec<u32> {
        let s: BTreeSet<u32> = self.facets.iter().flatten().copied().collect();
        s.into_iter().collect()
    }
    pub fn n(&self) -> usize {
        self.vertices().len()
    }

    /// All (k+1)-subsets of [n] as facets.
    pub fn complete(n: u32, k: usize) -> Result<Self> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: u32, n: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for v in start..=n {
                cur.push(v);
                rec(v + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(1, n, k + 1, &mut cur, &mut out);
        FacetList::new(out)
    }

    /// Thickness: max over codimension-one faces of (#facets containing it − 1).
    pub fn thickness(&self) -> usize {
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for f in &self.facets {
            for skip in 0..f.len() {
                let face: Vec<u32> = f.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
                *counts.entry(face).or_default() += 1;
            }
        }
        counts.values().max().copied().unwrap_or(1).saturating_sub(1)
    }

    /// Faces of the complex, i.e. every subset of a facet.
    pub fn contains_face(&self, face: &[u32]) -> bool {
        self.facets.iter().any(|f| face.iter().all(|v| f.binary_search(v).is_ok()))
    }
}

pub fn face_label(face: &[u32]) -> String {
    let parts: Vec<String> = face.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Poset of all faces of the complex, ranked by |A| − 1.
pub fn from_facets(facets: &FacetList) -> Result<GradedPoset> {
    from_facets_capped(facets, element_cap())
}

pub fn from_facets_capped(facets: &FacetList, cap: usize) -> Result<GradedPoset> {
    let mut faces: BTreeSet<Vec<u32>> = BTreeSet::new();
    for f in &facets.facets {
        let k = f.len();
        for mask in 0u64..(1u64 << k) {
            let s: Vec<u32> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| f[i]).collect();
            faces.insert(s);
        }
        if faces.len() > cap {
            return Err(HdxError::ResourceLimit { needed: faces.len() as u128, cap });
        }
    }
    let faces: Vec<Vec<u32>> = faces.into_iter().collect();
    let index: HashMap<&Vec<u32>, usize> = faces.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let mut covers = Vec::new();
    for (i, f) in faces.iter().enumerate() {
        for skip in 0..f.len() {
            let sub: Vec<u32> = f.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &v)| v).collect();
            covers.push((index[&sub], i));
        }
    }
    let elements = faces.iter().map(|f| (f.len() as i32 - 1, face_label(f))).collect();
    Ok(GradedPoset::from_parts(elements, &covers)?.0)
}

/// p(y→x) = 1/NN(y), m propagated from the (normalized) top weights.
/// `top_weights` is aligned with level d; `None` means uniform.
pub fn standard_weight_scheme(poset: &GradedPoset, top_weights: Option<&[f64]>) -> Result<WeightScheme> {
    let ntop = poset.level_size(poset.d());
    let top = match top_weights {
        Some(t) if t.len() != ntop => {
            return Err(HdxError::BadArgs(format!("{} top weights for {} top elements", t.len(), ntop)))
        }
        Some(t) if t.iter().any(|&w| !(w > 0.0)) => {
            return Err(HdxError::BadArgs("top weights must be positive".into()))
        }
        Some(t) => t.to_vec(),
        None => vec![1.0; ntop],
    };
    let p = poset
        .ids()
        .map(|y| {
            let nn = poset.nn(y);
            vec![1.0 / nn as f64; nn]
        })
        .collect();
    Ok(WeightScheme::propagate(poset, p, &top))
}

pub fn standard(poset: GradedPoset) -> Result<WeightedPoset> {
    let w = standard_weight_scheme(&poset, None)?;
    Ok(WeightedPoset::new(poset, w))
}

/// Multiplies every top weight and every transition probability by an
/// independent factor in [1 − rel, 1 + rel], renormalizes, and re-propagates m.
pub fn jitter_weights(wp: &WeightedPoset, top_rel: f64, p_rel: f64, seed: u64) -> WeightedPoset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poset = &wp.poset;
    let top: Vec<f64> = poset
        .level(poset.d())
        .iter()
        .map(|&y| wp.m(y) * (1.0 + top_rel * rng.gen_range(-1.0..=1.0)))
        .collect();
    let p: Vec<Vec<f64>> = poset
        .ids()
        .map(|y| {
            let raw: Vec<f64> =
                wp.weights.p[y.idx()].iter().map(|&v| v * (1.0 + p_rel * rng.gen_range(-1.0..=1.0))).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    WeightedPoset::new(poset.clone(), WeightScheme::propagate(poset, p, &top))
}

/// [n choose k]_q.
pub fn gaussian_binomial(n: u32, k: u32, q: u64) -> Result<u128> {
    if k > n {
        return Err(HdxError::BadArgs(format!("k = {k} > n = {n}")));
    }
    if q < 2 {
        return Err(HdxError::BadArgs(format!("q = {q} < 2")));
    }
    let q = q as u128;
    let overflow = || HdxError::BadArgs("gaussian binomial overflows u128".into());
    // product of (q^{n-i} - 1)/(q^{i+1} - 1), kept exact by multiplying first
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        let a = q.checked_pow(n - i).ok_or_else(overflow)? - 1;
        let b = q.checked_pow(i + 1).ok_or_else(overflow)? - 1;
        num = num.checked_mul(a).ok_or_else(overflow)?;
        den = den.checked_mul(b).ok_or_else(overflow)?;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    Ok(num / den)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// [n]_q = 1 + q + … + q^{n−1}.
pub fn q_integer(n: i64, q: f64) -> f64 {
    (0..n.max(0)).map(|i| q.powi(i as i32)).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubspaceCode {
    pub q: usize,
    pub n: usize,
    /// k × n RREF, row-major.
    pub rows: Vec<u8>,
}

impl SubspaceCode {
    pub fn dim(&self) -> usize {
        self.rows.len() / self.n
    }
    /// Row-major digit string base q; the zero space is "0".
    pub fn label(&self) -> String {
        if self.rows.is_empty() {
            return "0".into();
        }
        let digits = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
        let rows: Vec<String> = self
            .rows
            .chunks(self.n)
            .map(|r| r.iter().map(|&c| digits[c as usize] as char).collect())
            .collect();
        rows.join("|")
    }
    /// Coordinates on which some basis vector is nonzero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| self.rows.chunks(self.n).any(|r| r[j] != 0)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SubspacePoset {
    pub poset: GradedPoset,
    /// Aligned with element ids.
    pub codes: Vec<SubspaceCode>,
    pub field: GaloisField,
}

fn assemble_subspaces(field: &GaloisField, n: usize, spaces: Vec<Vec<u8>>) -> Result<SubspacePoset> {
    let q = field.q();
    let index: HashMap<&Vec<u8>, usize> = spaces.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let hyper: Vec<Vec<usize>> = par::map(&spaces, |s| {
        let k = s.len() / n;
        field.hyperplanes(s, k, n).iter().map(|h| index[h]).collect()
    });
    let mut covers = Vec::new();
    for (i, hs) in hyper.iter().enumerate() {
        for &h in hs {
            covers.push((h, i));
        }
    }
    let codes: Vec<SubspaceCode> = spaces.iter().map(|s| SubspaceCode { q, n, rows: s.clone() }).collect();
    let elements = codes.iter().map(|c| (c.dim() as i32 - 1, c.label())).collect();
    let (poset, new_id) = GradedPoset::from_parts(elements, &covers)?;
    let mut ordered = codes.clone();
    for (i, c) in codes.into_iter().enumerate() {
        ordered[new_id[i].idx()] = c;
    }
    Ok(SubspacePoset { poset, codes: ordered, field: field.clone() })
}

/// All subspaces of F_q^n of dimension at most d+1, ranked by dim − 1.
pub fn grassmannian(q: usize, n: usize, d: i32) -> Result<SubspacePoset> {
    grassmannian_capped(q, n, d, element_cap())
}

pub fn grassmannian_capped(q: usize, n: usize, d: i32, cap: usize) -> Result<SubspacePoset> {
    let field = GaloisField::new(q)?;
    if d < 0 || d as usize > n.saturating_sub(1) {
        return Err(HdxError::BadArgs(format!("need 0 <= d <= n-1, got d = {d}, n = {n}")));
    }
    let mut total: u128 = 0;
    for k in 0..=(d as u32 + 1) {
        total += gaussian_binomial(n as u32, k, q as u64)?;
    }
    if total > cap as u128 {
        return Err(HdxError::ResourceLimit { needed: total, cap });
    }
    let mut spaces = Vec::new();
    for k in 0..=(d as usize + 1) {
        spaces.extend(field.subspaces(n, k));
    }
    assemble_subspaces(&field, n, spaces)
}

/// V_X: subspaces of F_q^n inside some coordinate subspace V_I, I a facet.
/// Coordinates follow the sorted vertex order of X. Top weights are uniform
/// unless `facet_weights` (aligned with `x.facets`) is given; see
/// [`posetify_weights`].
pub fn posetify(x: &FacetList, q: usize) -> Result<SubspacePoset> {
    posetify_capped(x, q, element_cap())
}

pub fn posetify_capped(x: &FacetList, q: usize, cap: usize) -> Result<SubspacePoset> {
    let field = GaloisField::new(q)?;
    let verts = x.vertices();
    let n = verts.len();
    let coord: HashMap<u32, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let dd = x.dim() as usize + 1;
    let local: Vec<Vec<u8>> = (0..=dd).flat_map(|k| field.subspaces(dd, k)).collect();
    if local.len() as u128 > cap as u128 {
        return Err(HdxError::ResourceLimit { needed: local.len() as u128, cap });
    }
    let per_facet: Vec<Vec<Vec<u8>>> = par::map(&x.facets, |f| {
        let cols: Vec<usize> = f.iter().map(|v| coord[v]).collect();
        local
            .iter()
            .map(|s| {
                let k = s.len() / dd;
                let mut big = vec![0u8; k * n];
                for r in 0..k {
                    for (j, &c) in cols.iter().enumerate() {
                        big[r * n + c] = s[r * dd + j];
                    }
                }
                big
            })
            .collect()
    });
    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    for batch in per_facet {
        seen.extend(batch);
        if seen.len() > cap {
            return Err(HdxError::ResourceLimit { needed: seen.len() as u128, cap });
        }
    }
    assemble_subspaces(&field, n, seen.into_iter().collect())
}

/// Standard weights on V_X with m(V_I) proportional to the facet weight of I.
pub fn posetify_weights(vx: &SubspacePoset, x: &FacetList, facet_weights: Option<&[f64]>) -> Result<WeightedPoset> {
    let verts = x.vertices();
    let top = vx.poset.level(vx.poset.d());
    let fw: BTreeMap<Vec<u32>, f64> = x
        .facets
        .iter()
        .enumerate()
        .map(|(i, f)| (f.clone(), facet_weights.map(|w| w[i]).unwrap_or(1.0)))
        .collect();
    let mut tw = Vec::with_capacity(top.len());
    for &t in top {
        let face: Vec<u32> = vx.codes[t.idx()].support().iter().map(|&c| verts[c]).collect();
        let w = fw
            .get(&face)
            .ok_or_else(|| HdxError::BadArgs(format!("top space {} is not a coordinate facet", vx.poset.label(t))))?;
        tw.push(*w);
    }
    let w = standard_weight_scheme(&vx.poset, Some(&tw))?;
    Ok(WeightedPoset::new(vx.poset.clone(), w))
}

/// Undirected simple graph with uniform edge weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteGraphSpec {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = BipartiteGraphSpec { n, edges };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 || self.edges.is_empty() {
            return Err(HdxError::BadArgs("graph needs vertices and edges".into()));
        }
        for &(u, v) in &self.edges {
            if u >= self.n || v >= self.n || u == v {
                return Err(HdxError::BadArgs(format!("bad edge ({u},{v})")));
            }
        }
        let side = self.two_coloring().ok_or(HdxError::NotBipartite)?;
        if side.iter().any(|s| s.is_none()) {
            return Err(HdxError::BadArgs("graph is not connected".into()));
        }
        Ok(())
    }

    fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// Side of each vertex reachable from vertex 0; None for unreachable.
    /// Returns None if an odd cycle is found.
    pub fn two_coloring(&self) -> Option<Vec<Option<bool>>> {
        let adj = self.adjacency_lists();
        let mut side = vec![None; self.n];
        let mut stack = vec![0];
        side[0] = Some(false);
        while let Some(u) = stack.pop() {
            let s = side[u].unwrap();
            for &v in &adj[u] {
                match side[v] {
                    None => {
                        side[v] = Some(!s);
                        stack.push(v);
                    }
                    Some(t) if t == s => return None,
                    _ => {}
                }
            }
        }
        Some(side)
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (0..n - 1).map(|i| (i, i + 1)).collect())
    }
    pub fn cycle(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    /// Simple random walk D⁻¹A.
    pub fn random_walk(&self) -> LinearOp {
        walk_of_edges(self.n, &self.edges)
    }
}

fn walk_of_edges(n: usize, edges: &[(usize, usize)]) -> LinearOp {
    let mut a = DMatrix::zeros(n, n);
    for &(u, v) in edges {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    let total: f64 = deg.iter().sum();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] /= deg[i];
        }
    }
    let pi: Vec<f64> = deg.iter().map(|d| d / total).collect();
    LinearOp { source: 0, target: 0, matrix: a, source_weights: pi.clone(), target_weights: pi }
}

fn clique_edges(vs: &[usize], edges: &mut Vec<(usize, usize)>) {
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            edges.push((vs[i], vs[j]));
        }
    }
}

/// p copies of K_{q+1} glued at one hub (last vertex); simple random walk.
pub fn bouquet_graph(p: usize, q: usize) -> Result<LinearOp> {
    if p < 1 || q < 2 {
        return Err(HdxError::BadArgs(format!("bouquet needs p >= 1, q >= 2 (got p = {p}, q = {q})")));
    }
    let hub = p * q;
    let mut edges = Vec::new();
    for b in 0..p {
        let mut vs: Vec<usize> = (b * q..(b + 1) * q).collect();
        vs.push(hub);
        clique_edges(&vs, &mut edges);
    }
    Ok(walk_of_edges(p * q + 1, &edges))
}

/// G′ on V ∪ E×[q−1]: each edge {u,v} becomes a clique on u, v and its q−1
/// new vertices. Simple random walk.
pub fn link_graph_gprime(g: &BipartiteGraphSpec, q: usize) -> Result<LinearOp> {
    g.check()?;
    if q < 2 {
        return Err(HdxError::BadArgs(format!("q = {q} < 2")));
    }
    let m = g.n;
    let mut edges = Vec::new();
    for (e, &(u, v)) in g.edges.iter().enumerate() {
        let mut vs = vec![u, v];
        vs.extend((1..q).map(|i| m + e * (q - 1) + (i - 1)));
        clique_edges(&vs, &mut edges);
    }
    Ok(walk_of_edges(m + g.edges.len() * (q - 1), &edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_two_complex_on_five() {
        let p = from_facets(&FacetList::complete(5, 2).unwrap()).unwrap();
        let sizes: Vec<usize> = (-1..=2).map(|i| p.level_size(i)).collect();
        assert_eq!(sizes, vec![1, 5, 10, 10]);
    }

    #[test]
    fn small_facet_lists() {
        let p = from_facets(&FacetList::new(vec![vec![1, 2]]).unwrap()).unwrap();
        assert_eq!(p.len(), 4);
        let p = from_facets(&FacetList::new(vec![vec![1, 2], vec![2, 3]]).unwrap()).unwrap();
        assert_eq!(p.len(), 6);
        assert!(p.find_label("{1,3}").is_none());
        assert!(matches!(FacetList::new(vec![vec![1, 2, 3], vec![3, 4]]), Err(HdxError::NonPure(3, 2))));
    }

    #[test]
    fn gaussian_binomials() {
        assert_eq!(gaussian_binomial(3, 1, 2).unwrap(), 7);
        assert_eq!(gaussian_binomial(4, 2, 2).unwrap(), 35);
        assert_eq!(gaussian_binomial(6, 0, 3).unwrap(), 1);
        assert_eq!(gaussian_binomial(5, 2, 3).unwrap(), 1210);
        assert!(gaussian_binomial(2, 3, 2).is_err());
    }

    #[test]
    fn standard_weights_on_single_edge() {
        let p = from_facets(&FacetList::new(vec![vec![1, 2]]).unwrap()).unwrap();
        let w = standard_weight_scheme(&p, None).unwrap();
        for &v in p.level(0) {
            assert!((w.m(v) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn grassmannian_levels() {
        let g = grassmannian(2, 3, 1).unwrap();
        assert_eq!((-1..=1).map(|i| g.poset.level_size(i)).collect::<Vec<_>>(), vec![1, 7, 7]);
        let g = grassmannian(2, 4, 2).unwrap();
        assert_eq!((-1..=2).map(|i| g.poset.level_size(i)).collect::<Vec<_>>(), vec![1, 15, 35, 15]);
        assert!(matches!(grassmannian_capped(2, 4, 2, 50), Err(HdxError::ResourceLimit { .. })));
    }

    #[test]
    fn posetify_single_edge() {
        let x = FacetList::new(vec![vec![1, 2]]).unwrap();
        let v = posetify(&x, 2).unwrap();
        assert_eq!((-1..=1).map(|i| v.poset.level_size(i)).collect::<Vec<_>>(), vec![1, 3, 1]);
    }

    #[test]
    fn thickness_of_complete_complex() {
        // each edge of the complete 2-complex on 5 vertices lies in 3 triangles
        assert_eq!(FacetList::complete(5, 2).unwrap().thickness(), 2);
    }

    #[test]
    fn gprime_rejects_odd_cycle() {
        let tri = BipartiteGraphSpec { n: 3, edges: vec![(0, 1), (1, 2), (2, 0)] };
        assert!(matches!(link_graph_gprime(&tri, 2), Err(HdxError::NotBipartite)));
    }
}
