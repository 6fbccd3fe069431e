use std::collections::BTreeMap;

use serde::Serialize;

use crate::constructors::{posetify, posetify_weights, BipartiteGraphSpec, FacetList, SubspacePoset};
use crate::error::{HdxError, Result};
use crate::poset::ElementId;
use crate::spectral::{certify_two_sided, link_spectra, weighted_spectrum, ExpansionCertificate, CERT_TOL};

/// Agreement required between a measured link spectrum and its oracle.
pub const ORACLE_TOL: f64 = 1e-9;

/// The three shapes a rank-(d−2) link of V_X can take.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleCase {
    /// Support is a facet: the link is K_{q+1}.
    Single,
    /// Support is a ridge in p facets.
    Bouquet { p: usize },
    /// Support is a codimension-2 face whose link in X is G.
    Gprime(BipartiteGraphSpec),
}

/// Serializable summary of an [`OracleCase`].
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "case", rename_all = "lowercase")]
pub enum LinkCase {
    Single,
    Bouquet { p: usize },
    Gprime { vertices: usize, edges: usize },
    /// The link graph of the support is not connected and bipartite.
    Unsupported { reason: String },
}

impl From<&OracleCase> for LinkCase {
    fn from(c: &OracleCase) -> Self {
        match c {
            OracleCase::Single => LinkCase::Single,
            OracleCase::Bouquet { p } => LinkCase::Bouquet { p: *p },
            OracleCase::Gprime(g) => LinkCase::Gprime { vertices: g.n, edges: g.edges.len() },
        }
    }
}

fn desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Closed-form level-0 adjacency spectrum of a rank-(d−2) link, descending.
pub fn posetification_link_oracle(case: &OracleCase, q: usize) -> Result<Vec<f64>> {
    if q < 2 {
        return Err(HdxError::BadArgs(format!("q = {q} < 2")));
    }
    let qf = q as f64;
    let low = -1.0 / qf;
    let mut out = vec![];
    match case {
        OracleCase::Single => {
            out.push(1.0);
            out.extend(std::iter::repeat_n(low, q));
        }
        OracleCase::Bouquet { p } => {
            let p = *p;
            if p < 1 {
                return Err(HdxError::BadArgs("bouquet needs p >= 1".into()));
            }
            out.push(1.0);
            out.extend(std::iter::repeat_n((qf - 1.0) / qf, p - 1));
            // the last −1/q completes the trace
            out.extend(std::iter::repeat_n(low, p * q - p + 1));
        }
        OracleCase::Gprime(g) => {
            let g = BipartiteGraphSpec::new(g.n, g.edges.clone())?;
            let (m, e) = (g.n, g.edges.len());
            if e + 1 < m {
                return Err(HdxError::BadArgs("graph has fewer than m-1 edges".into()));
            }
            out.extend(std::iter::repeat_n((qf - 2.0) / qf, e + 1 - m));
            out.extend(std::iter::repeat_n(low, (q - 2) * e + m));
            let spec = weighted_spectrum(&g.random_walk())?;
            // drop the bottom eigenvalue −1 of the bipartite walk
            out.extend(spec.eigenvalues.iter().take(m - 1).map(|l| (qf - 1.0 + l) / qf));
        }
    }
    Ok(desc(out))
}

/// Link graph of the face `j` (sorted vertices) in X, on relabelled vertices.
fn link_graph(x: &FacetList, j: &[u32]) -> (usize, Vec<(usize, usize)>) {
    let mut ids: BTreeMap<u32, usize> = BTreeMap::new();
    let mut raw = Vec::new();
    for f in &x.facets {
        if j.iter().all(|v| f.binary_search(v).is_ok()) {
            let rest: Vec<u32> = f.iter().copied().filter(|v| j.binary_search(v).is_err()).collect();
            if rest.len() == 2 {
                raw.push((rest[0], rest[1]));
            }
        }
    }
    for &(u, v) in &raw {
        for w in [u, v] {
            let next = ids.len();
            ids.entry(w).or_insert(next);
        }
    }
    (ids.len(), raw.iter().map(|(u, v)| (ids[u], ids[v])).collect())
}

/// Oracle case of the rank-(d−2) element `e` of V_X from its coordinate support.
pub fn classify_link(vx: &SubspacePoset, x: &FacetList, e: ElementId) -> Result<OracleCase> {
    let d = vx.poset.d();
    if vx.poset.rank(e) != d - 2 {
        return Err(HdxError::BadRank(format!("classify_link needs a rank {} element", d - 2)));
    }
    let verts = x.vertices();
    let j: Vec<u32> = vx.codes[e.idx()].support().iter().map(|&c| verts[c]).collect();
    let du = d as usize;
    match j.len() {
        n if n == du + 1 => Ok(OracleCase::Single),
        n if n == du => {
            let p = x.facets.iter().filter(|f| j.iter().all(|v| f.binary_search(v).is_ok())).count();
            Ok(OracleCase::Bouquet { p })
        }
        n if n + 1 == du => {
            let (m, edges) = link_graph(x, &j);
            Ok(OracleCase::Gprime(BipartiteGraphSpec::new(m, edges)?))
        }
        n => Err(HdxError::BadArgs(format!("support of size {n} for a rank {} element", d - 2))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub label: String,
    pub support_size: usize,
    pub case: LinkCase,
    pub measured: Vec<f64>,
    pub oracle: Option<Vec<f64>>,
    pub max_deviation: Option<f64>,
    pub lambda_2: f64,
    pub lambda_min: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PosetificationReport {
    pub q: usize,
    pub d: i32,
    pub elements: usize,
    pub rows: Vec<OracleRow>,
    pub oracle_pass: bool,
    /// Smallest eigenvalue over all links of rank ≤ d−2.
    pub lambda_min: f64,
    pub lambda_min_ok: bool,
    /// Largest nontrivial eigenvalue over all links of rank ≤ d−2.
    pub lambda_2_max: f64,
    /// max(0, λ_2 − (q−1)/q), the measured slack above the leading term.
    pub slack: f64,
    pub certificate: ExpansionCertificate,
    pub max_up_degree: usize,
    pub thickness: usize,
    pub verdict: bool,
}

/// Builds V_X with uniform facet weights and checks every rank-(d−2) link
/// against its oracle, then the global two-sided certificate.
pub fn posetification_certificate(x: &FacetList, q: usize) -> Result<PosetificationReport> {
    let vx = posetify(x, q)?;
    let wp = posetify_weights(&vx, x, None)?;
    let d = wp.d();
    let qf = q as f64;
    let spectra = link_spectra(&wp)?;
    let mut rows = Vec::new();
    for ls in spectra.iter().filter(|s| s.rank == d - 2) {
        let support_size = vx.codes[ls.link.idx()].support().len();
        let measured = ls.spectrum.eigenvalues.clone();
        let (case, oracle) = match classify_link(&vx, x, ls.link) {
            Ok(c) => (LinkCase::from(&c), Some(posetification_link_oracle(&c, q)?)),
            Err(e) => (LinkCase::Unsupported { reason: e.to_string() }, None),
        };
        let max_deviation = oracle.as_ref().map(|o| {
            if o.len() != measured.len() {
                f64::INFINITY
            } else {
                o.iter().zip(&measured).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            }
        });
        let pass = max_deviation.map(|m| m <= ORACLE_TOL).unwrap_or(true);
        rows.push(OracleRow {
            label: ls.label.clone(),
            support_size,
            case,
            measured,
            oracle,
            max_deviation,
            lambda_2: ls.spectrum.lambda_2,
            lambda_min: ls.spectrum.lambda_min,
            pass,
        });
    }
    let oracle_pass = rows.iter().all(|r| r.pass);
    let lambda_min = spectra.iter().map(|s| s.spectrum.lambda_min).fold(f64::INFINITY, f64::min);
    let lambda_min_ok = lambda_min >= -1.0 / qf - CERT_TOL;
    let lambda_2_max = spectra.iter().map(|s| s.spectrum.lambda_2).fold(f64::NEG_INFINITY, f64::max);
    let lead = (qf - 1.0) / qf;
    let slack = (lambda_2_max - lead).max(0.0);
    let certificate = certify_two_sided(&wp, -1.0 / qf - CERT_TOL, lead + slack)?;
    let max_up_degree = wp.poset.ids().map(|e| wp.poset.parents(e).len()).max().unwrap_or(0);
    let verdict = oracle_pass && lambda_min_ok && certificate.verdict;
    Ok(PosetificationReport {
        q,
        d,
        elements: wp.poset.len(),
        rows,
        oracle_pass,
        lambda_min,
        lambda_min_ok,
        lambda_2_max,
        slack,
        certificate,
        max_up_degree,
        thickness: x.thickness(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-10)
    }

    #[test]
    fn oracle_examples() {
        let s = posetification_link_oracle(&OracleCase::Single, 2).unwrap();
        assert!(close(&s, &[1.0, -0.5, -0.5]));
        let b = posetification_link_oracle(&OracleCase::Bouquet { p: 2 }, 2).unwrap();
        assert!(close(&b, &[1.0, 0.5, -0.5, -0.5, -0.5]));
        let g = posetification_link_oracle(&OracleCase::Gprime(BipartiteGraphSpec::cycle(6).unwrap()), 2).unwrap();
        let mut want = vec![1.0, 0.75, 0.75, 0.25, 0.25, 0.0];
        want.extend([-0.5; 6]);
        assert!(close(&g, &want));
    }

    #[test]
    fn oracle_traces_vanish() {
        for q in 2..5 {
            let cases = [
                OracleCase::Single,
                OracleCase::Bouquet { p: 3 },
                OracleCase::Gprime(BipartiteGraphSpec::path(4).unwrap()),
            ];
            for c in &cases {
                let s: f64 = posetification_link_oracle(c, q).unwrap().iter().sum();
                assert!(s.abs() < 1e-10, "{c:?} q={q}: {s}");
            }
        }
    }
}
