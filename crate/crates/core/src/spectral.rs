//! Weighted spectra, connectivity and expansion certificates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::error::{HdxError, Result};
use crate::linalg::{jacobi_eigen, orthogonal_complement, symmetry_residual};
use crate::operators::{adjacency_operator, down_up_walk, up_down_walk, LinearOp};
use crate::par;
use crate::poset::{build_link, ElementId, WeightedPoset};
use crate::properties::detect_regularity;

/// Symmetrization residual allowed before an operator counts as self-adjoint.
pub const SELF_ADJOINT_TOL: f64 = 1e-8;
/// Tolerance for certificate inequalities.
pub const CERT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues on the W-orthogonal complement of 𝟙, descending.
    pub nontrivial: Vec<f64>,
    pub lambda_max: f64,
    /// Largest nontrivial eigenvalue (−∞ on a one-point level).
    pub lambda_2: f64,
    pub lambda_min: f64,
    /// max(λ_2, |λ_min|).
    pub lambda: f64,
    pub self_adjoint_residual: f64,
}

/// Unit vector W^{1/2}𝟙 / ‖·‖.
fn sqrt_weight_unit(w: &[f64]) -> DVector<f64> {
    let v = DVector::from_iterator(w.len(), w.iter().map(|x| x.sqrt()));
    let n = v.norm();
    v / n
}

/// Eigenvalues of S = W^{1/2} M W^{-1/2} after checking S ≈ Sᵀ, plus those
/// of S restricted to the complement of W^{1/2}𝟙.
pub fn weighted_spectrum(op: &LinearOp) -> Result<SpectralSummary> {
    if !op.is_square() {
        return Err(HdxError::LevelMismatch(op.source, op.target));
    }
    let s = op.symmetrized();
    let res = symmetry_residual(&s);
    if res > SELF_ADJOINT_TOL {
        return Err(HdxError::NotSelfAdjoint(res));
    }
    let eigenvalues = jacobi_eigen(&s).values;
    let u = sqrt_weight_unit(&op.source_weights);
    let q = orthogonal_complement(&DMatrix::from_column_slice(u.len(), 1, u.as_slice()), 1e-10);
    let nontrivial = if q.ncols() == 0 { vec![] } else { jacobi_eigen(&(q.transpose() * &s * &q)).values };
    let lambda_max = eigenvalues.first().copied().unwrap_or(f64::NAN);
    let lambda_min = eigenvalues.last().copied().unwrap_or(f64::NAN);
    let lambda_2 = nontrivial.first().copied().unwrap_or(f64::NEG_INFINITY);
    let lambda = lambda_2.max(lambda_min.abs());
    Ok(SpectralSummary { eigenvalues, nontrivial, lambda_max, lambda_2, lambda_min, lambda, self_adjoint_residual: res })
}

/// Nonzero eigenvalues (|λ| > tol), descending.
pub fn nonzero_eigenvalues(s: &SpectralSummary, tol: f64) -> Vec<f64> {
    s.eigenvalues.iter().copied().filter(|v| v.abs() > tol).collect()
}

/// Spectrum of the level-0 adjacency of the link of `x`.
pub fn link_adjacency_spectrum(wp: &WeightedPoset, x: ElementId) -> Result<SpectralSummary> {
    let link = build_link(wp, x)?;
    weighted_spectrum(&adjacency_operator(&link.inner, 0)?)
}

/// Spectrum of M^+_{x,0}, the level-0 up-down walk of the link of `x`.
pub fn link_upper_spectrum(wp: &WeightedPoset, x: ElementId) -> Result<SpectralSummary> {
    let link = build_link(wp, x)?;
    weighted_spectrum(&up_down_walk(&link.inner, 0)?)
}

fn level0_connected(wp: &WeightedPoset) -> bool {
    let p = &wp.poset;
    let n = p.level_size(0);
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &z in p.level(1) {
        let ch = p.children(z);
        for &a in ch {
            for &b in ch {
                if a != b {
                    adj[p.pos(a)].push(p.pos(b));
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Connectivity of the support graph of M^+_0 (two vertices adjacent when
/// they share a cover).
pub fn is_connected(wp: &WeightedPoset) -> bool {
    wp.d() >= 1 && level0_connected(wp)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectivityRow {
    pub link: String,
    pub rank: i32,
    pub connected: bool,
}

/// Connectivity of every link P_x, x ∈ P(≤ d−2).
pub fn local_connectivity(wp: &WeightedPoset) -> Result<Vec<ConnectivityRow>> {
    let xs = elements_up_to(wp, wp.d() - 2);
    par::try_map(&xs, |&x| {
        let link = build_link(wp, x)?;
        Ok(ConnectivityRow { link: wp.poset.label(x).into(), rank: wp.poset.rank(x), connected: is_connected(&link.inner) })
    })
}

pub fn is_locally_connected(wp: &WeightedPoset) -> Result<bool> {
    Ok(local_connectivity(wp)?.iter().all(|r| r.connected))
}

pub fn elements_up_to(wp: &WeightedPoset, r: i32) -> Vec<ElementId> {
    (-1..=r).flat_map(|i| wp.poset.level(i).iter().copied()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateRow {
    pub link: String,
    pub lambda2: f64,
    pub lambdamin: Option<f64>,
    pub connected: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionCertificate {
    pub kind: String,
    pub params: serde_json::Value,
    pub rows: Vec<CertificateRow>,
    pub verdict: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkSpectrum {
    pub link: ElementId,
    pub label: String,
    pub rank: i32,
    pub connected: bool,
    pub spectrum: SpectralSummary,
}

/// Level-0 adjacency spectra of every link P_x, x ∈ P(≤ d−2).
pub fn link_spectra(wp: &WeightedPoset) -> Result<Vec<LinkSpectrum>> {
    let xs = elements_up_to(wp, wp.d() - 2);
    par::try_map(&xs, |&x| {
        let link = build_link(wp, x)?;
        let spectrum = weighted_spectrum(&adjacency_operator(&link.inner, 0)?)?;
        Ok(LinkSpectrum {
            link: x,
            label: wp.poset.label(x).into(),
            rank: wp.poset.rank(x),
            connected: is_connected(&link.inner),
            spectrum,
        })
    })
}

fn require_standard(wp: &WeightedPoset) -> Result<()> {
    if !wp.is_standard() {
        return Err(HdxError::NonStandardScheme);
    }
    Ok(())
}

pub fn certify_one_sided(wp: &WeightedPoset, lambda: f64) -> Result<ExpansionCertificate> {
    require_standard(wp)?;
    let rows: Vec<CertificateRow> = link_spectra(wp)?
        .into_iter()
        .map(|ls| {
            let pass = ls.connected && ls.spectrum.lambda_2 <= lambda + CERT_TOL;
            CertificateRow { link: ls.label, lambda2: ls.spectrum.lambda_2, lambdamin: Some(ls.spectrum.lambda_min), connected: ls.connected, pass, detail: None }
        })
        .collect();
    let verdict = rows.iter().all(|r| r.pass);
    Ok(ExpansionCertificate { kind: "one-sided".into(), params: json!({"lambda": lambda}), rows, verdict })
}

pub fn certify_two_sided(wp: &WeightedPoset, nu: f64, lambda: f64) -> Result<ExpansionCertificate> {
    require_standard(wp)?;
    let rows: Vec<CertificateRow> = link_spectra(wp)?
        .into_iter()
        .map(|ls| {
            let lo = ls.spectrum.nontrivial.last().copied().unwrap_or(f64::INFINITY);
            let pass = ls.connected && ls.spectrum.lambda_2 <= lambda + CERT_TOL && lo >= nu - CERT_TOL;
            CertificateRow { link: ls.label, lambda2: ls.spectrum.lambda_2, lambdamin: Some(lo), connected: ls.connected, pass, detail: None }
        })
        .collect();
    let verdict = rows.iter().all(|r| r.pass);
    Ok(ExpansionCertificate { kind: "two-sided".into(), params: json!({"nu": nu, "lambda": lambda}), rows, verdict })
}

/// Smallest λ with every link spectrum inside [−λ, λ]: max over links of λ(A_x).
pub fn two_sided_lambda(wp: &WeightedPoset) -> Result<f64> {
    Ok(link_spectra(wp)?.iter().map(|ls| ls.spectrum.lambda_2.max(ls.spectrum.lambda_min.abs())).fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EposetLevelConstants {
    pub j: i32,
    pub r: f64,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub enum EposetConstants {
    Given(Vec<EposetLevelConstants>),
    /// r_j = 1/N^low_{j+1}, δ_j = 1 − r_j.
    Regular,
    /// Least-squares fit of (r_j, δ_j) per level.
    Fitted,
}

/// Weighted operator norm of D_{j+1}U_j − δ U_{j−1}D_j − r Id.
pub fn eposet_residual(wp: &WeightedPoset, j: i32, r: f64, delta: f64) -> Result<f64> {
    let (a, b) = eposet_pair(wp, j)?;
    let n = a.nrows();
    let res = a - b * delta - DMatrix::<f64>::identity(n, n) * r;
    Ok(operator_norm(&res))
}

/// Symmetrized (M^+_j, M^-_j).
fn eposet_pair(wp: &WeightedPoset, j: i32) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok((up_down_walk(wp, j)?.symmetrized(), down_up_walk(wp, j)?.symmetrized()))
}

/// Largest singular value, as sqrt(λ_max(RᵀR)).
pub fn operator_norm(r: &DMatrix<f64>) -> f64 {
    let e = jacobi_eigen(&(r.transpose() * r));
    e.values.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Minimizes ‖M^+_j − δ M^-_j − r Id‖_F over (r, δ); returns (r, δ, residual norm).
pub fn fit_eposet_constants(wp: &WeightedPoset, j: i32) -> Result<(f64, f64, f64)> {
    let (a, b) = eposet_pair(wp, j)?;
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let dot = |x: &DMatrix<f64>, y: &DMatrix<f64>| x.component_mul(y).sum();
    // normal equations in (δ, r)
    let (bb, bi, ii) = (dot(&b, &b), dot(&b, &id), n as f64);
    let (ab, ai) = (dot(&a, &b), dot(&a, &id));
    let det = bb * ii - bi * bi;
    let (delta, r) = if det.abs() < 1e-14 * (bb * ii).max(1e-300) {
        (0.0, ai / ii)
    } else {
        ((ab * ii - ai * bi) / det, (bb * ai - bi * ab) / det)
    };
    let res = a - b * delta - id * r;
    Ok((r, delta, operator_norm(&res)))
}

pub fn certify_eposet(wp: &WeightedPoset, lambda: f64, constants: EposetConstants) -> Result<ExpansionCertificate> {
    if wp.d() < 2 {
        return Err(HdxError::BadRank(format!("eposet certificate needs d >= 2, got {}", wp.d())));
    }
    let levels: Vec<i32> = (1..wp.d()).collect();
    let regular: Option<Vec<f64>> = {
        let reg = detect_regularity(&wp.poset);
        levels.iter().map(|&j| reg.n_low_at(j + 1).map(|n| 1.0 / n as f64)).collect()
    };
    let kind_name = match &constants {
        EposetConstants::Given(_) => "given",
        EposetConstants::Regular => "regular",
        EposetConstants::Fitted => "fitted",
    };
    let mut rows = Vec::new();
    for (t, &j) in levels.iter().enumerate() {
        let (r, delta) = match &constants {
            EposetConstants::Given(list) => {
                let c = list
                    .iter()
                    .find(|c| c.j == j)
                    .ok_or_else(|| HdxError::BadArgs(format!("no constants given for level {j}")))?;
                (c.r, c.delta)
            }
            EposetConstants::Regular => {
                let r = regular
                    .as_ref()
                    .map(|v| v[t])
                    .ok_or_else(|| HdxError::MissingRegularity("lower regularity needed for regular eposet constants".into()))?;
                (r, 1.0 - r)
            }
            EposetConstants::Fitted => {
                let (r, d, _) = fit_eposet_constants(wp, j)?;
                (r, d)
            }
        };
        let norm = eposet_residual(wp, j, r, delta)?;
        let (fr, fd, fnorm) = fit_eposet_constants(wp, j)?;
        let mut detail = json!({"j": j, "r": r, "delta": delta, "fitted": {"r": fr, "delta": fd, "residual": fnorm}});
        if let Some(reg) = &regular {
            let rr = reg[t];
            detail["regular"] = json!({"r": rr, "delta": 1.0 - rr, "residual": eposet_residual(wp, j, rr, 1.0 - rr)?});
        }
        rows.push(CertificateRow {
            link: format!("level {j}"),
            lambda2: norm,
            lambdamin: None,
            connected: true,
            pass: norm <= lambda + CERT_TOL,
            detail: Some(detail),
        });
    }
    let verdict = rows.iter().all(|r| r.pass);
    Ok(ExpansionCertificate {
        kind: "eposet".into(),
        params: json!({"lambda": lambda, "constants": kind_name}),
        rows,
        verdict,
    })
}
