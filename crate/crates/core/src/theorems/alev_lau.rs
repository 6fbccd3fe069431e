use nalgebra::DMatrix;
use serde_json::json;

use super::BoundCheck;
use crate::error::{HdxError, Result};
use crate::linalg::jacobi_eigen;
use crate::operators::{adjacency_operator, down_up_walk, up_down_walk, LinearOp};
use crate::par;
use crate::poset::{build_link, WeightedPoset};
use crate::properties::{check_al, detect_regularity, RegularityReport};
use crate::spectral::{weighted_spectrum, CERT_TOL};

/// μ_j = max over s ∈ P(j) of λ_2(A_s).
pub fn link_mu(wp: &WeightedPoset, j: i32) -> Result<f64> {
    if j < -1 || j > wp.d() - 2 {
        return Err(HdxError::BadRank(format!("link mu needs -1 <= j <= d-2, got {j}")));
    }
    let vals = par::try_map(wp.poset.level(j), |&s| {
        let link = build_link(wp, s)?;
        Ok::<_, HdxError>(weighted_spectrum(&adjacency_operator(&link.inner, 0)?)?.lambda_2)
    })?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// 1 − Π_{j=r}^{l−1} ((N_{j+2} − 1)/N_{j+2})(1 − μ_j), with `mu[j + 1] = μ_j`.
pub fn alev_lau_threshold(reg: &RegularityReport, mu: &[f64], l: i32, r: i32) -> Option<f64> {
    let mut prod = 1.0;
    for j in r..l {
        let n = reg.n_low_at(j + 2)? as f64;
        prod *= (n - 1.0) / n * (1.0 - mu.get((j + 1) as usize)?);
    }
    Some(1.0 - prod)
}

fn symmetrize(m: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let op = LinearOp { source: 0, target: 0, matrix: m.clone(), source_weights: w.to_vec(), target_weights: w.to_vec() };
    op.symmetrized()
}

/// Spectrum of M^+_l against the thresholds built from link spectra.
pub fn alev_lau_bound(wp: &WeightedPoset, l: i32) -> Result<BoundCheck> {
    let d = wp.d();
    if l < 0 || l > d - 1 {
        return Err(HdxError::BadRank(format!("need 0 <= l <= d-1, got l = {l}, d = {d}")));
    }
    let mut missing = Vec::new();
    if !wp.is_standard() {
        missing.push("standard weight scheme".to_string());
    }
    let reg = detect_regularity(&wp.poset);
    if !reg.lower_regular {
        missing.push("lower regularity".to_string());
    }
    if wp.is_standard() {
        let al = check_al(wp)?;
        if !al.exact {
            missing.push(format!("AL (max relative deviation {:.3e})", al.max_relative_deviation));
        }
    }
    if !missing.is_empty() {
        return Err(HdxError::HypothesesUnmet(missing));
    }

    let mu = (-1..l).map(|j| link_mu(wp, j)).collect::<Result<Vec<_>>>()?;
    let thresholds = (-1..=l)
        .map(|r| {
            alev_lau_threshold(&reg, &mu, l, r)
                .ok_or_else(|| HdxError::MissingRegularity(format!("N^low undefined below level {}", l + 1)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mplus = up_down_walk(wp, l)?;
    let spec = weighted_spectrum(&mplus)?;
    let counts: Vec<serde_json::Value> = (-1..=l)
        .zip(&thresholds)
        .map(|(r, &t)| {
            let above = spec.eigenvalues.iter().filter(|&&v| v > t + CERT_TOL).count();
            let allowed = wp.poset.level_size(r);
            json!({"r": r, "threshold": t, "above": above, "allowed": allowed, "ok": above <= allowed})
        })
        .collect();
    let counts_ok = counts.iter().all(|c| c["ok"].as_bool() == Some(true));

    let w = wp.level_weights(l);
    let mminus = down_up_walk(wp, l)?.matrix;
    let a = adjacency_operator(wp, l)?.matrix;
    let n = w.len();
    let mu_prev = mu[l as usize];
    let x = mu_prev * (DMatrix::identity(n, n) - &mminus) - a + &mminus;
    let psd_min = jacobi_eigen(&symmetrize(&x, &w)).values.last().copied().unwrap_or(0.0);
    let psd_ok = psd_min >= -CERT_TOL;

    let bound = thresholds[0];
    let measured = spec.lambda_2;
    Ok(BoundCheck {
        theorem: "alev-lau".into(),
        bound,
        measured,
        verdict: measured <= bound + CERT_TOL && counts_ok && psd_ok,
        details: json!({
            "l": l,
            "mu": (-1..l).zip(&mu).map(|(j, m)| json!({"j": j, "mu": m})).collect::<Vec<_>>(),
            "counts": counts,
            "psd_min_eigenvalue": psd_min,
            "psd_ok": psd_ok,
        }),
    })
}
