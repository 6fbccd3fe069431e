use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use super::BoundCheck;
use crate::error::{HdxError, Result};
use crate::linalg::{jacobi_eigen, orthogonal_complement, orthonormal_range};
use crate::operators::{up_down_walk, up_operator};
use crate::poset::{Cochain, WeightedPoset};
use crate::properties::{check_al, detect_regularity, RegularityReport};
use crate::spectral::{eposet_residual, two_sided_lambda, EposetLevelConstants, CERT_TOL};

const BASIS_TOL: f64 = 1e-10;
/// Smallest singular value below which U_j counts as not injective.
pub const INJECTIVITY_TOL: f64 = 1e-9;

fn regular_r(reg: &RegularityReport, j: i32) -> Result<f64> {
    reg.n_low_at(j + 1)
        .map(|n| 1.0 / n as f64)
        .ok_or_else(|| HdxError::MissingRegularity(format!("N^low_{} is not uniform", j + 1)))
}

/// r_j = 1/N^low_{j+1}, δ_j = 1 − r_j for j = 0..=d−1.
pub fn regular_eposet_constants(wp: &WeightedPoset) -> Result<Vec<EposetLevelConstants>> {
    let reg = detect_regularity(&wp.poset);
    (0..wp.d())
        .map(|j| {
            let r = regular_r(&reg, j)?;
            Ok(EposetLevelConstants { j, r, delta: 1.0 - r })
        })
        .collect()
}

/// [r^l_1, ..., r^l_{l+2}] where r^l_t = r_l + Σ_{j=l−t+1}^{l−1} (Π_{h=j+1}^{l} δ_h) r_j and r^l_{l+2} = 1.
pub fn r_table(r: &[f64], delta: &[f64], l: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(l + 2);
    for t in 1..=l + 1 {
        let mut v = r[l];
        for j in (l + 1 - t)..l {
            let prod: f64 = delta[j + 1..=l].iter().product();
            v += prod * r[j];
        }
        out.push(v);
    }
    out.push(1.0);
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EposetDecomposition {
    pub l: i32,
    pub constants: Vec<EposetLevelConstants>,
    /// Smallest singular value of U_j, j = −1..l−1.
    pub injectivity: Vec<(i32, f64)>,
    /// f_i for i = −1..=l.
    pub components: Vec<Cochain>,
    pub component_norms: Vec<f64>,
    /// r^l_{l−i+1} for each component.
    pub near_eigenvalues: Vec<f64>,
    /// max |⟨f_i,f_j⟩|/(‖f_i‖‖f_j‖) over nonzero pairs.
    pub orthogonality_defect: f64,
    pub reconstruction_residual: f64,
    /// ‖M^+_l f_i − r f_i‖/‖f_i‖; absent at l = d.
    pub near_eigen_residuals: Option<Vec<f64>>,
}

/// Splits f ∈ C^l along U^{l−i}(ker D_i), i = −1..=l.
pub fn eposet_decomposition(
    wp: &WeightedPoset,
    l: i32,
    f: &Cochain,
    constants: Option<&[EposetLevelConstants]>,
) -> Result<EposetDecomposition> {
    let d = wp.d();
    if l < 0 || l > d {
        return Err(HdxError::BadRank(format!("need 0 <= l <= d, got l = {l}, d = {d}")));
    }
    if f.level != l {
        return Err(HdxError::LevelMismatch(f.level, l));
    }
    let consts: Vec<EposetLevelConstants> = match constants {
        Some(c) => c.to_vec(),
        None => {
            let reg = detect_regularity(&wp.poset);
            (0..l.min(d - 1) + 1)
                .map(|j| {
                    let r = regular_r(&reg, j)?;
                    Ok(EposetLevelConstants { j, r, delta: 1.0 - r })
                })
                .collect::<Result<_>>()?
        }
    };
    let lookup = |j: i32| {
        consts
            .iter()
            .find(|c| c.j == j)
            .map(|c| (c.r, c.delta))
            .ok_or_else(|| HdxError::BadArgs(format!("no eposet constants for level {j}")))
    };

    let sw = |i: i32| -> Vec<f64> { wp.level_weights(i).into_iter().map(f64::sqrt).collect() };
    // Ũ_j for j = −1..l−1, as ut[j + 1]
    let mut ut = Vec::new();
    let mut injectivity = Vec::new();
    for j in -1..l {
        let u = up_operator(wp, j)?;
        let (s, t) = (sw(j), sw(j + 1));
        let m = DMatrix::from_fn(u.matrix.nrows(), u.matrix.ncols(), |r, c| t[r] * u.matrix[(r, c)] / s[c]);
        let smin = jacobi_eigen(&(m.transpose() * &m)).values.last().copied().unwrap_or(0.0).max(0.0).sqrt();
        if smin <= INJECTIVITY_TOL {
            return Err(HdxError::NotInjective(j, smin));
        }
        injectivity.push((j, smin));
        ut.push(m);
    }

    let n = wp.poset.level_size(l);
    let mut blocks: Vec<DMatrix<f64>> = Vec::new();
    for i in -1..=l {
        let mut b = if i == -1 {
            DMatrix::from_element(1, 1, 1.0)
        } else {
            let range = orthonormal_range(&ut[i as usize], BASIS_TOL);
            orthogonal_complement(&range, BASIS_TOL)
        };
        for j in i..l {
            b = &ut[(j + 1) as usize] * b;
        }
        blocks.push(orthonormal_range(&b, BASIS_TOL));
    }
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    if total != n {
        return Err(HdxError::NotInjective(l, 0.0));
    }
    let q = DMatrix::from_columns(&blocks.iter().flat_map(|b| b.column_iter().map(|c| c.into_owned())).collect::<Vec<_>>());
    let s_l = sw(l);
    let ft = DVector::from_iterator(n, f.values.iter().zip(&s_l).map(|(v, s)| v * s));
    let coef = q.clone().lu().solve(&ft).ok_or(HdxError::NotInjective(l, 0.0))?;

    let mut comps = Vec::new();
    let mut off = 0;
    for b in &blocks {
        let k = b.ncols();
        comps.push(b * coef.rows(off, k));
        off += k;
    }
    let sum: DVector<f64> = comps.iter().fold(DVector::zeros(n), |a, c| a + c);
    let reconstruction_residual = (sum - &ft).norm();
    let component_norms: Vec<f64> = comps.iter().map(|c| c.norm()).collect();
    let floor = 1e-14 * ft.norm().max(1e-300);
    let mut orthogonality_defect = 0.0f64;
    for a in 0..comps.len() {
        for b in a + 1..comps.len() {
            if component_norms[a] > floor && component_norms[b] > floor {
                let c = comps[a].dot(&comps[b]).abs() / (component_norms[a] * component_norms[b]);
                orthogonality_defect = orthogonality_defect.max(c);
            }
        }
    }

    let lu = l as usize;
    let (rs, ds): (Vec<f64>, Vec<f64>) = (0..=l.min(d - 1)).map(lookup).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let near_eigenvalues: Vec<f64> = if l < d {
        let table = r_table(&rs, &ds, lu);
        // component i sits at r^l_{l−i+1}, i.e. table[l − i]
        (-1..=l).map(|i| table[(l - i) as usize]).collect()
    } else {
        vec![]
    };
    let near_eigen_residuals = if l < d {
        let s = up_down_walk(wp, l)?.symmetrized();
        Some(
            comps
                .iter()
                .zip(&near_eigenvalues)
                .zip(&component_norms)
                .map(|((c, &r), &nc)| if nc > floor { (&s * c - c * r).norm() / nc } else { 0.0 })
                .collect(),
        )
    } else {
        None
    };
    let components = comps
        .iter()
        .map(|c| Cochain::new(l, c.iter().zip(&s_l).map(|(v, s)| v / s).collect()))
        .collect();
    Ok(EposetDecomposition {
        l,
        constants: consts,
        injectivity,
        components,
        component_norms,
        near_eigenvalues,
        orthogonality_defect,
        reconstruction_residual,
        near_eigen_residuals,
    })
}

fn require(wp: &WeightedPoset) -> Result<RegularityReport> {
    let mut missing = Vec::new();
    if !wp.is_standard() {
        missing.push("standard weight scheme".to_string());
    } else if !check_al(wp)?.exact {
        missing.push("AL".to_string());
    }
    let reg = detect_regularity(&wp.poset);
    if !reg.lower_regular {
        missing.push("lower regularity".to_string());
    }
    if wp.d() < 2 {
        missing.push("rank at least 2".to_string());
    }
    if missing.is_empty() {
        Ok(reg)
    } else {
        Err(HdxError::HypothesesUnmet(missing))
    }
}

/// Largest eposet residual over j = 1..=d−1 with the regular constants.
fn regular_residual(wp: &WeightedPoset, reg: &RegularityReport) -> Result<(f64, Vec<serde_json::Value>)> {
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for j in 1..wp.d() {
        let r = regular_r(reg, j)?;
        let res = eposet_residual(wp, j, r, 1.0 - r)?;
        worst = worst.max(res);
        rows.push(json!({"j": j, "r": r, "delta": 1.0 - r, "residual": res}));
    }
    Ok((worst, rows))
}

/// Two-sided link expansion λ implies a global eposet with parameter max_l(1 − 1/N_{l+1})λ.
pub fn eposet_forward(wp: &WeightedPoset) -> Result<BoundCheck> {
    let reg = require(wp)?;
    let lambda = two_sided_lambda(wp)?;
    let factor = (0..wp.d()).map(|l| regular_r(&reg, l).map(|r| 1.0 - r)).collect::<Result<Vec<_>>>()?;
    let factor = factor.into_iter().fold(0.0, f64::max);
    let (measured, rows) = regular_residual(wp, &reg)?;
    let bound = factor * lambda;
    Ok(BoundCheck {
        theorem: "eposet-forward".into(),
        bound,
        measured,
        verdict: measured <= bound + CERT_TOL,
        details: json!({"lambda_two_sided": lambda, "factor": factor, "levels": rows}),
    })
}

/// Whether any two distinct elements of a level share at most one cover.
pub fn at_most_one_common_cover(wp: &WeightedPoset) -> bool {
    let p = &wp.poset;
    (-1..p.d()).all(|i| {
        let lv = p.level(i);
        lv.iter().enumerate().all(|(a, &x)| {
            lv[a + 1..].iter().all(|&y| {
                let (px, py) = (p.parents(x), p.parents(y));
                px.iter().filter(|z| py.contains(z)).count() <= 1
            })
        })
    })
}

/// A global eposet with regular constants and parameter μ is a two-sided
/// local expander with λ ≤ 2 max_l (1 + 1/(N_{l+1} − 1)) N_l μ.
pub fn eposet_converse(wp: &WeightedPoset) -> Result<BoundCheck> {
    let reg = require(wp)?;
    if !at_most_one_common_cover(wp) {
        return Err(HdxError::HypothesesUnmet(vec!["at most one common cover for distinct elements".into()]));
    }
    let (mu, rows) = regular_residual(wp, &reg)?;
    let mut factor = 0.0f64;
    for l in 0..wp.d() {
        let miss = || HdxError::MissingRegularity(format!("N^low undefined near level {l}"));
        let nl = reg.n_low_at(l).ok_or_else(miss)? as f64;
        let nl1 = reg.n_low_at(l + 1).ok_or_else(miss)? as f64;
        factor = factor.max((1.0 + 1.0 / (nl1 - 1.0)) * nl);
    }
    let bound = 2.0 * factor * mu;
    let measured = two_sided_lambda(wp)?;
    Ok(BoundCheck {
        theorem: "eposet-converse".into(),
        bound,
        measured,
        verdict: measured <= bound + CERT_TOL,
        details: json!({"mu": mu, "factor": 2.0 * factor, "levels": rows}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_table_matches_product_form() {
        let r = [0.5, 0.3, 0.2, 0.1];
        let delta: Vec<f64> = r.iter().map(|x| 1.0 - x).collect();
        for l in 0..4 {
            let t = r_table(&r, &delta, l);
            assert_eq!(t.len(), l + 2);
            for (ti, v) in t.iter().enumerate().take(l + 1) {
                let tt = ti + 1;
                let closed = 1.0 - (l + 1 - tt..=l).map(|j| 1.0 - r[j]).product::<f64>();
                assert!((v - closed).abs() < 1e-14, "l={l} t={tt}");
            }
        }
    }

    #[test]
    fn simplicial_table() {
        let r: Vec<f64> = (0..4).map(|j| 1.0 / (j as f64 + 2.0)).collect();
        let delta: Vec<f64> = r.iter().map(|x| 1.0 - x).collect();
        let t = r_table(&r, &delta, 3);
        for (i, v) in t.iter().enumerate() {
            assert!((v - (i as f64 + 1.0) / 5.0).abs() < 1e-14);
        }
    }
}
