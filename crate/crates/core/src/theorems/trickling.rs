use serde::Serialize;

use crate::error::{HdxError, Result};
use crate::par;
use crate::poset::{build_link, WeightedPoset};
use crate::properties::{check_tl, detect_regularity, LocalRegularity};
use crate::spectral::{link_spectra, LinkSpectrum, CERT_TOL};

/// T(x) = (Cx − B)/(1 − x).
pub fn trickle_map(x: f64, c: f64, b: f64) -> f64 {
    (c * x - b) / (1.0 - x)
}

/// Real roots of x² + (C − 1)x − B = 0, ascending.
pub fn fixed_points(c: f64, b: f64) -> Vec<f64> {
    let disc = (c - 1.0).powi(2) + 4.0 * b;
    if disc < 0.0 {
        return vec![];
    }
    let s = disc.sqrt();
    let mut r = vec![(1.0 - c - s) / 2.0, (1.0 - c + s) / 2.0];
    r.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    r
}

fn image(lo: f64, hi: f64, c: f64, b: f64) -> (f64, f64) {
    let (u, v) = (trickle_map(lo, c, b), trickle_map(hi, c, b));
    (u.min(v), u.max(v))
}

#[derive(Clone, Debug, Serialize)]
pub struct TrickleLevel {
    pub rank: i32,
    /// Present in the structural mode, where every link of this rank shares them.
    pub c: Option<f64>,
    pub b: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub measured_min: f64,
    pub measured_max: f64,
    pub fixed_points: Vec<f64>,
    pub failures: Vec<String>,
    pub verdict: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TricklingBound {
    pub mode: String,
    pub top_rank: i32,
    pub top_lo: f64,
    pub top_hi: f64,
    /// Ranks d−3 down to −1.
    pub levels: Vec<TrickleLevel>,
    pub verdict: bool,
    pub hypotheses: Vec<String>,
}

fn nontrivial_range(links: &[&LinkSpectrum]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for l in links {
        if let (Some(&a), Some(&b)) = (l.spectrum.nontrivial.last(), l.spectrum.nontrivial.first()) {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    (lo, hi)
}

fn structural_constants(loc: &LocalRegularity) -> Option<(f64, f64)> {
    let n1 = loc.n_low1.value()? as f64;
    let n2 = loc.n_low2.value()? as f64;
    let nm = loc.n_mid1.value()? as f64;
    let r = loc.r_y.value()? as f64;
    if n1 < 2.0 || nm < 1.0 {
        return None;
    }
    let c = 1.0 / (n1 - 1.0);
    let b = if r * (r - 1.0) == 0.0 {
        0.0
    } else {
        (n2 * n1 - nm) * r * (r - 1.0) / ((nm - 1.0) * nm * nm * (n1 - 1.0).powi(2))
    };
    Some((c, b))
}

/// Propagates the rank-(d−2) link spectra down to the whole poset and checks
/// every intermediate rank against the predicted interval.
pub fn trickle_verify(wp: &WeightedPoset) -> Result<TricklingBound> {
    let d = wp.d();
    if d < 2 {
        return Err(HdxError::BadRank(format!("trickling needs d >= 2, got {d}")));
    }
    let spectra = link_spectra(wp)?;
    let at = |r: i32| spectra.iter().filter(|s| s.rank == r).collect::<Vec<_>>();
    let top = at(d - 2);
    let (top_lo, top_hi) = nontrivial_range(&top);
    let mut hypotheses = Vec::new();
    if !spectra.iter().all(|s| s.connected) {
        hypotheses.push("some link up to rank d-2 is disconnected".to_string());
    }
    if top_hi >= 1.0 - CERT_TOL {
        hypotheses.push(format!("top links have nontrivial eigenvalue {top_hi} >= 1"));
    }
    let reg = detect_regularity(&wp.poset);
    let structural: Option<Vec<(f64, f64)>> = if reg.locally_two_skeleton_regular {
        (-1..=d - 3).rev().map(|r| reg.local_at(r).and_then(structural_constants)).collect()
    } else {
        None
    };
    let mode = if structural.is_some() { "structural" } else { "general" };

    let (mut lo, mut hi) = (top_lo, top_hi);
    let mut levels = Vec::new();
    for (step, r) in (-1..=d - 3).rev().enumerate() {
        let links = at(r);
        let (mmin, mmax) = nontrivial_range(&links);
        let mut failures = Vec::new();
        let level = if let Some(cb) = &structural {
            let (c, b) = cb[step];
            let (nlo, nhi) = image(lo, hi, c, b);
            if mmin < nlo - CERT_TOL || mmax > nhi + CERT_TOL {
                failures.push(format!("measured [{mmin}, {mmax}] outside [{nlo}, {nhi}]"));
            }
            TrickleLevel {
                rank: r,
                c: Some(c),
                b: Some(b),
                lo: nlo,
                hi: nhi,
                measured_min: mmin,
                measured_max: mmax,
                fixed_points: fixed_points(c, b),
                verdict: failures.is_empty(),
                failures,
            }
        } else {
            let per_link = par::map(&links, |ls| -> std::result::Result<(f64, f64), String> {
                let link = build_link(wp, ls.link).map_err(|e| format!("{}: {e}", ls.label))?;
                let tl = check_tl(&link.inner).map_err(|e| format!("{}: {e}", ls.label))?;
                let c = match tl.constants() {
                    Some(c) if tl.exact => c,
                    _ => return Err(format!("{}: TL fails (eps {:.3e})", ls.label, tl.max_eps())),
                };
                let (nlo, nhi) = image(lo, hi, c.same, c.same2);
                let (a, b) = nontrivial_range(&[*ls]);
                if a < nlo - CERT_TOL || b > nhi + CERT_TOL {
                    return Err(format!("{}: measured [{a}, {b}] outside [{nlo}, {nhi}]", ls.label));
                }
                Ok((nlo, nhi))
            });
            let (mut nlo, mut nhi) = (f64::INFINITY, f64::NEG_INFINITY);
            for res in per_link {
                match res {
                    Ok((a, b)) => {
                        nlo = nlo.min(a);
                        nhi = nhi.max(b);
                    }
                    Err(e) => failures.push(e),
                }
            }
            if !nlo.is_finite() {
                (nlo, nhi) = (f64::NEG_INFINITY, f64::INFINITY);
            }
            TrickleLevel {
                rank: r,
                c: None,
                b: None,
                lo: nlo,
                hi: nhi,
                measured_min: mmin,
                measured_max: mmax,
                fixed_points: vec![],
                verdict: failures.is_empty(),
                failures,
            }
        };
        lo = level.lo;
        hi = level.hi;
        levels.push(level);
    }
    let verdict = hypotheses.is_empty() && levels.iter().all(|l| l.verdict);
    Ok(TricklingBound { mode: mode.into(), top_rank: d - 2, top_lo, top_hi, levels, verdict, hypotheses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplicial_map() {
        assert!((trickle_map(-1.0 / 3.0, 1.0, 0.0) + 0.25).abs() < 1e-15);
        assert_eq!(fixed_points(1.0, 0.0), vec![0.0]);
    }

    #[test]
    fn binary_grassmannian_map() {
        assert!((trickle_map(-1.0 / 6.0, 0.5, 0.0) + 1.0 / 14.0).abs() < 1e-15);
        let fp = fixed_points(0.5, 0.0);
        assert_eq!(fp.len(), 2);
        assert!(fp[0].abs() < 1e-15 && (fp[1] - 0.5).abs() < 1e-15);
    }
}
