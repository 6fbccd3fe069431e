use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use super::{gather, link_positions, winner, BoundCheck};
use crate::error::{HdxError, Result};
use crate::linalg::{jacobi_eigen, orthogonal_complement, SymEigen};
use crate::operators::{up_down_walk, up_operator, LinearOp};
use crate::par;
use crate::poset::{build_link, Cochain, WeightedPoset};
use crate::properties::{RegularityReport, ULConstants, ULReport};
use crate::spectral::{weighted_spectrum, CERT_TOL};

/// Eigenvalues of ŨᵀŨ at or below this count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Allowed residual of the norm bookkeeping when UL is exact.
pub const LEDGER_TOL: f64 = 1e-8;

/// Lower-triangular tables indexed `[j][i]`, i ≤ j ≤ k.
#[derive(Clone, Debug, Serialize)]
pub struct Coefficients {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
}

/// Runs the a, b, e recursions for levels 0..consts.len().
pub fn ko_coefficients(consts: &[ULConstants], alphas: &[f64]) -> Result<Coefficients> {
    if consts.len() != alphas.len() {
        return Err(HdxError::BadArgs(format!("{} UL levels but {} alphas", consts.len(), alphas.len())));
    }
    let (mut a, mut b, mut e): (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) = (Vec::new(), Vec::new(), Vec::new());
    for (j, (c, &al)) in consts.iter().zip(alphas).enumerate() {
        let ajj = al / c.dia - c.sqr * (c.xyz / c.dia - 1.0);
        let carry = (1.0 - al) / c.dia;
        let mut ar: Vec<f64> = if j == 0 { vec![] } else { a[j - 1].iter().map(|x: &f64| carry * x + ajj).collect() };
        let mut br: Vec<f64> = if j == 0 { vec![] } else { b[j - 1].iter().map(|x: &f64| carry * x).collect() };
        let mut er: Vec<f64> = if j == 0 { vec![] } else { e[j - 1].iter().map(|x: &f64| carry * x).collect() };
        ar.push(ajj);
        br.push(1.0 / c.dia);
        er.push((1.0 + c.xyz - c.dia) / c.dia);
        a.push(ar);
        b.push(br);
        e.push(er);
    }
    Ok(Coefficients { a, b, e })
}

fn carry_product(consts: &[ULConstants], alphas: &[f64], from: usize, to: usize) -> f64 {
    (from..=to).map(|j| (1.0 - alphas[j]) / consts[j].dia).product()
}

/// a_{l,r} = 1 − Π_{j=r}^{l} (1−α_j)/c^dia_j, valid when the UL relation holds.
pub fn a_closed_form(consts: &[ULConstants], alphas: &[f64], l: usize, r: usize) -> f64 {
    1.0 - carry_product(consts, alphas, r, l)
}

pub fn b_closed_form(consts: &[ULConstants], alphas: &[f64], l: usize, r: usize) -> f64 {
    let tail = if r < l { carry_product(consts, alphas, r + 1, l) } else { 1.0 };
    tail / consts[r].dia
}

pub fn e_closed_form(consts: &[ULConstants], alphas: &[f64], l: usize, r: usize) -> f64 {
    let c = &consts[r];
    let tail = if r < l { carry_product(consts, alphas, r + 1, l) } else { 1.0 };
    tail * (1.0 + c.xyz - c.dia) / c.dia
}

/// (a_{l,r}, b_{l,r}) for the lazy choice α_j = 1/N^mid_j, from the counts alone.
pub fn lazy_coefficients(reg: &RegularityReport, l: i32, r: i32) -> Option<(f64, f64)> {
    let nl = |i| reg.n_low_at(i).map(|v| v as f64);
    let nm = |i| reg.n_mid_at(i).map(|v| v as f64);
    let nw = |i| reg.n_wedge_at(i).map(|v| v as f64);
    let mut prod = 1.0;
    for j in r + 1..=l {
        let w = nw(j)?;
        if w == 0.0 {
            return None;
        }
        prod *= (nm(j)? - 1.0) / w;
    }
    let (nlr, nll, nmr, nwr) = (nl(r)?, nl(l + 1)?, nm(r)?, nw(r)?);
    if nwr == 0.0 {
        return None;
    }
    let a = 1.0 - nlr / nll * prod * (nmr - 1.0) / nwr;
    let b = nlr * nmr / (nll * nwr) * prod;
    Some((a, b))
}

/// α_j = 1/N^mid_j when middle regular, else 1/2.
pub fn default_alphas(reg: &RegularityReport, k: i32) -> Vec<f64> {
    (0..=k)
        .map(|j| match reg.n_mid_at(j) {
            Some(n) if reg.middle_regular && n > 0 => 1.0 / n as f64,
            _ => 0.5,
        })
        .collect()
}

/// μ'_i = max over x ∈ P(i) of the largest nontrivial eigenvalue of M^+_{x,0}.
pub fn mu_prime(wp: &WeightedPoset, i: i32) -> Result<f64> {
    if i < -1 || i > wp.d() - 2 {
        return Err(HdxError::BadRank(format!("mu' needs -1 <= i <= d-2, got {i}")));
    }
    let vals = par::try_map(wp.poset.level(i), |&x| {
        let link = build_link(wp, x)?;
        Ok::<_, HdxError>(weighted_spectrum(&up_down_walk(&link.inner, 0)?)?.lambda_2)
    })?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

struct CorrPiece {
    m: f64,
    pos: Vec<usize>,
    w: Vec<f64>,
    mplus: DMatrix<f64>,
}

/// Ũ_{j−1} in W^{1/2} coordinates with the eigen-decomposition of ŨᵀŨ.
struct Step {
    ut: DMatrix<f64>,
    eig: SymEigen,
}

/// Everything the decomposition needs at a fixed level k, computed once.
pub struct KoMachinery {
    pub k: i32,
    pub alphas: Vec<f64>,
    pub constants: Vec<ULConstants>,
    pub epsilons: Vec<f64>,
    pub exact: bool,
    pub coefficients: Coefficients,
    /// μ'_{i−1} for i = 0..=k.
    pub mu_primes: Vec<f64>,
    sqrt_w: Vec<DVector<f64>>,
    steps: Vec<Step>,
    corr: Vec<Vec<CorrPiece>>,
    up: LinearOp,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionResult {
    pub k: i32,
    /// h_i, i = 0..=k, with h_0 = g_0.
    pub h: Vec<Cochain>,
    /// g_i, i = 0..=k, g_k the input.
    pub g: Vec<Cochain>,
    pub h_norms2: Vec<f64>,
    pub g_norms2: Vec<f64>,
    pub corr: Vec<f64>,
    /// (μ'_{i−1} − α_i)_+ ‖g_i‖².
    pub corr_bounds: Vec<f64>,
    pub corr_within_bounds: bool,
    /// max_i |‖g_i‖² − Σ_{j≤i}‖h_j‖²|.
    pub norm_residual: f64,
    /// max_{j≥1} ‖D_j h_j‖.
    pub kernel_residual: f64,
    pub up_norm2: f64,
    pub predicted_up_norm2: f64,
    pub up_residual: f64,
    pub up_tolerance: f64,
    pub pass: bool,
}

impl KoMachinery {
    pub fn new(wp: &WeightedPoset, ul: &ULReport, k: i32, alphas: &[f64]) -> Result<Self> {
        let d = wp.d();
        if k < 0 || k > d - 1 {
            return Err(HdxError::BadRank(format!("decomposition needs 0 <= k <= d-1, got k = {k}, d = {d}")));
        }
        if alphas.len() != (k + 1) as usize {
            return Err(HdxError::BadArgs(format!("need {} alphas, got {}", k + 1, alphas.len())));
        }
        let constants = (0..=k).map(|j| ul.constants(j)).collect::<Result<Vec<_>>>()?;
        let epsilons = (0..=k).map(|j| ul.epsilon(j)).collect::<Result<Vec<_>>>()?;
        let exact = (0..=k).all(|j| ul.level_exact(j));
        let coefficients = ko_coefficients(&constants, alphas)?;
        let mu_primes = (0..=k).map(|i| mu_prime(wp, i - 1)).collect::<Result<Vec<_>>>()?;
        let sqrt_w: Vec<DVector<f64>> =
            (0..=k).map(|j| DVector::from_iterator(wp.poset.level_size(j), wp.level_weights(j).into_iter().map(f64::sqrt))).collect();
        let steps = (1..=k)
            .map(|j| {
                let u = up_operator(wp, j - 1)?;
                let (src, tgt) = (&sqrt_w[(j - 1) as usize], &sqrt_w[j as usize]);
                let ut = DMatrix::from_fn(u.matrix.nrows(), u.matrix.ncols(), |r, c| tgt[r] * u.matrix[(r, c)] / src[c]);
                let eig = jacobi_eigen(&(ut.transpose() * &ut));
                Ok(Step { ut, eig })
            })
            .collect::<Result<Vec<_>>>()?;
        let corr = (0..=k)
            .map(|i| {
                par::try_map(wp.poset.level(i - 1), |&x| {
                    let link = build_link(wp, x)?;
                    Ok::<_, HdxError>(CorrPiece {
                        m: wp.m(x),
                        pos: link_positions(wp, &link, 0),
                        w: link.inner.level_weights(0),
                        mplus: up_down_walk(&link.inner, 0)?.matrix,
                    })
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KoMachinery {
            k,
            alphas: alphas.to_vec(),
            constants,
            epsilons,
            exact,
            coefficients,
            mu_primes,
            sqrt_w,
            steps,
            corr,
            up: up_operator(wp, k)?,
        })
    }

    fn correction(&self, i: usize, g: &DVector<f64>) -> f64 {
        let al = self.alphas[i];
        self.corr[i]
            .iter()
            .map(|p| {
                let gx = gather(g, &p.pos);
                let total: f64 = p.w.iter().sum();
                let mean = winner(&p.w, &gx, &DVector::from_element(gx.len(), 1.0)) / total;
                let perp = gx.add_scalar(-mean);
                let img = &p.mplus * &perp - al * &perp;
                p.m * winner(&p.w, &gx, &img)
            })
            .sum()
    }

    pub fn decompose(&self, f: &Cochain) -> Result<DecompositionResult> {
        let k = self.k as usize;
        if f.level != self.k {
            return Err(HdxError::LevelMismatch(f.level, self.k));
        }
        let sw = &self.sqrt_w[k];
        let mut gt = DVector::from_iterator(sw.len(), f.values.iter().zip(sw.iter()).map(|(v, s)| v * s));
        let norm = gt.norm();
        let mean_part = sw.dot(&gt) / sw.norm();
        if norm > 0.0 && (mean_part / norm).abs() > 1e-9 {
            return Err(HdxError::NotMeanZero(mean_part));
        }
        let mut hts = vec![DVector::zeros(0); k + 1];
        let mut gts = vec![DVector::zeros(0); k + 1];
        let mut kernel_residual = 0.0f64;
        for j in (1..=k).rev() {
            let st = &self.steps[j - 1];
            let t = st.ut.transpose() * &gt;
            let mut proj = DVector::zeros(gt.len());
            let mut lower = DVector::zeros(t.len());
            for (c, &lam) in st.eig.values.iter().enumerate() {
                if lam <= RANK_TOL {
                    continue;
                }
                let v = st.eig.vectors.column(c);
                let coef = v.dot(&t);
                proj += &st.ut * v * (coef / lam);
                lower += v * (coef / lam.sqrt());
            }
            let h = &gt - proj;
            kernel_residual = kernel_residual.max((st.ut.transpose() * &h).norm());
            gts[j] = gt;
            hts[j] = h;
            gt = lower;
        }
        hts[0] = gt.clone();
        gts[0] = gt;

        let back = |i: usize, v: &DVector<f64>| DVector::from_iterator(v.len(), v.iter().zip(self.sqrt_w[i].iter()).map(|(x, s)| x / s));
        let g_orig: Vec<DVector<f64>> = (0..=k).map(|i| back(i, &gts[i])).collect();
        let h_norms2: Vec<f64> = hts.iter().map(|h| h.norm_squared()).collect();
        let g_norms2: Vec<f64> = gts.iter().map(|g| g.norm_squared()).collect();
        let norm_residual = (0..=k)
            .map(|i| (g_norms2[i] - h_norms2[..=i].iter().sum::<f64>()).abs())
            .fold(0.0, f64::max);
        let corr: Vec<f64> = (0..=k).map(|i| self.correction(i, &g_orig[i])).collect();
        let corr_bounds: Vec<f64> =
            (0..=k).map(|i| (self.mu_primes[i] - self.alphas[i]).max(0.0) * g_norms2[i]).collect();
        let corr_within_bounds = corr.iter().zip(&corr_bounds).all(|(c, b)| *c <= b + CERT_TOL);

        let uf = &self.up.matrix * DVector::from_column_slice(&f.values);
        let up_norm2 = winner(&self.up.target_weights, &uf, &uf);
        let co = &self.coefficients;
        let predicted_up_norm2: f64 = (0..=k).map(|i| co.a[k][i] * h_norms2[i] + co.b[k][i] * corr[i]).sum();
        let up_residual = (up_norm2 - predicted_up_norm2).abs();
        let up_tolerance = if self.exact {
            LEDGER_TOL
        } else {
            LEDGER_TOL + (0..=k).map(|i| co.e[k][i] * self.epsilons[i]).sum::<f64>() * g_norms2[k]
        };
        let pass = up_residual <= up_tolerance && norm_residual < LEDGER_TOL && corr_within_bounds;
        Ok(DecompositionResult {
            k: self.k,
            h: (0..=k).map(|i| Cochain::new(i as i32, back(i, &hts[i]).as_slice().to_vec())).collect(),
            g: g_orig.iter().enumerate().map(|(i, g)| Cochain::new(i as i32, g.as_slice().to_vec())).collect(),
            h_norms2,
            g_norms2,
            corr,
            corr_bounds,
            corr_within_bounds,
            norm_residual,
            kernel_residual,
            up_norm2,
            predicted_up_norm2,
            up_residual,
            up_tolerance,
            pass,
        })
    }

    /// max_j a_{k,j} + Σ_i b_{k,i}(μ'_{i−1} − α_i)_+, plus Σ_i e_{k,i}ε_i off the exact case.
    pub fn bound(&self) -> f64 {
        let k = self.k as usize;
        let co = &self.coefficients;
        let amax = co.a[k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let corr: f64 = (0..=k).map(|i| co.b[k][i] * (self.mu_primes[i] - self.alphas[i]).max(0.0)).sum();
        let slack: f64 = if self.exact { 0.0 } else { (0..=k).map(|i| co.e[k][i] * self.epsilons[i]).sum() };
        amax + corr + slack
    }
}

pub fn ko_decomposition(wp: &WeightedPoset, ul: &ULReport, k: i32, alphas: &[f64], f: &Cochain) -> Result<DecompositionResult> {
    KoMachinery::new(wp, ul, k, alphas)?.decompose(f)
}

/// Top nontrivial eigenpair of M^+_k, the eigenvector in original coordinates.
fn top_nontrivial(wp: &WeightedPoset, k: i32) -> Result<(f64, Vec<f64>)> {
    let op = up_down_walk(wp, k)?;
    let s = op.symmetrized();
    let sw: Vec<f64> = op.source_weights.iter().map(|w| w.sqrt()).collect();
    let u = DVector::from_column_slice(&sw).normalize();
    let q = orthogonal_complement(&DMatrix::from_column_slice(u.len(), 1, u.as_slice()), 1e-10);
    if q.ncols() == 0 {
        return Err(HdxError::BadRank(format!("level {k} has a single element")));
    }
    let eig = jacobi_eigen(&(q.transpose() * &s * &q));
    let v = &q * eig.vectors.column(0);
    Ok((eig.values[0], v.iter().zip(&sw).map(|(x, s)| x / s).collect()))
}

/// Checks λ_2(M^+_k) against the decomposition bound.
pub fn bound_up_norm(wp: &WeightedPoset, ul: &ULReport, k: i32, alphas: &[f64]) -> Result<BoundCheck> {
    let mach = KoMachinery::new(wp, ul, k, alphas)?;
    let bound = mach.bound();
    let (measured, v) = top_nontrivial(wp, k)?;
    let dec = mach.decompose(&Cochain::new(k, v))?;
    Ok(BoundCheck {
        theorem: "one-sided-mixing".into(),
        bound,
        measured,
        verdict: measured <= bound + CERT_TOL,
        details: json!({
            "k": k,
            "alphas": mach.alphas,
            "exact_ul": mach.exact,
            "epsilons": mach.epsilons,
            "mu_primes": mach.mu_primes,
            "a": mach.coefficients.a[k as usize],
            "b": mach.coefficients.b[k as usize],
            "e": mach.coefficients.e[k as usize],
            "top_eigenvector": {
                "h_norms2": dec.h_norms2,
                "corr": dec.corr,
                "corr_bounds": dec.corr_bounds,
                "up_norm2": dec.up_norm2,
                "predicted_up_norm2": dec.predicted_up_norm2,
                "up_residual": dec.up_residual,
                "pass": dec.pass,
            },
        }),
    })
}
