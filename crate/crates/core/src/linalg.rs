//! Dense symmetric eigensolver and orthogonalization helpers.

use nalgebra::{DMatrix, DVector};

/// Off-diagonal Frobenius mass at which the cyclic Jacobi sweep stops.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column i belongs to `values[i]`.
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi on a symmetric matrix. Only the symmetric part of `m` is used.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> SymEigen {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "jacobi_eigen needs a square matrix");
    if n == 0 {
        return SymEigen { values: vec![], vectors: DMatrix::zeros(0, 0) };
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, n) < JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    SymEigen { values, vectors }
}

pub fn symmetry_residual(m: &DMatrix<f64>) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..i {
            r = r.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    r
}

/// Orthonormal basis of the column span, via modified Gram-Schmidt with
/// column pivoting. Columns whose residual norm falls below `tol` (relative to
/// the largest column) are dropped.
pub fn orthonormal_range(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut cols: Vec<DVector<f64>> = (0..a.ncols()).map(|j| a.column(j).into_owned()).collect();
    let scale = cols.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    while !cols.is_empty() && basis.len() < n {
        let (best, norm) = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= tol * scale {
            break;
        }
        let mut q = cols.swap_remove(best) / norm;
        // second pass against accumulated basis for stability
        for b in &basis {
            let proj = b.dot(&q);
            q -= b * proj;
        }
        let qn = q.norm();
        if qn <= tol {
            continue;
        }
        q /= qn;
        for c in cols.iter_mut() {
            let proj = q.dot(c);
            *c -= &q * proj;
        }
        basis.push(q);
    }
    if basis.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&basis)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// (orthonormal) columns of `q` in R^n.
pub fn orthogonal_complement(q: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = q.nrows();
    let mut candidates = DMatrix::<f64>::identity(n, n);
    if q.ncols() > 0 {
        let proj = q * q.transpose();
        candidates -= &proj;
        // reorthogonalize once more
        candidates = &candidates - q * (q.transpose() * &candidates);
    }
    let r = orthonormal_range(&candidates, tol);
    let keep = n - q.ncols();
    if r.ncols() > keep {
        r.columns(0, keep).into_owned()
    } else {
        r
    }
}

/// Moore-Penrose style application of a PSD matrix function: for the
/// symmetric PSD `s = V diag(λ) Vᵀ`, returns `V diag(φ(λ)) Vᵀ` with
/// eigenvalues in [-1e-12, 0] clamped to zero before `φ` is applied.
pub fn psd_function(eig: &SymEigen, phi: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = eig.values.len();
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        let lam = if (-1e-12..0.0).contains(&lam) { 0.0 } else { lam };
        let w = phi(lam);
        if w == 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        out += w * v * v.transpose();
    }
    out
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_known_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let e = jacobi_eigen(&m);
        let s2 = 2f64.sqrt();
        let want = [2.0 + s2, 2.0, 2.0 - s2];
        for (a, b) in e.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let rebuilt = &e.vectors * DMatrix::from_diagonal(&DVector::from_vec(e.values.clone())) * e.vectors.transpose();
        assert!(max_abs(&(rebuilt - m)) < 1e-12);
    }

    #[test]
    fn jacobi_on_diagonal_and_empty() {
        let e = jacobi_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0])));
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert!(jacobi_eigen(&DMatrix::zeros(0, 0)).values.is_empty());
    }

    #[test]
    fn range_and_complement_split_space() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        let q = orthonormal_range(&a, 1e-10);
        assert_eq!(q.ncols(), 1);
        let c = orthogonal_complement(&q, 1e-10);
        assert_eq!(c.ncols(), 2);
        assert!(max_abs(&(q.transpose() * &c)) < 1e-12);
        assert!(max_abs(&(c.transpose() * &c - DMatrix::identity(2, 2))) < 1e-12);
    }
}
