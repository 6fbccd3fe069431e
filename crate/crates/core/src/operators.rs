//! Up/down operators, walks, adjacency and the weighted inner product.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{HdxError, Result};
use crate::linalg::max_abs;
use crate::poset::{Cochain, ElementId, Link, WeightedPoset};

/// Dense map C^source → C^target together with the level weights that define
/// the inner products on both sides.
#[derive(Clone, Debug)]
pub struct LinearOp {
    pub source: i32,
    pub target: i32,
    pub matrix: DMatrix<f64>,
    pub source_weights: Vec<f64>,
    pub target_weights: Vec<f64>,
}

impl LinearOp {
    pub fn apply(&self, f: &Cochain) -> Result<Cochain> {
        if f.level != self.source {
            return Err(HdxError::LevelMismatch(f.level, self.source));
        }
        let v = &self.matrix * DVector::from_column_slice(&f.values);
        Ok(Cochain::new(self.target, v.as_slice().to_vec()))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearOp) -> Result<LinearOp> {
        if inner.target != self.source {
            return Err(HdxError::LevelMismatch(inner.target, self.source));
        }
        Ok(LinearOp {
            source: inner.source,
            target: self.target,
            matrix: &self.matrix * &inner.matrix,
            source_weights: inner.source_weights.clone(),
            target_weights: self.target_weights.clone(),
        })
    }

    pub fn is_square(&self) -> bool {
        self.source == self.target && self.matrix.nrows() == self.matrix.ncols()
    }

    /// W_t^{1/2} M W_s^{-1/2}: the operator in orthonormal coordinates.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let mut s = self.matrix.clone();
        for i in 0..s.nrows() {
            let a = self.target_weights[i].sqrt();
            for j in 0..s.ncols() {
                s[(i, j)] *= a / self.source_weights[j].sqrt();
            }
        }
        s
    }

    pub fn identity(level: i32, weights: Vec<f64>) -> LinearOp {
        let n = weights.len();
        LinearOp {
            source: level,
            target: level,
            matrix: DMatrix::identity(n, n),
            source_weights: weights.clone(),
            target_weights: weights,
        }
    }

    /// Plain-text rows plus a JSON index map of the row and column elements.
    pub fn dump(&self, wp: &WeightedPoset) -> (String, serde_json::Value) {
        let mut text = String::new();
        for i in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols()).map(|j| format!("{:.17e}", self.matrix[(i, j)])).collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        let ids = |lvl: i32| -> Vec<serde_json::Value> {
            wp.poset
                .level(lvl)
                .iter()
                .map(|&x| serde_json::json!({"id": x.0, "label": wp.poset.label(x)}))
                .collect()
        };
        let index = serde_json::json!({
            "source_level": self.source,
            "target_level": self.target,
            "rows": ids(self.target),
            "cols": ids(self.source),
        });
        (text, index)
    }
}

fn check_level(wp: &WeightedPoset, k: i32, lo: i32, hi: i32, what: &str) -> Result<()> {
    if k < lo || k > hi {
        return Err(HdxError::BadRank(format!("{what} needs {lo} <= k <= {hi}, got {k} (d = {})", wp.d())));
    }
    Ok(())
}

/// U_k: C^k → C^{k+1}, (Ug)(y) = Σ_{x⊲y} p(y→x) g(x).
pub fn up_operator(wp: &WeightedPoset, k: i32) -> Result<LinearOp> {
    check_level(wp, k, -1, wp.d() - 1, "U_k")?;
    let p = &wp.poset;
    let (src, tgt) = (p.level(k), p.level(k + 1));
    let mut m = DMatrix::zeros(tgt.len(), src.len());
    for (i, &y) in tgt.iter().enumerate() {
        for (c, &x) in p.children(y).iter().enumerate() {
            m[(i, p.pos(x))] = wp.weights.p[y.idx()][c];
        }
    }
    Ok(LinearOp { source: k, target: k + 1, matrix: m, source_weights: wp.level_weights(k), target_weights: wp.level_weights(k + 1) })
}

/// D_k: C^k → C^{k−1}, (Df)(x) = Σ_{y⊳x} p(y→x) m(y)/m(x) f(y).
pub fn down_operator(wp: &WeightedPoset, k: i32) -> Result<LinearOp> {
    check_level(wp, k, 0, wp.d(), "D_k")?;
    let p = &wp.poset;
    let (src, tgt) = (p.level(k), p.level(k - 1));
    let mut m = DMatrix::zeros(tgt.len(), src.len());
    for (j, &y) in src.iter().enumerate() {
        for (c, &x) in p.children(y).iter().enumerate() {
            m[(p.pos(x), j)] = wp.weights.p[y.idx()][c] * wp.m(y) / wp.m(x);
        }
    }
    Ok(LinearOp { source: k, target: k - 1, matrix: m, source_weights: wp.level_weights(k), target_weights: wp.level_weights(k - 1) })
}

/// M^+_k = D_{k+1} U_k, checked against the closed-form entries.
pub fn up_down_walk(wp: &WeightedPoset, k: i32) -> Result<LinearOp> {
    check_level(wp, k, -1, wp.d() - 1, "M^+_k")?;
    let op = down_operator(wp, k + 1)?.compose(&up_operator(wp, k)?)?;
    debug_assert!(max_abs(&(&op.matrix - upper_walk_entries(wp, k)?)) < 1e-12);
    Ok(op)
}

/// M^-_k = U_{k−1} D_k, checked against the closed-form entries.
pub fn down_up_walk(wp: &WeightedPoset, k: i32) -> Result<LinearOp> {
    check_level(wp, k, 0, wp.d(), "M^-_k")?;
    let op = up_operator(wp, k - 1)?.compose(&down_operator(wp, k)?)?;
    debug_assert!(max_abs(&(&op.matrix - lower_walk_entries(wp, k)?)) < 1e-12);
    Ok(op)
}

/// M^+(y,x) = Σ_{z⊳x,y} m(z) p(z→x) p(z→y) / m(y).
pub fn upper_walk_entries(wp: &WeightedPoset, k: i32) -> Result<DMatrix<f64>> {
    check_level(wp, k, -1, wp.d() - 1, "M^+_k")?;
    let p = &wp.poset;
    let n = p.level_size(k);
    let mut m = DMatrix::zeros(n, n);
    for &z in p.level(k + 1) {
        let ch = p.children(z);
        let pz = &wp.weights.p[z.idx()];
        for (a, &y) in ch.iter().enumerate() {
            for (b, &x) in ch.iter().enumerate() {
                m[(p.pos(y), p.pos(x))] += wp.m(z) * pz[a] * pz[b] / wp.m(y);
            }
        }
    }
    Ok(m)
}

/// M^-(y,x) = m(x) Σ_{z⊲x,y} p(x→z) p(y→z) / m(z).
pub fn lower_walk_entries(wp: &WeightedPoset, k: i32) -> Result<DMatrix<f64>> {
    check_level(wp, k, 0, wp.d(), "M^-_k")?;
    let p = &wp.poset;
    let n = p.level_size(k);
    let mut m = DMatrix::zeros(n, n);
    // group the level by common children
    let lower = p.level(k - 1);
    let mut above: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lower.len()];
    for &y in p.level(k) {
        for (c, &z) in p.children(y).iter().enumerate() {
            above[p.pos(z)].push((p.pos(y), wp.weights.p[y.idx()][c]));
        }
    }
    for (zi, list) in above.iter().enumerate() {
        let mz = wp.m(lower[zi]);
        for &(yi, py) in list {
            for &(xi, px) in list {
                let x = p.level(k)[xi];
                m[(yi, xi)] += wp.m(x) * px * py / mz;
            }
        }
    }
    Ok(m)
}

/// A_l(y,x) = Σ_{z⊳x,y} m(z)p(z→x)p(z→y) / ((1 − p(z→y)) m(y)), x ≠ y.
pub fn adjacency_operator(wp: &WeightedPoset, l: i32) -> Result<LinearOp> {
    check_level(wp, l, -1, wp.d() - 1, "A_l")?;
    let p = &wp.poset;
    let n = p.level_size(l);
    let mut m = DMatrix::zeros(n, n);
    for &z in p.level(l + 1) {
        let ch = p.children(z);
        if ch.len() < 2 {
            return Err(HdxError::DegenerateCover(p.label(z).into()));
        }
        let pz = &wp.weights.p[z.idx()];
        for (a, &y) in ch.iter().enumerate() {
            for (b, &x) in ch.iter().enumerate() {
                if a != b {
                    m[(p.pos(y), p.pos(x))] += wp.m(z) * pz[a] * pz[b] / ((1.0 - pz[a]) * wp.m(y));
                }
            }
        }
    }
    let w = wp.level_weights(l);
    Ok(LinearOp { source: l, target: l, matrix: m, source_weights: w.clone(), target_weights: w })
}

/// ĥf_x on level 0 of the link of the vertex x:
/// ĥf_x(z) = (1/(1 − p(z→x))) Σ_{y≠x, y⊲z} p(z→y) f(y).
pub fn hat_localize(wp: &WeightedPoset, link: &Link, f: &Cochain) -> Result<Cochain> {
    let x = link.base;
    if wp.poset.rank(x) != 0 || f.level != 0 {
        return Err(HdxError::BadRank("hat localization needs a vertex and a level-0 cochain".into()));
    }
    if wp.d() < 2 {
        return Err(HdxError::BadRank(format!("hat localization needs rank >= 2, got {}", wp.d())));
    }
    let p = &wp.poset;
    let values = link
        .inner
        .poset
        .level(0)
        .iter()
        .map(|&lz| {
            let z = link.members[lz.idx()];
            let pz = &wp.weights.p[z.idx()];
            let mut s = 0.0;
            let mut px = 0.0;
            for (c, &y) in p.children(z).iter().enumerate() {
                if y == x {
                    px = pz[c];
                } else {
                    s += pz[c] * f.get(p, y);
                }
            }
            s / (1.0 - px)
        })
        .collect();
    Ok(Cochain::new(0, values))
}

/// ⟨f, g⟩ = Σ m(x) f(x) g(x) on the common level.
pub fn weighted_inner_product(wp: &WeightedPoset, f: &Cochain, g: &Cochain) -> Result<f64> {
    if f.level != g.level {
        return Err(HdxError::LevelMismatch(f.level, g.level));
    }
    Ok(inner_with(&wp.poset.level(f.level).iter().map(|&x| wp.m(x)).collect::<Vec<_>>(), &f.values, &g.values))
}

pub fn inner_with(weights: &[f64], f: &[f64], g: &[f64]) -> f64 {
    weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
}

/// Level weights as an inner-product context.
#[derive(Clone, Debug, Serialize)]
pub struct InnerProductContext {
    pub level: i32,
    pub weights: Vec<f64>,
}

impl InnerProductContext {
    pub fn of(wp: &WeightedPoset, level: i32) -> Self {
        InnerProductContext { level, weights: wp.level_weights(level) }
    }
    pub fn inner(&self, f: &Cochain, g: &Cochain) -> Result<f64> {
        if f.level != self.level {
            return Err(HdxError::LevelMismatch(f.level, self.level));
        }
        if g.level != self.level {
            return Err(HdxError::LevelMismatch(g.level, self.level));
        }
        Ok(inner_with(&self.weights, &f.values, &g.values))
    }
}

/// Projection of `f` onto the constants, ⟨f, 𝟙⟩.
pub fn mean(wp: &WeightedPoset, f: &Cochain) -> f64 {
    wp.poset.level(f.level).iter().zip(&f.values).map(|(&x, v)| wp.m(x) * v).sum()
}

/// Element of the link's level 0 over the parent's element `z`.
pub fn link_position(link: &Link, z: ElementId) -> Option<usize> {
    link.local_id(z).map(|lz| link.inner.poset.pos(lz))
}
