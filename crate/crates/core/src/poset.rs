//! Graded posets, weight schemes, chains, links and cochain localization.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{HdxError, Result};

/// Absolute tolerance for weight identities in validation.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug)]
pub struct GradedPoset {
    d: i32,
    rank: Vec<i32>,
    labels: Vec<String>,
    levels: Vec<Vec<ElementId>>,
    pos: Vec<usize>,
    children: Vec<Vec<ElementId>>,
    parents: Vec<Vec<ElementId>>,
    up_sets: Vec<OnceLock<Vec<ElementId>>>,
}

impl Clone for GradedPoset {
    fn clone(&self) -> Self {
        GradedPoset {
            d: self.d,
            rank: self.rank.clone(),
            labels: self.labels.clone(),
            levels: self.levels.clone(),
            pos: self.pos.clone(),
            children: self.children.clone(),
            parents: self.parents.clone(),
            up_sets: (0..self.rank.len()).map(|_| OnceLock::new()).collect(),
        }
    }
}

impl GradedPoset {
    /// Builds a poset from (rank, label) records and (child, parent) index
    /// pairs. Elements are reordered by (rank, label), ties by input order;
    /// the returned vector maps input index to the new id. Structural axioms
    /// are not enforced here, see [`validate_poset`].
    pub fn from_parts(
        elements: Vec<(i32, String)>,
        covers: &[(usize, usize)],
    ) -> Result<(GradedPoset, Vec<ElementId>)> {
        let n = elements.len();
        if n == 0 {
            return Err(HdxError::BadArgs("empty poset".into()));
        }
        if let Some((r, l)) = elements.iter().find(|(r, _)| *r < -1) {
            return Err(HdxError::BadRank(format!("element {l} has rank {r} < -1")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            elements[a]
                .0
                .cmp(&elements[b].0)
                .then_with(|| elements[a].1.cmp(&elements[b].1))
                .then(a.cmp(&b))
        });
        let mut new_id = vec![ElementId(0); n];
        for (k, &old) in order.iter().enumerate() {
            new_id[old] = ElementId(k as u32);
        }
        let rank: Vec<i32> = order.iter().map(|&o| elements[o].0).collect();
        let labels: Vec<String> = order.iter().map(|&o| elements[o].1.clone()).collect();
        let d = *rank.iter().max().unwrap();
        let mut levels = vec![Vec::new(); (d + 2) as usize];
        let mut pos = vec![0; n];
        for (i, &r) in rank.iter().enumerate() {
            let lv = &mut levels[(r + 1) as usize];
            pos[i] = lv.len();
            lv.push(ElementId(i as u32));
        }
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for &(c, p) in covers {
            if c >= n || p >= n {
                return Err(HdxError::BadArgs(format!("cover ({c},{p}) out of range")));
            }
            let (c, p) = (new_id[c], new_id[p]);
            children[p.idx()].push(c);
            parents[c.idx()].push(p);
        }
        for v in children.iter_mut().chain(parents.iter_mut()) {
            v.sort();
            v.dedup();
        }
        let poset = GradedPoset {
            d,
            rank,
            labels,
            levels,
            pos,
            children,
            parents,
            up_sets: (0..n).map(|_| OnceLock::new()).collect(),
        };
        Ok((poset, new_id))
    }

    pub fn d(&self) -> i32 {
        self.d
    }
    pub fn len(&self) -> usize {
        self.rank.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }
    pub fn rank(&self, x: ElementId) -> i32 {
        self.rank[x.idx()]
    }
    pub fn label(&self, x: ElementId) -> &str {
        &self.labels[x.idx()]
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    /// Elements of rank `i`, in matrix index order. Empty outside [-1, d].
    pub fn level(&self, i: i32) -> &[ElementId] {
        if i < -1 || i > self.d {
            return &[];
        }
        &self.levels[(i + 1) as usize]
    }
    pub fn level_size(&self, i: i32) -> usize {
        self.level(i).len()
    }
    /// Index of `x` inside its level.
    pub fn pos(&self, x: ElementId) -> usize {
        self.pos[x.idx()]
    }
    pub fn children(&self, x: ElementId) -> &[ElementId] {
        &self.children[x.idx()]
    }
    pub fn parents(&self, x: ElementId) -> &[ElementId] {
        &self.parents[x.idx()]
    }
    /// Number of elements covered by `x`.
    pub fn nn(&self, x: ElementId) -> usize {
        self.children[x.idx()].len()
    }
    pub fn ids(&self) -> impl Iterator<Item = ElementId> {
        (0..self.len() as u32).map(ElementId)
    }
    pub fn minimum(&self) -> ElementId {
        self.level(-1)[0]
    }
    pub fn covers(&self) -> Vec<(ElementId, ElementId)> {
        let mut out = Vec::new();
        for y in self.ids() {
            for &x in self.children(y) {
                out.push((x, y));
            }
        }
        out
    }
    pub fn find_label(&self, label: &str) -> Option<ElementId> {
        self.labels.iter().position(|l| l == label).map(|i| ElementId(i as u32))
    }

    /// All elements `y >= x`, sorted by id (includes `x`). Memoized.
    pub fn up_set(&self, x: ElementId) -> &[ElementId] {
        self.up_sets[x.idx()].get_or_init(|| {
            let mut out = vec![x];
            for &p in self.parents(x) {
                if self.rank(p) <= self.rank(x) {
                    continue;
                }
                out.extend_from_slice(self.up_set(p));
            }
            out.sort();
            out.dedup();
            out
        })
    }

    pub fn le(&self, x: ElementId, y: ElementId) -> bool {
        x == y || (self.rank(x) < self.rank(y) && self.up_set(x).binary_search(&y).is_ok())
    }

    /// Maximal chains from `y` down to `x`, each listed top first. Order is
    /// lexicographic in child ids.
    pub fn maximal_chains(&self, y: ElementId, x: ElementId) -> Result<Vec<Chain>> {
        if !self.le(x, y) {
            return Err(HdxError::NotComparable(self.label(x).into(), self.label(y).into()));
        }
        let mut out = Vec::new();
        let mut stack = vec![y];
        self.chains_rec(x, &mut stack, &mut out);
        Ok(out)
    }

    fn chains_rec(&self, x: ElementId, stack: &mut Vec<ElementId>, out: &mut Vec<Chain>) {
        let top = *stack.last().unwrap();
        if top == x {
            out.push(Chain { elements: stack.clone() });
            return;
        }
        for &c in self.children(top) {
            if self.le(x, c) {
                stack.push(c);
                self.chains_rec(x, stack, out);
                stack.pop();
            }
        }
    }
}

/// A saturated chain c_1 ⊳ c_2 ⊳ … listed from the top element down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub elements: Vec<ElementId>,
}

impl Chain {
    pub fn probability(&self, w: &WeightScheme, poset: &GradedPoset) -> f64 {
        self.elements.windows(2).map(|p| w.p(poset, p[0], p[1])).product()
    }
}

#[derive(Clone, Debug)]
pub struct WeightScheme {
    pub m: Vec<f64>,
    /// `p[y][k]` is p(y → children(y)[k]).
    pub p: Vec<Vec<f64>>,
}

impl WeightScheme {
    pub fn p(&self, poset: &GradedPoset, y: ElementId, x: ElementId) -> f64 {
        match poset.children(y).binary_search(&x) {
            Ok(k) => self.p[y.idx()][k],
            Err(_) => 0.0,
        }
    }
    pub fn m(&self, x: ElementId) -> f64 {
        self.m[x.idx()]
    }

    /// Fills `m` from top weights and transition probabilities by m(x) = Σ p(y→x) m(y).
    pub fn propagate(poset: &GradedPoset, p: Vec<Vec<f64>>, top: &[f64]) -> WeightScheme {
        let mut m = vec![0.0; poset.len()];
        let total: f64 = top.iter().sum();
        for (k, &y) in poset.level(poset.d()).iter().enumerate() {
            m[y.idx()] = top[k] / total;
        }
        for r in (0..=poset.d()).rev() {
            for &y in poset.level(r) {
                let my = m[y.idx()];
                for (k, &x) in poset.children(y).iter().enumerate() {
                    m[x.idx()] += p[y.idx()][k] * my;
                }
            }
        }
        WeightScheme { m, p }
    }
}

#[derive(Clone, Debug)]
pub struct WeightedPoset {
    pub poset: GradedPoset,
    pub weights: WeightScheme,
}

impl WeightedPoset {
    pub fn new(poset: GradedPoset, weights: WeightScheme) -> Self {
        WeightedPoset { poset, weights }
    }
    pub fn d(&self) -> i32 {
        self.poset.d()
    }
    pub fn m(&self, x: ElementId) -> f64 {
        self.weights.m(x)
    }
    pub fn p(&self, y: ElementId, x: ElementId) -> f64 {
        self.weights.p(&self.poset, y, x)
    }
    pub fn level_weights(&self, i: i32) -> Vec<f64> {
        self.poset.level(i).iter().map(|&x| self.m(x)).collect()
    }

    /// True when every transition probability equals 1/NN(y).
    pub fn is_standard(&self) -> bool {
        self.poset.ids().all(|y| {
            let nn = self.poset.nn(y) as f64;
            self.weights.p[y.idx()].iter().all(|&p| (p - 1.0 / nn).abs() < WEIGHT_TOL)
        })
    }

    /// Σ_{c∈Ch(y→x)} p(c) for every y (zero unless y ≥ x).
    pub fn chain_sums_up(&self, x: ElementId) -> Vec<f64> {
        let mut w = vec![0.0; self.poset.len()];
        w[x.idx()] = 1.0;
        for r in (self.poset.rank(x) + 1)..=self.d() {
            for &y in self.poset.level(r) {
                let mut s = 0.0;
                for (k, &c) in self.poset.children(y).iter().enumerate() {
                    s += self.weights.p[y.idx()][k] * w[c.idx()];
                }
                w[y.idx()] = s;
            }
        }
        w
    }

    /// Σ_{c∈Ch(y→x)} p(c) for every x (zero unless x ≤ y).
    pub fn chain_sums_down(&self, y: ElementId) -> Vec<f64> {
        let mut w = vec![0.0; self.poset.len()];
        w[y.idx()] = 1.0;
        for r in (0..=self.poset.rank(y)).rev() {
            for &z in self.poset.level(r) {
                let wz = w[z.idx()];
                if wz == 0.0 {
                    continue;
                }
                for (k, &c) in self.poset.children(z).iter().enumerate() {
                    w[c.idx()] += self.weights.p[z.idx()][k] * wz;
                }
            }
        }
        w
    }

    /// Σ over chains from `y` down to `x` of p(c), for x ⊲ ⋅ ⊲ y (distance two).
    pub fn chain_sum2(&self, y: ElementId, x: ElementId) -> f64 {
        let mut s = 0.0;
        for (k, &mid) in self.poset.children(y).iter().enumerate() {
            let q = self.p(mid, x);
            if q > 0.0 {
                s += self.weights.p[y.idx()][k] * q;
            }
        }
        s
    }

    pub fn zero_cochain(&self, level: i32) -> Cochain {
        Cochain { level, values: vec![0.0; self.poset.level_size(level)] }
    }
    pub fn ones(&self, level: i32) -> Cochain {
        Cochain { level, values: vec![1.0; self.poset.level_size(level)] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cochain {
    pub level: i32,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn new(level: i32, values: Vec<f64>) -> Self {
        Cochain { level, values }
    }
    pub fn get(&self, poset: &GradedPoset, x: ElementId) -> f64 {
        self.values[poset.pos(x)]
    }
}

#[derive(Clone, Debug)]
pub struct Link {
    pub base: ElementId,
    /// Link element id (as index) → element of the parent poset.
    pub members: Vec<ElementId>,
    pub inner: WeightedPoset,
    /// rk(base) + 1; link rank = parent rank − shift.
    pub shift: i32,
}

/// The subposet of elements ≥ x reranked so x has rank −1, with the map from
/// its ids back to `poset`. Ids keep the parent's relative order.
pub fn up_subposet(poset: &GradedPoset, x: ElementId) -> Result<(GradedPoset, Vec<ElementId>)> {
    let members: Vec<ElementId> = poset.up_set(x).to_vec();
    let local: HashMap<ElementId, usize> = members.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let shift = poset.rank(x) + 1;
    let elements: Vec<(i32, String)> = members
        .iter()
        .map(|&e| (poset.rank(e) - shift, poset.label(e).to_string()))
        .collect();
    let mut covers = Vec::new();
    for (i, &e) in members.iter().enumerate() {
        for &c in poset.children(e) {
            if let Some(&j) = local.get(&c) {
                covers.push((j, i));
            }
        }
    }
    let (inner, new_id) = GradedPoset::from_parts(elements, &covers)?;
    let mut ordered = vec![ElementId(0); members.len()];
    for (i, &e) in members.iter().enumerate() {
        ordered[new_id[i].idx()] = e;
    }
    Ok((inner, ordered))
}

/// Builds the link P_x with induced rank, m_x and p_x.
pub fn build_link(wp: &WeightedPoset, x: ElementId) -> Result<Link> {
    let poset = &wp.poset;
    if poset.rank(x) >= poset.d() {
        return Err(HdxError::BadRank(format!(
            "link of {} needs rank <= d-1 = {}",
            poset.label(x),
            poset.d() - 1
        )));
    }
    let (inner, ordered) = up_subposet(poset, x)?;
    let shift = poset.rank(x) + 1;

    let w = wp.chain_sums_up(x);
    let mx = wp.m(x);
    let mut m = vec![0.0; inner.len()];
    let mut p = vec![Vec::new(); inner.len()];
    for y in inner.ids() {
        let orig = ordered[y.idx()];
        m[y.idx()] = wp.m(orig) * w[orig.idx()] / mx;
        p[y.idx()] = inner
            .children(y)
            .iter()
            .map(|&c| {
                let oc = ordered[c.idx()];
                wp.p(orig, oc) * w[oc.idx()] / w[orig.idx()]
            })
            .collect();
    }
    Ok(Link { base: x, members: ordered, inner: WeightedPoset::new(inner, WeightScheme { m, p }), shift })
}

impl Link {
    /// Link element carrying parent element `e`, if `e ≥ base`.
    pub fn local_id(&self, e: ElementId) -> Option<ElementId> {
        // members are sorted by parent id and the inner order agrees with it
        self.members.binary_search(&e).ok().map(|i| ElementId(i as u32))
    }
}

/// f_x: restriction of `f` to the link of `link.base`.
pub fn localize_cochain(wp: &WeightedPoset, link: &Link, f: &Cochain) -> Result<Cochain> {
    let rx = wp.poset.rank(link.base);
    if f.level <= rx {
        return Err(HdxError::BadRank(format!("cochain level {} not above rank {}", f.level, rx)));
    }
    let lvl = f.level - rx - 1;
    let values = link
        .inner
        .poset
        .level(lvl)
        .iter()
        .map(|&y| f.get(&wp.poset, link.members[y.idx()]))
        .collect();
    Ok(Cochain::new(lvl, values))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Violation {
    pub kind: String,
    pub elements: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
    fn push(&mut self, kind: &str, elements: Vec<String>, detail: String) {
        self.violations.push(Violation { kind: kind.into(), elements, detail });
    }
}

pub fn validate_poset(poset: &GradedPoset, weights: &WeightScheme) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let lab = |x: ElementId| poset.label(x).to_string();

    let minima = poset.level(-1);
    if minima.len() != 1 {
        rep.push(
            "unique minimum",
            minima.iter().map(|&x| lab(x)).collect(),
            format!("{} elements of rank -1", minima.len()),
        );
    }
    let mut graded = true;
    for (x, y) in poset.covers() {
        let jump = poset.rank(y) - poset.rank(x);
        if jump != 1 {
            graded = false;
            rep.push("grading", vec![lab(x), lab(y)], format!("cover raises rank by {jump}"));
        }
    }
    for x in poset.ids() {
        if poset.rank(x) >= 0 && poset.children(x).is_empty() {
            graded = false;
            rep.push("grading", vec![lab(x)], "element of rank >= 0 covers nothing".into());
        }
    }
    if graded {
        for x in poset.ids() {
            if poset.rank(x) < poset.d() && poset.parents(x).is_empty() {
                rep.push("purity", vec![lab(x)], format!("maximal element of rank {} < d", poset.rank(x)));
            }
        }
    }
    if weights.m.len() != poset.len() || weights.p.len() != poset.len() {
        rep.push("shape", vec![], "weight arrays do not match the poset".into());
        return rep;
    }
    for y in poset.ids() {
        if weights.p[y.idx()].len() != poset.nn(y) {
            rep.push("shape", vec![lab(y)], "transition list does not match children".into());
            return rep;
        }
    }
    for x in poset.ids() {
        if !(weights.m(x) > 0.0) {
            rep.push("positive weight", vec![lab(x)], format!("m = {}", weights.m(x)));
        }
    }
    for y in poset.ids() {
        let ps = &weights.p[y.idx()];
        if ps.is_empty() {
            continue;
        }
        if let Some(k) = ps.iter().position(|&p| !(p > 0.0 && p <= 1.0 + WEIGHT_TOL)) {
            rep.push(
                "transition range",
                vec![lab(y), lab(poset.children(y)[k])],
                format!("p = {}", ps[k]),
            );
        }
        let s: f64 = ps.iter().sum();
        if (s - 1.0).abs() > WEIGHT_TOL {
            rep.push("transition sum", vec![lab(y)], format!("sum of p = {s}"));
        }
    }
    if minima.len() == 1 && (weights.m(minima[0]) - 1.0).abs() > WEIGHT_TOL {
        rep.push("m(smallest)≠1", vec![lab(minima[0])], format!("m = {}", weights.m(minima[0])));
    }
    for x in poset.ids() {
        if poset.parents(x).is_empty() {
            continue;
        }
        let s: f64 = poset.parents(x).iter().map(|&y| weights.p(poset, y, x) * weights.m(y)).sum();
        if (s - weights.m(x)).abs() > WEIGHT_TOL {
            rep.push("weight equation", vec![lab(x)], format!("m = {} but Σ p m = {}", weights.m(x), s));
        }
    }
    for i in -1..=poset.d() {
        let s: f64 = poset.level(i).iter().map(|&x| weights.m(x)).sum();
        if (s - 1.0).abs() > WEIGHT_TOL {
            rep.push("level sum", vec![], format!("level {i} sums to {s}"));
        }
    }
    if graded {
        let wp = WeightedPoset::new(poset.clone(), weights.clone());
        for y in poset.ids() {
            let w = wp.chain_sums_down(y);
            for k in -1..poset.rank(y) {
                let s: f64 = poset.level(k).iter().map(|&x| w[x.idx()]).sum();
                if (s - 1.0).abs() > WEIGHT_TOL {
                    rep.push(
                        "conservation of probability",
                        vec![lab(y)],
                        format!("chains to level {k} sum to {s}"),
                    );
                }
            }
        }
    }
    rep
}
