//! Structural regularity and the UL / AL / TL weight properties.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{HdxError, Result};
use crate::par;
use crate::poset::{up_subposet, ElementId, GradedPoset, WeightedPoset};

/// UL constants count as exact below this half-range.
pub const UL_EXACT_TOL: f64 = 1e-10;
/// AL / TL deviations count as exact below this.
pub const EXACT_TOL: f64 = 1e-9;

pub const UL_INTERPRETATION: &str =
    "UL.1/UL.2 denominators are sums of p(c) over chains c from x down to z";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Count {
    Uniform { value: usize },
    Nonuniform { min: usize, max: usize },
    Vacuous,
}

impl Count {
    fn from_iter(it: impl IntoIterator<Item = usize>) -> Count {
        let mut lo = usize::MAX;
        let mut hi = 0;
        let mut any = false;
        for v in it {
            any = true;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        match (any, lo == hi) {
            (false, _) => Count::Vacuous,
            (true, true) => Count::Uniform { value: lo },
            (true, false) => Count::Nonuniform { min: lo, max: hi },
        }
    }
    pub fn value(&self) -> Option<usize> {
        match self {
            Count::Uniform { value } => Some(*value),
            _ => None,
        }
    }
    fn regular(&self) -> bool {
        !matches!(self, Count::Nonuniform { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelCount {
    pub level: i32,
    pub count: Count,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalRegularity {
    /// Rank of the link base s.
    pub rank: i32,
    pub n_low1: Count,
    pub n_low2: Count,
    pub n_mid1: Count,
    pub r_y: Count,
    pub two_skeleton_regular: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub d: i32,
    /// Levels 0..=d.
    pub n_low: Vec<LevelCount>,
    /// Levels 0..=d−1.
    pub n_mid: Vec<LevelCount>,
    /// Levels 0..=d−1.
    pub n_wedge: Vec<LevelCount>,
    pub r_y: Count,
    pub lower_regular: bool,
    pub middle_regular: bool,
    pub wedge_regular: bool,
    pub y_regular: bool,
    pub two_skeleton_regular: bool,
    /// Links of rank −1..=d−3.
    pub local: Vec<LocalRegularity>,
    pub locally_two_skeleton_regular: bool,
    /// N^low_l(N^mid_l − 1)/((N^low_{l+1} − 1)N^∧_l) − 1 where defined.
    pub ns_relation_residual: Vec<Option<f64>>,
    /// R^Y − N^mid_1(N^low_1 − 1)/(N^low_2 N^low_1/N^mid_1 − 1).
    pub two_skeleton_relation_residual: Option<f64>,
}

impl RegularityReport {
    pub fn n_low_at(&self, i: i32) -> Option<usize> {
        self.n_low.iter().find(|c| c.level == i).and_then(|c| c.count.value())
    }
    pub fn n_mid_at(&self, i: i32) -> Option<usize> {
        self.n_mid.iter().find(|c| c.level == i).and_then(|c| c.count.value())
    }
    pub fn n_wedge_at(&self, i: i32) -> Option<usize> {
        self.n_wedge.iter().find(|c| c.level == i).and_then(|c| c.count.value())
    }
    pub fn is_regular(&self) -> bool {
        self.lower_regular && self.middle_regular && self.wedge_regular
    }
    pub fn local_at(&self, rank: i32) -> Option<&LocalRegularity> {
        self.local.iter().find(|l| l.rank == rank)
    }
}

fn n_low_counts(p: &GradedPoset, i: i32) -> Count {
    Count::from_iter(p.level(i).iter().map(|&x| p.nn(x)))
}

fn n_mid_counts(p: &GradedPoset, i: i32) -> Count {
    let mut all = Vec::new();
    for &x in p.level(i + 1) {
        let mut cnt: HashMap<ElementId, usize> = HashMap::new();
        for &y in p.children(x) {
            for &z in p.children(y) {
                *cnt.entry(z).or_default() += 1;
            }
        }
        all.extend(cnt.into_values());
    }
    Count::from_iter(all)
}

fn sorted_intersection(a: &[ElementId], b: &[ElementId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn n_wedge_counts(p: &GradedPoset, i: i32) -> Count {
    let mut pairs: BTreeSet<(ElementId, ElementId)> = BTreeSet::new();
    for &x in p.level(i + 1) {
        let ch = p.children(x);
        for a in 0..ch.len() {
            for b in (a + 1)..ch.len() {
                pairs.insert((ch[a], ch[b]));
            }
        }
    }
    Count::from_iter(pairs.iter().map(|&(a, b)| sorted_intersection(p.children(a), p.children(b))))
}

fn r_y_counts(p: &GradedPoset) -> Count {
    if p.d() < 2 {
        return Count::Vacuous;
    }
    let mut all = Vec::new();
    for &u in p.level(2) {
        let below: BTreeSet<ElementId> = p.children(u).iter().flat_map(|&z| p.children(z).iter().copied()).collect();
        let below: Vec<ElementId> = below.into_iter().collect();
        for a in 0..below.len() {
            for b in (a + 1)..below.len() {
                let n = p
                    .children(u)
                    .iter()
                    .filter(|&&z| {
                        let ch = p.children(z);
                        ch.binary_search(&below[a]).is_ok() && ch.binary_search(&below[b]).is_ok()
                    })
                    .count();
                all.push(n);
            }
        }
    }
    Count::from_iter(all)
}

fn unify(counts: &[Count]) -> Count {
    let mut vals = Vec::new();
    for c in counts {
        match c {
            Count::Uniform { value } => vals.push(*value),
            Count::Nonuniform { min, max } => {
                vals.push(*min);
                vals.push(*max);
            }
            Count::Vacuous => {}
        }
    }
    Count::from_iter(vals)
}

pub fn detect_regularity(p: &GradedPoset) -> RegularityReport {
    let d = p.d();
    let n_low: Vec<LevelCount> = (0..=d).map(|i| LevelCount { level: i, count: n_low_counts(p, i) }).collect();
    let n_mid: Vec<LevelCount> = (0..d).map(|i| LevelCount { level: i, count: n_mid_counts(p, i) }).collect();
    let n_wedge: Vec<LevelCount> = (0..d).map(|i| LevelCount { level: i, count: n_wedge_counts(p, i) }).collect();
    let r_y = r_y_counts(p);
    let lower_regular = n_low.iter().all(|c| c.count.value().is_some());
    let middle_regular = n_mid.iter().all(|c| c.count.regular());
    let wedge_regular = n_wedge.iter().all(|c| c.count.regular());
    let y_regular = r_y.value().is_some();
    let two_skel = |nl1: Count, nl2: Count, nm1: Count, ry: Count| {
        nl1.value().is_some() && nl2.value().is_some() && nm1.value().is_some() && ry.value().is_some()
    };
    let get = |v: &Vec<LevelCount>, i: i32| v.iter().find(|c| c.level == i).map(|c| c.count).unwrap_or(Count::Vacuous);
    let two_skeleton_regular = d >= 2 && two_skel(get(&n_low, 1), get(&n_low, 2), get(&n_mid, 1), r_y);

    let bases: Vec<ElementId> = (-1..=d - 3).flat_map(|r| p.level(r).iter().copied()).collect();
    let per_link: Vec<(i32, [Count; 4])> = par::map(&bases, |&s| {
        let (lp, _) = up_subposet(p, s).expect("up-set of a valid element");
        (p.rank(s), [n_low_counts(&lp, 1), n_low_counts(&lp, 2), n_mid_counts(&lp, 1), r_y_counts(&lp)])
    });
    let mut by_rank: BTreeMap<i32, Vec<[Count; 4]>> = BTreeMap::new();
    for (r, c) in per_link {
        by_rank.entry(r).or_default().push(c);
    }
    let local: Vec<LocalRegularity> = by_rank
        .into_iter()
        .map(|(rank, cs)| {
            let pick = |k: usize| unify(&cs.iter().map(|c| c[k]).collect::<Vec<_>>());
            let (a, b, c, e) = (pick(0), pick(1), pick(2), pick(3));
            LocalRegularity { rank, n_low1: a, n_low2: b, n_mid1: c, r_y: e, two_skeleton_regular: two_skel(a, b, c, e) }
        })
        .collect();
    let locally_two_skeleton_regular = d >= 2 && local.iter().all(|l| l.two_skeleton_regular);

    let mut report = RegularityReport {
        d,
        n_low,
        n_mid,
        n_wedge,
        r_y,
        lower_regular,
        middle_regular,
        wedge_regular,
        y_regular,
        two_skeleton_regular,
        local,
        locally_two_skeleton_regular,
        ns_relation_residual: vec![],
        two_skeleton_relation_residual: None,
    };
    report.ns_relation_residual = (0..d)
        .map(|l| {
            let (a, b, m, w) = (report.n_low_at(l)?, report.n_low_at(l + 1)?, report.n_mid_at(l)?, report.n_wedge_at(l)?);
            if b <= 1 || w == 0 {
                return None;
            }
            Some(a as f64 * (m as f64 - 1.0) / ((b as f64 - 1.0) * w as f64) - 1.0)
        })
        .collect();
    report.two_skeleton_relation_residual = (|| {
        let (n1, n2, nm, r) = (
            report.n_low_at(1)? as f64,
            report.n_low_at(2)? as f64,
            report.n_mid_at(1)? as f64,
            report.r_y.value()? as f64,
        );
        let den = n2 * n1 / nm - 1.0;
        (den != 0.0).then(|| r - nm * (n1 - 1.0) / den)
    })();
    report
}

/// Midpoint and half-range of the observed values of a defining sum.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Estimate {
    pub c: f64,
    pub eps: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Option<Estimate> {
        if values.is_empty() {
            return None;
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Estimate { c: 0.5 * (lo + hi), eps: 0.5 * (hi - lo), min: lo, max: hi, samples: values.len() })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ULLevel {
    pub level: i32,
    pub xyz: Option<Estimate>,
    pub dia: Option<Estimate>,
    pub sqr: Option<Estimate>,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ULConstants {
    pub xyz: f64,
    pub dia: f64,
    pub sqr: f64,
}

impl ULConstants {
    /// 1/c^dia − c^sqr(c^xyz/c^dia − 1) − 1.
    pub fn relation_residual(&self) -> f64 {
        1.0 / self.dia - self.sqr * (self.xyz / self.dia - 1.0) - 1.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ULReport {
    pub interpretation: String,
    pub levels: Vec<ULLevel>,
    pub exact: bool,
}

impl ULReport {
    pub fn level(&self, l: i32) -> Result<&ULLevel> {
        self.levels.iter().find(|v| v.level == l).ok_or_else(|| HdxError::MissingULReport(format!("no UL data at level {l}")))
    }

    /// Midpoint constants at level l.
    pub fn constants(&self, l: i32) -> Result<ULConstants> {
        let lv = self.level(l)?;
        let miss = |w: &str| HdxError::MissingULReport(format!("c^{w} undefined at level {l}"));
        let c = ULConstants {
            xyz: lv.xyz.ok_or_else(|| miss("xyz"))?.c,
            dia: lv.dia.ok_or_else(|| miss("dia"))?.c,
            sqr: lv.sqr.ok_or_else(|| miss("sqr"))?.c,
        };
        if !(c.dia > 0.0) {
            return Err(HdxError::MissingULReport(format!("c^dia = {} at level {l}", c.dia)));
        }
        Ok(c)
    }

    /// Unified ε_l = max(ε^xyz, ε^dia, ε^sqr).
    pub fn epsilon(&self, l: i32) -> Result<f64> {
        let lv = self.level(l)?;
        Ok([lv.xyz, lv.dia, lv.sqr].iter().flatten().map(|e| e.eps).fold(0.0, f64::max))
    }

    pub fn level_exact(&self, l: i32) -> bool {
        self.epsilon(l).map(|e| e < UL_EXACT_TOL).unwrap_or(false)
    }
}

pub fn check_ul(wp: &WeightedPoset) -> ULReport {
    let p = &wp.poset;
    let levels: Vec<i32> = (0..wp.d()).collect();
    let levels: Vec<ULLevel> = par::map(&levels, |&l| {
        let mut xyz = Vec::new();
        for &y in p.level(l) {
            for &x in p.parents(y) {
                let mut s = 0.0;
                for (k, &z) in p.children(y).iter().enumerate() {
                    let pyz = wp.weights.p[y.idx()][k];
                    s += pyz * pyz / wp.chain_sum2(x, z);
                }
                xyz.push(s);
            }
        }
        let mut dia = Vec::new();
        for &x in p.level(l + 1) {
            let ch = p.children(x);
            for a in 0..ch.len() {
                for b in (a + 1)..ch.len() {
                    let (y1, y2) = (ch[a], ch[b]);
                    let mut s = 0.0;
                    for (k, &z) in p.children(y1).iter().enumerate() {
                        let p2 = wp.p(y2, z);
                        if p2 > 0.0 {
                            s += wp.weights.p[y1.idx()][k] * p2 / wp.chain_sum2(x, z);
                        }
                    }
                    dia.push(s);
                }
            }
        }
        let sqr: Vec<f64> = p
            .level(l)
            .iter()
            .map(|&y| {
                p.parents(y).iter().map(|&x| {
                    let q = wp.p(x, y);
                    wp.m(x) * q * q
                }).sum::<f64>()
                    / wp.m(y)
            })
            .collect();
        ULLevel { level: l, xyz: Estimate::from_values(&xyz), dia: Estimate::from_values(&dia), sqr: Estimate::from_values(&sqr) }
    });
    let exact = levels
        .iter()
        .all(|lv| [lv.xyz, lv.dia, lv.sqr].iter().flatten().all(|e| e.eps < UL_EXACT_TOL));
    ULReport { interpretation: UL_INTERPRETATION.into(), levels, exact }
}

#[derive(Clone, Debug, Serialize)]
pub struct ALLevel {
    pub level: i32,
    pub pairs: usize,
    pub max_relative_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ALReport {
    pub levels: Vec<ALLevel>,
    pub max_relative_deviation: f64,
    pub exact: bool,
}

impl ALReport {
    pub fn level_exact(&self, l: i32) -> bool {
        self.levels.iter().find(|v| v.level == l).map(|v| v.max_relative_deviation < EXACT_TOL).unwrap_or(false)
    }
}

/// Both sides of the AL identity for every ordered pair x ≠ y with a common cover.
pub fn al_sides(wp: &WeightedPoset, l: i32) -> BTreeMap<(ElementId, ElementId), (f64, f64)> {
    let p = &wp.poset;
    let mut acc: BTreeMap<(ElementId, ElementId), (f64, f64)> = BTreeMap::new();
    for &z in p.level(l + 1) {
        let ch = p.children(z);
        let pz = &wp.weights.p[z.idx()];
        for (a, &x) in ch.iter().enumerate() {
            for (b, &y) in ch.iter().enumerate() {
                if a == b {
                    continue;
                }
                let base = wp.m(z) * pz[a] * pz[b];
                let lhs = base / (1.0 - pz[a]);
                let mut inner = 0.0;
                for (k, &s) in p.children(x).iter().enumerate() {
                    let pys = wp.p(y, s);
                    if pys == 0.0 {
                        continue;
                    }
                    let pxs = wp.weights.p[x.idx()][k];
                    inner += pxs * pys / (wp.chain_sum2(z, s) - pz[a] * pxs);
                }
                let e = acc.entry((x, y)).or_insert((0.0, 0.0));
                e.0 += lhs;
                e.1 += base * inner;
            }
        }
    }
    acc
}

pub fn check_al(wp: &WeightedPoset) -> Result<ALReport> {
    if !wp.is_standard() {
        return Err(HdxError::NonStandardScheme);
    }
    let ls: Vec<i32> = (0..wp.d()).collect();
    let levels: Vec<ALLevel> = par::map(&ls, |&l| {
        let sides = al_sides(wp, l);
        let dev = sides.values().map(|(a, b)| (a - b).abs() / a.abs().max(1e-300)).fold(0.0, f64::max);
        ALLevel { level: l, pairs: sides.len(), max_relative_deviation: dev }
    });
    let max_relative_deviation = levels.iter().map(|l| l.max_relative_deviation).fold(0.0, f64::max);
    Ok(ALReport { levels, max_relative_deviation, exact: max_relative_deviation < EXACT_TOL })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct TLConstants {
    pub same: f64,
    pub diff: f64,
    pub same2: f64,
    pub diff2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TLReport {
    pub same: Option<Estimate>,
    pub diff: Option<Estimate>,
    pub same2: Option<Estimate>,
    pub diff2: Option<Estimate>,
    /// Pairs y1 ≠ y2 with a nonzero TL.4 sum but no common cover.
    pub unmatched_pairs: usize,
    pub exact: bool,
    /// c^same + c^diff − 1 and c^same2 + c^diff2 − 1.
    pub sum_residuals: Option<(f64, f64)>,
}

impl TLReport {
    pub fn constants(&self) -> Option<TLConstants> {
        Some(TLConstants { same: self.same?.c, diff: self.diff?.c, same2: self.same2?.c, diff2: self.diff2?.c })
    }
    pub fn max_eps(&self) -> f64 {
        [self.same, self.diff, self.same2, self.diff2].iter().flatten().map(|e| e.eps).fold(0.0, f64::max)
    }
}

pub fn check_tl(wp: &WeightedPoset) -> Result<TLReport> {
    if !wp.is_standard() {
        return Err(HdxError::NonStandardScheme);
    }
    if wp.d() < 2 {
        return Err(HdxError::BadRank(format!("TL needs rank >= 2, got {}", wp.d())));
    }
    let p = &wp.poset;
    let nn = |x: ElementId| p.nn(x) as f64;
    for &z in p.level(1).iter().chain(p.level(2)) {
        if p.nn(z) < 2 {
            return Err(HdxError::DegenerateCover(p.label(z).into()));
        }
    }

    let same: Vec<f64> = p
        .level(0)
        .iter()
        .map(|&y| p.parents(y).iter().map(|&z| wp.m(z) / (nn(z) * (nn(z) - 1.0))).sum::<f64>() / wp.m(y))
        .collect();

    // TL.2 left sums per unordered pair, reused by TL.4
    let mut pair_lhs: BTreeMap<(ElementId, ElementId), f64> = BTreeMap::new();
    let mut pair_rhs: BTreeMap<(ElementId, ElementId), f64> = BTreeMap::new();
    for &z in p.level(1) {
        let ch = p.children(z);
        let (a, b) = (wp.m(z) / (nn(z) * (nn(z) - 1.0)), wp.m(z) * (nn(z) - 2.0) / (nn(z) * (nn(z) - 1.0).powi(2)));
        for i in 0..ch.len() {
            for j in (i + 1)..ch.len() {
                *pair_lhs.entry((ch[i], ch[j])).or_default() += a;
                *pair_rhs.entry((ch[i], ch[j])).or_default() += b;
            }
        }
    }
    let diff: Vec<f64> = pair_lhs.iter().map(|(k, v)| pair_rhs[k] / v).collect();

    let mut acc3: BTreeMap<ElementId, f64> = BTreeMap::new();
    let mut acc4: BTreeMap<(ElementId, ElementId), f64> = BTreeMap::new();
    for &u in p.level(2) {
        let zs = p.children(u);
        for &z in zs {
            for &w in zs {
                if z == w {
                    continue;
                }
                for &x in p.children(z) {
                    if p.children(w).binary_search(&x).is_err() {
                        continue;
                    }
                    let s: f64 = zs
                        .iter()
                        .filter(|&&v| v != z && p.children(v).binary_search(&x).is_ok())
                        .map(|&v| 1.0 / nn(v))
                        .sum();
                    let t = wp.m(u) / (nn(u) * nn(w) * (nn(w) - 1.0) * nn(z) * (nn(z) - 1.0) * s);
                    for &y in p.children(z) {
                        if y != x && p.children(w).binary_search(&y).is_ok() {
                            *acc3.entry(y).or_default() += t;
                        }
                    }
                    for &y2 in p.children(z) {
                        if y2 == x {
                            continue;
                        }
                        for &y1 in p.children(w) {
                            if y1 != x && y1 != y2 {
                                *acc4.entry((y1, y2)).or_default() += t;
                            }
                        }
                    }
                }
            }
        }
    }
    let same2: Vec<f64> = p.level(0).iter().map(|&y| acc3.get(&y).copied().unwrap_or(0.0) / wp.m(y)).collect();
    let mut diff2 = Vec::new();
    let mut unmatched = 0;
    for (&(y1, y2), &v) in &acc4 {
        let key = if y1 < y2 { (y1, y2) } else { (y2, y1) };
        match pair_lhs.get(&key) {
            Some(&l) => diff2.push(v / l),
            None => unmatched += 1,
        }
    }
    // pairs with a common cover but no TL.4 contribution
    for k in pair_lhs.keys() {
        for key in [*k, (k.1, k.0)] {
            if !acc4.contains_key(&key) {
                diff2.push(0.0);
            }
        }
    }
    let same = Estimate::from_values(&same);
    let diff = Estimate::from_values(&diff);
    let same2 = Estimate::from_values(&same2);
    let diff2 = Estimate::from_values(&diff2);
    let mut rep = TLReport { same, diff, same2, diff2, unmatched_pairs: unmatched, exact: false, sum_residuals: None };
    rep.exact = unmatched == 0 && rep.constants().is_some() && rep.max_eps() < EXACT_TOL;
    rep.sum_residuals = rep.constants().map(|c| (c.same + c.diff - 1.0, c.same2 + c.diff2 - 1.0));
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct PredictedConstants {
    /// Levels 0..=d−1.
    pub ul: Vec<(i32, ULConstants)>,
    pub tl: Option<TLConstants>,
}

/// UL constants from lower/middle/∧ regularity, TL constants from 2-skeleton regularity.
pub fn constants_from_regularity(r: &RegularityReport) -> Result<PredictedConstants> {
    if !(r.lower_regular && r.middle_regular && r.wedge_regular) {
        return Err(HdxError::MissingRegularity("lower, middle and wedge regularity are all required".into()));
    }
    let mut ul = Vec::new();
    for i in 0..r.d {
        let missing = || HdxError::MissingRegularity(format!("constants undefined at level {i}"));
        let nl = r.n_low_at(i).ok_or_else(missing)? as f64;
        let nl1 = r.n_low_at(i + 1).ok_or_else(missing)? as f64;
        let nm = r.n_mid_at(i).ok_or_else(missing)? as f64;
        let nw = r.n_wedge_at(i).ok_or_else(missing)? as f64;
        ul.push((i, ULConstants { xyz: nl1 / nm, dia: nw * nl1 / (nl * nm), sqr: 1.0 / nl1 }));
    }
    let tl = (|| {
        if !r.two_skeleton_regular {
            return None;
        }
        let (n1, n2, nm, ry) =
            (r.n_low_at(1)? as f64, r.n_low_at(2)? as f64, r.n_mid_at(1)? as f64, r.r_y.value()? as f64);
        if n1 < 2.0 || nm < 2.0 {
            return None;
        }
        let t = n2 * n1 / nm;
        Some(TLConstants {
            same: 1.0 / (n1 - 1.0),
            diff: (n1 - 2.0) / (n1 - 1.0),
            same2: (t - 1.0) * ry * (ry - 1.0) / ((nm - 1.0) * nm * (n1 - 1.0).powi(2)),
            diff2: ((t - 2.0) * ry - (n1 - 2.0)) / ((nm - 1.0) * (n1 - 1.0)),
        })
    })();
    Ok(PredictedConstants { ul, tl })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::{from_facets, standard, FacetList};

    #[test]
    fn irregular_complex_reports_nonuniform() {
        let x = FacetList::new(vec![vec![1, 2, 3], vec![1, 2, 4], vec![1, 3, 4]]).unwrap();
        let r = detect_regularity(&from_facets(&x).unwrap());
        assert!(r.lower_regular);
        // edge {1,2} lies in two triangles, edge {2,3} in one
        assert!(r.n_mid.iter().all(|c| c.count.value().is_some()));
        assert!(matches!(r.n_wedge[1].count, Count::Uniform { value: 1 }));
        assert_eq!(r.n_low_at(2), Some(3));
    }

    #[test]
    fn simplicial_ul_level_one() {
        let wp = standard(from_facets(&FacetList::complete(5, 2).unwrap()).unwrap()).unwrap();
        let ul = check_ul(&wp);
        let c = ul.constants(1).unwrap();
        assert!((c.xyz - 1.5).abs() < 1e-12);
        assert!((c.dia - 0.75).abs() < 1e-12);
        assert!((c.sqr - 1.0 / 3.0).abs() < 1e-12);
        assert!(c.relation_residual().abs() < 1e-12);
        assert!(ul.exact);
    }

    #[test]
    fn missing_regularity_is_an_error() {
        // a square 2-cell and a triangle glued along the edge ab
        let names = ["", "a", "b", "c", "d", "e", "ab", "bc", "cd", "da", "ae", "be", "S", "T"];
        let ranks = [-1, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2];
        let elements = names.iter().zip(ranks).map(|(n, r)| (r, n.to_string())).collect();
        let idx = |n: &str| names.iter().position(|m| *m == n).unwrap();
        let mut covers = Vec::new();
        for v in ["a", "b", "c", "d", "e"] {
            covers.push((0, idx(v)));
        }
        for e in ["ab", "bc", "cd", "da", "ae", "be"] {
            for v in e.chars() {
                covers.push((idx(&v.to_string()), idx(e)));
            }
        }
        for e in ["ab", "bc", "cd", "da"] {
            covers.push((idx(e), idx("S")));
        }
        for e in ["ab", "ae", "be"] {
            covers.push((idx(e), idx("T")));
        }
        let (p, _) = GradedPoset::from_parts(elements, &covers).unwrap();
        let r = detect_regularity(&p);
        assert!(matches!(r.n_low[2].count, Count::Nonuniform { min: 3, max: 4 }));
        assert!(!r.lower_regular);
        assert!(matches!(constants_from_regularity(&r), Err(HdxError::MissingRegularity(_))));
    }
}
