//! Executable verifiers for the localization identities, the decomposition
//! and spectral bounds, trickling down, and the posetification oracles.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::poset::{Link, WeightedPoset};

mod alev_lau;
mod decomposition;
mod eposet;
mod localization;
mod posetification;
mod trickling;

pub use alev_lau::{alev_lau_bound, alev_lau_threshold, link_mu};
pub use decomposition::{
    a_closed_form, b_closed_form, bound_up_norm, default_alphas, e_closed_form, ko_coefficients, ko_decomposition, lazy_coefficients,
    mu_prime, Coefficients, DecompositionResult, KoMachinery,
};
pub use eposet::{
    at_most_one_common_cover, eposet_converse, eposet_decomposition, eposet_forward, r_table, regular_eposet_constants, EposetDecomposition,
};
pub use localization::{
    verify_adjacency_localization, verify_basic_localization, verify_hat_mean, verify_trickling_localization,
    verify_up_localization,
};
pub use posetification::{
    classify_link, posetification_certificate, posetification_link_oracle, LinkCase, OracleCase, OracleRow,
    PosetificationReport,
};
pub use trickling::{fixed_points, trickle_map, trickle_verify, TrickleLevel, TricklingBound};

/// Residual tolerance for exact identities.
pub const IDENTITY_TOL: f64 = 1e-9;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub theorem: String,
    pub bound: f64,
    pub measured: f64,
    pub verdict: bool,
    pub details: serde_json::Value,
}

/// Largest residuals of one family of identities over seeded random trials.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub identity: String,
    pub trials: usize,
    pub seed: u64,
    pub residuals: BTreeMap<String, f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: serde_json::Value,
}

impl ResidualReport {
    fn new(identity: &str, trials: usize, seed: u64, residuals: BTreeMap<String, f64>, details: serde_json::Value) -> Self {
        let max_residual = residuals.values().copied().fold(0.0, f64::max);
        ResidualReport {
            identity: identity.into(),
            trials,
            seed,
            residuals,
            max_residual,
            tolerance: IDENTITY_TOL,
            pass: max_residual < IDENTITY_TOL,
            details,
        }
    }

    pub fn to_bound_check(&self) -> BoundCheck {
        BoundCheck {
            theorem: self.identity.clone(),
            bound: self.tolerance,
            measured: self.max_residual,
            verdict: self.pass,
            details: serde_json::json!({
                "trials": self.trials,
                "seed": self.seed,
                "residuals": self.residuals,
                "extra": self.details,
            }),
        }
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in [−1, 1].
pub(crate) fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..=1.0)))
}

/// Seeded cochain at `level` with entries uniform in [−1, 1].
pub fn random_cochain(wp: &WeightedPoset, level: i32, seed: u64) -> crate::poset::Cochain {
    let n = wp.poset.level_size(level);
    crate::poset::Cochain::new(level, random_vector(&mut rng(seed), n).iter().copied().collect())
}

pub(crate) fn gather(v: &DVector<f64>, pos: &[usize]) -> DVector<f64> {
    DVector::from_iterator(pos.len(), pos.iter().map(|&p| v[p]))
}

pub(crate) fn winner(w: &[f64], a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    w.iter().zip(a.iter()).zip(b.iter()).map(|((w, x), y)| w * x * y).sum()
}

/// Positions in the parent level of the link's level `lvl`.
pub(crate) fn link_positions(wp: &WeightedPoset, link: &Link, lvl: i32) -> Vec<usize> {
    link.inner.poset.level(lvl).iter().map(|&y| wp.poset.pos(link.members[y.idx()])).collect()
}
