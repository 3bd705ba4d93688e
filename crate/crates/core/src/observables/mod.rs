//! Hitting times, tagged-particle statistics, the σ-run event estimators and
//! tail fitting.

mod beta;
mod hitting;
mod sigma;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{linear_fit, variance_se, LinearFit, MeanEstimate, Proportion};

pub use beta::{
    beta_batch, couple_distance_tail, distance_tail_of, drift_of, gamma_duality, gamma_front_speed, gamma_positions,
    gap_law, gap_law_of, tagged_drift, BetaBatch, BetaSample, DriftKind, GapLaw, GAP_INDEX,
};
pub use hitting::{
    blocking_hitting_time, calibrate_d, hitting_tail_estimate, hitting_time, HitStart, HittingSample, TailFamily,
};
pub use sigma::{
    domination_check, proof_event_probs, psi_exceedances, psi_seed, sigma_run, DominationReport, EventProbReport,
    SigmaSample, DOMINATION_PREFIXES,
};

/// Window half-width used around the origin for a run of length `t`.
pub fn default_margin(t: f64) -> i64 {
    (4.0 * t).ceil() as i64 + 160
}

/// Largest share of invalidated runs tolerated before a batch errors.
pub const MAX_INVALID_SHARE: f64 = 0.01;

pub(crate) fn check_invalid(invalid: usize, total: usize) -> Result<()> {
    if invalid as f64 > MAX_INVALID_SHARE * total as f64 {
        return Err(Error::TooManyInvalid { invalid, total });
    }
    Ok(())
}

/// Mean and variance of X(t) / t over valid replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub t: f64,
    pub reps: usize,
    pub invalid: usize,
    pub mean_over_t: f64,
    pub se_mean: f64,
    pub var_over_t: f64,
    pub se_var: f64,
    /// X(t) per valid replica, in replica order.
    pub values: Vec<f64>,
}

impl DriftEstimate {
    pub fn from_values(t: f64, values: Vec<f64>, invalid: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(crate::error::param(
                "a drift estimate needs at least two valid replicas",
            ));
        }
        let m = MeanEstimate::new(&values);
        Ok(Self {
            t,
            reps: values.len(),
            invalid,
            mean_over_t: m.mean / t,
            se_mean: m.se / t,
            var_over_t: m.var / t,
            se_var: variance_se(&values) / t,
            values,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    /// log survival linear in the threshold n
    GeometricInN,
    /// -log survival linear in sqrt(t)
    ExpSqrtInT,
    /// no fit, survival points only
    Empirical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub threshold: f64,
    pub survival: Proportion,
    /// Set when the threshold lies beyond the censoring cap, so the
    /// estimate only bounds the survival from below.
    pub lower_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub model: TailModel,
    pub points: Vec<TailPoint>,
    /// Fit over points with positive survival. For `GeometricInN` the
    /// slope is log ϱ; for `ExpSqrtInT` it is the decay rate of -log S.
    pub fit: Option<LinearFit>,
}

impl TailFit {
    /// Survival of `values` above each sorted threshold, then the fit.
    /// Censored values should be passed as infinity.
    pub fn from_values(model: TailModel, values: &[f64], thresholds: &[f64]) -> Self {
        Self::build(model, survival_points(values, thresholds, f64::INFINITY))
    }

    pub(crate) fn build(model: TailModel, points: Vec<TailPoint>) -> Self {
        let usable: Vec<&TailPoint> = points
            .iter()
            .filter(|p| p.survival.hits > 0 && !p.lower_bound)
            .collect();
        let fit = match model {
            _ if usable.len() < 3 => None,
            TailModel::GeometricInN => {
                let x: Vec<f64> = usable.iter().map(|p| p.threshold).collect();
                let y: Vec<f64> = usable.iter().map(|p| p.survival.estimate.ln()).collect();
                Some(linear_fit(&x, &y))
            }
            TailModel::ExpSqrtInT => {
                let x: Vec<f64> = usable.iter().map(|p| p.threshold.sqrt()).collect();
                let y: Vec<f64> = usable.iter().map(|p| -p.survival.estimate.ln()).collect();
                Some(linear_fit(&x, &y))
            }
            TailModel::Empirical => None,
        };
        Self { model, points, fit }
    }

    /// Whether the empirical survival never increases with the threshold.
    pub fn is_nonincreasing(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].survival.estimate <= w[0].survival.estimate)
    }
}

/// Survival points `P(value > threshold)` for sorted thresholds.
pub(crate) fn survival_points(values: &[f64], thresholds: &[f64], cap: f64) -> Vec<TailPoint> {
    thresholds
        .iter()
        .map(|&th| {
            let hits = values.iter().filter(|&&v| v > th).count() as u64;
            TailPoint {
                threshold: th,
                survival: Proportion::new(hits, values.len() as u64),
                lower_bound: th >= cap,
            }
        })
        .collect()
}
