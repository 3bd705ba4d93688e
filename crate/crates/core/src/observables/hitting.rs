//! Hitting times of G_Z and g_{N,k}, their tails, and the D calibration.

use serde::{Deserialize, Serialize};

use super::{survival_points, TailFit, TailModel};
use crate::configs::ZConfig;
use crate::coupling::sandwich_hitting_time;
use crate::dynamics::{evolve, Flow, ZRun};
use crate::error::{param, Result};
use crate::measures::{rng_for, sample_blocking, BlockingParams};
use crate::replicas::{map_replicas, Exec};
use crate::stream::EventStream;

/// Where a hitting time starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HitStart {
    /// EX(Z, p) from this state, target G_Z.
    Z(ZConfig),
    /// EX(N, k, p) from m_{N,k}, target g_{N,k}.
    Finite { n: usize, k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingSample {
    pub value: f64,
    pub censored: bool,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub p: f64,
}

fn z_hit(z: &ZConfig, stream: &EventStream, cap: f64) -> (f64, bool) {
    if z.is_ground() {
        return (0.0, false);
    }
    let mut run = ZRun::new(z);
    let out = evolve(&mut run, stream, 0.0, cap, |_, changed, s| {
        if changed && s.is_ground() {
            Flow::Stop
        } else {
            Flow::Continue
        }
    });
    if out.stopped {
        (out.time, false)
    } else {
        (cap, true)
    }
}

/// First time the process reaches its target, censored at `cap`.
pub fn hitting_time(start: &HitStart, p: f64, seed: u64, cap: f64) -> Result<HittingSample> {
    if p <= 0.5 {
        return Err(param(format!("hitting times need p > 1/2, got {p}")));
    }
    if cap.is_nan() || cap < 0.0 {
        return Err(param("cap must be nonnegative"));
    }
    match start {
        HitStart::Z(z) => {
            let (value, censored) = z_hit(z, &EventStream::new(seed, p), cap);
            Ok(HittingSample {
                value,
                censored,
                seed,
                n: None,
                k: None,
                p,
            })
        }
        HitStart::Finite { n, k } => {
            let h = sandwich_hitting_time(*n, *k, p, seed, cap)?;
            Ok(HittingSample {
                value: h.time,
                censored: h.censored,
                seed,
                n: Some(*n),
                k: Some(*k),
                p,
            })
        }
    }
}

/// H(Ψ): the start is drawn from Ψ with `rng_for(seed)`, the dynamics use
/// the stream of `seed`.
pub fn blocking_hitting_time(p: f64, seed: u64, cap: f64) -> Result<HittingSample> {
    let z = sample_blocking(&BlockingParams::new(p)?, &mut rng_for(seed))?;
    hitting_time(&HitStart::Z(z), p, seed, cap)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailFamily {
    /// H(I_N)
    ShiftedBlock { n: usize },
    /// H(Ψ)
    Blocking,
}

/// Empirical survival of the hitting time on `grid`, censored at the
/// largest grid point. The blocking family is fitted as exp(-c sqrt(t)).
pub fn hitting_tail_estimate(
    family: TailFamily,
    p: f64,
    grid: &[f64],
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<TailFit> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(param("tail grid must be nonempty and sorted"));
    }
    let cap = *grid.last().unwrap();
    let values = hitting_values(family, p, reps, seed, cap, exec)?;
    let model = match family {
        TailFamily::Blocking => TailModel::ExpSqrtInT,
        TailFamily::ShiftedBlock { .. } => TailModel::Empirical,
    };
    // censoring at the top grid point: exceedance there is still exact
    let points = survival_points(&values, grid, f64::INFINITY);
    Ok(TailFit::build(model, points))
}

fn hitting_values(family: TailFamily, p: f64, reps: usize, seed: u64, cap: f64, exec: Exec) -> Result<Vec<f64>> {
    let start = match family {
        TailFamily::ShiftedBlock { n } => Some(ZConfig::shifted_block(n)?),
        TailFamily::Blocking => None,
    };
    if p <= 0.5 {
        return Err(param(format!("hitting times need p > 1/2, got {p}")));
    }
    map_replicas(seed, 0..reps as u64, exec, |_, s| {
        let h = match &start {
            Some(z) => hitting_time(&HitStart::Z(z.clone()), p, s, cap)?,
            None => blocking_hitting_time(p, s, cap)?,
        };
        // a censored time is known to exceed the cap
        Ok(if h.censored { f64::INFINITY } else { h.value })
    })
    .into_iter()
    .collect()
}

/// Smallest D with N · P(H(I_N) > D N) <= `eps` on `reps` replicas: the
/// empirical (1 - eps / N)-quantile of H(I_N) / N.
pub fn calibrate_d(n: usize, p: f64, eps: f64, reps: usize, seed: u64, exec: Exec) -> Result<f64> {
    if !(eps > 0.0 && eps < n as f64) {
        return Err(param("eps must lie in (0, N)"));
    }
    let cap = crate::coupling::default_cap(n, p) * 4.0;
    let mut v = hitting_values(TailFamily::ShiftedBlock { n }, p, reps, seed, cap, exec)?;
    v.sort_by(f64::total_cmp);
    let allowed = (eps / n as f64 * reps as f64).floor() as usize;
    let idx = reps.saturating_sub(allowed + 1);
    let q = v[idx];
    if !q.is_finite() {
        return Err(param("calibration quantile is censored; raise reps or eps"));
    }
    Ok(q / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_start_is_zero() {
        let h = hitting_time(&HitStart::Z(ZConfig::ground()), 0.75, 1, 10.0).unwrap();
        assert_eq!(h.value, 0.0);
        assert!(!h.censored);
    }

    #[test]
    fn censoring_sets_value_to_cap() {
        let h = hitting_time(&HitStart::Z(ZConfig::shifted_block(6).unwrap()), 0.75, 3, 0.5).unwrap();
        assert!(h.censored);
        assert_eq!(h.value, 0.5);
        assert!(hitting_time(&HitStart::Z(ZConfig::ground()), 0.5, 1, 1.0).is_err());
    }

    #[test]
    fn hit_time_reproduces_ground() {
        let z = ZConfig::shifted_block(3).unwrap();
        let h = hitting_time(&HitStart::Z(z.clone()), 0.8, 11, 1e4).unwrap();
        assert!(!h.censored);
        let stream = EventStream::new(11, 0.8);
        let mut run = ZRun::new(&z);
        crate::dynamics::run_continuous(&mut run, h.value, &stream);
        assert!(run.is_ground());
        let mut early = ZRun::new(&z);
        crate::dynamics::run_continuous(&mut early, h.value * (1.0 - 1e-12), &stream);
        assert!(!early.is_ground());
    }

    #[test]
    fn tail_points_are_nonincreasing() {
        let grid = [0.5, 1.0, 2.0, 4.0, 8.0];
        let fit = hitting_tail_estimate(TailFamily::Blocking, 0.8, &grid, 2000, 5, Exec::Sequential).unwrap();
        assert!(fit.is_nonincreasing());
        assert_eq!(fit.model, TailModel::ExpSqrtInT);
    }
}
