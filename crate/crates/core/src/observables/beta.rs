//! The β construction: a tagged first-class particle seen through both
//! projections, the gaps of the stationary environment, and the dual front
//! process γ.

use serde::{Deserialize, Serialize};

use super::{check_invalid, survival_points, DriftEstimate, TailFit, TailModel};
use crate::configs::Projection;
use crate::dynamics::{run_continuous, TagKind, WindowRun};
use crate::error::{param, Error, Result};
use crate::measures::{rng_for, sample_initial, InitKind};
use crate::replicas::{map_replicas, Exec};
use crate::stats::{chi_square_gof, ks_two_sample, TestResult};
use crate::stream::{mix64, EventStream};

/// Gaps are read this many particles away from the tag, where the tag's
/// own position no longer biases them.
pub const GAP_INDEX: i64 = 30;

/// Which tagged particle of the β run to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    /// x'(t), the tag of β^{2→1} (stationary environment)
    Beta2to1,
    /// x(t), the tag of β^{2→0}
    Beta2to0,
}

/// One valid β replica.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSample {
    pub seed: u64,
    pub x: i64,
    pub x_prime: i64,
    /// β^d(GAP_INDEX) and β^d(-GAP_INDEX) when both ends are uncontaminated.
    pub gap_right: Option<i64>,
    pub gap_left: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaBatch {
    pub p: f64,
    pub t: f64,
    pub margin: i64,
    pub samples: Vec<BetaSample>,
    pub invalid: usize,
}

fn gaps(run: &WindowRun, x_prime: i64) -> (Option<i64>, Option<i64>) {
    let (fl, fr) = run.fronts();
    let occupied: Vec<i64> = (fl + 1..fr).filter(|&i| run.at(i) != 0).collect();
    let Ok(at) = occupied.binary_search(&x_prime) else {
        return (None, None);
    };
    let at = at as i64;
    let pos = |i: i64| usize::try_from(at + i).ok().and_then(|j| occupied.get(j).copied());
    let d = |i: i64| Some(pos(i)? - pos(i - 1)?);
    (d(GAP_INDEX), d(-GAP_INDEX))
}

/// One β run on [-margin, margin] to time t; `None` if the boundary could
/// have reached a tag.
pub fn beta_run(p: f64, t: f64, margin: i64, seed: u64) -> Result<Option<BetaSample>> {
    let cfg = sample_initial(InitKind::Beta0, -margin, margin, &mut rng_for(seed))?;
    let tag = cfg.tagged().expect("tag set by rule");
    let mut run = WindowRun::new(&cfg);
    let ix = run.track(tag, TagKind::Exact)?;
    let ixp = run.track(tag, TagKind::Projected(Projection::TwoToOne))?;
    run_continuous(&mut run, t, &EventStream::new(seed, p));
    if run.is_invalid() {
        return Ok(None);
    }
    let x_prime = run.tag(ixp);
    let (gap_right, gap_left) = gaps(&run, x_prime);
    Ok(Some(BetaSample {
        seed,
        x: run.tag(ix),
        x_prime,
        gap_right,
        gap_left,
    }))
}

/// `reps` independent β runs. Errors when more than 1% are invalidated.
pub fn beta_batch(p: f64, t: f64, reps: usize, seed: u64, margin: i64, exec: Exec) -> Result<BetaBatch> {
    if !(0.0..=1.0).contains(&p) || t < 0.0 || margin < GAP_INDEX {
        return Err(param(
            "β runs need p in [0, 1], t >= 0 and a margin of at least GAP_INDEX",
        ));
    }
    let runs: Vec<Option<BetaSample>> = map_replicas(seed, 0..reps as u64, exec, |_, s| beta_run(p, t, margin, s))
        .into_iter()
        .collect::<Result<_>>()?;
    let invalid = runs.iter().filter(|r| r.is_none()).count();
    check_invalid(invalid, reps)?;
    Ok(BetaBatch {
        p,
        t,
        margin,
        samples: runs.into_iter().flatten().collect(),
        invalid,
    })
}

/// Mean and variance over t of x'(t) (`Beta2to1`) or x(t) (`Beta2to0`).
pub fn tagged_drift(kind: DriftKind, p: f64, t: f64, reps: usize, seed: u64, exec: Exec) -> Result<DriftEstimate> {
    if t < 1.0 {
        return Err(param("tagged drift needs t >= 1"));
    }
    let batch = beta_batch(p, t, reps, seed, super::default_margin(t), exec)?;
    drift_of(&batch, kind)
}

pub fn drift_of(batch: &BetaBatch, kind: DriftKind) -> Result<DriftEstimate> {
    let values = batch
        .samples
        .iter()
        .map(|s| match kind {
            DriftKind::Beta2to1 => s.x_prime as f64,
            DriftKind::Beta2to0 => s.x as f64,
        })
        .collect();
    DriftEstimate::from_values(batch.t, values, batch.invalid)
}

/// P(|x(t) - x'(t)| > n) on `grid`, fitted as ϱ^n.
pub fn couple_distance_tail(p: f64, t: f64, grid: &[u32], reps: usize, seed: u64, exec: Exec) -> Result<TailFit> {
    let batch = beta_batch(p, t, reps, seed, super::default_margin(t), exec)?;
    Ok(distance_tail_of(&batch, grid))
}

pub fn distance_tail_of(batch: &BetaBatch, grid: &[u32]) -> TailFit {
    let d: Vec<f64> = batch.samples.iter().map(|s| (s.x - s.x_prime).abs() as f64).collect();
    let thresholds: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    TailFit::build(TailModel::GeometricInN, survival_points(&d, &thresholds, f64::INFINITY))
}

/// Observed gaps against Geometric(1/2) on {1, 2, ...}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapLaw {
    pub t: f64,
    /// counts[j - 1] = number of gaps equal to j; the last entry collects
    /// everything at least `counts.len()`.
    pub counts: Vec<u64>,
    pub test: TestResult,
}

const GAP_BINS: usize = 12;

/// Pools β^d(±GAP_INDEX) over a batch and runs a chi-square goodness of
/// fit against P(j) = 2^{-j}.
pub fn gap_law(p: f64, t: f64, reps: usize, seed: u64, exec: Exec) -> Result<GapLaw> {
    let batch = beta_batch(p, t, reps, seed, super::default_margin(t), exec)?;
    Ok(gap_law_of(&batch))
}

pub fn gap_law_of(batch: &BetaBatch) -> GapLaw {
    let mut counts = vec![0u64; GAP_BINS];
    for s in &batch.samples {
        for g in [s.gap_right, s.gap_left].into_iter().flatten() {
            let j = (g.max(1) as usize).min(GAP_BINS);
            counts[j - 1] += 1;
        }
    }
    let mut probs: Vec<f64> = (1..GAP_BINS).map(|j| 0.5f64.powi(j as i32)).collect();
    probs.push(0.5f64.powi(GAP_BINS as i32 - 1));
    let test = chi_square_gof(&counts, &probs, 5.0);
    GapLaw {
        t: batch.t,
        counts,
        test,
    }
}

fn gamma_run(l: i64, p: f64, t: f64, margin: i64, seed: u64) -> Result<Option<i64>> {
    let cfg = sample_initial(InitKind::GammaL { l }, -margin - l, margin, &mut rng_for(seed))?;
    let hole = (-l..=margin)
        .find(|&i| cfg.at(i) == Some(0))
        .ok_or_else(|| Error::NoTaggedParticle("no hole inside the window".into()))?;
    let mut run = WindowRun::new(&cfg);
    let ix = run.track(hole, TagKind::Exact)?;
    run_continuous(&mut run, t, &EventStream::new(seed, p));
    Ok((!run.is_invalid()).then(|| run.tag(ix)))
}

/// L(γ^l_t) per valid replica, and the invalid count.
pub fn gamma_positions(l: i64, p: f64, t: f64, reps: usize, seed: u64, exec: Exec) -> Result<(Vec<f64>, usize)> {
    if l < 0 {
        return Err(param("l must be nonnegative"));
    }
    let margin = super::default_margin(t);
    let runs: Vec<Option<i64>> = map_replicas(seed, 0..reps as u64, exec, |_, s| gamma_run(l, p, t, margin, s))
        .into_iter()
        .collect::<Result<_>>()?;
    let invalid = runs.iter().filter(|r| r.is_none()).count();
    check_invalid(invalid, reps)?;
    Ok((runs.into_iter().flatten().map(|v| v as f64).collect(), invalid))
}

/// Mean and variance over t of the leftmost hole of γ^l.
pub fn gamma_front_speed(l: i64, p: f64, t: f64, reps: usize, seed: u64, exec: Exec) -> Result<DriftEstimate> {
    let (values, invalid) = gamma_positions(l, p, t, reps, seed, exec)?;
    DriftEstimate::from_values(t, values, invalid)
}

/// Two-sample KS test of -x(t) against L(γ_t), on independent replica sets.
pub fn gamma_duality(p: f64, t: f64, reps: usize, seed: u64, exec: Exec) -> Result<TestResult> {
    let batch = beta_batch(p, t, reps, seed, super::default_margin(t), exec)?;
    let minus_x: Vec<f64> = batch.samples.iter().map(|s| -(s.x as f64)).collect();
    let (gamma, _) = gamma_positions(0, p, t, reps, mix64(seed ^ 0x6A6D_6D61), exec)?;
    Ok(ks_two_sample(&minus_x, &gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_tags_coincide() {
        let b = beta_batch(0.75, 0.0, 50, 1, 80, Exec::Sequential).unwrap();
        assert_eq!(b.invalid, 0);
        for s in &b.samples {
            assert_eq!(s.x, s.x_prime);
            assert!(s.x <= 0);
        }
        let tail = distance_tail_of(&b, &[0]);
        assert_eq!(tail.points[0].survival.hits, 0);
    }

    #[test]
    fn distance_is_below_one_at_n_zero() {
        let b = beta_batch(0.75, 20.0, 200, 2, 120, Exec::Sequential).unwrap();
        let tail = distance_tail_of(&b, &[0, 1, 2, 4]);
        assert!(tail.points[0].survival.estimate < 1.0);
        assert!(tail.is_nonincreasing());
    }

    #[test]
    fn gaps_at_zero_time_are_geometric() {
        let b = beta_batch(0.75, 0.0, 3000, 3, 200, Exec::Sequential).unwrap();
        let law = gap_law_of(&b);
        assert!(law.counts.iter().sum::<u64>() > 5000);
        assert!(law.test.p_value > 1e-4, "{law:?}");
    }

    #[test]
    fn gamma_shift_moves_the_front() {
        let (a, _) = gamma_positions(0, 0.75, 0.0, 200, 4, Exec::Sequential).unwrap();
        let (b, _) = gamma_positions(5, 0.75, 0.0, 200, 4, Exec::Sequential).unwrap();
        // identical coins, shifted by l
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x - 5.0, *y);
        }
        assert!(a.iter().all(|&v| v >= 0.0));
    }
}
