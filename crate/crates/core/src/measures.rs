//! The product measure μ, the blocking measure Ψ = μ conditioned on A, and
//! the i.i.d. initial conditions of the second-class constructions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::configs::{Boundary, SecondClassConfig, ZConfig};
use crate::dynamics::{run_continuous, ZRun};
use crate::error::{param, Error, Result};
use crate::replicas::{map_replicas, Exec};
use crate::stats::{bonferroni, chi_square_homogeneity, two_proportion};
use crate::stream::EventStream;

pub const DEFAULT_TRUNCATION: f64 = 1e-12;
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Deterministic rng for a replica seed.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn theta(p: f64) -> Result<f64> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(param(format!("the blocking measure needs 1/2 < p <= 1, got {p}")));
    }
    Ok((1.0 - p) / p)
}

/// μ(η_i = 1) = θ^i / (1 + θ^i), θ = (1 - p) / p.
pub fn blocking_marginal(p: f64, i: i64) -> Result<f64> {
    let th = theta(p)?;
    Ok(marginal(th, i))
}

#[inline]
fn marginal(th: f64, i: i64) -> f64 {
    if i >= 0 {
        let x = th.powi(i.min(i32::MAX as i64) as i32);
        x / (1.0 + x)
    } else {
        let x = th.powi((-i).min(i32::MAX as i64) as i32);
        1.0 / (1.0 + x)
    }
}

/// Probability under μ that site `i` differs from the ground state.
#[inline]
fn deviation(th: f64, i: i64) -> f64 {
    let x = th.powi(if i >= 0 { i } else { -i }.min(i32::MAX as i64) as i32);
    x / (1.0 + x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockingParams {
    pub p: f64,
    pub truncation_tail: f64,
}

impl BlockingParams {
    pub fn new(p: f64) -> Result<Self> {
        let b = Self {
            p,
            truncation_tail: DEFAULT_TRUNCATION,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        theta(self.p)?;
        if !(self.truncation_tail > 0.0 && self.truncation_tail <= 1e-6) {
            return Err(param(format!(
                "truncation tail must lie in (0, 1e-6], got {}",
                self.truncation_tail
            )));
        }
        Ok(())
    }

    /// Smallest W such that μ puts less than `truncation_tail` mass on a
    /// deviation from the ground state outside `[-W, W]`.
    pub fn window(&self) -> i64 {
        let th = (1.0 - self.p) / self.p;
        if th == 0.0 {
            return 0;
        }
        let mut w = 0i64;
        loop {
            let tail = tail_mass(th, w);
            if tail < self.truncation_tail {
                return w;
            }
            w += 1;
        }
    }
}

/// Σ_{|i| > w} deviation(i).
fn tail_mass(th: f64, w: i64) -> f64 {
    let mut s = 0.0;
    let mut i = w + 1;
    loop {
        let term = deviation(th, i) + deviation(th, -i);
        s += term;
        if term < 1e-30 || i > w + 100_000 {
            return s;
        }
        i += 1;
    }
}

/// One draw from μ restricted to the window: the discrepancy sites, not yet
/// conditioned on A.
pub fn sample_product_window<R: Rng + ?Sized>(params: &BlockingParams, rng: &mut R) -> Vec<i64> {
    let (w, dev) = deviation_table(params);
    draw_window(w, &dev, rng)
}

fn deviation_table(params: &BlockingParams) -> (i64, Vec<f64>) {
    let th = (1.0 - params.p) / params.p;
    let w = params.window();
    (w, (-w..=w).map(|i| deviation(th, i)).collect())
}

fn draw_window<R: Rng + ?Sized>(w: i64, dev: &[f64], rng: &mut R) -> Vec<i64> {
    (-w..=w)
        .zip(dev)
        .filter(|&(_, &d)| rng.random::<f64>() < d)
        .map(|(i, _)| i)
        .collect()
}

/// Outcome of a rejection run, kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionStats {
    pub accepted: u64,
    pub tries: u64,
}

/// Exact draw from Ψ up to the truncation bound: independent sites on the
/// window, accepted iff the result lies in A.
pub fn sample_blocking<R: Rng + ?Sized>(params: &BlockingParams, rng: &mut R) -> Result<ZConfig> {
    sample_blocking_counted(params, rng).map(|(z, _)| z)
}

pub fn sample_blocking_counted<R: Rng + ?Sized>(params: &BlockingParams, rng: &mut R) -> Result<(ZConfig, u64)> {
    params.validate()?;
    let (w, dev) = deviation_table(params);
    for tries in 1..=REJECTION_BUDGET {
        let disc = draw_window(w, &dev, rng);
        let holes = disc.iter().filter(|&&s| s < 0).count();
        if 2 * holes == disc.len() {
            return Ok((ZConfig::from_discrepancies(disc)?, tries));
        }
    }
    Err(Error::RejectionBudget {
        budget: REJECTION_BUDGET,
        accepted: 0,
        tries: REJECTION_BUDGET,
    })
}

/// The i.i.d. initial conditions built from fair coins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitKind {
    /// Ones left of -N, holes on [-N, -1], ones on [0, N - 1], second-class
    /// coins from N on.
    Sigma0 { n: usize },
    /// First-class coins on i <= 0, second-class coins on i > 0.
    Beta0,
    /// Ones left of -l, hole coins (1 - Y) from -l on.
    GammaL { l: i64 },
}

impl InitKind {
    pub const GAMMA0: InitKind = InitKind::GammaL { l: 0 };
}

/// Samples `kind` on the window `[lo, hi]`; the tagged particle is set by
/// the standard rule where one exists.
pub fn sample_initial<R: Rng + ?Sized>(kind: InitKind, lo: i64, hi: i64, rng: &mut R) -> Result<SecondClassConfig> {
    if hi < lo {
        return Err(param(format!("empty window [{lo}, {hi}]")));
    }
    let mut coin = || rng.random::<bool>() as u8;
    match kind {
        InitKind::Sigma0 { n } => {
            let n = n as i64;
            if n < 1 || lo >= -n || hi < n {
                return Err(param(format!(
                    "window [{lo}, {hi}] must strictly contain [-N, N - 1] for N = {n}"
                )));
            }
            let values = (lo..=hi)
                .map(|i| match i {
                    _ if i < -n => 1,
                    _ if i < 0 => 0,
                    _ if i < n => 1,
                    _ => 2 * coin(),
                })
                .collect();
            SecondClassConfig::new(lo, values, Boundary::Ones, Boundary::Bernoulli(2))?.tag_by_rule()
        }
        InitKind::Beta0 => {
            if lo > 0 || hi < 1 {
                return Err(param(format!("window [{lo}, {hi}] must contain 0 and 1")));
            }
            let values = (lo..=hi).map(|i| if i <= 0 { coin() } else { 2 * coin() }).collect();
            SecondClassConfig::new(lo, values, Boundary::Bernoulli(1), Boundary::Bernoulli(2))?.tag_by_rule()
        }
        InitKind::GammaL { l } => {
            if lo >= -l || hi < -l {
                return Err(param(format!(
                    "window [{lo}, {hi}] must contain -l - 1 and -l for l = {l}"
                )));
            }
            let values = (lo..=hi).map(|i| if i < -l { 1 } else { 1 - coin() }).collect();
            SecondClassConfig::new(lo, values, Boundary::Ones, Boundary::Bernoulli(1))
        }
    }
}

/// One statistic of a stationarity comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub statistic: String,
    pub p_value: f64,
    pub n: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub t: f64,
    pub reps: usize,
    pub alpha: f64,
    /// Per-test level after Bonferroni correction.
    pub level: f64,
    pub statistics: Vec<StatReport>,
    pub pass: bool,
}

/// Sites whose marginals are compared.
pub const MARGINAL_SITES: std::ops::RangeInclusive<i64> = -10..=10;
/// Number of most frequent configurations compared as atoms.
pub const ATOMS: usize = 10;

/// Compares `reps` draws from `sampler` against `reps` independent draws
/// evolved for time `t` under EX(Z, p). Before and after samples use
/// disjoint seed sets.
pub fn stationarity_check<F>(
    sampler: F,
    p: f64,
    t: f64,
    reps: usize,
    seed: u64,
    alpha: f64,
    exec: Exec,
) -> Result<StationarityReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ZConfig> + Sync + Send,
{
    if t < 0.0 {
        return Err(param("t must be nonnegative"));
    }
    let before: Vec<ZConfig> = map_replicas(seed, 0..reps as u64, exec, |_, s| sampler(&mut rng_for(s)))
        .into_iter()
        .collect::<Result<_>>()?;
    let after: Vec<ZConfig> = map_replicas(seed ^ 0x5A5A_5A5A, 0..reps as u64, exec, |_, s| {
        let z = sampler(&mut rng_for(s))?;
        let mut run = ZRun::new(&z);
        run_continuous(&mut run, t, &EventStream::new(s, p));
        Ok(run.to_zconfig())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(compare_samples(&before, &after, t, alpha))
}

/// The homogeneity tests behind [`stationarity_check`].
pub fn compare_samples(before: &[ZConfig], after: &[ZConfig], t: f64, alpha: f64) -> StationarityReport {
    use std::collections::HashMap;
    let mut freq: HashMap<&ZConfig, (u64, u64)> = HashMap::new();
    for z in before {
        freq.entry(z).or_default().0 += 1;
    }
    for z in after {
        freq.entry(z).or_default().1 += 1;
    }
    let mut atoms: Vec<(&ZConfig, (u64, u64))> = freq.into_iter().collect();
    atoms.sort_by(|a, b| (b.1 .0 + b.1 .1).cmp(&(a.1 .0 + a.1 .1)).then(a.0.cmp(b.0)));
    let mut a_counts = Vec::new();
    let mut b_counts = Vec::new();
    let (mut rest_a, mut rest_b) = (0, 0);
    for (idx, (_, (x, y))) in atoms.iter().enumerate() {
        if idx < ATOMS {
            a_counts.push(*x);
            b_counts.push(*y);
        } else {
            rest_a += x;
            rest_b += y;
        }
    }
    a_counts.push(rest_a);
    b_counts.push(rest_b);

    let mut raw: Vec<(String, f64)> = Vec::new();
    raw.push((
        "atoms".to_string(),
        chi_square_homogeneity(&a_counts, &b_counts, 5.0).p_value,
    ));
    for site in MARGINAL_SITES {
        let x1 = before.iter().filter(|z| z.value(site) == 1).count() as u64;
        let x2 = after.iter().filter(|z| z.value(site) == 1).count() as u64;
        raw.push((
            format!("site[{site}]"),
            two_proportion(x1, before.len() as u64, x2, after.len() as u64).p_value,
        ));
    }
    let max_excess = before.iter().chain(after).map(|z| z.excess()).max().unwrap_or(0);
    let law = |s: &[ZConfig]| {
        let mut c = vec![0u64; max_excess + 1];
        for z in s {
            c[z.excess()] += 1;
        }
        c
    };
    raw.push((
        "discrepancy_count".to_string(),
        chi_square_homogeneity(&law(before), &law(after), 5.0).p_value,
    ));
    let level = bonferroni(alpha, raw.len());
    let statistics: Vec<StatReport> = raw
        .into_iter()
        .map(|(statistic, p_value)| StatReport {
            statistic,
            p_value,
            n: before.len() + after.len(),
            pass: p_value >= level,
        })
        .collect();
    StationarityReport {
        t,
        reps: before.len(),
        alpha,
        level,
        pass: statistics.iter().all(|s| s.pass),
        statistics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_values() {
        assert_eq!(blocking_marginal(0.8, 0).unwrap(), 0.5);
        assert!((blocking_marginal(2.0 / 3.0, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((blocking_marginal(2.0 / 3.0, -1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(blocking_marginal(0.5, 0).is_err());
        for i in [1, 5, 40, 10_000] {
            let s = blocking_marginal(0.7, i).unwrap() + blocking_marginal(0.7, -i).unwrap();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!(blocking_marginal(0.7, -10_000).unwrap().is_finite());
    }

    #[test]
    fn window_bounds_tail() {
        let b = BlockingParams::new(0.8).unwrap();
        let w = b.window();
        assert!(tail_mass(0.25, w) < 1e-12);
        assert!(tail_mass(0.25, w - 1) >= 1e-12);
        assert!(BlockingParams {
            p: 0.8,
            truncation_tail: 0.1
        }
        .validate()
        .is_err());
    }

    #[test]
    fn samples_are_in_a_and_inside_window() {
        let b = BlockingParams::new(0.75).unwrap();
        let w = b.window();
        let mut rng = rng_for(1);
        for _ in 0..500 {
            let z = sample_blocking(&b, &mut rng).unwrap();
            assert!(ZConfig::from_discrepancies(z.discrepancies().to_vec()).is_ok());
            if let Some((lo, hi)) = z.hull() {
                assert!(lo >= -w && hi <= w);
            }
        }
    }

    #[test]
    fn initial_conditions() {
        let mut rng = rng_for(2);
        let s = sample_initial(InitKind::Sigma0 { n: 3 }, -10, 10, &mut rng).unwrap();
        assert_eq!(s.tagged(), Some(2));
        let proj = s.project(crate::configs::Projection::TwoToZero);
        assert_eq!(proj.to_zconfig().unwrap(), ZConfig::shifted_block(3).unwrap());
        assert!(s.project(crate::configs::Projection::TwoToOne).to_zconfig().is_err());
        let b = sample_initial(InitKind::Beta0, -10, 10, &mut rng).unwrap();
        assert!(b.values()[..11].iter().all(|&v| v < 2));
        assert!(b.values()[11..].iter().all(|&v| v != 1));
        assert!(b.tagged().unwrap() <= 0);
        assert!(sample_initial(InitKind::Sigma0 { n: 3 }, -3, 10, &mut rng).is_err());
        let g = sample_initial(InitKind::GammaL { l: 2 }, -5, 5, &mut rng).unwrap();
        assert_eq!(&g.values()[..3], &[1, 1, 1]);
    }

    #[test]
    fn zero_time_is_trivially_stationary() {
        let b = BlockingParams::new(0.8).unwrap();
        let before: Vec<ZConfig> = (0..200)
            .map(|s| sample_blocking(&b, &mut rng_for(s)).unwrap())
            .collect();
        let r = compare_samples(&before, &before, 0.0, 0.01);
        assert!(r.pass);
        assert!(r.statistics.iter().all(|s| s.p_value > 0.99));
    }
}
