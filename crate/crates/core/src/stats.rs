//! Interval estimates and hypothesis tests used by the observables and the
//! acceptance checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

/// Wilson score interval for a proportion at normal quantile `z`.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let ph = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (ph + z2 / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// A proportion with its binomial standard error and Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: u64,
    pub n: u64,
    pub estimate: f64,
    pub se: f64,
    pub ci: (f64, f64),
}

impl Proportion {
    pub fn new(hits: u64, n: u64) -> Self {
        let estimate = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let se = if n == 0 {
            0.0
        } else {
            (estimate * (1.0 - estimate) / n as f64).sqrt()
        };
        Self {
            hits,
            n,
            estimate,
            se,
            ci: wilson(hits, n, 1.959_963_984_540_054),
        }
    }
}

/// Sample mean with standard error and a 95% t-interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se: f64,
    pub ci: (f64, f64),
}

impl MeanEstimate {
    pub fn new(xs: &[f64]) -> Self {
        let (mean, var) = mean_var(xs);
        let n = xs.len();
        let se = if n > 1 { (var / n as f64).sqrt() } else { f64::NAN };
        let half = if n > 1 {
            StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .map(|t| t.inverse_cdf(0.975) * se)
                .unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        Self {
            n,
            mean,
            var,
            se,
            ci: (mean - half, mean + half),
        }
    }
}

/// Mean and unbiased sample variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the unbiased sample variance, from the fourth central
/// moment.
pub fn variance_se(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if n < 4.0 {
        return f64::NAN;
    }
    let (mean, var) = mean_var(xs);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Result of a test: statistic and p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

fn chi2_sf(x: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|c| c.sf(x)).unwrap_or(f64::NAN)
}

/// Pearson goodness of fit. Cells are merged from the end until each
/// expected count is at least `min_expected`; probabilities should sum to one
/// (any remainder is added as a final cell with zero observations).
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> TestResult {
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    let mut exp: Vec<f64> = probs.iter().map(|&p| p * nf).collect();
    let rest = 1.0 - probs.iter().sum::<f64>();
    if rest > 1e-12 {
        obs.push(0.0);
        exp.push(rest * nf);
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in obs.iter().zip(&exp).rev() {
        o_acc += o;
        e_acc += e;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(c) => {
                c.0 += o_acc;
                c.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len() as f64 - 1.0;
    TestResult {
        statistic: stat,
        p_value: chi2_sf(stat, df),
        df,
    }
}

/// Pearson test that two count vectors come from one distribution. Columns
/// empty in both samples are dropped; sparse columns are pooled.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], min_expected: f64) -> TestResult {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let total = (na + nb) as f64;
    if na == 0 || nb == 0 {
        return TestResult {
            statistic: 0.0,
            p_value: 1.0,
            df: 0.0,
        };
    }
    let (fa, fb) = (na as f64 / total, nb as f64 / total);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        ca += x as f64;
        cb += y as f64;
        let col = ca + cb;
        if col * fa.min(fb) >= min_expected {
            cells.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
        }
    }
    if ca + cb > 0.0 {
        match cells.last_mut() {
            Some(c) => {
                c.0 += ca;
                c.1 += cb;
            }
            None => cells.push((ca, cb)),
        }
    }
    let stat: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let col = x + y;
            let (ea, eb) = (col * fa, col * fb);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let df = cells.len() as f64 - 1.0;
    TestResult {
        statistic: stat,
        p_value: chi2_sf(stat, df),
        df,
    }
}

/// Two-sided test of equal proportions (pooled z).
pub fn two_proportion(x1: u64, n1: u64, x2: u64, n2: u64) -> TestResult {
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    if pooled <= 0.0 || pooled >= 1.0 {
        return TestResult {
            statistic: 0.0,
            p_value: 1.0,
            df: 1.0,
        };
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (x1 as f64 / n1 as f64 - x2 as f64 / n2 as f64) / se;
    TestResult {
        statistic: z,
        p_value: 2.0 * normal_sf(z.abs()),
        df: 1.0,
    }
}

fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

/// Asymptotic Kolmogorov distribution: P(K > x).
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.3 {
        // the alternating series converges slowly here; the theta-function
        // form is accurate instead
        let s: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-(j * j) * std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp()
            })
            .sum();
        return 1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return TestResult {
            statistic: 0.0,
            p_value: 1.0,
            df: 0.0,
        };
    }
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    TestResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        df: 0.0,
    }
}

/// One-sided Mann-Whitney test of "values in `a` tend to exceed those in
/// `b`" (normal approximation with tie correction). A small p-value is
/// evidence that `a` is stochastically larger.
pub fn mann_whitney_greater(a: &[f64], b: &[f64]) -> TestResult {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return TestResult {
            statistic: 0.0,
            p_value: 1.0,
            df: 0.0,
        };
    }
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|p, q| p.0.total_cmp(&q.0));
    let total = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for item in &all[i..=j] {
            if item.1 {
                rank_sum_a += avg;
            }
        }
        i = j + 1;
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let u = rank_sum_a - f1 * (f1 + 1.0) / 2.0;
    let mu = f1 * f2 / 2.0;
    let nn = f1 + f2;
    let var = f1 * f2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return TestResult {
            statistic: u,
            p_value: 0.5,
            df: 0.0,
        };
    }
    let z = (u - mu - 0.5) / var.sqrt();
    TestResult {
        statistic: z,
        p_value: normal_sf(z),
        df: 0.0,
    }
}

/// Least-squares line with coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if n > 2.0 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LinearFit {
        slope,
        intercept,
        r2,
        slope_se,
    }
}

/// Per-test level after Bonferroni correction.
pub fn bonferroni(alpha: f64, tests: usize) -> f64 {
    alpha / tests.max(1) as f64
}

/// Total-variation distance between two probability vectors.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate_and_stays_in_unit_interval() {
        let (lo, hi) = wilson(0, 50, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo, hi) = wilson(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        // textbook value for 30/100
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
    }

    #[test]
    fn kolmogorov_matches_known_quantiles() {
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
        assert!((kolmogorov_sf(0.2) - 1.0).abs() < 1e-4);
        // both branches agree where they overlap
        let a = kolmogorov_sf(0.3);
        let b = kolmogorov_sf(0.299_999_999);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn chi_square_pooling_and_value() {
        let r = chi_square_gof(&[50, 30, 20], &[0.5, 0.3, 0.2], 5.0);
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let r = chi_square_gof(&[60, 40], &[0.5, 0.5], 5.0);
        assert!((r.statistic - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.0455).abs() < 1e-3);
    }

    #[test]
    fn homogeneity_of_identical_samples() {
        let r = chi_square_homogeneity(&[10, 20, 30, 0], &[10, 20, 30, 0], 5.0);
        assert!(r.statistic.abs() < 1e-12);
    }

    #[test]
    fn mann_whitney_direction() {
        let a: Vec<f64> = (0..50).map(|i| i as f64 + 10.0).collect();
        let b: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(mann_whitney_greater(&a, &b).p_value < 0.05);
        assert!(mann_whitney_greater(&b, &a).p_value > 0.95);
    }

    #[test]
    fn regression_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_estimate() {
        let m = MeanEstimate::new(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m.mean - 2.5).abs() < 1e-12);
        assert!((m.var - 5.0 / 3.0).abs() < 1e-12);
        assert!(m.ci.0 < 2.5 && m.ci.1 > 2.5);
    }
}
