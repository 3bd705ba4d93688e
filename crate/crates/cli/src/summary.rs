//! Summary statistics and verdicts, recomputed from the CSV rows and the
//! config alone so that `summarize` can rebuild them from disk.
//!
//! Thresholds missing from the config fall back to the defaults in
//! [`default_threshold`].

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use asep_core::observables::{
    drift_of, gap_law_of, BetaBatch, BetaSample, DriftKind, EventProbReport, SigmaSample, TailFit, TailModel,
};
use asep_core::stats::{linear_fit, tv_distance, MeanEstimate, Proportion};

use crate::config::{Chain, Experiment, ExperimentConfig, Family};
use crate::experiments::point;
use crate::output::Row;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub point: String,
    pub statistic: String,
    pub estimate: f64,
    pub ci: Option<(f64, f64)>,
    pub threshold: Option<String>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub reps: usize,
    pub rows: Vec<SummaryRow>,
    /// No row failed.
    pub pass: bool,
}

pub fn default_threshold(key: &str) -> Option<f64> {
    Some(match key {
        "ratio_min" => 1.5,
        "ratio_max" => 2.6,
        "slope_min" => 0.0,
        "r2_min" => 0.9,
        "scaled_ratio_max" => 2.0,
        "mean_tol" => 0.02,
        "var_factor" => 6.0,
        "alpha" => 0.01,
        "sigmas" => 3.0,
        "weights_tol" => 1e-8,
        "tv_max" => 0.01,
        "ratio_tol" => 0.05,
        _ => return None,
    })
}

struct Builder<'a> {
    cfg: &'a ExperimentConfig,
    rows: Vec<SummaryRow>,
    index: HashMap<&'a str, HashMap<&'a str, Vec<&'a Row>>>,
    all: &'a [Row],
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a ExperimentConfig, all: &'a [Row]) -> Self {
        let mut index: HashMap<&str, HashMap<&str, Vec<&Row>>> = HashMap::new();
        for r in all {
            index.entry(&r.point).or_default().entry(&r.metric).or_default().push(r);
        }
        Self {
            cfg,
            rows: Vec::new(),
            index,
            all,
        }
    }

    fn threshold(&self, key: &str) -> f64 {
        self.cfg
            .threshold(key)
            .or_else(|| default_threshold(key))
            .expect("known threshold")
    }

    fn get(&self, pt: &str, metric: &str) -> &[&'a Row] {
        self.index
            .get(pt)
            .and_then(|m| m.get(metric))
            .map_or(&[], Vec::as_slice)
    }

    fn values(&self, pt: &str, metric: &str) -> Vec<f64> {
        self.get(pt, metric).iter().map(|r| r.value).collect()
    }

    fn aggregate(&self, pt: &str, metric: &str) -> Option<f64> {
        self.get(pt, metric).first().map(|r| r.value)
    }

    /// `(label, value)` for metrics `prefix:label` at `pt`, in file order.
    fn labelled(&self, pt: &str, prefix: &str) -> Vec<(&'a str, f64)> {
        self.all
            .iter()
            .filter(|r| r.point == pt)
            .filter_map(|r| Some((r.metric.strip_prefix(prefix)?.strip_prefix(':')?, r.value)))
            .collect()
    }

    fn push(&mut self, pt: &str, statistic: &str, estimate: f64, ci: Option<(f64, f64)>, check: Check) {
        let (threshold, verdict) = check.judge(estimate);
        self.rows.push(SummaryRow {
            experiment: self.cfg.experiment.tag().to_string(),
            point: pt.to_string(),
            statistic: statistic.to_string(),
            estimate,
            ci,
            threshold,
            verdict,
        });
    }

    fn proportion(&mut self, pt: &str, statistic: &str, p: Proportion, check: Check) {
        self.push(pt, statistic, p.estimate, Some(p.ci), check);
    }
}

enum Check {
    Info,
    AtLeast(f64),
    AtMost(f64),
    Within(f64, f64),
    /// |estimate - target| <= tol
    Near(f64, f64),
}

impl Check {
    fn judge(&self, x: f64) -> (Option<String>, Verdict) {
        let (text, ok) = match *self {
            Check::Info => return (None, Verdict::Info),
            Check::AtLeast(a) => (format!(">= {}", num(a)), x >= a),
            Check::AtMost(b) => (format!("<= {}", num(b)), x <= b),
            Check::Within(a, b) => (format!("in [{}, {}]", num(a), num(b)), x >= a && x <= b),
            Check::Near(t, tol) => (format!("{} ± {}", num(t), num(tol)), (x - t).abs() <= tol),
        };
        (Some(text), if ok { Verdict::Pass } else { Verdict::Fail })
    }
}

/// Compact number for labels: four decimals, or scientific when tiny.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        return format!("{x:.3e}");
    }
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn mean_ci(values: &[f64]) -> (f64, Option<(f64, f64)>) {
    let m = MeanEstimate::new(values);
    (m.mean, (values.len() > 1).then_some(m.ci))
}

pub fn summarize_rows(cfg: &ExperimentConfig, rows: &[Row]) -> Summary {
    let mut b = Builder::new(cfg, rows);
    if cfg.reps > 0 || cfg.experiment == Experiment::ExactCrosscheck {
        match cfg.experiment {
            Experiment::MixingScaling => mixing(&mut b),
            Experiment::HittingTail => hitting(&mut b),
            Experiment::Drift => drift(&mut b),
            Experiment::BlockingStationarity => stationarity(&mut b),
            Experiment::ProofEvents => events(&mut b),
            Experiment::ExactCrosscheck => exact(&mut b),
            Experiment::CoupleDistance => distance(&mut b),
        }
    }
    let pass = b.rows.iter().all(|r| r.verdict != Verdict::Fail);
    Summary {
        experiment: cfg.experiment.tag().to_string(),
        reps: cfg.reps,
        rows: b.rows,
        pass,
    }
}

fn mixing(b: &mut Builder) {
    let cfg = b.cfg;
    let (lo, hi) = (b.threshold("ratio_min"), b.threshold("ratio_max"));
    for &p in &cfg.params.p {
        let mut means = Vec::new();
        for &n in &cfg.params.n {
            let pt = point(&[("N", n.to_string()), ("p", p.to_string())]);
            let rows = b.get(&pt, "coalesce_time");
            let censored = rows.iter().filter(|r| r.censored).count();
            let (m, ci) = mean_ci(&b.values(&pt, "coalesce_time"));
            b.push(&pt, "mean_coalesce_time", m, ci, Check::Info);
            b.push(&pt, "censored", censored as f64, None, Check::AtMost(0.0));
            means.push((n, m));
        }
        let pp = point(&[("p", p.to_string())]);
        for w in means.windows(2) {
            let ((n0, m0), (n1, m1)) = (w[0], w[1]);
            let check = if n1 == 2 * n0 {
                Check::Within(lo, hi)
            } else {
                Check::Info
            };
            b.push(&pp, &format!("ratio N={n1}/N={n0}"), m1 / m0, None, check);
        }
        if means.len() >= 2 {
            let x: Vec<f64> = means.iter().map(|&(n, _)| (n as f64).ln()).collect();
            let y: Vec<f64> = means.iter().map(|&(_, m)| m.ln()).collect();
            let f = linear_fit(&x, &y);
            let check = match (cfg.threshold("slope_min"), cfg.threshold("slope_max")) {
                (None, None) => Check::Within(0.8, 1.3),
                (a, c) => Check::Within(a.unwrap_or(f64::NEG_INFINITY), c.unwrap_or(f64::INFINITY)),
            };
            let ci = (means.len() > 2).then_some((f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se));
            b.push(&pp, "log-log slope", f.slope, ci, check);
        }
    }
}

/// Hitting times with censored ones read as infinite.
fn hitting_values(b: &Builder, pt: &str) -> Vec<f64> {
    b.get(pt, "hitting_time")
        .iter()
        .map(|r| if r.censored { f64::INFINITY } else { r.value })
        .collect()
}

fn hitting(b: &mut Builder) {
    let cfg = b.cfg;
    for &p in &cfg.params.p {
        match cfg.params.family.expect("validated") {
            Family::ShiftedBlock => {
                let mut scaled = Vec::new();
                for &n in &cfg.params.n {
                    let pt = point(&[("N", n.to_string()), ("p", p.to_string())]);
                    let values = hitting_values(b, &pt);
                    let grid = match cfg.params.d {
                        Some(d) => vec![d * n as f64],
                        None => cfg.params.t.clone(),
                    };
                    let fit = TailFit::from_values(TailModel::Empirical, &values, &grid);
                    for tp in &fit.points {
                        b.proportion(&pt, &format!("P(H > {})", num(tp.threshold)), tp.survival, Check::Info);
                    }
                    if cfg.params.d.is_some() {
                        let s = fit.points[0].survival;
                        b.push(&pt, "N·P(H > DN)", n as f64 * s.estimate, None, Check::Info);
                        scaled.push((n, n as f64 * s.estimate));
                    }
                }
                if let Some(&(n0, s0)) = scaled.first() {
                    let max = b.threshold("scaled_ratio_max");
                    let pp = point(&[("p", p.to_string())]);
                    for &(n, s) in &scaled[1..] {
                        let ratio = if s0 > 0.0 {
                            s / s0
                        } else if s > 0.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        };
                        b.push(
                            &pp,
                            &format!("scaled ratio N={n}/N={n0}"),
                            ratio,
                            None,
                            Check::AtMost(max),
                        );
                    }
                }
            }
            Family::Blocking => {
                let pt = point(&[("p", p.to_string())]);
                let values = hitting_values(b, &pt);
                let fit = TailFit::from_values(TailModel::ExpSqrtInT, &values, &cfg.params.t);
                for tp in &fit.points {
                    b.proportion(&pt, &format!("P(H > {})", num(tp.threshold)), tp.survival, Check::Info);
                }
                b.push(
                    &pt,
                    "survival nonincreasing",
                    fit.is_nonincreasing() as u8 as f64,
                    None,
                    Check::AtLeast(1.0),
                );
                match fit.fit {
                    Some(f) => {
                        let ci = (f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se);
                        let (smin, rmin) = (b.threshold("slope_min"), b.threshold("r2_min"));
                        b.push(&pt, "sqrt-t decay rate", f.slope, Some(ci), Check::AtLeast(smin));
                        b.push(&pt, "fit R²", f.r2, None, Check::AtLeast(rmin));
                    }
                    None => b.push(&pt, "usable grid points", 0.0, None, Check::AtLeast(3.0)),
                }
            }
        }
    }
}

fn batch(b: &Builder, pt: &str, p: f64, t: f64) -> BetaBatch {
    let xs = b.get(pt, "x");
    let xp = b.get(pt, "x_prime");
    let gap = |metric: &str| -> HashMap<u64, i64> {
        b.get(pt, metric)
            .iter()
            .filter_map(|r| Some((r.replica?, r.value as i64)))
            .collect()
    };
    let (right, left) = (gap("gap_right"), gap("gap_left"));
    let samples = xs
        .iter()
        .zip(xp)
        .map(|(x, y)| {
            let i = x.replica.unwrap_or_default();
            BetaSample {
                seed: x.seed.unwrap_or_default(),
                x: x.value as i64,
                x_prime: y.value as i64,
                gap_right: right.get(&i).copied(),
                gap_left: left.get(&i).copied(),
            }
        })
        .collect();
    BetaBatch {
        p,
        t,
        margin: asep_core::observables::default_margin(t),
        samples,
        invalid: b.aggregate(pt, "invalid_runs").unwrap_or(0.0) as usize,
    }
}

fn drift(b: &mut Builder) {
    let cfg = b.cfg;
    let t = cfg.params.t[0];
    let (tol, vf) = (b.threshold("mean_tol"), b.threshold("var_factor"));
    for &p in &cfg.params.p {
        let pt = point(&[("p", p.to_string()), ("t", t.to_string())]);
        let batch = batch(b, &pt, p, t);
        b.push(&pt, "invalid runs", batch.invalid as f64, None, Check::Info);
        let Ok(d) = drift_of(&batch, cfg.params.process) else {
            b.push(&pt, "valid runs", batch.samples.len() as f64, None, Check::AtLeast(2.0));
            continue;
        };
        let half = 1.96 * d.se_mean;
        let ci = Some((d.mean_over_t - half, d.mean_over_t + half));
        let check = match cfg.params.process {
            DriftKind::Beta2to1 => Check::Near(-0.5 * (2.0 * p - 1.0), tol.max(3.0 * d.se_mean)),
            DriftKind::Beta2to0 => Check::Info,
        };
        b.push(&pt, "mean_over_t", d.mean_over_t, ci, check);
        let vci = Some((d.var_over_t - 1.96 * d.se_var, d.var_over_t + 1.96 * d.se_var));
        let check = if p == 0.5 || cfg.params.process == DriftKind::Beta2to0 {
            Check::Info
        } else {
            Check::AtMost(vf / (2.0 * p - 1.0).abs() + 3.0 * d.se_var)
        };
        b.push(&pt, "var_over_t", d.var_over_t, vci, check);
    }
}

fn stationarity(b: &mut Builder) {
    let cfg = b.cfg;
    let t = cfg.params.t[0];
    for &p in &cfg.params.p {
        let pt = point(&[("p", p.to_string()), ("t", t.to_string())]);
        let Some(level) = b.aggregate(&pt, "level") else {
            continue;
        };
        for (stat, pv) in b.labelled(&pt, "p_value") {
            b.push(&pt, &format!("p-value {stat}"), pv, None, Check::AtLeast(level));
        }
    }
}

fn events(b: &mut Builder) {
    let cfg = b.cfg;
    let (c, n, p) = (cfg.params.c.expect("validated"), cfg.params.n[0], cfg.params.p[0]);
    let pt = point(&[("C", c.to_string()), ("N", n.to_string()), ("p", p.to_string())]);
    let col = |m: &str| -> HashMap<u64, f64> {
        b.get(&pt, m)
            .iter()
            .filter_map(|r| Some((r.replica?, r.value)))
            .collect()
    };
    let (lh, ml, mr, so, hit) = (
        col("left_hole_at_cn"),
        col("min_left_hole"),
        col("max_right_first_class"),
        col("sorted_in_window"),
        col("hit"),
    );
    let runs: Vec<SigmaSample> = b
        .get(&pt, "hit")
        .iter()
        .filter_map(|r| {
            let i = r.replica?;
            Some(SigmaSample {
                seed: r.seed?,
                left_hole_at_cn: *lh.get(&i)? as i64,
                min_left_hole: *ml.get(&i)? as i64,
                max_right_first_class: *mr.get(&i)? as i64,
                sorted_in_window: *so.get(&i)? != 0.0,
                hit: *hit.get(&i)? != 0.0,
            })
        })
        .collect();
    let invalid = b.get(&pt, "invalid").len();
    let psi: Vec<bool> = b.get(&pt, "h_psi_exceeds").iter().map(|r| r.value != 0.0).collect();
    let r = EventProbReport::from_samples(c, n, p, invalid, &runs, &psi);
    b.push(&pt, "invalid runs", invalid as f64, None, Check::Info);
    b.proportion(&pt, "P(A1 fails)", r.a1_fail, Check::Info);
    b.proportion(&pt, "P(A2 fails)", r.a2_fail, Check::Info);
    b.proportion(&pt, "P(A3 fails | A1, A2)", r.a3_fail_given, Check::Info);
    b.proportion(&pt, "P(A1~ fails)", r.a1_tilde_fail, Check::Info);
    b.proportion(&pt, "P(H(Psi) > N)", r.h_psi_exceeds, Check::Info);
    let k = b.threshold("sigmas");
    b.proportion(&pt, "P(H <= (C+1)N)", r.hit, Check::AtLeast(r.implied - k * r.sigma));
}

fn exact(b: &mut Builder) {
    let cfg = b.cfg;
    let (wtol, tvmax, rtol) = (
        b.threshold("weights_tol"),
        b.threshold("tv_max"),
        b.threshold("ratio_tol"),
    );
    for &p in &cfg.params.p {
        for &n in &cfg.params.n {
            let mut pairs = vec![("N", n.to_string())];
            if let Some(k) = cfg.params.k {
                pairs.push(("k", k.to_string()));
            }
            pairs.push(("p", p.to_string()));
            let pt = point(&pairs);
            let pi = b.labelled(&pt, "pi");
            let closed = b.labelled(&pt, "closed_form");
            let err = pi
                .iter()
                .zip(&closed)
                .map(|(a, c)| (a.1 - c.1).abs())
                .fold(0.0, f64::max);
            b.push(&pt, "max |pi - closed form|", err, None, Check::AtMost(wtol));
            let Some(tau) = b.aggregate(&pt, "tau_continuous") else {
                continue;
            };
            b.push(&pt, "tau_1", tau, None, Check::Info);
            if let Some(gap) = b.aggregate(&pt, "spectral_gap") {
                b.push(&pt, "spectral gap", gap, None, Check::Info);
            }
            if let Some(steps) = b.aggregate(&pt, "tau_discrete_steps") {
                let ratio = if tau > 0.0 { steps / tau / (n - 1) as f64 } else { 1.0 };
                // the discrete/continuous correspondence is checked on decks only
                let check = match cfg.params.chain {
                    Some(Chain::Cards) => Check::Near(1.0, rtol),
                    _ => Check::Info,
                };
                b.push(&pt, "steps / (tau_1 (N-1))", ratio, None, check);
            }
            let exact: Vec<f64> = b.labelled(&pt, "exact_at_tau").into_iter().map(|(_, q)| q).collect();
            let ends = b.values(&pt, "state_at_tau");
            if !exact.is_empty() && !ends.is_empty() {
                let mut emp = vec![0.0; exact.len()];
                for &e in &ends {
                    if let Some(slot) = emp.get_mut(e as usize) {
                        *slot += 1.0 / ends.len() as f64;
                    }
                }
                b.push(
                    &pt,
                    "TV(simulated, exact) at tau_1",
                    tv_distance(&emp, &exact),
                    None,
                    Check::AtMost(tvmax),
                );
            }
        }
    }
}

fn distance(b: &mut Builder) {
    let cfg = b.cfg;
    let (p, t) = (cfg.params.p[0], cfg.params.t[0]);
    let pt = point(&[("p", p.to_string()), ("t", t.to_string())]);
    let batch = batch(b, &pt, p, t);
    b.push(&pt, "invalid runs", batch.invalid as f64, None, Check::Info);
    let d: Vec<f64> = batch.samples.iter().map(|s| (s.x - s.x_prime).abs() as f64).collect();
    let grid: Vec<f64> = (0..=cfg.params.n_max).map(f64::from).collect();
    let fit = TailFit::from_values(TailModel::GeometricInN, &d, &grid);
    for tp in &fit.points {
        b.proportion(
            &pt,
            &format!("P(|x - x'| > {})", tp.threshold),
            tp.survival,
            Check::Info,
        );
    }
    match fit.fit {
        Some(f) => {
            let smax = cfg.threshold("slope_max").unwrap_or(0.0);
            let ci = (f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se);
            b.push(&pt, "log rho", f.slope, Some(ci), Check::AtMost(smax));
            b.push(&pt, "fit R²", f.r2, None, Check::AtLeast(b.threshold("r2_min")));
        }
        None => b.push(&pt, "usable grid points", 0.0, None, Check::AtLeast(3.0)),
    }
    let law = gap_law_of(&batch);
    if law.counts.iter().sum::<u64>() > 0 {
        b.push(
            &pt,
            "gap law chi-square p",
            law.test.p_value,
            None,
            Check::AtLeast(b.threshold("alpha")),
        );
    }
}

/// Fixed-width text table of summary rows.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.experiment.clone(),
                r.point.clone(),
                r.statistic.clone(),
                format!("{:.6}", r.estimate),
                r.ci.map(|(a, c)| format!("[{a:.4}, {c:.4}]")).unwrap_or_default(),
                r.threshold.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let head = ["experiment", "point", "statistic", "estimate", "95% CI", "threshold"];
    let mut width = head.map(|h| h.chars().count());
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, c: &[String], v: &str| {
        for (s, w) in c.iter().zip(width) {
            let _ = write!(out, "{s:<w$}  ");
        }
        let _ = writeln!(out, "{v}");
    };
    line(&mut out, &head.map(String::from), "verdict");
    for (c, r) in cells.iter().zip(rows) {
        let v = match r.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "-",
        };
        line(&mut out, c, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn drift_row_compares_to_minus_a_quarter() {
        let cfg = parse_config("experiment = drift\nreps = 4\nmaster_seed = 1\n[params]\np = 0.75\nt = 10\n").unwrap();
        let pt = "p=0.75;t=10";
        let mut rows = Vec::new();
        for (i, x) in [-3.0, -2.0, -2.0, -3.0].into_iter().enumerate() {
            rows.push(Row::replica(i as u64, i as u64, pt, "x", 0.0, false));
            rows.push(Row::replica(i as u64, i as u64, pt, "x_prime", x, false));
        }
        rows.push(Row::aggregate(pt, "invalid_runs", 0.0));
        let s = summarize_rows(&cfg, &rows);
        let r = s.rows.iter().find(|r| r.statistic == "mean_over_t").unwrap();
        assert!((r.estimate + 0.25).abs() < 1e-12, "{r:?}");
        assert!(r.threshold.as_deref().unwrap().starts_with("-0.25"));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn numbers_are_compact() {
        assert_eq!(num(0.0004347826086956522), "4.348e-4");
        assert_eq!(num(12.163816193371327), "12.1638");
        assert_eq!(num(20.0), "20");
        assert_eq!(num(-0.25), "-0.25");
    }

    #[test]
    fn empty_rows_give_an_empty_passing_summary() {
        let cfg = parse_config("experiment = drift\nreps = 0\nmaster_seed = 1\n[params]\np = 0.75\nt = 10\n").unwrap();
        let s = summarize_rows(&cfg, &[]);
        assert!(s.rows.is_empty() && s.pass);
    }
}
