//! One runner per experiment tag. Each produces CSV rows only; every
//! statistic in the summary is recomputed from those rows.

use std::collections::HashMap;

use asep_core::configs::{FiniteConfig, Permutation, ZConfig};
use asep_core::coupling::card_coalescence_time;
use asep_core::dynamics::run_continuous;
use asep_core::measures::{sample_blocking, stationarity_check, BlockingParams};
use asep_core::observables::{
    beta_batch, blocking_hitting_time, default_margin, hitting_time, psi_exceedances, psi_seed, sigma_run, HitStart,
    MAX_INVALID_SHARE,
};
use asep_core::oracle::{
    build_generator, discrete_mixing_time, exact_mixing_time, spectral_gap, stationary_distribution, transient,
    ChainKind, StateSpace, ALL_PAIRS_LIMIT,
};
use asep_core::replicas::{map_replicas, seeds, Exec};
use asep_core::stream::EventStream;

use crate::config::{Chain, Experiment, ExperimentConfig, Family};
use crate::error::{CliError, Context, Result};
use crate::output::Row;

pub struct RunOutput {
    pub rows: Vec<Row>,
    /// Replica seeds in index order.
    pub seeds: Vec<u64>,
    /// Invalidated runs per point.
    pub invalid: Vec<(String, usize)>,
}

/// `key=value` pairs joined by `;`.
pub fn point(pairs: &[(&str, String)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Hitting caps: cap_factor · N / |2p - 1|.
pub fn cap(cfg: &ExperimentConfig, n: usize, p: f64) -> f64 {
    cfg.params.cap_factor * n as f64 / (2.0 * p - 1.0).abs().max(1e-9)
}

pub fn execute(cfg: &ExperimentConfig, exec: Exec) -> Result<RunOutput> {
    let mut out = RunOutput {
        rows: Vec::new(),
        seeds: seeds(cfg.master_seed, cfg.reps as u64),
        invalid: Vec::new(),
    };
    match cfg.experiment {
        Experiment::MixingScaling => mixing(cfg, exec, &mut out)?,
        Experiment::HittingTail => hitting(cfg, exec, &mut out)?,
        Experiment::Drift | Experiment::CoupleDistance => beta(cfg, exec, &mut out)?,
        Experiment::BlockingStationarity => stationarity(cfg, exec, &mut out)?,
        Experiment::ProofEvents => events(cfg, exec, &mut out)?,
        Experiment::ExactCrosscheck => exact(cfg, exec, &mut out)?,
    }
    Ok(out)
}

fn mixing(cfg: &ExperimentConfig, exec: Exec, out: &mut RunOutput) -> Result<()> {
    for &p in &cfg.params.p {
        for &n in &cfg.params.n {
            let pt = point(&[("N", n.to_string()), ("p", p.to_string())]);
            let cap = cap(cfg, n, p);
            let recs = map_replicas(cfg.master_seed, 0..cfg.reps as u64, exec, |_, s| {
                card_coalescence_time(n, p, s, cap)
            });
            for (i, r) in recs.into_iter().enumerate() {
                let r = r.context(|| format!("{pt}, replica {i}"))?;
                out.rows.push(Row::replica(
                    i as u64,
                    r.seed,
                    &pt,
                    "coalesce_time",
                    r.coalesce_time,
                    r.censored,
                ));
            }
        }
    }
    Ok(())
}

fn hitting(cfg: &ExperimentConfig, exec: Exec, out: &mut RunOutput) -> Result<()> {
    let family = cfg.params.family.expect("validated");
    for &p in &cfg.params.p {
        let points: Vec<(String, Option<usize>, f64)> = match family {
            Family::ShiftedBlock => cfg
                .params
                .n
                .iter()
                .map(|&n| {
                    let top = cfg
                        .params
                        .d
                        .map_or_else(|| *cfg.params.t.last().expect("grid"), |d| d * n as f64);
                    let pt = point(&[("N", n.to_string()), ("p", p.to_string())]);
                    (pt, Some(n), top.max(cap(cfg, n, p)))
                })
                .collect(),
            Family::Blocking => vec![(
                point(&[("p", p.to_string())]),
                None,
                *cfg.params.t.last().expect("grid"),
            )],
        };
        for (pt, n, cap) in points {
            let hits = map_replicas(cfg.master_seed, 0..cfg.reps as u64, exec, |_, s| match n {
                Some(n) => hitting_time(&HitStart::Z(ZConfig::shifted_block(n)?), p, s, cap),
                None => blocking_hitting_time(p, s, cap),
            });
            for (i, h) in hits.into_iter().enumerate() {
                let h = h.context(|| format!("{pt}, replica {i}"))?;
                out.rows
                    .push(Row::replica(i as u64, h.seed, &pt, "hitting_time", h.value, h.censored));
            }
        }
    }
    Ok(())
}

fn beta(cfg: &ExperimentConfig, exec: Exec, out: &mut RunOutput) -> Result<()> {
    let t = cfg.params.t[0];
    let index: HashMap<u64, u64> = out.seeds.iter().enumerate().map(|(i, &s)| (s, i as u64)).collect();
    for &p in &cfg.params.p {
        let pt = point(&[("p", p.to_string()), ("t", t.to_string())]);
        let batch = beta_batch(p, t, cfg.reps, cfg.master_seed, default_margin(t), exec).context(|| pt.clone())?;
        for s in &batch.samples {
            let i = index[&s.seed];
            out.rows.push(Row::replica(i, s.seed, &pt, "x", s.x as f64, false));
            out.rows
                .push(Row::replica(i, s.seed, &pt, "x_prime", s.x_prime as f64, false));
            if cfg.experiment == Experiment::CoupleDistance {
                for (metric, g) in [("gap_right", s.gap_right), ("gap_left", s.gap_left)] {
                    if let Some(g) = g {
                        out.rows.push(Row::replica(i, s.seed, &pt, metric, g as f64, false));
                    }
                }
            }
        }
        out.rows.push(Row::aggregate(&pt, "invalid_runs", batch.invalid as f64));
        out.invalid.push((pt, batch.invalid));
    }
    Ok(())
}

fn stationarity(cfg: &ExperimentConfig, exec: Exec, out: &mut RunOutput) -> Result<()> {
    let t = cfg.params.t[0];
    let alpha = cfg.threshold("alpha").unwrap_or(0.01);
    for &p in &cfg.params.p {
        let pt = point(&[("p", p.to_string()), ("t", t.to_string())]);
        if cfg.reps < 2 {
            continue;
        }
        let params = BlockingParams::new(p).context(|| pt.clone())?;
        let report = match cfg.params.block_start {
            None => stationarity_check(
                |rng| sample_blocking(&params, rng),
                p,
                t,
                cfg.reps,
                cfg.master_seed,
                alpha,
                exec,
            ),
            Some(n) => {
                let z = ZConfig::shifted_block(n).context(|| pt.clone())?;
                stationarity_check(|_| Ok(z.clone()), p, t, cfg.reps, cfg.master_seed, alpha, exec)
            }
        }
        .context(|| pt.clone())?;
        for s in &report.statistics {
            out.rows
                .push(Row::aggregate(&pt, &format!("p_value:{}", s.statistic), s.p_value));
        }
        out.rows.push(Row::aggregate(&pt, "level", report.level));
    }
    Ok(())
}

fn events(cfg: &ExperimentConfig, exec: Exec, out: &mut RunOutput) -> Result<()> {
    let (c, n, p) = (cfg.params.c.expect("validated"), cfg.params.n[0], cfg.params.p[0]);
    let pt = point(&[("C", c.to_string()), ("N", n.to_string()), ("p", p.to_string())]);
    let runs = map_replicas(cfg.master_seed, 0..cfg.reps as u64, exec, |_, s| sigma_run(c, n, p, s));
    let mut invalid = 0;
    for (i, (r, &seed)) in runs.into_iter().zip(&out.seeds).enumerate() {
        let i = i as u64;
        match r.context(|| format!("{pt}, replica {i}"))? {
            None => {
                invalid += 1;
                out.rows.push(Row::replica(i, seed, &pt, "invalid", 1.0, false));
            }
            Some(s) => {
                for (metric, v) in [
                    ("left_hole_at_cn", s.left_hole_at_cn as f64),
                    ("min_left_hole", s.min_left_hole as f64),
                    ("max_right_first_class", s.max_right_first_class as f64),
                    ("sorted_in_window", s.sorted_in_window as u8 as f64),
                    ("hit", s.hit as u8 as f64),
                ] {
                    out.rows.push(Row::replica(i, seed, &pt, metric, v, false));
                }
            }
        }
    }
    if invalid as f64 > MAX_INVALID_SHARE * cfg.reps as f64 {
        return Err(CliError::Core {
            context: pt,
            source: asep_core::Error::TooManyInvalid {
                invalid,
                total: cfg.reps,
            },
        });
    }
    let psi = psi_exceedances(n, p, cfg.reps, cfg.master_seed, exec).context(|| pt.clone())?;
    for (i, (e, s)) in psi
        .into_iter()
        .zip(seeds(psi_seed(cfg.master_seed), cfg.reps as u64))
        .enumerate()
    {
        out.rows
            .push(Row::replica(i as u64, s, &pt, "h_psi_exceeds", e as u8 as f64, e));
    }
    out.invalid.push((pt, invalid));
    Ok(())
}

/// Stationary weights in closed form: θ^{inversions} for decks,
/// θ^{Σ particle positions} for words, θ = (1 - p) / p.
pub fn closed_form(chain: Chain, labels: &[String], p: f64) -> Result<Vec<f64>> {
    let bad = |e: asep_core::Error| CliError::Core {
        context: "closed form".into(),
        source: e,
    };
    let energy: Vec<i32> = labels
        .iter()
        .map(|l| -> Result<i32> {
            Ok(match chain {
                Chain::Cards => l.parse::<Permutation>().map_err(bad)?.inversions() as i32,
                Chain::Exclusion => {
                    let x: FiniteConfig = l.parse().map_err(bad)?;
                    x.bits()
                        .iter()
                        .enumerate()
                        .filter(|(_, &b)| b == 1)
                        .map(|(i, _)| i as i32)
                        .sum()
                }
            })
        })
        .collect::<Result<_>>()?;
    let lowest = *energy.iter().min().unwrap_or(&0);
    let highest = *energy.iter().max().unwrap_or(&0);
    // weights relative to the most likely state; at p < 1/2 flip to avoid
    // overflow of θ^E
    let w: Vec<f64> = if p >= 0.5 {
        let th = (1.0 - p) / p;
        energy.iter().map(|&e| th.powi(e - lowest)).collect()
    } else {
        let th = p / (1.0 - p);
        energy.iter().map(|&e| th.powi(highest - e)).collect()
    };
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

fn worst_start(chain: Chain, n: usize, k: Option<usize>, space: &StateSpace) -> Result<usize> {
    let label = match chain {
        Chain::Cards => Permutation::reversed(n).map(|s| s.to_string()),
        Chain::Exclusion => FiniteConfig::bottom(n, k.expect("validated")).map(|s| s.to_string()),
    }
    .context(|| "start state".into())?;
    Ok(space.index_of(&label).expect("start is a state"))
}

fn exact(cfg: &ExperimentConfig, exec: Exec, out: &mut RunOutput) -> Result<()> {
    let chain = cfg.params.chain.expect("validated");
    for &p in &cfg.params.p {
        for &n in &cfg.params.n {
            let k = cfg.params.k;
            let mut pairs = vec![("N", n.to_string())];
            if let Some(k) = k {
                pairs.push(("k", k.to_string()));
            }
            pairs.push(("p", p.to_string()));
            let pt = point(&pairs);
            let kind = match chain {
                Chain::Cards => ChainKind::Cards { n, p },
                Chain::Exclusion => ChainKind::Exclusion {
                    n,
                    k: k.expect("validated"),
                    p,
                },
            };
            let (space, gen) = build_generator(kind).context(|| pt.clone())?;
            let pi = stationary_distribution(&gen).context(|| pt.clone())?.pi;
            let closed = closed_form(chain, &space.labels, p)?;
            for (l, (a, b)) in space.labels.iter().zip(pi.iter().zip(&closed)) {
                out.rows.push(Row::aggregate(&pt, &format!("pi:{l}"), *a));
                out.rows.push(Row::aggregate(&pt, &format!("closed_form:{l}"), *b));
            }
            if space.len() > ALL_PAIRS_LIMIT {
                continue;
            }
            let tau = exact_mixing_time(&gen).context(|| pt.clone())?;
            out.rows.push(Row::aggregate(&pt, "tau_continuous", tau));
            let steps = discrete_mixing_time(&gen, n - 1, 10_000_000).context(|| pt.clone())?;
            out.rows.push(Row::aggregate(&pt, "tau_discrete_steps", steps as f64));
            if space.len() > 1 {
                let gap = spectral_gap(&gen).context(|| pt.clone())?;
                out.rows.push(Row::aggregate(&pt, "spectral_gap", gap));
            }
            if cfg.reps == 0 {
                continue;
            }
            let start = worst_start(chain, n, k, &space)?;
            let mut v0 = vec![0.0; space.len()];
            v0[start] = 1.0;
            let (row, _) = transient(&gen, &v0, tau);
            for (l, q) in space.labels.iter().zip(&row) {
                out.rows.push(Row::aggregate(&pt, &format!("exact_at_tau:{l}"), *q));
            }
            let label = space.labels[start].clone();
            let ends = map_replicas(cfg.master_seed, 0..cfg.reps as u64, exec, |_, s| -> Result<usize> {
                let stream = EventStream::new(s, p);
                let end = match chain {
                    Chain::Cards => {
                        let mut x: Permutation = label.parse().context(|| "start".into())?;
                        run_continuous(&mut x, tau, &stream);
                        x.to_string()
                    }
                    Chain::Exclusion => {
                        let mut x: FiniteConfig = label.parse().context(|| "start".into())?;
                        run_continuous(&mut x, tau, &stream);
                        x.to_string()
                    }
                };
                Ok(space.index_of(&end).expect("reachable state"))
            });
            for (i, (e, &s)) in ends.into_iter().zip(&out.seeds).enumerate() {
                out.rows
                    .push(Row::replica(i as u64, s, &pt, "state_at_tau", e? as f64, false));
            }
        }
    }
    Ok(())
}
