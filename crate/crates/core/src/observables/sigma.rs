//! σ runs: I_N with second-class coins to its right, the events A₁, A₂, A₃
//! over [CN, (C + 1) N] and Ã₁ at CN, and the domination of Ψ by the
//! zero-erased view.

use serde::{Deserialize, Serialize};

use super::{blocking_hitting_time, check_invalid, hitting_time, HitStart};
use crate::configs::{SecondClassConfig, ZConfig};
use crate::dynamics::{evolve, run_continuous, Flow, TagKind, WindowRun};
use crate::error::{param, Result};
use crate::measures::{rng_for, sample_blocking, sample_initial, BlockingParams, InitKind};
use crate::replicas::{map_replicas, Exec};
use crate::stats::{bonferroni, mann_whitney_greater, Proportion};
use crate::stream::{mix64, EventStream};

/// Outcome of one σ run over the window [CN, (C + 1) N].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSample {
    pub seed: u64,
    /// L(σ^{2→1}_{CN}): leftmost site holding no particle of either class.
    pub left_hole_at_cn: i64,
    /// min of L(σ^{2→1}_t) over the window.
    pub min_left_hole: i64,
    /// max of R(σ^{0X}_t) over the window. The view is read through its
    /// balanced translate, where R is the number of second-class particles
    /// behind the tag minus one.
    pub max_right_first_class: i64,
    /// σ^{0X}_t was sorted (no second-class particle left of the tag) at
    /// some time in the window.
    pub sorted_in_window: bool,
    /// H(I_N) <= (C + 1) N on the same clocks.
    pub hit: bool,
}

fn sigma_window(n: usize, horizon: f64) -> (i64, i64, i64) {
    let margin = super::default_margin(horizon);
    let n = n as i64;
    (-n - margin, n + margin, margin)
}

fn first_hole_from(run: &WindowRun, from: i64) -> i64 {
    (from.max(run.lo())..=run.hi())
        .find(|&i| run.at(i) == 0)
        .unwrap_or(run.hi() + 1)
}

/// One σ run; `None` when the boundary could have reached the watched
/// region.
pub fn sigma_run(c: f64, n: usize, p: f64, seed: u64) -> Result<Option<SigmaSample>> {
    let ni = n as i64;
    let (from, to) = (c * n as f64, (c + 1.0) * n as f64);
    let (lo, hi, margin) = sigma_window(n, to);
    let cfg = sample_initial(InitKind::Sigma0 { n }, lo, hi, &mut rng_for(seed))?;
    let mut run = WindowRun::new(&cfg);
    let ix = run.track(cfg.tagged().expect("tag set by rule"), TagKind::Exact)?;
    run.watch(-ni - margin / 2, ni + margin / 2);
    let stream = EventStream::new(seed, p);
    run_continuous(&mut run, from, &stream);
    if run.is_invalid() {
        return Ok(None);
    }
    let left_hole_at_cn = first_hole_from(&run, run.lo());
    // second-class particles left of the tag
    let mut behind = (run.lo()..run.tag(ix)).filter(|&i| run.at(i) == 2).count() as i64;
    let mut most_behind = behind;
    let mut sorted = behind == 0;
    let mut left = left_hole_at_cn;
    let mut min_left = left;
    let mut tag = run.tag(ix);
    evolve(&mut run, &stream, from, to, |e, changed, r| {
        if !changed {
            return Flow::Continue;
        }
        if e.edge <= left {
            left = first_hole_from(r, e.edge);
            min_left = min_left.min(left);
        }
        let now = r.tag(ix);
        if now != tag {
            // the particle that swapped with the tag changed sides
            let partner = r.at(tag);
            if partner == 2 {
                if now > tag {
                    behind += 1;
                } else {
                    behind -= 1;
                }
            }
            tag = now;
        }
        sorted |= behind == 0;
        most_behind = most_behind.max(behind);
        Flow::Continue
    });
    if run.is_invalid() {
        return Ok(None);
    }
    let h = hitting_time(&HitStart::Z(ZConfig::shifted_block(n)?), p, seed, to)?;
    Ok(Some(SigmaSample {
        seed,
        left_hole_at_cn,
        min_left_hole: min_left,
        max_right_first_class: most_behind - 1,
        sorted_in_window: sorted,
        hit: !h.censored,
    }))
}

/// Event estimates for one (C, N, p) with Wilson intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventProbReport {
    pub c: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub reps: usize,
    pub invalid: usize,
    pub ci_method: String,
    /// P(A₁ᶜ): L(σ^{2→1}_t) <= 2N somewhere in the window
    pub a1_fail: Proportion,
    /// P(A₂ᶜ): R(σ^{0X}_t) >= 2N somewhere in the window
    pub a2_fail: Proportion,
    /// P(A₃ᶜ | A₁, A₂)
    pub a3_fail_given: Proportion,
    /// P(Ã₁ᶜ): L(σ^{2→1}_{CN}) <= 3N
    pub a1_tilde_fail: Proportion,
    /// P(H(I_N) <= (C + 1) N)
    pub hit: Proportion,
    /// P(H(Ψ) > N), on an independent replica set
    pub h_psi_exceeds: Proportion,
    /// 1 - P(A₃ᶜ | A₁, A₂) - P(A₁ᶜ) - P(A₂ᶜ)
    pub implied: f64,
    /// Standard error of `hit - implied`.
    pub sigma: f64,
    /// Fewer than 100 runs satisfied A₁ and A₂.
    pub rare_conditioning: bool,
    /// hit >= implied - 3 sigma
    pub holds: bool,
}

pub fn proof_event_probs(c: f64, n: usize, p: f64, reps: usize, seed: u64, exec: Exec) -> Result<EventProbReport> {
    if n < 2 || c.is_nan() || c < 0.0 || p <= 0.5 {
        return Err(param("event probabilities need N >= 2, C >= 0 and p > 1/2"));
    }
    let runs: Vec<Option<SigmaSample>> = map_replicas(seed, 0..reps as u64, exec, |_, s| sigma_run(c, n, p, s))
        .into_iter()
        .collect::<Result<_>>()?;
    let invalid = runs.iter().filter(|r| r.is_none()).count();
    check_invalid(invalid, reps)?;
    let runs: Vec<SigmaSample> = runs.into_iter().flatten().collect();
    let psi = psi_exceedances(n, p, reps, seed, exec)?;
    Ok(EventProbReport::from_samples(c, n, p, invalid, &runs, &psi))
}

/// Whether H(Ψ) > N, on the replica set paired with a σ batch of master
/// seed `seed`.
pub fn psi_exceedances(n: usize, p: f64, reps: usize, seed: u64, exec: Exec) -> Result<Vec<bool>> {
    map_replicas(psi_seed(seed), 0..reps as u64, exec, |_, s| {
        blocking_hitting_time(p, s, n as f64).map(|h| h.censored)
    })
    .into_iter()
    .collect()
}

/// Master seed of the independent Ψ replicas.
pub fn psi_seed(seed: u64) -> u64 {
    mix64(seed ^ 0x7073_6921)
}

impl EventProbReport {
    /// Event frequencies over valid σ runs and the H(Ψ) > N indicators.
    pub fn from_samples(c: f64, n: usize, p: f64, invalid: usize, runs: &[SigmaSample], psi: &[bool]) -> Self {
        let total = runs.len() as u64;
        let ni = n as i64;
        let count = |f: &dyn Fn(&SigmaSample) -> bool| runs.iter().filter(|s| f(s)).count() as u64;
        let a1 = |s: &SigmaSample| s.min_left_hole > 2 * ni;
        let a2 = |s: &SigmaSample| s.max_right_first_class < 2 * ni;
        let a1_fail = Proportion::new(count(&|s| !a1(s)), total);
        let a2_fail = Proportion::new(count(&|s| !a2(s)), total);
        let cond = count(&|s| a1(s) && a2(s));
        let a3_fail_given = Proportion::new(count(&|s| a1(s) && a2(s) && !s.sorted_in_window), cond);
        let a1_tilde_fail = Proportion::new(count(&|s| s.left_hole_at_cn <= 3 * ni), total);
        let hit = Proportion::new(count(&|s| s.hit), total);
        let h_psi_exceeds = Proportion::new(psi.iter().filter(|&&x| x).count() as u64, psi.len() as u64);

        let implied = 1.0 - a3_fail_given.estimate - a1_fail.estimate - a2_fail.estimate;
        let sigma = (hit.se.powi(2) + a3_fail_given.se.powi(2) + a1_fail.se.powi(2) + a2_fail.se.powi(2)).sqrt();
        Self {
            c,
            n,
            p,
            reps: runs.len() + invalid,
            invalid,
            ci_method: "wilson".into(),
            a1_fail,
            a2_fail,
            a3_fail_given,
            a1_tilde_fail,
            hit,
            h_psi_exceeds,
            implied,
            sigma,
            rare_conditioning: cond < 100,
            holds: hit.estimate >= implied - 3.0 * sigma,
        }
    }
}

/// D_r = Σ_{i<=r} (1 - a_i) - Σ_{i<=r} (1 - g_i) for an element of A.
fn hole_excess(z: &ZConfig, r: i64) -> f64 {
    z.discrepancies()
        .iter()
        .take_while(|&&s| s <= r)
        .map(|&s| if s < 0 { 1.0 } else { -1.0 })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub t: f64,
    pub reps: usize,
    pub invalid: usize,
    pub prefixes: Vec<i64>,
    /// One-sided p-values for "the view has more holes than Ψ".
    pub p_values: Vec<f64>,
    pub level: f64,
    pub pass: bool,
}

pub const DOMINATION_PREFIXES: [i64; 9] = [-20, -10, -5, -3, -2, -1, 0, 2, 5];

/// Whether the balanced zero-erased view of σ_t still dominates Ψ in the
/// cumulative hole counts, prefix by prefix.
pub fn domination_check(
    n: usize,
    p: f64,
    t: f64,
    reps: usize,
    seed: u64,
    alpha: f64,
    exec: Exec,
) -> Result<DominationReport> {
    if p <= 0.5 || t < 0.0 {
        return Err(param("domination check needs p > 1/2 and t >= 0"));
    }
    let views: Vec<Option<ZConfig>> = map_replicas(seed, 0..reps as u64, exec, |_, s| {
        let (lo, hi, margin) = sigma_window(n, t);
        let cfg: SecondClassConfig = sample_initial(InitKind::Sigma0 { n }, lo, hi, &mut rng_for(s))?;
        let mut run = WindowRun::new(&cfg);
        let ix = run.track(cfg.tagged().expect("tag"), TagKind::Exact)?;
        run.watch(-(n as i64) - margin / 2, n as i64 + margin / 2);
        run_continuous(&mut run, t, &EventStream::new(s, p));
        if run.is_invalid() {
            return Ok(None);
        }
        Ok(Some(
            run.snapshot(&cfg)?
                .with_tag(run.tag(ix))?
                .zero_erased_view()?
                .balanced(),
        ))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let invalid = views.iter().filter(|v| v.is_none()).count();
    check_invalid(invalid, reps)?;
    let views: Vec<ZConfig> = views.into_iter().flatten().collect();
    let params = BlockingParams::new(p)?;
    let psi: Vec<ZConfig> = map_replicas(mix64(seed ^ 0x646F_6D21), 0..reps as u64, exec, |_, s| {
        sample_blocking(&params, &mut rng_for(s))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let level = bonferroni(alpha, DOMINATION_PREFIXES.len());
    let p_values: Vec<f64> = DOMINATION_PREFIXES
        .iter()
        .map(|&r| {
            let a: Vec<f64> = views.iter().map(|v| hole_excess(v, r)).collect();
            let b: Vec<f64> = psi.iter().map(|z| hole_excess(z, r)).collect();
            mann_whitney_greater(&a, &b).p_value
        })
        .collect();
    Ok(DominationReport {
        t,
        reps: views.len(),
        invalid,
        prefixes: DOMINATION_PREFIXES.to_vec(),
        pass: p_values.iter().all(|&q| q >= level),
        p_values,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_sigma_events() {
        let s = sigma_run(0.0, 4, 0.75, 1).unwrap().unwrap();
        assert_eq!(s.left_hole_at_cn, -4);
        assert!(s.min_left_hole <= -4);
        assert!(s.max_right_first_class >= -1);
    }

    #[test]
    fn hole_excess_matches_definition() {
        let i2 = ZConfig::shifted_block(2).unwrap();
        assert_eq!(hole_excess(&i2, -3), 0.0);
        assert_eq!(hole_excess(&i2, -1), 2.0);
        assert_eq!(hole_excess(&i2, 0), 1.0);
        assert_eq!(hole_excess(&i2, 5), 0.0);
    }

    #[test]
    fn degenerate_c_zero_report_is_consistent() {
        let r = proof_event_probs(0.0, 2, 0.75, 200, 9, Exec::Sequential).unwrap();
        for q in [&r.a1_fail, &r.a2_fail, &r.a1_tilde_fail, &r.hit, &r.h_psi_exceeds] {
            assert!((0.0..=1.0).contains(&q.estimate));
        }
        // at time 0 the leftmost hole is at -N
        assert_eq!(r.a1_fail.estimate, 1.0);
        assert!(r.holds);
    }
}
