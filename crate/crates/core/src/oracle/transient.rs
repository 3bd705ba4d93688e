//! Transient laws by uniformization, worst-pair total variation and exact
//! mixing times.

use serde::{Deserialize, Serialize};

use super::Generator;
use crate::error::{Error, Result};

/// Truncation budget of the Poisson series.
const SERIES_TAIL: f64 = 1e-11;
/// All-pairs distances are computed for state spaces up to this size.
pub const ALL_PAIRS_LIMIT: usize = 720;

/// Poisson(λ) weights for k = 0..K with the tail beyond K below `tail`.
fn poisson_weights(lambda: f64, tail: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return vec![1.0];
    }
    let mut w = Vec::new();
    let mut log_w = -lambda;
    let mut acc = 0.0;
    let mut k = 0usize;
    loop {
        let x = log_w.exp();
        w.push(x);
        acc += x;
        if k as f64 > lambda && 1.0 - acc < tail {
            return w;
        }
        k += 1;
        log_w += lambda.ln() - (k as f64).ln();
        if k > 10_000_000 {
            return w;
        }
    }
}

/// Law at time `t` of the chain started from `v0`, and the mass lost to
/// series truncation.
pub fn transient(gen: &Generator, v0: &[f64], t: f64) -> (Vec<f64>, f64) {
    let rate = gen.max_exit();
    if rate == 0.0 || t == 0.0 {
        return (v0.to_vec(), 0.0);
    }
    let weights = poisson_weights(rate * t, SERIES_TAIL);
    let mut v = v0.to_vec();
    let mut next = vec![0.0; v.len()];
    let mut out: Vec<f64> = v.iter().map(|x| x * weights[0]).collect();
    for &w in &weights[1..] {
        gen.step(&v, rate, &mut next);
        std::mem::swap(&mut v, &mut next);
        for (o, x) in out.iter_mut().zip(&v) {
            *o += w * x;
        }
    }
    let mass: f64 = out.iter().sum();
    let lost = (1.0 - weights.iter().sum::<f64>()).max(0.0);
    // renormalize the truncated series
    for o in out.iter_mut() {
        *o /= mass;
    }
    (out, lost)
}

fn unit(size: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; size];
    v[i] = 1.0;
    v
}

fn worst_pair(rows: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
            worst = worst.max(d);
        }
    }
    worst
}

fn check_size(gen: &Generator) -> Result<()> {
    if gen.size() > ALL_PAIRS_LIMIT {
        return Err(Error::SizeBound {
            size: gen.size(),
            limit: ALL_PAIRS_LIMIT,
        });
    }
    Ok(())
}

fn worst_tv_at(gen: &Generator, t: f64) -> (f64, f64) {
    let n = gen.size();
    let mut err: f64 = 0.0;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (r, e) = transient(gen, &unit(n, i), t);
            err = err.max(e);
            r
        })
        .collect();
    (worst_pair(&rows), err)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub tv: f64,
    pub bound_error: f64,
}

/// sup over start pairs of the TV distance at each grid time.
pub fn tv_curve(gen: &Generator, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    check_size(gen)?;
    Ok(grid
        .iter()
        .map(|&t| {
            let (tv, bound_error) = worst_tv_at(gen, t);
            CurvePoint { t, tv, bound_error }
        })
        .collect())
}

const THRESHOLD: f64 = 0.367_879_441_171_442_33; // e^{-1}

/// τ₁ = inf{t : worst-pair TV <= e^{-1}}, to relative precision 1e-6.
pub fn exact_mixing_time(gen: &Generator) -> Result<f64> {
    check_size(gen)?;
    if gen.size() <= 1 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while worst_tv_at(gen, hi).0 > THRESHOLD {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::Numerical("mixing time beyond 1e7".into()));
        }
    }
    let mut lo = 0.0;
    while (hi - lo) > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if worst_tv_at(gen, mid).0 > THRESHOLD {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Worst-pair TV after n = 0..=steps moves of the discrete chain that picks
/// one of `edges` pairs uniformly.
pub fn discrete_tv_curve(gen: &Generator, edges: usize, steps: usize) -> Result<Vec<f64>> {
    check_size(gen)?;
    let n = gen.size();
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| unit(n, i)).collect();
    let mut scratch = vec![0.0; n];
    let mut out = vec![worst_pair(&rows)];
    for _ in 0..steps {
        for r in rows.iter_mut() {
            gen.step(r, edges as f64, &mut scratch);
            std::mem::swap(r, &mut scratch);
        }
        out.push(worst_pair(&rows));
    }
    Ok(out)
}

/// Smallest step count with worst-pair TV <= e^{-1}.
pub fn discrete_mixing_time(gen: &Generator, edges: usize, max_steps: usize) -> Result<usize> {
    check_size(gen)?;
    let n = gen.size();
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| unit(n, i)).collect();
    let mut scratch = vec![0.0; n];
    for step in 0..=max_steps {
        if worst_pair(&rows) <= THRESHOLD {
            return Ok(step);
        }
        for r in rows.iter_mut() {
            gen.step(r, edges as f64, &mut scratch);
            std::mem::swap(r, &mut scratch);
        }
    }
    Err(Error::Numerical(format!("not mixed after {max_steps} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_generator, ChainKind};

    #[test]
    fn two_state_closed_form() {
        let (_, gen) = build_generator(ChainKind::Cards { n: 2, p: 0.7 }).unwrap();
        for t in [0.1, 0.5, 1.0, 3.0] {
            let c = tv_curve(&gen, &[t]).unwrap()[0];
            assert!((c.tv - (-t).exp()).abs() < 1e-9, "t={t}");
            assert!(c.bound_error < 1e-9);
        }
        let tau = exact_mixing_time(&gen).unwrap();
        assert!((tau - 1.0).abs() < 1e-5);
    }

    #[test]
    fn curve_decreases() {
        let (_, gen) = build_generator(ChainKind::Cards { n: 4, p: 0.75 }).unwrap();
        let grid: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let c = tv_curve(&gen, &grid).unwrap();
        assert!(c.windows(2).all(|w| w[1].tv <= w[0].tv + 1e-12));
        let d = discrete_tv_curve(&gen, 3, 30).unwrap();
        assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn two_state_master_equation() {
        // EX(2,1,p) from (0,1): P((1,0) at t) = p (1 - e^{-t})
        let (space, gen) = build_generator(ChainKind::Exclusion { n: 2, k: 1, p: 0.65 }).unwrap();
        let start = space.index_of("01").unwrap();
        let target = space.index_of("10").unwrap();
        for t in [0.2, 1.0, 2.5] {
            let (v, _) = transient(&gen, &unit(2, start), t);
            assert!((v[target] - 0.65 * (1.0 - (-t).exp())).abs() < 1e-10);
        }
    }
}
