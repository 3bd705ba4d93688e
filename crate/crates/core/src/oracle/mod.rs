//! Exact analysis of small instances: explicit generators, stationary laws,
//! transient distributions by uniformization, mixing times, spectral gaps
//! and expected hitting times.

pub mod blocking;
mod linalg;
mod transient;
pub mod zspace;

pub use blocking::BlockingLaw;
pub use linalg::{expected_hitting, hitting_probability, spectral_gap, stationary_distribution, Stationary, GAP_LIMIT};
pub use transient::{
    discrete_mixing_time, discrete_tv_curve, exact_mixing_time, transient, tv_curve, CurvePoint, ALL_PAIRS_LIMIT,
};
pub use zspace::{z_hitting, ZHitting, ZSpace};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::configs::{FiniteConfig, Permutation};
use crate::dynamics::{sort_cards, sort_pair};
use crate::error::{param, Error, Result};

/// Largest deck for which the full generator is built.
pub const MAX_CARDS: usize = 7;
/// Largest exclusion state space.
pub const MAX_EXCLUSION_STATES: usize = 1_000_000;

/// Chains the oracle can build.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChainKind {
    /// Continuous-time card chain CA(N, p).
    Cards { n: usize, p: f64 },
    /// Continuous-time exclusion EX(N, k, p).
    Exclusion { n: usize, k: usize, p: f64 },
}

impl ChainKind {
    pub fn edges(&self) -> usize {
        match *self {
            ChainKind::Cards { n, .. } | ChainKind::Exclusion { n, .. } => n - 1,
        }
    }
}

/// Enumerated states with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Self {
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self { labels, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// Sparse rate matrix: off-diagonal rates per row and total exit rates.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub exit: Vec<f64>,
}

impl Generator {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let exit = rows.iter().map(|r| r.iter().map(|&(_, q)| q).sum()).collect();
        Self { rows, exit }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Largest exit rate.
    pub fn max_exit(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// Entry Q[i][j].
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return -self.exit[i];
        }
        self.rows[i].iter().filter(|&&(c, _)| c == j).map(|&(_, q)| q).sum()
    }

    /// Row sums of Q (all zero for a generator).
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.exit)
            .map(|(r, e)| r.iter().map(|&(_, q)| q).sum::<f64>() - e)
            .collect()
    }

    /// `v Q`.
    pub fn left_mul(&self, v: &[f64], out: &mut [f64]) {
        for (o, (&x, e)) in out.iter_mut().zip(v.iter().zip(&self.exit)) {
            *o = -x * e;
        }
        for (i, row) in self.rows.iter().enumerate() {
            let x = v[i];
            if x == 0.0 {
                continue;
            }
            for &(j, q) in row {
                out[j] += x * q;
            }
        }
    }

    /// One step of the uniformized chain `P = I + Q / rate`, applied on the
    /// left: `out = v P`.
    pub fn step(&self, v: &[f64], rate: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[i] * (1.0 - self.exit[i] / rate);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let x = v[i];
            if x == 0.0 {
                continue;
            }
            for &(j, q) in row {
                out[j] += x * q / rate;
            }
        }
    }

    /// Coordinate dump `(row, col, rate)` including the diagonal.
    pub fn coordinates(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            out.push((i, i, -self.exit[i]));
            for &(j, q) in row {
                out.push((i, j, q));
            }
        }
        out
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(param(format!("p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// All permutations of 1..=n in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut cur: Vec<u32> = (1..=n as u32).collect();
    let mut out = vec![Permutation::new(cur.clone()).expect("identity")];
    loop {
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("successor");
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(Permutation::new(cur.clone()).expect("bijection"));
    }
}

/// Builds the state space and generator. Each edge rings at rate 1; the
/// sorted arrangement of the pair follows with probability p.
pub fn build_generator(kind: ChainKind) -> Result<(StateSpace, Generator)> {
    match kind {
        ChainKind::Cards { n, p } => {
            check_p(p)?;
            if n < 2 {
                return Err(param("need at least two cards"));
            }
            let size: usize = (1..=n).product();
            if n > MAX_CARDS {
                return Err(Error::SizeBound {
                    size,
                    limit: (1..=MAX_CARDS).product(),
                });
            }
            let states = all_permutations(n);
            let space = StateSpace::new(states.iter().map(|s| s.to_string()).collect());
            let rows = states
                .iter()
                .map(|pi| {
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    let e = pi.entries();
                    for i in 0..n - 1 {
                        for (heads, w) in [(true, p), (false, 1.0 - p)] {
                            let (a, b) = sort_cards(e[i], e[i + 1], heads);
                            if a != e[i] && w > 0.0 {
                                let mut next = e.to_vec();
                                next[i] = a;
                                next[i + 1] = b;
                                let label = Permutation::new(next).expect("swap").to_string();
                                row.push((space.index_of(&label).expect("state"), w));
                            }
                        }
                    }
                    row
                })
                .collect();
            Ok((space, Generator::from_rows(rows)))
        }
        ChainKind::Exclusion { n, k, p } => {
            check_p(p)?;
            let size = binomial(n, k);
            if size > MAX_EXCLUSION_STATES {
                return Err(Error::SizeBound {
                    size,
                    limit: MAX_EXCLUSION_STATES,
                });
            }
            let states = FiniteConfig::enumerate(n, k)?;
            let space = StateSpace::new(states.iter().map(|s| s.to_string()).collect());
            let rows = states
                .iter()
                .map(|x| {
                    let mut row = Vec::new();
                    let b = x.bits();
                    for i in 0..n - 1 {
                        for (heads, w) in [(true, p), (false, 1.0 - p)] {
                            let (a, c) = sort_pair(b[i], b[i + 1], heads);
                            if a != b[i] && w > 0.0 {
                                let mut next = b.to_vec();
                                next[i] = a;
                                next[i + 1] = c;
                                let label = FiniteConfig::new(next).expect("same k").to_string();
                                row.push((space.index_of(&label).expect("state"), w));
                            }
                        }
                    }
                    row
                })
                .collect();
            Ok((space, Generator::from_rows(rows)))
        }
    }
}

/// Dense one-step matrix of the discrete card chain on S_N.
pub fn card_step_matrix(n: usize, p: f64) -> Result<Vec<Vec<f64>>> {
    let (space, gen) = build_generator(ChainKind::Cards { n, p })?;
    Ok(dense_step(&gen, space.len(), (n - 1) as f64))
}

/// Dense one-step matrix of the Metropolis shuffle: a uniform pair, a
/// decreasing pair always switched, an increasing one with probability θ.
pub fn metropolis_step_matrix(n: usize, p: f64) -> Result<Vec<Vec<f64>>> {
    let theta = crate::dynamics::metropolis_theta(p)?;
    let states = all_permutations(n);
    let space = StateSpace::new(states.iter().map(|s| s.to_string()).collect());
    let m = (n - 1) as f64;
    let mut out = vec![vec![0.0; states.len()]; states.len()];
    for (r, pi) in states.iter().enumerate() {
        let e = pi.entries();
        for i in 0..n - 1 {
            let w = if e[i] > e[i + 1] { 1.0 } else { theta };
            let mut next = e.to_vec();
            next.swap(i, i + 1);
            let c = space
                .index_of(&Permutation::new(next).expect("swap").to_string())
                .expect("state");
            out[r][c] += w / m;
            out[r][r] += (1.0 - w) / m;
        }
    }
    Ok(out)
}

fn dense_step(gen: &Generator, size: usize, rate: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; size]; size];
    for (i, row) in gen.rows.iter().enumerate() {
        out[i][i] = 1.0 - gen.exit[i] / rate;
        for &(j, q) in row {
            out[i][j] += q / rate;
        }
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}
