//! Update rules and time evolution for the shuffles and exclusion processes.

pub mod engine;
pub mod rules;
pub mod window;
pub mod zrun;

pub use engine::{evolve, run_continuous, run_discrete, Flow, Lattice, Outcome, Shifted};
pub use rules::{apply_metropolis, apply_to_finite, apply_to_perm, metropolis_theta, sort_cards, sort_pair};
pub use window::{Swap, Tag, TagKind, WindowRun};
pub use zrun::ZRun;

use serde::{Deserialize, Serialize};

use crate::configs::{FiniteConfig, Permutation, SecondClassConfig};
use crate::error::{param, Result};
use crate::stream::EventStream;

/// The process families and their parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProcessKind {
    CaDiscrete { n: usize, p: f64 },
    CaContinuous { n: usize, p: f64 },
    Metropolis { n: usize, p: f64 },
    ExFinite { n: usize, k: usize, p: f64 },
    ExZ { p: f64 },
    Ex2Z { p: f64 },
}

impl ProcessKind {
    pub fn p(&self) -> f64 {
        match *self {
            ProcessKind::CaDiscrete { p, .. }
            | ProcessKind::CaContinuous { p, .. }
            | ProcessKind::Metropolis { p, .. }
            | ProcessKind::ExFinite { p, .. }
            | ProcessKind::ExZ { p }
            | ProcessKind::Ex2Z { p } => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(0.0..=1.0).contains(&p) {
            return Err(param(format!("p = {p} outside [0, 1]")));
        }
        match *self {
            ProcessKind::Metropolis { n, p } => {
                metropolis_theta(p)?;
                check_n(n)
            }
            ProcessKind::CaDiscrete { n, .. } | ProcessKind::CaContinuous { n, .. } => check_n(n),
            ProcessKind::ExFinite { n, k, .. } => {
                if k == 0 || k >= n {
                    return Err(param(format!("need 1 <= k < N, got N = {n}, k = {k}")));
                }
                Ok(())
            }
            ProcessKind::ExZ { .. } | ProcessKind::Ex2Z { .. } => Ok(()),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(param(format!("need at least two cards, got {n}")));
    }
    Ok(())
}

impl Lattice for Permutation {
    fn edge_span(&self) -> Option<(i64, i64)> {
        (self.len() >= 2).then(|| (1, self.len() as i64 - 1))
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        apply_to_perm(self, edge, heads).unwrap_or(false)
    }
}

impl Lattice for FiniteConfig {
    fn edge_span(&self) -> Option<(i64, i64)> {
        (self.n() >= 2).then(|| (1, self.n() as i64 - 1))
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        apply_to_finite(self, edge, heads).unwrap_or(false)
    }
}

/// Edges where a sort event can change the state.
pub trait ActiveEdges {
    fn active_edges(&self) -> Vec<i64>;
}

impl ActiveEdges for FiniteConfig {
    fn active_edges(&self) -> Vec<i64> {
        let b = self.bits();
        (1..b.len()).filter(|&i| b[i - 1] != b[i]).map(|i| i as i64).collect()
    }
}

impl ActiveEdges for ZRun {
    fn active_edges(&self) -> Vec<i64> {
        ZRun::active_edges(self)
    }
}

impl ActiveEdges for crate::configs::ZConfig {
    fn active_edges(&self) -> Vec<i64> {
        ZRun::new(self).active_edges()
    }
}

impl ActiveEdges for SecondClassConfig {
    fn active_edges(&self) -> Vec<i64> {
        let v = self.values();
        (1..v.len())
            .filter(|&i| v[i - 1] != v[i])
            .map(|i| self.lo() + i as i64 - 1)
            .collect()
    }
}

/// Discrete-time Metropolis shuffle driven by the stream's step sequence.
pub fn run_metropolis(pi: &mut Permutation, stream: &EventStream, steps: std::ops::Range<u64>) -> Result<()> {
    let theta = metropolis_theta(stream.p())?;
    let edges = pi.len().saturating_sub(1);
    if edges == 0 {
        return Ok(());
    }
    for n in steps {
        let s = stream.step(n);
        let edge = 1 + ((s.pick * edges as f64) as i64).min(edges as i64 - 1);
        apply_metropolis(pi, edge, s.u, theta)?;
    }
    Ok(())
}

/// Discrete-time sort chain over all `N - 1` edges of a deck or word.
pub fn run_discrete_steps<L: Lattice>(state: &mut L, stream: &EventStream, steps: u64) {
    if let Some((lo, hi)) = state.edge_span() {
        run_discrete(state, lo, (hi - lo + 1) as usize, stream, 0..steps, |_, _, _| {
            Flow::Continue
        });
    }
}
