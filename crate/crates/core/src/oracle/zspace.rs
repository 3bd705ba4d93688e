//! Finite truncations of A for exact hitting-time computations.
//!
//! A configuration's energy is Σ i over particles at i >= 0 plus Σ i over
//! holes at -i < 0; its blocking weight is θ^energy. The truncation keeps
//! every configuration with energy at most M (there are finitely many: the
//! count with energy m is the number of partitions of m). Moves that would
//! leave the truncation go to a single boundary state.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{expected_hitting, hitting_probability, transient, Generator};
use crate::configs::ZConfig;
use crate::error::{param, Error, Result};

/// Energy of a configuration in A.
pub fn energy(z: &ZConfig) -> u64 {
    z.discrepancies().iter().map(|&s| s.unsigned_abs()).sum()
}

/// Sets of distinct integers `>= min` with sum at most `budget`, grouped by
/// size.
fn distinct_sets(min: i64, budget: u64) -> Vec<Vec<Vec<i64>>> {
    let mut by_size: Vec<Vec<Vec<i64>>> = vec![vec![vec![]]];
    fn rec(next: i64, left: u64, cur: &mut Vec<i64>, by_size: &mut Vec<Vec<Vec<i64>>>) {
        let mut v = next;
        while (v as u64) <= left {
            cur.push(v);
            if by_size.len() <= cur.len() {
                by_size.push(Vec::new());
            }
            by_size[cur.len()].push(cur.clone());
            rec(v + 1, left - v as u64, cur, by_size);
            cur.pop();
            v += 1;
        }
    }
    rec(min, budget, &mut Vec::new(), &mut by_size);
    by_size
}

/// Configurations of A with energy at most `max_energy`, and the boundary.
#[derive(Clone, Debug)]
pub struct ZSpace {
    pub states: Vec<ZConfig>,
    index: HashMap<ZConfig, usize>,
    pub max_energy: u64,
    pub p: f64,
}

impl ZSpace {
    pub fn new(p: f64, max_energy: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(param(format!("p = {p} outside [0, 1]")));
        }
        let holes = distinct_sets(1, max_energy);
        let parts = distinct_sets(0, max_energy);
        let mut states = Vec::new();
        for (size, hs) in holes.iter().enumerate() {
            let Some(ps) = parts.get(size) else { break };
            for h in hs {
                let eh: u64 = h.iter().map(|&x| x as u64).sum();
                for q in ps {
                    let eq: u64 = q.iter().map(|&x| x as u64).sum();
                    if eh + eq <= max_energy {
                        let mut disc: Vec<i64> = h.iter().map(|&x| -x).chain(q.iter().copied()).collect();
                        disc.sort_unstable();
                        states.push(ZConfig::from_discrepancies(disc)?);
                    }
                }
            }
        }
        if states.len() > 5_000_000 {
            return Err(Error::SizeBound {
                size: states.len(),
                limit: 5_000_000,
            });
        }
        states.sort();
        let index = states.iter().enumerate().map(|(i, z)| (z.clone(), i)).collect();
        Ok(Self {
            states,
            index,
            max_energy,
            p,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, z: &ZConfig) -> Option<usize> {
        self.index.get(z).copied()
    }

    /// Index of the boundary state.
    pub fn boundary(&self) -> usize {
        self.states.len()
    }

    /// Moves out of `z` as (target, rate); `None` targets leave the
    /// truncation.
    fn moves(&self, z: &ZConfig) -> Vec<(Option<usize>, f64)> {
        let disc = z.discrepancies();
        let (lo, hi) = z.hull().unwrap_or((0, -1));
        let mut edges: Vec<i64> = (lo.min(-1) - 1..=hi.max(0)).collect();
        edges.retain(|&i| z.value(i) != z.value(i + 1));
        edges
            .into_iter()
            .filter_map(|i| {
                let rate = if z.value(i) == 1 { 1.0 - self.p } else { self.p };
                if rate == 0.0 {
                    return None;
                }
                let mut next: Vec<i64> = disc.to_vec();
                for s in [i, i + 1] {
                    match next.binary_search(&s) {
                        Ok(k) => {
                            next.remove(k);
                        }
                        Err(k) => next.insert(k, s),
                    }
                }
                let nz = ZConfig::from_discrepancies(next).expect("moves stay in A");
                Some((self.index_of(&nz), rate))
            })
            .collect()
    }

    /// Generator on the truncation plus an absorbing boundary state.
    /// States listed in `absorbing` get no outgoing moves. With `reflect`,
    /// moves out of the truncation are dropped instead.
    pub fn generator(&self, absorbing: &[usize], reflect: bool) -> Generator {
        let b = self.boundary();
        let mut rows: Vec<Vec<(usize, f64)>> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, z)| {
                if absorbing.contains(&i) {
                    return Vec::new();
                }
                self.moves(z)
                    .into_iter()
                    .filter_map(|(t, r)| match t {
                        Some(j) => Some((j, r)),
                        None if reflect => None,
                        None => Some((b, r)),
                    })
                    .collect()
            })
            .collect();
        rows.push(Vec::new());
        Generator::from_rows(rows)
    }
}

/// Exact expected hitting time of G_Z with its truncation diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZHitting {
    pub expected: f64,
    /// Probability of reaching the truncation boundary before G_Z.
    pub boundary_prob: f64,
    pub max_energy: u64,
    pub states: usize,
}

/// E[H(start)] for EX(Z, p), p > 1/2. The truncation starts at twice the
/// start's energy (at least 8) and doubles until the boundary is reached
/// before G_Z with probability below `tol`.
pub fn z_hitting(start: &ZConfig, p: f64, tol: f64) -> Result<ZHitting> {
    if p <= 0.5 {
        return Err(param(format!("hitting G_Z needs p > 1/2, got {p}")));
    }
    if start.is_ground() {
        return Ok(ZHitting {
            expected: 0.0,
            boundary_prob: 0.0,
            max_energy: 0,
            states: 1,
        });
    }
    let mut m = (2 * energy(start)).max(8);
    loop {
        let space = ZSpace::new(p, m)?;
        let s = space.index_of(start).expect("start inside truncation");
        let g = space.index_of(&ZConfig::ground()).expect("ground inside truncation");
        let absorbing = space.generator(&[g], false);
        let boundary_prob = hitting_probability(&absorbing, s, &[space.boundary()], &[g])?;
        if boundary_prob < tol {
            let reflected = space.generator(&[], true);
            let expected = expected_hitting(&reflected, s, g)?;
            return Ok(ZHitting {
                expected,
                boundary_prob,
                max_energy: m,
                states: space.len(),
            });
        }
        if m > 256 {
            return Err(Error::Numerical(format!(
                "truncation at energy {m} still leaks {boundary_prob:e}"
            )));
        }
        m *= 2;
    }
}

/// P(H(start) <= t) on the truncation of energy `max_energy`, and the mass
/// absorbed at the boundary by time t (an upper bound on the error).
pub fn z_hit_by(start: &ZConfig, p: f64, t: f64, max_energy: u64) -> Result<(f64, f64)> {
    let space = ZSpace::new(p, max_energy.max(energy(start)))?;
    let s = space.index_of(start).expect("start inside truncation");
    let g = space.index_of(&ZConfig::ground()).expect("ground");
    let gen = space.generator(&[g], false);
    let mut v0 = vec![0.0; gen.size()];
    v0[s] = 1.0;
    let (v, lost) = transient(&gen, &v0, t);
    Ok((v[g], v[space.boundary()] + lost))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_counts_are_partition_numbers() {
        // cumulative partition counts 1, 2, 4, 7, 12, 19, 30
        let want = [1, 2, 4, 7, 12, 19, 30];
        for (m, &w) in want.iter().enumerate() {
            assert_eq!(ZSpace::new(0.7, m as u64).unwrap().len(), w, "M={m}");
        }
    }

    #[test]
    fn ground_moves_only_to_i1() {
        let space = ZSpace::new(0.75, 4).unwrap();
        let g = space.index_of(&ZConfig::ground()).unwrap();
        let gen = space.generator(&[], false);
        let i1 = space.index_of(&ZConfig::shifted_block(1).unwrap()).unwrap();
        assert_eq!(gen.rows[g], vec![(i1, 0.25)]);
    }

    #[test]
    fn i1_expected_hitting_is_stable_in_truncation() {
        let h = z_hitting(&ZConfig::shifted_block(1).unwrap(), 0.75, 1e-9).unwrap();
        assert!(h.boundary_prob < 1e-9);
        // the first holding time alone has mean 1 / (p + 2 (1 - p))
        assert!(h.expected > 0.8);
        let (hit, lost) = z_hit_by(&ZConfig::shifted_block(1).unwrap(), 0.75, 1.0, h.max_energy).unwrap();
        assert!(hit > 0.0 && hit < 1.0 && lost < 1e-8);
    }
}
