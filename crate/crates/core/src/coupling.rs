//! The canonical coupling: many initial states driven by one set of clocks
//! and coins, coalescence detection, and the finite-to-infinite embedding
//! coupling.

use serde::{Deserialize, Serialize};

use crate::configs::{embed_hat, height_projection, Dominates, FiniteConfig, Permutation, SecondClassConfig, ZConfig};
use crate::dynamics::{evolve, Flow, Lattice, Shifted, WindowRun, ZRun};
use crate::error::{param, Result};
use crate::stream::EventStream;

/// States of one kind evolving under one stream.
#[derive(Clone, Debug)]
pub struct CoupledFamily<L> {
    members: Vec<L>,
    stream: EventStream,
    clock: f64,
}

impl<L: Lattice> CoupledFamily<L> {
    pub fn new(members: Vec<L>, stream: EventStream) -> Result<Self> {
        if members.is_empty() {
            return Err(param("a coupled family needs at least one member"));
        }
        Ok(Self {
            members,
            stream,
            clock: 0.0,
        })
    }

    pub fn members(&self) -> &[L] {
        &self.members
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Advances every member by `horizon` time units.
    pub fn evolve(&mut self, horizon: f64) {
        let to = self.clock + horizon;
        evolve(&mut self.members, &self.stream, self.clock, to, |_, _, _| {
            Flow::Continue
        });
        self.clock = to;
    }

    /// Whether every member is in the same state.
    pub fn coalesced(&self) -> bool
    where
        L: PartialEq,
    {
        self.members.windows(2).all(|w| w[0] == w[1])
    }
}

/// A possibly censored first-passage time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub time: f64,
    pub censored: bool,
}

impl Hit {
    fn from_outcome(stopped: bool, time: f64, cap: f64) -> Self {
        if stopped {
            Hit { time, censored: false }
        } else {
            Hit {
                time: cap,
                censored: true,
            }
        }
    }
}

/// Default censoring cap for hitting and coalescence times.
pub fn default_cap(n: usize, p: f64) -> f64 {
    50.0 * n as f64 / (2.0 * p - 1.0).abs().max(1e-9)
}

/// H(N, k): first time the process started at m_{N,k} reaches g_{N,k}.
pub fn sandwich_hitting_time(n: usize, k: usize, p: f64, seed: u64, cap: f64) -> Result<Hit> {
    if p <= 0.5 {
        return Err(param(format!("sandwich hitting time needs p > 1/2, got {p}")));
    }
    let target = FiniteConfig::ground(n, k)?;
    let mut x = FiniteConfig::bottom(n, k)?;
    if x == target {
        return Ok(Hit {
            time: 0.0,
            censored: false,
        });
    }
    let stream = EventStream::new(seed, p);
    let out = evolve(&mut x, &stream, 0.0, cap, |_, changed, s| {
        if changed && *s == target {
            Flow::Stop
        } else {
            Flow::Continue
        }
    });
    Ok(Hit::from_outcome(out.stopped, out.time, cap))
}

/// First time the coupled copies started at g_{N,k} and m_{N,k} agree; by
/// monotonicity this is when all of X_{N,k} has coalesced.
pub fn sandwich_coalescence_time(n: usize, k: usize, p: f64, seed: u64, cap: f64) -> Result<Hit> {
    let mut pair = vec![FiniteConfig::ground(n, k)?, FiniteConfig::bottom(n, k)?];
    let stream = EventStream::new(seed, p);
    let out = evolve(&mut pair, &stream, 0.0, cap, |_, changed, s| {
        if changed && s[0] == s[1] {
            Flow::Stop
        } else {
            Flow::Continue
        }
    });
    Ok(Hit::from_outcome(out.stopped, out.time, cap))
}

/// Coalescence of the whole deck under the grand coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceRecord {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub coalesce_time: f64,
    /// Entry k - 1: first time the level-k projections of all decks agree.
    pub per_k_times: Vec<f64>,
    /// Entry k - 1: first time the level-k projection of the reversed deck
    /// reaches g_{N,k}.
    pub per_k_hitting: Vec<f64>,
    pub censored: bool,
}

/// The identity and reversed decks under one stream with per-level
/// bookkeeping. Every level-k projection of the identity is g_{N,k} and of
/// the reversed deck m_{N,k}, so the pair sandwiches all of S_N at every
/// level.
struct DeckPair {
    top: Permutation,
    bottom: Permutation,
    /// mismatch[k]: positions where `card <= k` differs between the decks.
    mismatch: Vec<u32>,
    /// misplaced[k]: positions i <= k in the bottom deck with card > k.
    misplaced: Vec<u32>,
}

impl DeckPair {
    fn new(n: usize) -> Result<Self> {
        let top = Permutation::identity(n)?;
        let bottom = Permutation::reversed(n)?;
        let mut mismatch = vec![0u32; n];
        let mut misplaced = vec![0u32; n];
        for k in 1..n {
            for i in 0..n {
                let (a, b) = (top.entries()[i] as usize, bottom.entries()[i] as usize);
                mismatch[k] += ((a <= k) != (b <= k)) as u32;
                if i < k && b > k {
                    misplaced[k] += 1;
                }
            }
        }
        Ok(Self {
            top,
            bottom,
            mismatch,
            misplaced,
        })
    }

    fn contribution(&self, i: usize, lo: usize, hi: usize, sign: i64) -> impl Iterator<Item = (usize, i64)> + '_ {
        let (t, b) = (self.top.entries(), self.bottom.entries());
        (lo..hi).map(move |k| {
            let c = [i, i + 1]
                .iter()
                .filter(|&&j| (t[j] as usize <= k) != (b[j] as usize <= k))
                .count() as i64;
            (k, sign * c)
        })
    }
}

impl Lattice for DeckPair {
    fn edge_span(&self) -> Option<(i64, i64)> {
        self.top.edge_span()
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        if edge < 1 || edge as usize >= self.top.len() {
            return false;
        }
        let i = edge as usize - 1;
        let vals = [
            self.top.entries()[i],
            self.top.entries()[i + 1],
            self.bottom.entries()[i],
            self.bottom.entries()[i + 1],
        ];
        let lo = *vals.iter().min().unwrap() as usize;
        let hi = *vals.iter().max().unwrap() as usize;
        let before: Vec<(usize, i64)> = self.contribution(i, lo, hi, -1).collect();
        let b_before = self.bottom.entries()[i] as usize;
        let c1 = self.top.apply(edge, heads);
        let c2 = self.bottom.apply(edge, heads);
        if !(c1 || c2) {
            return false;
        }
        let after: Vec<(usize, i64)> = self.contribution(i, lo, hi, 1).collect();
        for (k, d) in before.into_iter().chain(after) {
            self.mismatch[k] = (self.mismatch[k] as i64 + d) as u32;
        }
        if c2 {
            // only the level k = edge sees a card cross its boundary
            let k = edge as usize;
            let b_after = self.bottom.entries()[i] as usize;
            let d = (b_after > k) as i64 - (b_before > k) as i64;
            self.misplaced[k] = (self.misplaced[k] as i64 + d) as u32;
        }
        true
    }
}

/// Runs the grand coupling of CA(N, p) from the identity and reversed decks
/// until every level has coalesced, or until `cap`.
pub fn card_coalescence_time(n: usize, p: f64, seed: u64, cap: f64) -> Result<CoalescenceRecord> {
    if p == 0.5 {
        return Err(param("card coalescence needs p != 1/2"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(param(format!("p = {p} outside [0, 1]")));
    }
    let mut pair = DeckPair::new(n)?;
    let mut per_k = vec![f64::NAN; n - 1];
    let mut per_k_hit = vec![f64::NAN; n - 1];
    let (mut open, mut open_hit) = (n - 1, n - 1);
    for k in 1..n {
        if pair.mismatch[k] == 0 {
            per_k[k - 1] = 0.0;
            open -= 1;
        }
        if pair.misplaced[k] == 0 {
            per_k_hit[k - 1] = 0.0;
            open_hit -= 1;
        }
    }
    let stream = EventStream::new(seed, p);
    evolve(&mut pair, &stream, 0.0, cap, |e, changed, s| {
        if changed {
            for k in 1..n {
                if per_k[k - 1].is_nan() && s.mismatch[k] == 0 {
                    per_k[k - 1] = e.time;
                    open -= 1;
                }
                if per_k_hit[k - 1].is_nan() && s.misplaced[k] == 0 {
                    per_k_hit[k - 1] = e.time;
                    open_hit -= 1;
                }
            }
        }
        if open == 0 && open_hit == 0 {
            Flow::Stop
        } else {
            Flow::Continue
        }
    });
    let censored = per_k.iter().any(|t| t.is_nan());
    for t in per_k.iter_mut().chain(per_k_hit.iter_mut()) {
        if t.is_nan() {
            *t = cap;
        }
    }
    let coalesce_time = per_k.iter().copied().fold(0.0, f64::max);
    Ok(CoalescenceRecord {
        seed,
        n,
        p,
        coalesce_time,
        per_k_times: per_k,
        per_k_hitting: per_k_hit,
        censored,
    })
}

fn require_order<T: Dominates>(a: &T, b: &T) -> Result<()> {
    if !a.dominates(b) {
        return Err(param("verify_monotone needs a ⪰ b"));
    }
    Ok(())
}

/// Evolves `a ⪰ b` under one stream; true iff the order held after every
/// event.
pub fn verify_monotone_finite(a: &FiniteConfig, b: &FiniteConfig, horizon: f64, stream: &EventStream) -> Result<bool> {
    require_order(a, b)?;
    let mut pair = (a.clone(), b.clone());
    let mut ok = true;
    evolve(&mut pair, stream, 0.0, horizon, |_, changed, s| {
        if changed && !s.0.dominates(&s.1) {
            ok = false;
            return Flow::Stop;
        }
        Flow::Continue
    });
    Ok(ok)
}

/// As [`verify_monotone_finite`] for configurations in A.
pub fn verify_monotone_z(a: &ZConfig, b: &ZConfig, horizon: f64, stream: &EventStream) -> Result<bool> {
    require_order(a, b)?;
    let mut pair = (ZRun::new(a), ZRun::new(b));
    let mut ok = true;
    evolve(&mut pair, stream, 0.0, horizon, |_, changed, s| {
        if changed && !s.0.to_zconfig().dominates(&s.1.to_zconfig()) {
            ok = false;
            return Flow::Stop;
        }
        Flow::Continue
    });
    Ok(ok)
}

/// Couples EX(N, k, p) started at `x` with EX(Z, p) started at x̂: the ring
/// on Z-edge `i` also drives the finite edge `i + k + 1`. True iff the
/// embedding of the finite state dominated the infinite state after every
/// event.
pub fn verify_hat_domination(x: &FiniteConfig, horizon: f64, stream: &EventStream) -> Result<bool> {
    if stream.p() < 0.5 {
        return Err(param(format!(
            "the embedding coupling needs p >= 1/2, got {}",
            stream.p()
        )));
    }
    let shift = x.k() as i64 + 1;
    let mut pair = (
        Shifted {
            inner: x.clone(),
            shift,
        },
        ZRun::new(&embed_hat(x)),
    );
    let mut ok = true;
    evolve(&mut pair, stream, 0.0, horizon, |_, changed, s| {
        if changed && !embed_hat(&s.0.inner).dominates(&s.1.to_zconfig()) {
            ok = false;
            return Flow::Stop;
        }
        Flow::Continue
    });
    Ok(ok)
}

/// Runs a deck alongside all of its level projections; true iff
/// `h_k(π_t)` equals the separately evolved level-k word after every event.
pub fn verify_height_commutation(pi: &Permutation, horizon: f64, stream: &EventStream) -> Result<bool> {
    let n = pi.len();
    let levels = (1..n).map(|k| height_projection(pi, k)).collect::<Result<Vec<_>>>()?;
    let mut state = (pi.clone(), levels);
    let mut ok = true;
    evolve(&mut state, stream, 0.0, horizon, |_, _, s| {
        for (idx, h) in s.1.iter().enumerate() {
            match height_projection(&s.0, idx + 1) {
                Ok(proj) if proj == *h => {}
                _ => {
                    ok = false;
                    return Flow::Stop;
                }
            }
        }
        Flow::Continue
    });
    Ok(ok)
}

/// Runs a {0,1,2} window alongside both of its projections; true iff the
/// projections of the evolved window equal the evolved projections after
/// every event.
pub fn verify_second_class_commutation(delta: &SecondClassConfig, horizon: f64, stream: &EventStream) -> Result<bool> {
    use crate::configs::Projection;
    let modes = [Projection::TwoToOne, Projection::TwoToZero];
    let mut state = (
        WindowRun::new(delta),
        modes
            .iter()
            .map(|&m| WindowRun::new(&delta.project(m)))
            .collect::<Vec<_>>(),
    );
    let mut ok = true;
    evolve(&mut state, stream, 0.0, horizon, |_, _, s| {
        for (run, &m) in s.1.iter().zip(&modes) {
            if s.0.values().iter().zip(run.values()).any(|(&a, &b)| m.apply(a) != b) {
                ok = false;
                return Flow::Stop;
            }
        }
        Flow::Continue
    });
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::run_continuous;

    #[test]
    fn family_of_one_matches_solo_run() {
        let s = EventStream::new(3, 0.7);
        let start = FiniteConfig::bottom(6, 3).unwrap();
        let mut fam = CoupledFamily::new(vec![start.clone()], s).unwrap();
        fam.evolve(2.5);
        fam.evolve(1.5);
        let mut solo = start;
        run_continuous(&mut solo, 4.0, &s);
        assert_eq!(fam.members()[0], solo);
    }

    #[test]
    fn equal_members_stay_equal() {
        let s = EventStream::new(4, 0.6);
        let x = FiniteConfig::new(vec![0, 1, 1, 0, 1, 0]).unwrap();
        let mut fam = CoupledFamily::new(vec![x.clone(), x], s).unwrap();
        fam.evolve(20.0);
        assert!(fam.coalesced());
        assert!(CoupledFamily::<FiniteConfig>::new(vec![], s).is_err());
    }

    #[test]
    fn n2_records_agree_with_sandwich_time() {
        for seed in 0..50 {
            let rec = card_coalescence_time(2, 0.75, seed, 100.0).unwrap();
            let h = sandwich_coalescence_time(2, 1, 0.75, seed, 100.0).unwrap();
            assert_eq!(rec.coalesce_time, h.time);
            let hit = sandwich_hitting_time(2, 1, 0.75, seed, 100.0).unwrap();
            assert_eq!(rec.per_k_hitting[0], hit.time);
        }
    }

    #[test]
    fn record_is_max_of_levels_and_levels_match_words() {
        for seed in 0..30 {
            let rec = card_coalescence_time(5, 0.75, seed, 500.0).unwrap();
            let max = rec.per_k_times.iter().copied().fold(0.0, f64::max);
            assert_eq!(rec.coalesce_time, max);
            for k in 1..5 {
                let pair = sandwich_coalescence_time(5, k, 0.75, seed, 500.0).unwrap();
                assert_eq!(rec.per_k_times[k - 1], pair.time);
                let hit = sandwich_hitting_time(5, k, 0.75, seed, 500.0).unwrap();
                assert_eq!(rec.per_k_hitting[k - 1], hit.time);
                assert!(rec.per_k_times[k - 1] <= rec.per_k_hitting[k - 1]);
            }
        }
    }

    #[test]
    fn all_decks_agree_at_the_coalescence_time() {
        // brute force over S_4 against the two-deck record
        let perms: Vec<Permutation> = permutations(4);
        for seed in 0..20 {
            let rec = card_coalescence_time(4, 0.8, seed, 500.0).unwrap();
            let s = EventStream::new(seed, 0.8);
            let mut fam = CoupledFamily::new(perms.clone(), s).unwrap();
            fam.evolve(rec.coalesce_time);
            assert!(fam.coalesced());
            let mut fam = CoupledFamily::new(perms.clone(), s).unwrap();
            fam.evolve(rec.coalesce_time - 1e-9);
            assert!(!fam.coalesced() || rec.coalesce_time == 0.0);
        }
    }

    fn permutations(n: u32) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<u32>, left: &mut Vec<u32>, out: &mut Vec<Permutation>) {
            if left.is_empty() {
                out.push(Permutation::new(prefix.clone()).unwrap());
                return;
            }
            for i in 0..left.len() {
                let c = left.remove(i);
                prefix.push(c);
                rec(prefix, left, out);
                prefix.pop();
                left.insert(i, c);
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut (1..=n).collect(), &mut out);
        out
    }

    #[test]
    fn started_coalesced_is_zero() {
        let h = sandwich_hitting_time(3, 1, 0.7, 1, 10.0).unwrap();
        assert!(!h.censored);
        assert!(sandwich_hitting_time(3, 1, 0.5, 1, 10.0).is_err());
        assert!(card_coalescence_time(3, 0.5, 1, 10.0).is_err());
    }

    #[test]
    fn ground_dominates_shifted_block_forever() {
        for seed in 0..20 {
            let s = EventStream::new(seed, 0.7);
            let ok = verify_monotone_z(&ZConfig::ground(), &ZConfig::shifted_block(3).unwrap(), 30.0, &s).unwrap();
            assert!(ok);
        }
        let s = EventStream::new(0, 0.7);
        assert!(verify_monotone_z(&ZConfig::shifted_block(3).unwrap(), &ZConfig::ground(), 1.0, &s).is_err());
    }

    #[test]
    fn hat_domination_at_time_zero() {
        let x = FiniteConfig::bottom(4, 2).unwrap();
        let s = EventStream::new(0, 0.8);
        assert!(verify_hat_domination(&x, 0.0, &s).unwrap());
        assert!(verify_hat_domination(&x, 1.0, &s.with_p(0.3)).is_err());
    }
}
