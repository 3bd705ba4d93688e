//! Dense working state for EX(Z, p) started in A.

use rand::Rng;

use crate::configs::{ground_value, ZConfig};
use crate::dynamics::engine::Lattice;
use crate::dynamics::rules::sort_pair;

const PAD: i64 = 32;

/// A configuration in A held as a growable buffer. Sites left of the buffer
/// are ones, sites right of it are zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct ZRun {
    offset: i64,
    vals: Vec<u8>,
    left: i64,
    right: i64,
    disc: usize,
}

impl ZRun {
    pub fn new(z: &ZConfig) -> Self {
        let (lo, hi) = z.hull().unwrap_or((-1, 0));
        let offset = lo.min(-1) - PAD;
        let len = (hi.max(0) + PAD - offset + 1) as usize;
        let mut vals: Vec<u8> = (0..len as i64).map(|i| ground_value(offset + i)).collect();
        for &s in z.discrepancies() {
            vals[(s - offset) as usize] = 1 - ground_value(s);
        }
        Self {
            offset,
            vals,
            left: z.leftmost_hole(),
            right: z.rightmost_particle(),
            disc: z.discrepancies().len(),
        }
    }

    #[inline]
    pub fn value(&self, i: i64) -> u8 {
        let idx = i - self.offset;
        if idx < 0 {
            1
        } else if idx as usize >= self.vals.len() {
            0
        } else {
            self.vals[idx as usize]
        }
    }

    pub fn leftmost_hole(&self) -> i64 {
        self.left
    }

    pub fn rightmost_particle(&self) -> i64 {
        self.right
    }

    pub fn is_ground(&self) -> bool {
        self.disc == 0
    }

    pub fn discrepancy_count(&self) -> usize {
        self.disc
    }

    pub fn to_zconfig(&self) -> ZConfig {
        if self.disc == 0 {
            return ZConfig::ground();
        }
        let disc = (self.left..=self.right)
            .filter(|&i| self.value(i) != ground_value(i))
            .collect();
        ZConfig::from_sorted_unchecked(disc)
    }

    fn ensure(&mut self, lo: i64, hi: i64) {
        if lo < self.offset {
            let grow = (self.offset - lo + PAD) as usize;
            let mut fresh = vec![1u8; grow];
            fresh.extend_from_slice(&self.vals);
            self.vals = fresh;
            self.offset -= grow as i64;
        }
        let end = self.offset + self.vals.len() as i64;
        if hi >= end {
            let grow = (hi - end + 1 + PAD) as usize;
            self.vals.extend(std::iter::repeat_n(0u8, grow));
        }
    }

    /// Edges `(i, i + 1)` whose sites differ.
    pub fn active_edges(&self) -> Vec<i64> {
        (self.left - 1..=self.right)
            .filter(|&i| self.value(i) != self.value(i + 1))
            .collect()
    }

    /// Gillespie run that draws only among active edges: total rate equals
    /// the number of active edges, the edge is uniform among them. Same law
    /// as [`Lattice`] evolution, but not coupled to any stream.
    pub fn run_thinned<R: Rng + ?Sized>(&mut self, horizon: f64, p: f64, rng: &mut R) -> f64 {
        let mut t = 0.0;
        loop {
            let active = self.active_edges();
            let rate = active.len() as f64;
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / rate;
            if t > horizon {
                return horizon;
            }
            let e = active[rng.random_range(0..active.len())];
            let heads = rng.random::<f64>() < p;
            self.apply(e, heads);
        }
    }
}

impl Lattice for ZRun {
    #[inline]
    fn edge_span(&self) -> Option<(i64, i64)> {
        Some((self.left - 1, self.right))
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        let (a, b) = (self.value(edge), self.value(edge + 1));
        if a == b {
            return false;
        }
        let (na, nb) = sort_pair(a, b, heads);
        if na == a {
            return false;
        }
        self.ensure(edge - 1, edge + 2);
        let base = (edge - self.offset) as usize;
        self.vals[base] = na;
        self.vals[base + 1] = nb;
        for (site, old, new) in [(edge, a, na), (edge + 1, b, nb)] {
            let g = ground_value(site);
            match (old == g, new == g) {
                (true, false) => self.disc += 1,
                (false, true) => self.disc -= 1,
                _ => {}
            }
        }
        // a swap moves one hole and one particle by one site
        if na == 0 {
            // hole moved left onto `edge`
            self.left = self.left.min(edge);
            if self.right == edge {
                self.right = edge + 1;
            }
        } else {
            // particle moved left onto `edge`, hole onto `edge + 1`
            if self.left == edge {
                let mut i = edge + 1;
                while self.value(i) != 0 {
                    i += 1;
                }
                self.left = i;
            }
            if self.right == edge + 1 {
                let mut i = edge;
                while self.value(i) != 1 {
                    i -= 1;
                }
                self.right = i;
            }
        }
        true
    }
}
