//! Windowed {0,1,2} dynamics with tagged-particle tracking and a boundary
//! contamination monitor.
//!
//! Only edges inside the window are driven. Compared with the infinite
//! process under the same clocks, site `lo` may be wrong from the start, and
//! the wrong region can only grow by one site when the clock of the edge at
//! its inner end rings. The monitor tracks both fronts exactly; every site
//! strictly between them agrees with the infinite process.

use crate::configs::{Projection, SecondClassConfig};
use crate::dynamics::engine::Lattice;
use crate::dynamics::rules::sort_pair;
use crate::error::{Error, Result};

/// How a tracked particle (or hole) is identified across swaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TagKind {
    /// The symbol instance itself; it moves on every swap it takes part in.
    Exact,
    /// A particle of the projected configuration; it moves only when the
    /// projected pair changes.
    Projected(Projection),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tag {
    pub pos: i64,
    pub kind: TagKind,
}

/// The last applied change: edge and pair before the swap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Swap {
    pub edge: i64,
    pub before: (u8, u8),
}

#[derive(Clone, Debug)]
pub struct WindowRun {
    lo: i64,
    vals: Vec<u8>,
    tags: Vec<Tag>,
    front_left: i64,
    front_right: i64,
    watch: Option<(i64, i64)>,
    invalid: bool,
    last: Option<Swap>,
}

impl WindowRun {
    pub fn new(config: &SecondClassConfig) -> Self {
        Self {
            lo: config.lo(),
            vals: config.values().to_vec(),
            tags: Vec::new(),
            front_left: config.lo(),
            front_right: config.hi(),
            watch: None,
            invalid: false,
            last: None,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.vals.len() as i64 - 1
    }

    #[inline]
    pub fn at(&self, i: i64) -> u8 {
        self.vals[(i - self.lo) as usize]
    }

    pub fn values(&self) -> &[u8] {
        &self.vals
    }

    /// Starts tracking the particle at `site`; returns its tag index.
    pub fn track(&mut self, site: i64, kind: TagKind) -> Result<usize> {
        if site < self.lo || site > self.hi() {
            return Err(Error::EdgeOutOfRange {
                edge: site,
                lo: self.lo,
                hi: self.hi(),
            });
        }
        self.tags.push(Tag { pos: site, kind });
        Ok(self.tags.len() - 1)
    }

    pub fn tag(&self, idx: usize) -> i64 {
        self.tags[idx].pos
    }

    /// Sites that must stay uncontaminated for the run to be valid.
    pub fn watch(&mut self, lo: i64, hi: i64) {
        self.watch = Some((lo, hi));
        self.check();
    }

    /// Whether the boundary could have influenced a watched site or tag.
    pub fn is_invalid(&self) -> bool {
        self.invalid
    }

    /// Innermost wrong sites on each side.
    pub fn fronts(&self) -> (i64, i64) {
        (self.front_left, self.front_right)
    }

    pub fn last_swap(&self) -> Option<Swap> {
        self.last
    }

    fn check(&mut self) {
        let (l, r) = (self.front_left, self.front_right);
        if self.tags.iter().any(|t| t.pos <= l || t.pos >= r) {
            self.invalid = true;
        }
        if let Some((a, b)) = self.watch {
            if a <= l || b >= r {
                self.invalid = true;
            }
        }
    }

    /// Current window as a configuration (boundaries as given).
    pub fn snapshot(&self, template: &SecondClassConfig) -> Result<SecondClassConfig> {
        let cfg = SecondClassConfig::new(self.lo, self.vals.clone(), template.left(), template.right())?;
        match template.tagged().and(self.tags.first()) {
            Some(t) => cfg.with_tag(t.pos),
            None => Ok(cfg),
        }
    }
}

impl Lattice for WindowRun {
    fn edge_span(&self) -> Option<(i64, i64)> {
        Some((self.lo, self.hi() - 1))
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        if edge < self.lo || edge >= self.hi() {
            return false;
        }
        let mut moved_front = false;
        if edge == self.front_left {
            self.front_left += 1;
            moved_front = true;
        }
        if edge + 1 == self.front_right {
            self.front_right -= 1;
            moved_front = true;
        }
        let i = (edge - self.lo) as usize;
        let (a, b) = (self.vals[i], self.vals[i + 1]);
        let (na, nb) = sort_pair(a, b, heads);
        let changed = na != a;
        if changed {
            self.vals[i] = na;
            self.vals[i + 1] = nb;
            self.last = Some(Swap { edge, before: (a, b) });
            for t in self.tags.iter_mut() {
                let moves = match t.kind {
                    TagKind::Exact => true,
                    TagKind::Projected(m) => m.apply(a) != m.apply(b),
                };
                if moves {
                    if t.pos == edge {
                        t.pos = edge + 1;
                    } else if t.pos == edge + 1 {
                        t.pos = edge;
                    }
                }
            }
        }
        if changed || moved_front {
            self.check();
        }
        changed
    }
}
