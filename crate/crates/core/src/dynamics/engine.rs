//! Event-driven evolution against a shared [`EventStream`].
//!
//! Time is processed in unit blocks. At the start of a block the rings of
//! every edge in the state's current edge span are loaded and sorted; if a
//! change widens the span mid-block, the rings of the new edges after the
//! current time are merged in. Rings on edges whose two sites agree are
//! no-ops, so only the span (not the whole lattice) ever needs clocks.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::stream::{Event, EventStream, Ring};

/// A state that can be driven by sort events.
pub trait Lattice {
    /// Inclusive range of edges whose clocks can currently change the state.
    /// `None` when no edge can.
    fn edge_span(&self) -> Option<(i64, i64)>;

    /// Applies one ring. Returns whether the state changed. Rings outside the
    /// state's support are ignored.
    fn apply(&mut self, edge: i64, heads: bool) -> bool;
}

impl<L: Lattice + ?Sized> Lattice for Box<L> {
    fn edge_span(&self) -> Option<(i64, i64)> {
        (**self).edge_span()
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        (**self).apply(edge, heads)
    }
}

fn union(a: Option<(i64, i64)>, b: Option<(i64, i64)>) -> Option<(i64, i64)> {
    match (a, b) {
        (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
        (x, None) | (None, x) => x,
    }
}

/// Members of a coupled family all read the same rings.
impl<L: Lattice> Lattice for Vec<L> {
    fn edge_span(&self) -> Option<(i64, i64)> {
        self.iter().fold(None, |acc, m| union(acc, m.edge_span()))
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        let mut changed = false;
        for m in self.iter_mut() {
            changed |= m.apply(edge, heads);
        }
        changed
    }
}

impl<A: Lattice, B: Lattice> Lattice for (A, B) {
    fn edge_span(&self) -> Option<(i64, i64)> {
        union(self.0.edge_span(), self.1.edge_span())
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        let a = self.0.apply(edge, heads);
        let b = self.1.apply(edge, heads);
        a | b
    }
}

/// Reads the stream through an edge shift: stream edge `e` drives inner edge
/// `e + shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shifted<L> {
    pub inner: L,
    pub shift: i64,
}

impl<L: Lattice> Lattice for Shifted<L> {
    fn edge_span(&self) -> Option<(i64, i64)> {
        self.inner.edge_span().map(|(a, b)| (a - self.shift, b - self.shift))
    }

    fn apply(&mut self, edge: i64, heads: bool) -> bool {
        self.inner.apply(edge + self.shift, heads)
    }
}

/// Whether to keep going after an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// How an evolution ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    /// Time of the stopping event, or the horizon.
    pub time: f64,
    pub stopped: bool,
    /// Rings processed (including no-ops).
    pub rings: u64,
}

#[derive(PartialEq)]
struct Pending(Ring);

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        ring_order(&self.0, &other.0)
    }
}

#[inline]
fn ring_order(a: &Ring, b: &Ring) -> Ordering {
    a.time.total_cmp(&b.time).then(a.edge.cmp(&b.edge))
}

/// Applies every ring in `(from, to]` in time order, calling `hook` after
/// each with the event, whether the state changed, and the state. Stops
/// early when the hook returns [`Flow::Stop`].
pub fn evolve<L, F>(state: &mut L, stream: &EventStream, from: f64, to: f64, mut hook: F) -> Outcome
where
    L: Lattice + ?Sized,
    F: FnMut(&Event, bool, &L) -> Flow,
{
    let mut t = from.max(0.0);
    let mut rings = 0u64;
    let mut pending: Vec<Ring> = Vec::new();
    let mut late: BinaryHeap<Reverse<Pending>> = BinaryHeap::new();
    while t < to {
        let block = t.floor() as u64;
        let end = ((block + 1) as f64).min(to);
        let Some((mut lo, mut hi)) = state.edge_span() else {
            break;
        };
        pending.clear();
        late.clear();
        for e in lo..=hi {
            stream.rings_into(e, block, t, end, &mut pending);
        }
        pending.sort_unstable_by(ring_order);
        let mut idx = 0;
        loop {
            let take_late = match (pending.get(idx), late.peek()) {
                (None, None) => break,
                (Some(_), None) => false,
                (None, Some(_)) => true,
                (Some(a), Some(Reverse(Pending(b)))) => ring_order(b, a) == Ordering::Less,
            };
            let ring = if take_late {
                late.pop().map(|Reverse(Pending(r))| r).unwrap()
            } else {
                idx += 1;
                pending[idx - 1]
            };
            let event = stream.resolve(ring);
            let changed = state.apply(event.edge, event.heads);
            rings += 1;
            if changed {
                if let Some((a, b)) = state.edge_span() {
                    let mut scratch = Vec::new();
                    while a < lo {
                        lo -= 1;
                        stream.rings_into(lo, block, event.time, end, &mut scratch);
                    }
                    while b > hi {
                        hi += 1;
                        stream.rings_into(hi, block, event.time, end, &mut scratch);
                    }
                    late.extend(scratch.into_iter().map(|r| Reverse(Pending(r))));
                }
            }
            if hook(&event, changed, state) == Flow::Stop {
                return Outcome {
                    time: event.time,
                    stopped: true,
                    rings,
                };
            }
        }
        t = end;
    }
    Outcome {
        time: to.max(from),
        stopped: false,
        rings,
    }
}

/// Runs to `horizon` with no observation.
pub fn run_continuous<L: Lattice + ?Sized>(state: &mut L, horizon: f64, stream: &EventStream) -> Outcome {
    evolve(state, stream, 0.0, horizon, |_, _, _| Flow::Continue)
}

/// Discrete-time sort chain: step `n` picks one of the `count` edges starting
/// at `first` uniformly and applies the coin.
pub fn run_discrete<L, F>(
    state: &mut L,
    first: i64,
    count: usize,
    stream: &EventStream,
    steps: std::ops::Range<u64>,
    mut hook: F,
) -> Outcome
where
    L: Lattice + ?Sized,
    F: FnMut(&Event, bool, &L) -> Flow,
{
    let mut rings = 0;
    for n in steps.clone() {
        let s = stream.step(n);
        let edge = first + ((s.pick * count as f64) as i64).min(count as i64 - 1);
        let event = Event {
            time: (n + 1) as f64,
            edge,
            u: s.u,
            heads: s.u < stream.p(),
        };
        let changed = state.apply(edge, event.heads);
        rings += 1;
        if hook(&event, changed, state) == Flow::Stop {
            return Outcome {
                time: event.time,
                stopped: true,
                rings,
            };
        }
    }
    Outcome {
        time: steps.end as f64,
        stopped: false,
        rings,
    }
}
