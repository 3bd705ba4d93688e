//! Counter-based, seed-reproducible randomness.
//!
//! Every edge carries its own unit-rate Poisson clock. The rings of edge `e`
//! inside the unit time block `[j, j + 1)` are a pure function of
//! `(seed, e, j)`, so any process (or any member of a coupled family) that
//! asks for the rings of an edge sees the same times and the same coins,
//! regardless of query order or of which other edges it looks at.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const RING_DOMAIN: u64 = 0x52_49_4E_47; // "RING"
const STEP_DOMAIN: u64 = 0x53_54_45_50; // "STEP"
const REPLICA_DOMAIN: u64 = 0x52_45_50_4C; // "REPL"

/// SplitMix64 finalizer.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn key3(seed: u64, domain: u64, a: u64, b: u64) -> u64 {
    let k = mix64(seed.wrapping_add(GOLDEN) ^ domain.wrapping_mul(GOLDEN));
    let k = mix64(k ^ a.wrapping_mul(0xD134_2543_DE82_EF95));
    mix64(k ^ b.wrapping_add(0xA076_1D64_78BD_642F))
}

/// Seed of replica `index` under `master`; extending a replica set never
/// changes the seeds of existing replicas.
pub fn replica_seed(master: u64, index: u64) -> u64 {
    key3(master, REPLICA_DOMAIN, index, 0)
}

/// SplitMix64 sequence started from a derived key.
#[derive(Clone, Debug)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { state: key }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// One clock ring: a time, the edge `(edge, edge + 1)` and the uniform that
/// decides the coin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ring {
    pub time: f64,
    pub edge: i64,
    pub u: f64,
}

/// A ring resolved against the stream's `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub edge: i64,
    /// The uniform behind the coin; heads iff `u < p`.
    pub u: f64,
    pub heads: bool,
}

impl Event {
    pub fn coin_char(&self) -> char {
        if self.heads {
            'H'
        } else {
            'T'
        }
    }
}

/// One discrete-time step: the uniform that picks the edge and the coin
/// uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub pick: f64,
    pub u: f64,
}

/// Deterministic event source shared by every process that should see the
/// same clocks and coins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    seed: u64,
    p: f64,
}

// P(Poisson(1) <= k) for k = 0..; the tail beyond 24 is below 1e-24.
const POISSON1_CDF_LEN: usize = 25;

fn poisson1_cdf() -> &'static [f64; POISSON1_CDF_LEN] {
    use std::sync::OnceLock;
    static CDF: OnceLock<[f64; POISSON1_CDF_LEN]> = OnceLock::new();
    CDF.get_or_init(|| {
        let mut cdf = [0.0; POISSON1_CDF_LEN];
        let mut pk = (-1.0f64).exp();
        let mut acc = 0.0;
        for (k, slot) in cdf.iter_mut().enumerate() {
            if k > 0 {
                pk /= k as f64;
            }
            acc += pk;
            *slot = acc;
        }
        cdf
    })
}

impl EventStream {
    pub fn new(seed: u64, p: f64) -> Self {
        Self { seed, p }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Same clocks and coin uniforms, different bias.
    pub fn with_p(&self, p: f64) -> Self {
        Self { seed: self.seed, p }
    }

    #[inline]
    pub fn resolve(&self, ring: Ring) -> Event {
        Event {
            time: ring.time,
            edge: ring.edge,
            u: ring.u,
            heads: ring.u < self.p,
        }
    }

    /// Appends the rings of `edge` in block `block` whose times lie in
    /// `(after, until]`, in increasing time order.
    pub fn rings_into(&self, edge: i64, block: u64, after: f64, until: f64, out: &mut Vec<Ring>) {
        let mut rng = CounterRng::new(key3(self.seed, RING_DOMAIN, edge as u64, block));
        let u = rng.next_f64();
        let cdf = poisson1_cdf();
        let count = cdf.iter().position(|&c| u < c).unwrap_or(POISSON1_CDF_LEN);
        if count == 0 {
            return;
        }
        let base = block as f64;
        let start = out.len();
        for _ in 0..count {
            let time = base + rng.next_f64();
            let coin = rng.next_f64();
            if time > after && time <= until {
                out.push(Ring { time, edge, u: coin });
            }
        }
        out[start..].sort_unstable_by(|a, b| a.time.total_cmp(&b.time));
    }

    /// All rings of `edge` in `(after, until]`.
    pub fn rings_between(&self, edge: i64, after: f64, until: f64) -> Vec<Ring> {
        let mut out = Vec::new();
        if until <= after {
            return out;
        }
        let first = after.max(0.0).floor() as u64;
        let last = until.ceil() as u64;
        for block in first..last.max(first + 1) {
            self.rings_into(edge, block, after, until, &mut out);
        }
        out
    }

    /// Discrete-time step `n`.
    #[inline]
    pub fn step(&self, n: u64) -> Step {
        let mut rng = CounterRng::new(key3(self.seed, STEP_DOMAIN, n, 0));
        Step {
            pick: rng.next_f64(),
            u: rng.next_f64(),
        }
    }
}
