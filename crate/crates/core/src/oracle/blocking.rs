//! Exact blocking-measure quantities by convolution over independent sites.
//!
//! Under μ the hole count left of the origin and the particle count right of
//! it are independent sums of Bernoullis; A is the event that they agree.

use crate::configs::ZConfig;
use crate::error::{param, Result};

/// Sites beyond this distance carry deviation probability below ~1e-20 for
/// every p accepted here.
fn window(theta: f64) -> i64 {
    if theta == 0.0 {
        return 1;
    }
    let w = (20.0 * std::f64::consts::LN_10 / -theta.ln()).ceil() as i64 + 2;
    w.clamp(2, 100_000)
}

fn convolve(dev: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut law = vec![1.0];
    for d in dev {
        let mut next = vec![0.0; law.len() + 1];
        for (n, &x) in law.iter().enumerate() {
            next[n] += x * (1.0 - d);
            next[n + 1] += x * d;
        }
        while next.len() > 1 && *next.last().unwrap() < 1e-300 {
            next.pop();
        }
        law = next;
    }
    law
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact laws of Ψ at a given p.
#[derive(Clone, Debug)]
pub struct BlockingLaw {
    theta: f64,
    w: i64,
    holes: Vec<f64>,
    parts: Vec<f64>,
    mu_a: f64,
}

impl BlockingLaw {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.5 && p <= 1.0) {
            return Err(param(format!("the blocking measure needs 1/2 < p <= 1, got {p}")));
        }
        let theta = (1.0 - p) / p;
        let w = window(theta);
        let mut law = Self {
            theta,
            w,
            holes: Vec::new(),
            parts: Vec::new(),
            mu_a: 0.0,
        };
        law.holes = convolve((1..=w).map(|i| law.dev(-i)));
        law.parts = convolve((0..=w).map(|i| law.dev(i)));
        law.mu_a = dot(&law.holes, &law.parts);
        Ok(law)
    }

    /// μ-probability that site i differs from the ground state.
    pub fn dev(&self, i: i64) -> f64 {
        let x = self.theta.powi(i.unsigned_abs().min(i32::MAX as u64) as i32);
        x / (1.0 + x)
    }

    /// μ(A).
    pub fn mu_a(&self) -> f64 {
        self.mu_a
    }

    /// Ψ(G_Z).
    pub fn ground(&self) -> f64 {
        self.holes[0] * self.parts[0] / self.mu_a
    }

    /// Ψ of a single configuration.
    pub fn atom(&self, z: &ZConfig) -> f64 {
        let mut w = self.holes[0] * self.parts[0];
        for &s in z.discrepancies() {
            let d = self.dev(s);
            w *= d / (1.0 - d);
        }
        w / self.mu_a
    }

    /// Law of the number of holes left of the origin under Ψ.
    pub fn excess_law(&self) -> Vec<f64> {
        self.holes
            .iter()
            .zip(&self.parts)
            .map(|(a, b)| a * b / self.mu_a)
            .collect()
    }

    /// Ψ(η_i = 1).
    pub fn site(&self, i: i64) -> f64 {
        if i.abs() > self.w {
            return if i < 0 { 1.0 } else { 0.0 };
        }
        let d = self.dev(i);
        if i >= 0 {
            let rest = convolve((0..=self.w).filter(|&j| j != i).map(|j| self.dev(j)));
            // a particle at i: n holes against n - 1 other particles
            let s: f64 = (1..self.holes.len())
                .map(|n| self.holes[n] * rest.get(n - 1).copied().unwrap_or(0.0))
                .sum();
            d * s / self.mu_a
        } else {
            let rest = convolve((1..=self.w).filter(|&j| -j != i).map(|j| self.dev(-j)));
            (1.0 - d) * dot(&rest, &self.parts) / self.mu_a
        }
    }

    /// Ψ(∃ i > n : η_i = 1) for n >= -1.
    pub fn tail(&self, n: i64) -> Result<f64> {
        if n < -1 {
            return Err(param("tail needs n >= -1"));
        }
        if n >= self.w {
            return Ok(0.0);
        }
        let near = convolve((0..=n).map(|j| self.dev(j)));
        let empty_far: f64 = (n + 1..=self.w).map(|j| 1.0 - self.dev(j)).product();
        Ok(1.0 - dot(&self.holes, &near) * empty_far / self.mu_a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over every discrepancy set inside [-6, 5].
    fn brute(p: f64) -> (f64, f64, Vec<f64>) {
        let theta: f64 = (1.0 - p) / p;
        let dev = |i: i64| {
            let x = theta.powi(i.unsigned_abs() as i32);
            x / (1.0 + x)
        };
        let sites: Vec<i64> = (-6..=5).collect();
        let (mut mu_a, mut ground) = (0.0, 0.0);
        let mut site_one = vec![0.0; sites.len()];
        for mask in 0u32..(1 << sites.len()) {
            let mut w = 1.0;
            let mut bal = 0i32;
            for (b, &s) in sites.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    w *= dev(s);
                    bal += if s < 0 { 1 } else { -1 };
                } else {
                    w *= 1.0 - dev(s);
                }
            }
            if bal == 0 {
                mu_a += w;
                if mask == 0 {
                    ground = w;
                }
                for (b, &s) in sites.iter().enumerate() {
                    let flipped = mask >> b & 1 == 1;
                    let one = if s < 0 { !flipped } else { flipped };
                    if one {
                        site_one[b] += w;
                    }
                }
            }
        }
        (mu_a, ground / mu_a, site_one.iter().map(|x| x / mu_a).collect())
    }

    #[test]
    fn convolution_matches_enumeration() {
        // p large enough that sites outside [-6, 5] are negligible
        let p = 0.99;
        let law = BlockingLaw::new(p).unwrap();
        let (_, ground, sites) = brute(p);
        assert!((law.ground() - ground).abs() < 1e-12);
        for (b, s) in (-6..=5).enumerate() {
            assert!((law.site(s) - sites[b]).abs() < 1e-12, "site {s}");
        }
        assert!((law.atom(&ZConfig::ground()) - ground).abs() < 1e-12);
    }

    #[test]
    fn excess_law_sums_to_one_and_tail_decreases() {
        let law = BlockingLaw::new(0.75).unwrap();
        let s: f64 = law.excess_law().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let t: Vec<f64> = (0..8).map(|n| law.tail(n).unwrap()).collect();
        assert!(t.windows(2).all(|w| w[1] < w[0]));
        assert!((law.tail(-1).unwrap() - (1.0 - law.excess_law()[0])).abs() < 1e-12);
    }
}
