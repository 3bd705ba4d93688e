//! Single-event update rules.

use crate::configs::{FiniteConfig, Permutation};
use crate::error::{param, Error, Result};

/// Priority to occupy the left site of a pair under a heads coin:
/// first-class beats second-class beats empty.
#[inline]
pub fn priority(v: u8) -> u8 {
    match v {
        1 => 2,
        2 => 1,
        _ => 0,
    }
}

/// Heads puts the higher-priority symbol on the left, tails on the right.
/// Equal symbols are left alone.
#[inline]
pub fn sort_pair(a: u8, b: u8, heads: bool) -> (u8, u8) {
    if a == b {
        return (a, b);
    }
    let left_first = (priority(a) > priority(b)) == heads;
    if left_first {
        (a, b)
    } else {
        (b, a)
    }
}

/// Heads arranges the cards ascending, tails descending.
#[inline]
pub fn sort_cards(a: u32, b: u32, heads: bool) -> (u32, u32) {
    if (a < b) == heads {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_finite_edge(edge: i64, n: usize) -> Result<usize> {
    if edge < 1 || edge >= n as i64 {
        return Err(Error::EdgeOutOfRange {
            edge,
            lo: 1,
            hi: n as i64 - 1,
        });
    }
    Ok(edge as usize)
}

/// Sort event on positions `(edge, edge + 1)` of a deck (1-based).
pub fn apply_to_perm(pi: &mut Permutation, edge: i64, heads: bool) -> Result<bool> {
    let i = check_finite_edge(edge, pi.len())? - 1;
    let e = pi.entries_mut();
    let (a, b) = sort_cards(e[i], e[i + 1], heads);
    let changed = a != e[i];
    e[i] = a;
    e[i + 1] = b;
    Ok(changed)
}

/// Sort event on positions `(edge, edge + 1)` of a 0/1 word (1-based).
pub fn apply_to_finite(x: &mut FiniteConfig, edge: i64, heads: bool) -> Result<bool> {
    let i = check_finite_edge(edge, x.n())? - 1;
    let bits = x.bits_mut();
    let (a, b) = sort_pair(bits[i], bits[i + 1], heads);
    let changed = a != bits[i];
    bits[i] = a;
    bits[i + 1] = b;
    Ok(changed)
}

/// θ = (1 - p) / p, the Metropolis acceptance of an increasing pair.
pub fn metropolis_theta(p: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&p) {
        return Err(param(format!("Metropolis shuffle needs 1/2 <= p <= 1, got {p}")));
    }
    Ok((1.0 - p) / p)
}

/// One Metropolis move on the selected pair: a decreasing pair is always
/// switched, an increasing one iff `u < θ`.
pub fn apply_metropolis(pi: &mut Permutation, edge: i64, u: f64, theta: f64) -> Result<bool> {
    let i = check_finite_edge(edge, pi.len())? - 1;
    let e = pi.entries_mut();
    if e[i] > e[i + 1] || u < theta {
        e.swap(i, i + 1);
        return Ok(true);
    }
    Ok(false)
}
