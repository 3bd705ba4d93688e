//! Replica fan-out. Each replica gets a seed derived from the master seed
//! and its index; results always come back in index order, so the execution
//! mode never changes output.

use std::ops::Range;

use crate::stream::replica_seed;

/// How replicas are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    /// Data-parallel over the rayon pool (sequential when built without the
    /// `parallel` feature).
    #[default]
    Parallel,
    Sequential,
}

/// Runs `f(index, seed)` for every replica index in `range`.
pub fn map_replicas<T, F>(master: u64, range: Range<u64>, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => range.map(|i| f(i, replica_seed(master, i))).collect(),
        Exec::Parallel => par_map(master, range, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(master: u64, range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    range.into_par_iter().map(|i| f(i, replica_seed(master, i))).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(master: u64, range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    range.map(|i| f(i, replica_seed(master, i))).collect()
}

/// Seeds of replicas `0..n`.
pub fn seeds(master: u64, n: u64) -> Vec<u64> {
    (0..n).map(|i| replica_seed(master, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let f = |i: u64, s: u64| (i, s.wrapping_mul(3));
        let a = map_replicas(9, 0..200, Exec::Parallel, f);
        let b = map_replicas(9, 0..200, Exec::Sequential, f);
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(k, r)| r.0 == k as u64));
    }

    #[test]
    fn extending_keeps_existing_seeds() {
        let short = seeds(4, 10);
        let long = seeds(4, 20);
        assert_eq!(&long[..10], &short[..]);
    }
}
