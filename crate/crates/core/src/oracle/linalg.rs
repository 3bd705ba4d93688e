//! Linear-algebra oracles: stationary law, spectral gap, absorption.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::Generator;
use crate::error::{param, Error, Result};

/// Dense factorization is used up to this many unknowns; Gauss-Seidel
/// beyond.
const DENSE_LIMIT: usize = 2500;
/// Largest chain for the dense symmetric eigensolve.
pub const GAP_LIMIT: usize = 5040;

#[derive(Clone, Debug, PartialEq)]
pub struct Stationary {
    pub pi: Vec<f64>,
    /// max_j |(πQ)_j|
    pub residual: f64,
}

fn residual(gen: &Generator, pi: &[f64]) -> f64 {
    let mut out = vec![0.0; pi.len()];
    gen.left_mul(pi, &mut out);
    out.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Solves πQ = 0, Σπ = 1.
pub fn stationary_distribution(gen: &Generator) -> Result<Stationary> {
    let n = gen.size();
    if n == 0 {
        return Err(param("empty chain"));
    }
    let pi = if n <= DENSE_LIMIT {
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, row) in gen.rows.iter().enumerate() {
            a[(i, i)] -= gen.exit[i];
            for &(j, q) in row {
                a[(j, i)] += q;
            }
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Numerical("balance equations are singular (reducible chain?)".into()))?;
        x.iter().copied().collect::<Vec<f64>>()
    } else {
        power_stationary(gen)?
    };
    if pi.iter().any(|&x| x < -1e-10 || !x.is_finite()) {
        return Err(Error::Numerical(
            "stationary solve produced negative mass (reducible chain?)".into(),
        ));
    }
    let pi: Vec<f64> = pi.into_iter().map(|x| x.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.into_iter().map(|x| x / s).collect();
    let r = residual(gen, &pi);
    Ok(Stationary { pi, residual: r })
}

fn power_stationary(gen: &Generator) -> Result<Vec<f64>> {
    let n = gen.size();
    let rate = gen.max_exit() * 1.05;
    let mut v = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for it in 0..2_000_000 {
        gen.step(&v, rate, &mut next);
        std::mem::swap(&mut v, &mut next);
        if it % 256 == 0 && residual(gen, &v) < 1e-13 {
            return Ok(v);
        }
    }
    Err(Error::Numerical("power iteration did not converge".into()))
}

/// −λ₂ of the generator, computed on the π-symmetrized matrix.
pub fn spectral_gap(gen: &Generator) -> Result<f64> {
    let n = gen.size();
    if n > GAP_LIMIT {
        return Err(Error::SizeBound {
            size: n,
            limit: GAP_LIMIT,
        });
    }
    if n < 2 {
        return Err(param("spectral gap needs at least two states"));
    }
    let st = stationary_distribution(gen)?;
    if st.pi.iter().any(|&x| x <= 0.0) {
        return Err(Error::Numerical("stationary law is not strictly positive".into()));
    }
    let sq: Vec<f64> = st.pi.iter().map(|x| x.sqrt()).collect();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for (i, row) in gen.rows.iter().enumerate() {
        s[(i, i)] -= gen.exit[i];
        for &(j, q) in row {
            let v = sq[i] * q / sq[j];
            s[(i, j)] += 0.5 * v;
            s[(j, i)] += 0.5 * v;
        }
    }
    let mut eig: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(-eig[1])
}

fn reachable(gen: &Generator, start: usize) -> Vec<bool> {
    let mut seen = vec![false; gen.size()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        for &(j, q) in &gen.rows[i] {
            if q > 0.0 && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Solves `exit_i x_i - Σ_{j free} q_ij x_j = b_i` over the free states
/// (those with `fixed[i] == None`), with `x_j = fixed[j]` elsewhere.
fn solve_absorbing(gen: &Generator, fixed: &[Option<f64>], cost: &[f64], free: &[usize]) -> Result<Vec<f64>> {
    let n = gen.size();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    let m = free.len();
    let mut rhs = vec![0.0; m];
    for (k, &i) in free.iter().enumerate() {
        rhs[k] = cost[i];
        for &(j, q) in &gen.rows[i] {
            if let Some(v) = fixed[j] {
                rhs[k] += q * v;
            }
        }
    }
    if m <= DENSE_LIMIT {
        let mut a = DMatrix::<f64>::zeros(m, m);
        for (k, &i) in free.iter().enumerate() {
            a[(k, k)] += gen.exit[i];
            for &(j, q) in &gen.rows[i] {
                if fixed[j].is_none() && pos[j] != usize::MAX {
                    a[(k, pos[j])] -= q;
                }
            }
        }
        let x = a
            .lu()
            .solve(&DVector::from_vec(rhs))
            .ok_or_else(|| Error::Numerical("absorption system is singular".into()))?;
        return Ok(x.iter().copied().collect());
    }
    let mut x = vec![0.0; m];
    for sweep in 0..1_000_000 {
        let mut change: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (k, &i) in free.iter().enumerate() {
            let mut acc = rhs[k];
            for &(j, q) in &gen.rows[i] {
                if fixed[j].is_none() && pos[j] != usize::MAX {
                    acc += q * x[pos[j]];
                }
            }
            let new = acc / gen.exit[i];
            change = change.max((new - x[k]).abs());
            scale = scale.max(new.abs());
            x[k] = new;
        }
        if change <= 1e-14 * scale.max(1.0) && sweep > 0 {
            return Ok(x);
        }
    }
    Err(Error::Numerical("Gauss-Seidel did not converge".into()))
}

/// Expected time to reach `target` from `start`.
pub fn expected_hitting(gen: &Generator, start: usize, target: usize) -> Result<f64> {
    if start == target {
        return Ok(0.0);
    }
    let reach = reachable(gen, start);
    if !reach[target] {
        return Err(param(format!("state {target} is unreachable from {start}")));
    }
    let mut fixed = vec![None; gen.size()];
    fixed[target] = Some(0.0);
    let free: Vec<usize> = (0..gen.size()).filter(|&i| reach[i] && i != target).collect();
    let x = solve_absorbing(gen, &fixed, &vec![1.0; gen.size()], &free)?;
    let k = free.iter().position(|&i| i == start).expect("start is free");
    Ok(x[k])
}

/// Probability of reaching a state in `hit` before any state in `avoid`.
pub fn hitting_probability(gen: &Generator, start: usize, hit: &[usize], avoid: &[usize]) -> Result<f64> {
    let mut fixed = vec![None; gen.size()];
    for &a in avoid {
        fixed[a] = Some(0.0);
    }
    for &h in hit {
        fixed[h] = Some(1.0);
    }
    if let Some(v) = fixed[start] {
        return Ok(v);
    }
    let reach = reachable(gen, start);
    let free: Vec<usize> = (0..gen.size()).filter(|&i| reach[i] && fixed[i].is_none()).collect();
    let x = solve_absorbing(gen, &fixed, &vec![0.0; gen.size()], &free)?;
    let k = free.iter().position(|&i| i == start).expect("start is free");
    Ok(x[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_generator, ChainKind};

    #[test]
    fn birth_death_stationary() {
        let (space, gen) = build_generator(ChainKind::Exclusion {
            n: 3,
            k: 1,
            p: 2.0 / 3.0,
        })
        .unwrap();
        let st = stationary_distribution(&gen).unwrap();
        let want = [("100", 4.0 / 7.0), ("010", 2.0 / 7.0), ("001", 1.0 / 7.0)];
        for (label, w) in want {
            assert!((st.pi[space.index_of(label).unwrap()] - w).abs() < 1e-12);
        }
        assert!(st.residual < 1e-12);
    }

    #[test]
    fn gap_two_states() {
        let (_, gen) = build_generator(ChainKind::Cards { n: 2, p: 0.8 }).unwrap();
        assert!((spectral_gap(&gen).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_race() {
        for p in [0.55, 0.75, 0.9] {
            let (space, gen) = build_generator(ChainKind::Exclusion { n: 2, k: 1, p }).unwrap();
            let h = expected_hitting(&gen, space.index_of("01").unwrap(), space.index_of("10").unwrap()).unwrap();
            assert!((h - 1.0 / p).abs() < 1e-12);
            assert_eq!(expected_hitting(&gen, 0, 0).unwrap(), 0.0);
        }
    }

    #[test]
    fn gambler_ruin_probability() {
        // single particle on 4 sites, p = 1/2: hit site 1 before site 4 from 2
        let (space, gen) = build_generator(ChainKind::Exclusion { n: 4, k: 1, p: 0.5 }).unwrap();
        let pr = hitting_probability(
            &gen,
            space.index_of("0100").unwrap(),
            &[space.index_of("1000").unwrap()],
            &[space.index_of("0001").unwrap()],
        )
        .unwrap();
        assert!((pr - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_dense() {
        let (_, gen) = build_generator(ChainKind::Exclusion { n: 6, k: 2, p: 0.7 }).unwrap();
        let dense = stationary_distribution(&gen).unwrap().pi;
        let power = power_stationary(&gen).unwrap();
        let s: f64 = power.iter().sum();
        for (a, b) in dense.iter().zip(&power) {
            assert!((a - b / s).abs() < 1e-10);
        }
    }
}
