//! Property tests for the structural invariants.

use proptest::prelude::*;

use asep_core::configs::{
    embed_hat, height_projection, reconstruct_permutation, Boundary, Dominates, FiniteConfig, Permutation, Projection,
    SecondClassConfig, ZConfig,
};
use asep_core::coupling::{card_coalescence_time, default_cap};
use asep_core::dynamics::{evolve, run_continuous, ActiveEdges, Flow, Lattice, WindowRun, ZRun};
use asep_core::measures::{blocking_marginal, rng_for, sample_blocking, BlockingParams};
use asep_core::observables::{hitting_time, HitStart};
use asep_core::oracle::{build_generator, stationary_distribution, ChainKind};
use asep_core::stream::EventStream;

fn permutation(max: usize) -> impl Strategy<Value = Permutation> {
    (2..=max)
        .prop_flat_map(|n| Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle())
        .prop_map(|v| Permutation::new(v).unwrap())
}

fn finite(n: usize, k: usize) -> impl Strategy<Value = FiniteConfig> {
    Just([vec![1u8; k], vec![0u8; n - k]].concat())
        .prop_shuffle()
        .prop_map(|b| FiniteConfig::new(b).unwrap())
}

/// A configuration in A with discrepancies inside [-w, w - 1].
fn zconfig(w: i64) -> impl Strategy<Value = ZConfig> {
    (
        proptest::collection::btree_set(-w..0, 0..w as usize),
        proptest::collection::btree_set(0..w, 0..w as usize),
    )
        .prop_map(|(h, p)| {
            let m = h.len().min(p.len());
            let sites: Vec<i64> = h.into_iter().rev().take(m).chain(p.into_iter().take(m)).collect();
            ZConfig::from_discrepancies(sites).unwrap()
        })
}

fn events(edges: std::ops::Range<i64>) -> impl Strategy<Value = Vec<(i64, bool)>> {
    proptest::collection::vec((edges, any::<bool>()), 0..200)
}

fn second_class(len: usize) -> impl Strategy<Value = SecondClassConfig> {
    proptest::collection::vec(0u8..=2, len)
        .prop_map(|v| SecondClassConfig::new(-3, v, Boundary::Ones, Boundary::Zeros).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn heights_reconstruct_the_deck(pi in permutation(64)) {
        let levels: Vec<FiniteConfig> = (1..pi.len()).map(|k| height_projection(&pi, k).unwrap()).collect();
        prop_assert_eq!(reconstruct_permutation(&levels).unwrap(), pi);
    }

    #[test]
    fn dominates_is_a_partial_order(a in finite(7, 3), b in finite(7, 3), c in finite(7, 3)) {
        prop_assert!(a.dominates(&a));
        if a.dominates(&b) && b.dominates(&a) {
            prop_assert_eq!(&a, &b);
        }
        if a.dominates(&b) && b.dominates(&c) {
            prop_assert!(a.dominates(&c));
        }
    }

    #[test]
    fn two_to_one_lies_above_two_to_zero(d in second_class(12)) {
        let hi = d.project(Projection::TwoToOne);
        let lo = d.project(Projection::TwoToZero);
        for (a, b) in hi.values().iter().zip(lo.values()) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn events_are_pure(x in finite(8, 4), edge in 1i64..8, heads in any::<bool>()) {
        let (mut a, mut b) = (x.clone(), x);
        prop_assert_eq!(a.apply(edge, heads), b.apply(edge, heads));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn inactive_edges_are_no_ops(x in finite(8, 3), z in zconfig(6), heads in any::<bool>()) {
        let active = x.active_edges();
        for edge in (1..8).filter(|e| !active.contains(e)) {
            let mut y = x.clone();
            prop_assert!(!y.apply(edge, heads));
            prop_assert_eq!(&y, &x);
        }
        let active = z.active_edges();
        for edge in (-10..10).filter(|e| !active.contains(e)) {
            let mut run = ZRun::new(&z);
            prop_assert!(!run.apply(edge, heads));
            prop_assert_eq!(run.to_zconfig(), z.clone());
        }
    }

    #[test]
    fn exclusion_keeps_a_and_particle_counts(
        z in zconfig(6),
        x in finite(9, 4),
        d in second_class(12),
        ev in events(-12..12),
    ) {
        let mut run = ZRun::new(&z);
        let mut fin = x.clone();
        let mut win = WindowRun::new(&d);
        let count = |v: &[u8], s: u8| v.iter().filter(|&&c| c == s).count();
        for &(e, h) in &ev {
            run.apply(e, h);
            fin.apply(e.rem_euclid(8) + 1, h);
            win.apply(e.rem_euclid(11) - 3, h);
            let now = run.to_zconfig();
            prop_assert!(ZConfig::from_discrepancies(now.discrepancies().to_vec()).is_ok());
            prop_assert_eq!(run.discrepancy_count(), now.discrepancies().len());
        }
        prop_assert_eq!(fin.k(), 4);
        prop_assert_eq!(count(fin.bits(), 1), 4);
        prop_assert_eq!(count(win.values(), 1), count(d.values(), 1));
        prop_assert_eq!(count(win.values(), 2), count(d.values(), 2));
    }

    #[test]
    fn projections_commute_with_every_event(pi in permutation(9), d in second_class(10), ev in events(-3..9)) {
        let n = pi.len();
        let mut deck = pi.clone();
        let mut levels: Vec<FiniteConfig> = (1..n).map(|k| height_projection(&pi, k).unwrap()).collect();
        let mut win = WindowRun::new(&d);
        let mut proj: Vec<(Projection, WindowRun)> = [Projection::TwoToOne, Projection::TwoToZero]
            .into_iter()
            .map(|m| (m, WindowRun::new(&d.project(m))))
            .collect();
        for &(e, h) in &ev {
            deck.apply(e, h);
            for l in levels.iter_mut() {
                l.apply(e, h);
            }
            for (k, l) in levels.iter().enumerate() {
                prop_assert_eq!(&height_projection(&deck, k + 1).unwrap(), l);
            }
            win.apply(e, h);
            for (m, r) in proj.iter_mut() {
                r.apply(e, h);
                let mapped: Vec<u8> = win.values().iter().map(|&v| m.apply(v)).collect();
                prop_assert_eq!(&mapped[..], r.values());
            }
        }
    }

    #[test]
    fn card_coalescence_is_deterministic(seed in any::<u64>(), n in 2usize..12) {
        let cap = default_cap(n, 0.75);
        prop_assert_eq!(card_coalescence_time(n, 0.75, seed, cap).unwrap(), card_coalescence_time(n, 0.75, seed, cap).unwrap());
    }

    #[test]
    fn sandwich_holds_under_the_grand_coupling(x in finite(8, 3), seed in any::<u64>(), p in 0.0..1.0f64) {
        let mut family = vec![FiniteConfig::ground(8, 3).unwrap(), x, FiniteConfig::bottom(8, 3).unwrap()];
        let mut ok = true;
        evolve(&mut family, &EventStream::new(seed, p), 0.0, 30.0, |_, _, f| {
            ok &= f[0].dominates(&f[1]) && f[1].dominates(&f[2]);
            Flow::Continue
        });
        prop_assert!(ok);
    }

    #[test]
    fn coalescence_is_absorbing(seed in any::<u64>()) {
        let mut family = vec![FiniteConfig::ground(6, 3).unwrap(), FiniteConfig::bottom(6, 3).unwrap()];
        let mut met = false;
        let mut ok = true;
        evolve(&mut family, &EventStream::new(seed, 0.7), 0.0, 60.0, |_, _, f| {
            if met {
                ok &= f[0] == f[1];
            }
            met |= f[0] == f[1];
            Flow::Continue
        });
        prop_assert!(ok);
    }

    #[test]
    fn blocking_samples_lie_in_a_inside_the_window(seed in any::<u64>(), p in 0.55..0.95f64) {
        let params = BlockingParams::new(p).unwrap();
        let z = sample_blocking(&params, &mut rng_for(seed)).unwrap();
        let w = params.window();
        prop_assert!(ZConfig::from_discrepancies(z.discrepancies().to_vec()).is_ok());
        if let Some((lo, hi)) = z.hull() {
            prop_assert!(lo >= -w && hi <= w);
        }
    }

    #[test]
    fn blocking_marginal_decreases(p in 0.51..0.99f64, i in -200i64..200) {
        let (a, b) = (blocking_marginal(p, i).unwrap(), blocking_marginal(p, i + 1).unwrap());
        prop_assert!(b <= a);
        // strict wherever the doubles can still tell them apart: near 1 the
        // step is about 1 - a times (1/θ - 1) >= 0.04, which needs 1 - a well
        // above the spacing of doubles there
        if a < 1.0 - 1e-13 && b > 1e-300 {
            prop_assert!(b < a);
        }
        prop_assert!((blocking_marginal(p, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn raising_the_cap_never_censors_more(seed in any::<u64>(), n in 1usize..5, cap in 0.1..20.0f64) {
        let z = ZConfig::shifted_block(n).unwrap();
        let a = hitting_time(&HitStart::Z(z.clone()), 0.75, seed, cap).unwrap();
        let b = hitting_time(&HitStart::Z(z), 0.75, seed, 2.0 * cap).unwrap();
        prop_assert!(a.censored || !b.censored);
        prop_assert!(a.value <= cap);
        if !a.censored {
            prop_assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn stationary_law_survives_a_uniformized_step(n in 2usize..6, p in 0.0..1.0f64) {
        let (_, gen) = build_generator(ChainKind::Cards { n, p }).unwrap();
        let pi = stationary_distribution(&gen).unwrap().pi;
        let mut next = vec![0.0; pi.len()];
        gen.step(&pi, gen.max_exit() + 1.0, &mut next);
        for (a, b) in pi.iter().zip(&next) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn embedding_preserves_order_on_x42() {
    let states = FiniteConfig::enumerate(4, 2).unwrap();
    for x in &states {
        for y in &states {
            if x.dominates(y) {
                assert!(embed_hat(x).dominates(&embed_hat(y)), "{x} {y}");
            }
        }
    }
}

#[test]
fn embedded_bottom_dominates_the_block() {
    for n in 2..=32 {
        let block = ZConfig::shifted_block(n).unwrap();
        for k in 1..n {
            assert!(
                embed_hat(&FiniteConfig::bottom(n, k).unwrap()).dominates(&block),
                "N={n} k={k}"
            );
        }
    }
}

#[test]
fn evolved_blocking_start_stays_in_a() {
    let params = BlockingParams::new(0.7).unwrap();
    for seed in 0..50 {
        let z = sample_blocking(&params, &mut rng_for(seed)).unwrap();
        let mut run = ZRun::new(&z);
        run_continuous(&mut run, 3.0, &EventStream::new(seed, 0.7));
        assert!(ZConfig::from_discrepancies(run.to_zconfig().discrepancies().to_vec()).is_ok());
    }
}
