#![allow(dead_code)]

use proptest::prelude::*;
use quitting::{Coalition, EventuallyCyclicProfile, MixedProfile, OneStepGame, QuittingGame};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Quit probability with a fair share of exact boundary values.
pub fn prob() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        1 => Just(1.0),
        6 => 0.0..=1.0f64,
    ]
}

pub fn interior_prob() -> impl Strategy<Value = f64> {
    0.001..0.999f64
}

pub fn profile(n: usize) -> impl Strategy<Value = MixedProfile> {
    prop::collection::vec(prob(), n).prop_map(|v| MixedProfile::new(v).unwrap())
}

pub fn game(n: usize) -> impl Strategy<Value = QuittingGame> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, n), (1usize << n) - 1)
        .prop_map(move |rows| QuittingGame::new(n, rows).unwrap())
}

/// A one-step game with `n ∈ [1, max_n]` players and a profile for it.
pub fn one_step_case(max_n: usize) -> impl Strategy<Value = (OneStepGame, MixedProfile)> {
    (1..=max_n).prop_flat_map(|n| {
        (game(n), prop::collection::vec(-8.0..8.0f64, n), profile(n))
            .prop_map(|(g, v, p)| (OneStepGame::new(g, v).unwrap(), p))
    })
}

pub fn cyclic(
    n: usize,
    max_prefix: usize,
    max_cycle: usize,
) -> impl Strategy<Value = EventuallyCyclicProfile> {
    (
        prop::collection::vec(profile(n), 0..=max_prefix),
        prop::collection::vec(profile(n), 1..=max_cycle),
    )
        .prop_map(|(prefix, cycle)| EventuallyCyclicProfile::new(prefix, cycle).unwrap())
}

pub fn repeated_case(
    max_n: usize,
    max_prefix: usize,
    max_cycle: usize,
) -> impl Strategy<Value = (QuittingGame, EventuallyCyclicProfile)> {
    (1..=max_n).prop_flat_map(move |n| (game(n), cyclic(n, max_prefix, max_cycle)))
}

pub fn random_prob(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..8) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random(),
    }
}

pub fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> MixedProfile {
    MixedProfile::new((0..n).map(|_| random_prob(rng)).collect()).unwrap()
}

pub fn random_game(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> QuittingGame {
    QuittingGame::from_fn(n, |_| {
        (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
    })
    .unwrap()
}

pub fn random_cyclic(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_prefix: usize,
    max_cycle: usize,
) -> EventuallyCyclicProfile {
    let prefix = (0..rng.random_range(0..=max_prefix))
        .map(|_| random_profile(rng, n))
        .collect();
    let cycle = (0..rng.random_range(1..=max_cycle))
        .map(|_| random_profile(rng, n))
        .collect();
    EventuallyCyclicProfile::new(prefix, cycle).unwrap()
}

/// Game with `r^n_{n} = 1` and `r^n_S ≤ 1` whenever `n ∈ S`; outsiders'
/// payoffs are unrestricted in `[-2, 2]`.
pub fn normalized_game(rng: &mut ChaCha8Rng, n: usize) -> QuittingGame {
    QuittingGame::from_fn(n, |s| {
        (0..n)
            .map(|i| {
                if s == Coalition::singleton(i) {
                    1.0
                } else if s.contains(i) {
                    rng.random_range(-2.0..=1.0)
                } else {
                    rng.random_range(-2.0..=2.0)
                }
            })
            .collect()
    })
    .unwrap()
}

/// Uniform point of `[−2r_max, 2r_max]^N` with one coordinate pushed to at
/// most 1 if needed.
pub fn random_v_in_v(rng: &mut ChaCha8Rng, n: usize, r_max: f64) -> Vec<f64> {
    let bound = 2.0 * r_max;
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    if v.iter().all(|&x| x > 1.0) {
        let i = rng.random_range(0..n);
        v[i] = rng.random_range(-bound..=1.0);
    }
    v
}

/// `π` with player `n`'s stage probabilities replaced by those of `dev`.
pub fn splice(
    pi: &EventuallyCyclicProfile,
    dev: &EventuallyCyclicProfile,
    player: usize,
) -> EventuallyCyclicProfile {
    let prefix_len = pi.prefix().len().max(dev.prefix().len());
    let cycle_len = lcm(pi.cycle().len(), dev.cycle().len());
    let stage = |k: usize| pi.stage(k).with_prob(player, dev.stage(k).get(player));
    EventuallyCyclicProfile::new(
        (0..prefix_len).map(stage).collect(),
        (prefix_len..prefix_len + cycle_len).map(stage).collect(),
    )
    .unwrap()
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
