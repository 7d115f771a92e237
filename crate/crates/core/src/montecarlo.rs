//! Monte-Carlo simulation of the quitting process.
//!
//! Every trial draws independent quit indicators stage by stage until some
//! coalition quits or the horizon is reached; censored trials pay zero.
//! Trial `i` uses ChaCha8 stream `i` of the run seed, so results do not
//! depend on how trials are scheduled across threads, and the reduction runs
//! sequentially in trial order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::game::{Coalition, EventuallyCyclicProfile, QuittingGame};

pub const DEFAULT_HORIZON: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub trials: u64,
    pub horizon: u64,
    pub seed: u64,
    pub mean_payoff: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Fraction of trials that ended within the horizon.
    pub termination_rate: f64,
    /// Stage (1-indexed) at which terminated trials ended.
    pub quit_stage_histogram: BTreeMap<u64, u64>,
}

/// Stage and coalition of the first nonempty quit, if any within `horizon`.
fn run_trial(
    pi: &EventuallyCyclicProfile,
    horizon: u64,
    silent_cycle: bool,
    rng: &mut ChaCha8Rng,
) -> Option<(u64, Coalition)> {
    let prefix_len = pi.prefix().len() as u64;
    for k in 0..horizon {
        if silent_cycle && k >= prefix_len {
            // nobody can ever quit again, and no randomness would be drawn
            return None;
        }
        let p = pi.stage(k as usize);
        let mut quitters = Coalition::EMPTY;
        for (i, &q) in p.probs().iter().enumerate() {
            let quits = if q == 0.0 {
                false
            } else if q == 1.0 {
                true
            } else {
                rng.random::<f64>() < q
            };
            if quits {
                quitters = quitters.with(i);
            }
        }
        if !quitters.is_empty() {
            return Some((k + 1, quitters));
        }
    }
    None
}

pub fn simulate(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> SimulationSummary {
    assert_eq!(g.num_players(), pi.num_players());
    assert!(trials >= 1 && horizon >= 1);
    let silent_cycle = pi.cycle().iter().all(|p| p.is_zero());

    let outcomes: Vec<Option<(u64, Coalition)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            run_trial(pi, horizon, silent_cycle, &mut rng)
        })
        .collect();

    let n = g.num_players();
    let zeros = vec![0.0; n];
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut histogram = BTreeMap::new();
    let mut terminated = 0u64;
    for (count, outcome) in outcomes.iter().enumerate() {
        let x = match outcome {
            Some((stage, s)) => {
                terminated += 1;
                *histogram.entry(*stage).or_insert(0) += 1;
                g.payoff(*s)
            }
            None => &zeros[..],
        };
        let k = (count + 1) as f64;
        for j in 0..n {
            let delta = x[j] - mean[j];
            mean[j] += delta / k;
            m2[j] += delta * (x[j] - mean[j]);
        }
    }
    let t = trials as f64;
    let stderr = m2
        .iter()
        .map(|&s| {
            if trials > 1 {
                (s / (t - 1.0)).sqrt() / t.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    SimulationSummary {
        trials,
        horizon,
        seed,
        mean_payoff: mean,
        stderr,
        termination_rate: terminated as f64 / t,
        quit_stage_histogram: histogram,
    }
}
