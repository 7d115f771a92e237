//! Payoffs and deviation values in the repeated quitting game for
//! eventually-cyclic profiles.
//!
//! Only stage-level quantities matter: the probability `c_k` that nobody quits
//! at stage `k`, and the stage absorption payoff `u_k = Σ_{S≠∅} ϱ(p_k,S)·r_S`.
//! The prefix is summed directly and the cycle in closed form as a geometric
//! series. A game that never ends pays zero.
//!
//! A unilateral deviator only ever observes "the game is still running", so
//! any deviation is a sequence of stage quit probabilities and its payoff is
//! linear in each of them. Pure stopping stages therefore attain the
//! supremum, and with a cyclic environment the best stopping value is
//! available in closed form.

use serde::Serialize;

use crate::game::{Action, Coalition, EventuallyCyclicProfile, MixedProfile, QuittingGame};
use crate::probability::rho;

/// Probability that at least one of `probs` fires, accumulated without
/// cancellation for small probabilities.
fn any_fires<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs.into_iter().fold(0.0, |acc, q| acc + (1.0 - acc) * q)
}

/// `(c_k, 1 − c_k, u_k)` for one stage.
fn stage_terms(g: &QuittingGame, p: &MixedProfile) -> (f64, f64, Vec<f64>) {
    let n = g.num_players();
    let mut u = vec![0.0; n];
    for s in Coalition::nonempty(n) {
        let w = rho(p, s);
        if w == 0.0 {
            continue;
        }
        for (acc, r) in u.iter_mut().zip(g.payoff(s)) {
            *acc += w * r;
        }
    }
    (
        rho(p, Coalition::EMPTY),
        any_fires(p.probs().iter().copied()),
        u,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatedPayoffResult {
    pub payoff: Vec<f64>,
    /// Probability that the game ends at some finite stage.
    pub termination_prob: f64,
    /// Probability that nobody quits during one full pass of the cycle.
    pub per_cycle_continue: f64,
}

/// Expected payoff `γ(π)`.
pub fn repeated_payoff(g: &QuittingGame, pi: &EventuallyCyclicProfile) -> RepeatedPayoffResult {
    assert_eq!(g.num_players(), pi.num_players());
    let n = g.num_players();
    let mut payoff = vec![0.0; n];
    let mut reach = 1.0;
    for p in pi.prefix() {
        let (c, _, u) = stage_terms(g, p);
        for (acc, x) in payoff.iter_mut().zip(&u) {
            *acc += reach * x;
        }
        reach *= c;
    }

    let mut cycle_sum = vec![0.0; n];
    let mut cycle_reach = 1.0;
    let mut hazards = Vec::with_capacity(pi.cycle().len());
    for p in pi.cycle() {
        let (c, h, u) = stage_terms(g, p);
        for (acc, x) in cycle_sum.iter_mut().zip(&u) {
            *acc += cycle_reach * x;
        }
        cycle_reach *= c;
        hazards.push(h);
    }
    let cycle_absorb = any_fires(hazards);

    let termination_prob = if cycle_absorb > 0.0 {
        for (acc, x) in payoff.iter_mut().zip(&cycle_sum) {
            *acc += reach * x / cycle_absorb;
        }
        1.0
    } else {
        1.0 - reach
    };
    RepeatedPayoffResult {
        payoff,
        termination_prob,
        per_cycle_continue: cycle_reach,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedPayoff {
    pub horizon: usize,
    pub payoff: Vec<f64>,
    /// `P(no quit through the horizon) · r_max`; bounds the distance to `γ(π)`.
    pub tail_bound: f64,
}

/// Partial sum of the payoff series over the first `horizon` stages.
pub fn truncated_payoff(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
    horizon: usize,
) -> TruncatedPayoff {
    assert_eq!(g.num_players(), pi.num_players());
    let mut payoff = vec![0.0; g.num_players()];
    let mut reach = 1.0;
    for k in 0..horizon {
        let (c, _, u) = stage_terms(g, pi.stage(k));
        for (acc, x) in payoff.iter_mut().zip(&u) {
            *acc += reach * x;
        }
        reach *= c;
        if reach == 0.0 {
            break;
        }
    }
    TruncatedPayoff {
        horizon,
        payoff,
        tail_bound: reach * g.r_max(),
    }
}

/// What a single deviating player faces at one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
struct DeviationStage {
    /// Payoff if the deviator quits now.
    quit: f64,
    /// Payoff collected now if the deviator continues and someone else quits.
    others: f64,
    /// Probability that nobody else quits.
    cont: f64,
    /// `1 − cont`, computed directly.
    hazard: f64,
}

impl DeviationStage {
    fn new(g: &QuittingGame, p: &MixedProfile, player: usize) -> Self {
        let n = g.num_players();
        let mut quit = 0.0;
        let mut others = 0.0;
        let mut cont = 0.0;
        for s in Coalition::all(n).filter(|s| !s.contains(player)) {
            // opponents' distribution: the deviator's own factor is left out
            let w = (0..n).filter(|&i| i != player).fold(1.0, |acc, i| {
                if s.contains(i) {
                    acc * p.get(i)
                } else {
                    acc * (1.0 - p.get(i))
                }
            });
            quit += w * g.payoff(s.with(player))[player];
            if s.is_empty() {
                cont = w;
            } else {
                others += w * g.payoff(s)[player];
            }
        }
        let hazard = any_fires((0..n).filter(|&i| i != player).map(|i| p.get(i)));
        DeviationStage {
            quit,
            others,
            cont,
            hazard,
        }
    }

    fn continue_value(&self, next: f64) -> f64 {
        self.others + self.cont * next
    }

    fn step(&self, next: f64) -> (f64, Action) {
        let cont = self.continue_value(next);
        if self.quit >= cont {
            (self.quit, Action::Quit)
        } else {
            (cont, Action::Continue)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationResult {
    pub player: usize,
    /// Supremum of the player's payoff over all unilateral deviations.
    pub best_value: f64,
    pub prefix_values: Vec<f64>,
    pub cycle_values: Vec<f64>,
    pub prefix_policy: Vec<Action>,
    pub cycle_policy: Vec<Action>,
}

impl DeviationResult {
    /// `pi` with the deviator's entries replaced by the optimal pure policy.
    pub fn deviation_profile(&self, pi: &EventuallyCyclicProfile) -> EventuallyCyclicProfile {
        let apply = |stages: &[MixedProfile], policy: &[Action]| -> Vec<MixedProfile> {
            stages
                .iter()
                .zip(policy)
                .map(|(p, a)| p.with_action(self.player, *a))
                .collect()
        };
        EventuallyCyclicProfile::new(
            apply(pi.prefix(), &self.prefix_policy),
            apply(pi.cycle(), &self.cycle_policy),
        )
        .expect("same shape as the input profile")
    }
}

fn deviation_stages(
    g: &QuittingGame,
    stages: &[MixedProfile],
    player: usize,
) -> Vec<DeviationStage> {
    stages
        .iter()
        .map(|p| DeviationStage::new(g, p, player))
        .collect()
}

/// Value at the start of the cycle: the best of stopping at some cycle
/// position in the first pass (later passes only discount toward the
/// never-stop value) and never stopping.
fn cycle_start_value(stages: &[DeviationStage]) -> f64 {
    let mut best_stop = f64::NEG_INFINITY;
    let mut carried = 0.0;
    let mut reach = 1.0;
    for st in stages {
        best_stop = best_stop.max(carried + reach * st.quit);
        carried += reach * st.others;
        reach *= st.cont;
    }
    let absorb = any_fires(stages.iter().map(|s| s.hazard));
    let never_stop = if absorb > 0.0 { carried / absorb } else { 0.0 };
    best_stop.max(never_stop)
}

/// Best unilateral deviation value for `player` against `pi`.
pub fn best_response(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
    player: usize,
) -> DeviationResult {
    assert_eq!(g.num_players(), pi.num_players());
    assert!(player < g.num_players());
    let cycle = deviation_stages(g, pi.cycle(), player);
    let prefix = deviation_stages(g, pi.prefix(), player);

    let start = cycle_start_value(&cycle);
    let len = cycle.len();
    let mut cycle_values = vec![0.0; len];
    let mut cycle_policy = vec![Action::Quit; len];
    let mut next = start;
    for k in (0..len).rev() {
        let (v, a) = cycle[k].step(next);
        cycle_values[k] = v;
        cycle_policy[k] = a;
        next = v;
    }
    // the fold reproduces the fixed point at position 0; keep the closed form
    cycle_values[0] = start;

    let mut prefix_values = vec![0.0; prefix.len()];
    let mut prefix_policy = vec![Action::Quit; prefix.len()];
    let mut next = start;
    for k in (0..prefix.len()).rev() {
        let (v, a) = prefix[k].step(next);
        prefix_values[k] = v;
        prefix_policy[k] = a;
        next = v;
    }

    let best_value = prefix_values.first().copied().unwrap_or(start);
    DeviationResult {
        player,
        best_value,
        prefix_values,
        cycle_values,
        prefix_policy,
        cycle_policy,
    }
}

/// Largest one-shot-deviation residual `|V_k − max(Q_k, A_k + B_k V_{k+1})|`
/// over all stage classes.
pub fn bellman_residual(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
    result: &DeviationResult,
) -> f64 {
    let player = result.player;
    let values: Vec<f64> = result
        .prefix_values
        .iter()
        .chain(&result.cycle_values)
        .copied()
        .collect();
    let span = pi.period_span();
    let prefix_len = pi.prefix().len();
    (0..span)
        .map(|k| {
            let next = if k + 1 < span {
                values[k + 1]
            } else {
                values[prefix_len]
            };
            let stage = DeviationStage::new(g, pi.stage(k), player);
            (values[k] - stage.step(next).0).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerGap {
    pub value: f64,
    pub best_value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatedCertificate {
    pub players: Vec<PlayerGap>,
    pub epsilon_star: f64,
}

pub fn equilibrium_certificate_repeated(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
) -> RepeatedCertificate {
    let values = repeated_payoff(g, pi).payoff;
    let players: Vec<_> = values
        .iter()
        .enumerate()
        .map(|(n, &value)| {
            let best_value = best_response(g, pi, n).best_value;
            PlayerGap {
                value,
                best_value,
                gap: (best_value - value).max(0.0),
            }
        })
        .collect();
    let epsilon_star = players.iter().fold(0.0, |a: f64, p| a.max(p.gap));
    RepeatedCertificate {
        players,
        epsilon_star,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgameCertificate {
    /// Equilibrium ε* of `π_j` for `j = 1 ..= |prefix| + |cycle|`.
    pub shifts: Vec<f64>,
    pub epsilon_star: f64,
    /// 1-indexed shift attaining `epsilon_star`.
    pub worst_shift: usize,
}

pub fn subgame_certificate(g: &QuittingGame, pi: &EventuallyCyclicProfile) -> SubgameCertificate {
    let shifts: Vec<f64> = (1..=pi.period_span())
        .map(|j| equilibrium_certificate_repeated(g, &pi.subgame(j)).epsilon_star)
        .collect();
    let (worst, epsilon_star) =
        shifts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &e)| {
                if e > best.1 {
                    (i, e)
                } else {
                    best
                }
            });
    SubgameCertificate {
        shifts,
        epsilon_star,
        worst_shift: worst + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_game() -> QuittingGame {
        QuittingGame::new(2, vec![vec![1.0, -1.0], vec![1.0, 1.0], vec![-2.0, -2.0]]).unwrap()
    }

    fn mp(v: &[f64]) -> MixedProfile {
        MixedProfile::new(v.to_vec()).unwrap()
    }

    fn stationary(v: &[f64]) -> EventuallyCyclicProfile {
        EventuallyCyclicProfile::stationary(mp(v))
    }

    /// Direct partial sum of the payoff series, stage by stage.
    fn series_oracle(g: &QuittingGame, pi: &EventuallyCyclicProfile, stages: usize) -> Vec<f64> {
        let n = g.num_players();
        let mut total = vec![0.0; n];
        for k in 0..stages {
            let survive: f64 = (0..k)
                .map(|i| pi.stage(i).probs().iter().map(|q| 1.0 - q).product::<f64>())
                .product();
            for s in Coalition::nonempty(n) {
                let w = survive * rho(pi.stage(k), s);
                for (acc, r) in total.iter_mut().zip(g.payoff(s)) {
                    *acc += w * r;
                }
            }
        }
        total
    }

    #[test]
    fn payoff_examples() {
        let g = base_game();
        let r = repeated_payoff(&g, &stationary(&[0.0, 0.0]));
        assert_eq!(r.payoff, vec![0.0, 0.0]);
        assert_eq!(r.termination_prob, 0.0);
        assert_eq!(r.per_cycle_continue, 1.0);

        let r = repeated_payoff(&g, &stationary(&[1.0, 0.0]));
        assert_eq!(r.payoff, vec![1.0, -1.0]);
        assert_eq!(r.termination_prob, 1.0);

        let pi = stationary(&[0.5, 0.0]);
        let r = repeated_payoff(&g, &pi);
        let oracle = series_oracle(&g, &pi, 200);
        assert!((r.payoff[0] - oracle[0]).abs() < 1e-10);
        assert!((r.payoff[1] - oracle[1]).abs() < 1e-10);
        assert!((r.payoff[0] - 1.0).abs() < 1e-12 && (r.payoff[1] + 1.0).abs() < 1e-12);

        let pi =
            EventuallyCyclicProfile::new(vec![], vec![mp(&[1.0, 0.0]), mp(&[0.0, 1.0])]).unwrap();
        let r = repeated_payoff(&g, &pi);
        assert_eq!(r.payoff, vec![1.0, -1.0]);
        assert_eq!(r.termination_prob, 1.0);
    }

    #[test]
    fn prefix_then_silent_cycle() {
        let g = base_game();
        let pi =
            EventuallyCyclicProfile::new(vec![mp(&[0.5, 0.0])], vec![mp(&[0.0, 0.0])]).unwrap();
        let r = repeated_payoff(&g, &pi);
        assert_eq!(r.payoff, vec![0.5, -0.5]);
        assert_eq!(r.termination_prob, 0.5);
    }

    #[test]
    fn truncation_examples() {
        let g = base_game();
        let t = truncated_payoff(&g, &stationary(&[1.0, 0.0]), 1);
        assert_eq!(t.payoff, vec![1.0, -1.0]);
        assert_eq!(t.tail_bound, 0.0);

        let t = truncated_payoff(&g, &stationary(&[0.5, 0.0]), 50);
        let bound = 0.5f64.powi(50) * g.r_max();
        assert!((t.payoff[0] - 1.0).abs() <= bound);
        assert!((t.payoff[1] + 1.0).abs() <= bound);

        let t = truncated_payoff(&g, &stationary(&[0.0, 0.0]), 10);
        assert_eq!(t.payoff, vec![0.0, 0.0]);
        assert_eq!(t.tail_bound, g.r_max());
    }

    #[test]
    fn best_response_trivial() {
        let quit_good =
            QuittingGame::new(2, vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let pi = stationary(&[0.0, 0.0]);
        let r = best_response(&quit_good, &pi, 0);
        assert_eq!(r.best_value, 1.0);
        assert_eq!(r.cycle_policy, vec![Action::Quit]);

        let quit_bad =
            QuittingGame::new(2, vec![vec![-1.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = best_response(&quit_bad, &pi, 0);
        assert_eq!(r.best_value, 0.0);
        assert_eq!(r.cycle_policy, vec![Action::Continue]);
    }

    #[test]
    fn base_game_player_two() {
        let g = base_game();
        let pi = stationary(&[1.0, 0.0]);
        let r = best_response(&g, &pi, 1);
        assert_eq!(r.best_value, -1.0);
        assert_eq!(r.cycle_policy, vec![Action::Continue]);
        let c = equilibrium_certificate_repeated(&g, &pi);
        assert_eq!(c.epsilon_star, 0.0);
        assert_eq!(c.players[0].best_value, 1.0);
    }

    #[test]
    fn silent_profile_invites_quitting() {
        let g =
            QuittingGame::new(2, vec![vec![0.7, 0.0], vec![0.0, -0.2], vec![0.0, 0.0]]).unwrap();
        let c = equilibrium_certificate_repeated(&g, &stationary(&[0.0, 0.0]));
        assert!(c.epsilon_star >= 0.7);
    }

    #[test]
    fn subgame_examples() {
        let g = base_game();
        let st = stationary(&[1.0, 0.0]);
        let s = subgame_certificate(&g, &st);
        assert_eq!(s.shifts.len(), 1);
        assert_eq!(
            s.epsilon_star,
            equilibrium_certificate_repeated(&g, &st).epsilon_star
        );

        // from stage 2 on nobody quits, so player 1 gains 1 by quitting and
        // player 2 gains 1 as well
        let pi =
            EventuallyCyclicProfile::new(vec![mp(&[1.0, 0.0])], vec![mp(&[0.0, 0.0])]).unwrap();
        let s = subgame_certificate(&g, &pi);
        let first = equilibrium_certificate_repeated(&g, &pi).epsilon_star;
        let second = equilibrium_certificate_repeated(&g, &pi.subgame(2)).epsilon_star;
        assert_eq!(first, 0.0);
        assert_eq!(second, 1.0);
        assert_eq!(s.shifts, vec![first, second]);
        assert_eq!(s.worst_shift, 2);

        let two =
            EventuallyCyclicProfile::new(vec![], vec![mp(&[0.5, 0.0]), mp(&[0.0, 0.5])]).unwrap();
        assert_eq!(subgame_certificate(&g, &two).shifts.len(), 2);
    }

    #[test]
    fn policy_attains_value() {
        let g = QuittingGame::new(
            3,
            (1..8)
                .map(|b| {
                    vec![
                        (b as f64 * 0.37).sin(),
                        (b as f64 * 1.3).cos(),
                        0.5 - b as f64 * 0.1,
                    ]
                })
                .collect(),
        )
        .unwrap();
        let pi = EventuallyCyclicProfile::new(
            vec![mp(&[0.2, 0.0, 0.9])],
            vec![
                mp(&[0.1, 0.3, 0.0]),
                mp(&[0.0, 0.6, 0.4]),
                mp(&[0.5, 0.5, 0.5]),
            ],
        )
        .unwrap();
        for n in 0..3 {
            let r = best_response(&g, &pi, n);
            let achieved = repeated_payoff(&g, &r.deviation_profile(&pi)).payoff[n];
            assert!((achieved - r.best_value).abs() < 1e-12);
            assert!(bellman_residual(&g, &pi, &r) < 1e-12);
            assert!(r.best_value >= repeated_payoff(&g, &pi).payoff[n] - 1e-9);
        }
    }
}
