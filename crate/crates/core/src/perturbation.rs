//! Shifting one player's quit probability toward certain quitting, and the
//! four guarantees that come with it: the continue probability shrinks by
//! the factor `1 − λ`, the payoff is the matching convex mixture, the payoff
//! moves by at most `λ(r_max + δ_v)`, and perfectness degrades to at most
//! `max(2λ r_max + (1 − λ)η, η)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{MixedProfile, OneStepGame};
use crate::one_step::{game_constants, one_step_payoff, perfectness_report};
use crate::probability::continue_prob;

/// Slack allowed on every inequality checked here.
pub const TOLERANCE: f64 = 1e-10;

/// `p̂ = (p^{−m}, (1 − λ)p^m + λ)`.
pub fn perturb(p: &MixedProfile, player: usize, lambda: f64) -> Result<MixedProfile> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadLambda(lambda));
    }
    if player >= p.len() {
        return Err(Error::BadPlayer {
            player: player + 1,
            players: p.len(),
        });
    }
    let q = (1.0 - lambda) * p.get(player) + lambda;
    Ok(p.with_prob(player, q.min(1.0)))
}

/// Perfectness guarantee for `p̂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerfectnessGuarantee {
    /// `p^m ∈ (0, 1]`: every player satisfies the η̃ inequalities.
    Full { epsilon_star: f64, holds: bool },
    /// `p^m = 0`: only players other than `m` are covered; player `m`'s
    /// quit advantage is reported without a two-sided bound.
    Partial {
        others_epsilon: f64,
        others_hold: bool,
        player_m_diff: f64,
    },
}

impl PerfectnessGuarantee {
    pub fn holds(&self) -> bool {
        match self {
            PerfectnessGuarantee::Full { holds, .. } => *holds,
            PerfectnessGuarantee::Partial { others_hold, .. } => *others_hold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub player: usize,
    pub lambda: f64,
    pub eta: f64,
    pub p_hat: Vec<f64>,
    pub r_max: f64,
    pub delta_v: f64,
    pub continue_prob: f64,
    pub continue_prob_hat: f64,
    /// `ϱ(p̂,∅)/ϱ(p,∅)`, absent when `ϱ(p,∅) = 0`.
    pub continue_prob_ratio: Option<f64>,
    pub continue_residual: f64,
    pub payoff: Vec<f64>,
    pub payoff_hat: Vec<f64>,
    pub payoff_mix_residual: f64,
    pub payoff_shift: f64,
    pub shift_bound: f64,
    pub eta_tilde: f64,
    pub perfectness_hat: f64,
    pub guarantee: PerfectnessGuarantee,
}

impl PerturbationReport {
    pub fn continue_identity_holds(&self) -> bool {
        self.continue_residual <= 1e-12
    }

    pub fn mix_identity_holds(&self) -> bool {
        self.payoff_mix_residual <= TOLERANCE
    }

    pub fn shift_bound_holds(&self) -> bool {
        self.payoff_shift <= self.shift_bound + TOLERANCE
    }

    pub fn all_hold(&self) -> bool {
        self.continue_identity_holds()
            && self.mix_identity_holds()
            && self.shift_bound_holds()
            && self.guarantee.holds()
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc: f64, (x, y)| acc.max((x - y).abs()))
}

/// Builds `p̂` and evaluates all four guarantees. `eta` is re-verified
/// against `p` first.
pub fn theorem1_report(
    g: &OneStepGame,
    p: &MixedProfile,
    player: usize,
    lambda: f64,
    eta: f64,
) -> Result<PerturbationReport> {
    g.game().check_profile(p)?;
    g.game().check_player(player)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::NotEtaPerfect {
            eta,
            actual: f64::NAN,
        });
    }
    let p_hat = perturb(p, player, lambda)?;
    let actual = perfectness_report(g, p).epsilon_star;
    if actual > eta + TOLERANCE {
        return Err(Error::NotEtaPerfect { eta, actual });
    }

    let consts = game_constants(g);
    let c = continue_prob(p);
    let c_hat = continue_prob(&p_hat);

    let payoff = one_step_payoff(g, p);
    let payoff_hat = one_step_payoff(g, &p_hat);
    let payoff_quit = one_step_payoff(g, &p.with_prob(player, 1.0));
    let mixed: Vec<_> = payoff
        .iter()
        .zip(&payoff_quit)
        .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
        .collect();

    let eta_tilde = (2.0 * lambda * consts.r_max + (1.0 - lambda) * eta).max(eta);
    let hat = perfectness_report(g, &p_hat);
    let guarantee = if p.get(player) > 0.0 {
        PerfectnessGuarantee::Full {
            epsilon_star: hat.epsilon_star,
            holds: hat.epsilon_star <= eta_tilde + TOLERANCE,
        }
    } else {
        let others_epsilon = hat
            .violations
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != player)
            .fold(0.0, |a: f64, (_, &b)| a.max(b));
        PerfectnessGuarantee::Partial {
            others_epsilon,
            others_hold: others_epsilon <= eta_tilde + TOLERANCE,
            player_m_diff: hat.diffs[player],
        }
    };

    Ok(PerturbationReport {
        player,
        lambda,
        eta,
        p_hat: p_hat.probs().to_vec(),
        r_max: consts.r_max,
        delta_v: consts.delta_v,
        continue_prob: c,
        continue_prob_hat: c_hat,
        continue_prob_ratio: (c > 0.0).then(|| c_hat / c),
        continue_residual: (c_hat - (1.0 - lambda) * c).abs(),
        payoff_mix_residual: max_abs_diff(&payoff_hat, &mixed),
        payoff_shift: max_abs_diff(&payoff_hat, &payoff),
        shift_bound: lambda * (consts.r_max + consts.delta_v),
        payoff,
        payoff_hat,
        eta_tilde,
        perfectness_hat: hat.epsilon_star,
        guarantee,
    })
}
