//! The one-step game `Γ_v`: expected payoffs, ε-perfectness, ε-equilibrium,
//! and the conversion between the two certificates.
//!
//! Expected payoffs are linear in each player's own quit probability, so
//! every deviation question reduces to comparing the two pure actions. The
//! quantity that drives everything here is a player's *quit advantage*
//! `γ_v^n((p^{−n},1)) − γ_v^n((p^{−n},0))`.

use serde::Serialize;

use crate::game::{Action, Coalition, MixedProfile, OneStepGame};
use crate::probability::rho;

/// Probabilities this close to a boundary are classified exactly but flagged.
pub const NEAR_BOUNDARY: f64 = 1e-12;

fn assert_dims(g: &OneStepGame, p: &MixedProfile) {
    assert_eq!(
        g.num_players(),
        p.len(),
        "profile length must match the number of players"
    );
}

/// Expected payoff vector `γ_v(p) = ϱ(p,∅)·v + Σ_{S≠∅} ϱ(p,S)·r_S`.
pub fn one_step_payoff(g: &OneStepGame, p: &MixedProfile) -> Vec<f64> {
    assert_dims(g, p);
    let n = g.num_players();
    let mut total = vec![0.0; n];
    for s in Coalition::all(n) {
        let w = rho(p, s);
        if w == 0.0 {
            continue;
        }
        for (t, r) in total.iter_mut().zip(g.outcome(s)) {
            *t += w * r;
        }
    }
    total
}

/// Single component `γ_v^n(p)`.
pub fn payoff_component(g: &OneStepGame, p: &MixedProfile, player: usize) -> f64 {
    assert_dims(g, p);
    Coalition::all(g.num_players())
        .map(|s| rho(p, s) * g.outcome(s)[player])
        .sum()
}

/// `γ_v((p^{−n}, b))`.
pub fn payoff_with_pure_action(
    g: &OneStepGame,
    p: &MixedProfile,
    player: usize,
    action: Action,
) -> Vec<f64> {
    one_step_payoff(g, &p.with_action(player, action))
}

/// Quit advantage of `player` against `p^{−n}`.
pub fn quit_advantage(g: &OneStepGame, p: &MixedProfile, player: usize) -> f64 {
    payoff_component(g, &p.with_prob(player, 1.0), player)
        - payoff_component(g, &p.with_prob(player, 0.0), player)
}

/// Which pure actions a player's mixture puts positive weight on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SupportClass {
    AtZero,
    Interior,
    AtOne,
}

impl SupportClass {
    /// Exact classification: only `0.0` and `1.0` are boundary values.
    pub fn of(q: f64) -> Self {
        if q == 0.0 {
            SupportClass::AtZero
        } else if q == 1.0 {
            SupportClass::AtOne
        } else {
            SupportClass::Interior
        }
    }

    /// Smallest ε for which a player of this class with quit advantage
    /// `diff` satisfies the perfectness inequality.
    pub fn violation(self, diff: f64) -> f64 {
        match self {
            SupportClass::AtZero => diff.max(0.0),
            SupportClass::Interior => diff.abs(),
            SupportClass::AtOne => (-diff).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfectnessReport {
    pub diffs: Vec<f64>,
    pub classes: Vec<SupportClass>,
    /// Per-player ε needed; `epsilon_star` is their maximum.
    pub violations: Vec<f64>,
    pub epsilon_star: f64,
    pub warnings: Vec<String>,
}

impl PerfectnessReport {
    pub fn is_perfect(&self, eps: f64) -> bool {
        self.epsilon_star <= eps
    }
}

pub fn perfectness_report(g: &OneStepGame, p: &MixedProfile) -> PerfectnessReport {
    assert_dims(g, p);
    let n = g.num_players();
    let mut warnings = Vec::new();
    let classes: Vec<_> = p.probs().iter().map(|&q| SupportClass::of(q)).collect();
    for (i, &q) in p.probs().iter().enumerate() {
        if (q > 0.0 && q < NEAR_BOUNDARY) || (q < 1.0 && 1.0 - q < NEAR_BOUNDARY) {
            warnings.push(format!(
                "player {}: probability {q:e} is within {NEAR_BOUNDARY:e} of a boundary but classified as interior",
                i + 1
            ));
        }
    }
    let diffs: Vec<_> = (0..n).map(|i| quit_advantage(g, p, i)).collect();
    let violations: Vec<_> = classes
        .iter()
        .zip(&diffs)
        .map(|(c, &d)| c.violation(d))
        .collect();
    let epsilon_star = violations.iter().fold(0.0, |a: f64, &b| a.max(b));
    PerfectnessReport {
        diffs,
        classes,
        violations,
        epsilon_star,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumCertificate {
    pub current_values: Vec<f64>,
    pub best_deviation_values: Vec<f64>,
    /// Pure action attaining the best deviation value (ties favour quitting).
    pub best_actions: Vec<Action>,
    pub epsilon_star: f64,
}

impl EquilibriumCertificate {
    pub fn gains(&self) -> Vec<f64> {
        self.best_deviation_values
            .iter()
            .zip(&self.current_values)
            .map(|(b, c)| (b - c).max(0.0))
            .collect()
    }
}

pub fn equilibrium_certificate(g: &OneStepGame, p: &MixedProfile) -> EquilibriumCertificate {
    let n = g.num_players();
    let current_values = one_step_payoff(g, p);
    let mut best_deviation_values = Vec::with_capacity(n);
    let mut best_actions = Vec::with_capacity(n);
    let mut epsilon_star: f64 = 0.0;
    for (i, current) in current_values.iter().enumerate() {
        let quit = payoff_component(g, &p.with_prob(i, 1.0), i);
        let cont = payoff_component(g, &p.with_prob(i, 0.0), i);
        let (best, action) = if quit >= cont {
            (quit, Action::Quit)
        } else {
            (cont, Action::Continue)
        };
        epsilon_star = epsilon_star.max(best - current);
        best_deviation_values.push(best);
        best_actions.push(action);
    }
    EquilibriumCertificate {
        current_values,
        best_deviation_values,
        best_actions,
        epsilon_star,
    }
}

/// Conversion factor for one player: `max(1/p, 1/(1−p))` inside `(0,1)`, 1 at
/// the boundary.
pub fn xi_player(q: f64) -> f64 {
    match SupportClass::of(q) {
        SupportClass::Interior => (1.0 / q).max(1.0 / (1.0 - q)),
        _ => 1.0,
    }
}

pub fn xi(p: &MixedProfile) -> f64 {
    p.probs().iter().map(|&q| xi_player(q)).fold(1.0, f64::max)
}

/// Interval `[−ε/p^n, ε/(1−p^n)]` an interior player's quit advantage must
/// lie in when `p` is an ε-equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharperInterval {
    pub player: usize,
    pub lower: f64,
    pub upper: f64,
    pub diff: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversionReport {
    pub xi_per_player: Vec<f64>,
    pub xi: f64,
    pub equilibrium_epsilon: f64,
    pub perfectness_epsilon: f64,
    /// ε-perfect ⇒ ε-equilibrium: equilibrium ε* ≤ perfectness ε*.
    pub forward_holds: bool,
    /// ε-equilibrium ⇒ ε·ξ_p-perfect: perfectness ε* ≤ ξ_p · equilibrium ε*.
    pub backward_holds: bool,
    pub backward_bound: f64,
    pub sharper: Vec<SharperInterval>,
}

pub const CONVERSION_TOL: f64 = 1e-10;

pub fn convert_certificates(g: &OneStepGame, p: &MixedProfile) -> ConversionReport {
    let eq = equilibrium_certificate(g, p);
    let perf = perfectness_report(g, p);
    let xi_per_player: Vec<_> = p.probs().iter().map(|&q| xi_player(q)).collect();
    let xi = xi_per_player.iter().copied().fold(1.0, f64::max);
    let eps = eq.epsilon_star;
    let backward_bound = xi * eps;
    let sharper = p
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &q)| SupportClass::of(q) == SupportClass::Interior)
        .map(|(i, &q)| {
            let lower = -eps / q;
            let upper = eps / (1.0 - q);
            let diff = perf.diffs[i];
            SharperInterval {
                player: i,
                lower,
                upper,
                diff,
                holds: diff >= lower - CONVERSION_TOL && diff <= upper + CONVERSION_TOL,
            }
        })
        .collect();
    ConversionReport {
        xi_per_player,
        xi,
        equilibrium_epsilon: eps,
        perfectness_epsilon: perf.epsilon_star,
        forward_holds: eps <= perf.epsilon_star + CONVERSION_TOL,
        backward_holds: perf.epsilon_star <= backward_bound + CONVERSION_TOL,
        backward_bound,
        sharper,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameConstants {
    pub r_max: f64,
    pub delta_v: f64,
}

pub fn game_constants(g: &OneStepGame) -> GameConstants {
    let r_max = g.game().r_max();
    let v_max = g.v().iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    GameConstants {
        r_max,
        delta_v: v_max.max(r_max),
    }
}
