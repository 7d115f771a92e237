//! One-step equilibrium finding and the construction of a member of
//! `ψ_ε(v)`: a 2εr_max-perfect profile whose payoff stays in `V` and whose
//! continue probability is at most `1 − ε`.
//!
//! Equilibria are found by support enumeration. Each player is either
//! fixed at continue, fixed at quit, or mixing; a mixing player must be
//! indifferent, which gives one multilinear equation in the other mixers'
//! probabilities per mixer. Up to three mixers are solved in closed form
//! (linear, then a quadratic after elimination); four or more by Newton's
//! method from a seed grid. Every candidate is re-checked with the exact
//! equilibrium certificate before it is returned.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Coalition, MixedProfile, OneStepGame};
use crate::one_step::{
    equilibrium_certificate, game_constants, one_step_payoff, payoff_component, perfectness_report,
    quit_advantage,
};
use crate::perturbation::perturb;
use crate::probability::{continue_prob, rho};

/// Player count up to which exhaustive support enumeration runs.
pub const MAX_SOLVER_PLAYERS: usize = 5;

/// Slack on every `≤` comparison in ψ_ε certificates.
pub const CERT_SLACK: f64 = 1e-9;

/// Equilibrium tolerance used when searching for the source profile.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

const DEDUP_DISTANCE: f64 = 1e-6;
const DEGENERATE: f64 = 1e-12;
const NEWTON_ITERS: usize = 60;

/// Indifference system for a fixed set of mixing players.
///
/// `corners[i][mask]` is mixer `i`'s quit advantage with mixer `j` playing
/// quit iff bit `j` of `mask` is set (the own bit is always clear).
struct IndifferenceSystem {
    base: MixedProfile,
    mixers: Vec<usize>,
    corners: Vec<Vec<f64>>,
}

impl IndifferenceSystem {
    fn new(g: &OneStepGame, base: MixedProfile, mixers: Vec<usize>) -> Self {
        let k = mixers.len();
        let corners = (0..k)
            .map(|i| {
                (0..1u32 << k)
                    .map(|mask| {
                        if mask >> i & 1 == 1 {
                            return 0.0;
                        }
                        let p = (0..k).fold(base.clone(), |p, j| {
                            p.with_prob(mixers[j], f64::from(mask >> j & 1))
                        });
                        quit_advantage(g, &p, mixers[i])
                    })
                    .collect()
            })
            .collect();
        IndifferenceSystem {
            base,
            mixers,
            corners,
        }
    }

    fn k(&self) -> usize {
        self.mixers.len()
    }

    /// Mixer `i`'s quit advantage at mixer probabilities `x`.
    fn eval(&self, i: usize, x: &[f64]) -> f64 {
        let k = self.k();
        (0..1u32 << k)
            .filter(|mask| mask >> i & 1 == 0)
            .map(|mask| {
                let w = (0..k).filter(|&j| j != i).fold(1.0, |acc, j| {
                    if mask >> j & 1 == 1 {
                        acc * x[j]
                    } else {
                        acc * (1.0 - x[j])
                    }
                });
                w * self.corners[i][mask as usize]
            })
            .sum()
    }

    /// `(a, b, c, d)` with `eval(i) = a + b·x_j + c·x_l + d·x_j·x_l` for the
    /// two other mixers `j < l` (three-mixer systems only).
    fn bilinear(&self, i: usize) -> (usize, usize, [f64; 4]) {
        let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
        let (j, l) = (others[0], others[1]);
        let f = |bj: u32, bl: u32| self.corners[i][((bj << j) | (bl << l)) as usize];
        let a = f(0, 0);
        let b = f(1, 0) - a;
        let c = f(0, 1) - a;
        let d = f(1, 1) - f(1, 0) - f(0, 1) + a;
        (j, l, [a, b, c, d])
    }

    fn newton(&self, seed: &[f64]) -> Option<Vec<f64>> {
        let k = self.k();
        let mut x = seed.to_vec();
        for _ in 0..NEWTON_ITERS {
            let f = DVector::from_iterator(k, (0..k).map(|i| self.eval(i, &x)));
            if f.amax() < 1e-14 {
                return Some(x);
            }
            let jac = DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    return 0.0;
                }
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[j] = 1.0;
                lo[j] = 0.0;
                self.eval(i, &hi) - self.eval(i, &lo)
            });
            let step = jac.lu().solve(&(-f))?;
            for (xi, s) in x.iter_mut().zip(step.iter()) {
                *xi += s;
            }
            if x.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
                return None;
            }
        }
        let residual = (0..k).fold(0.0, |a: f64, i| a.max(self.eval(i, &x).abs()));
        (residual < 1e-10).then_some(x)
    }

    fn solutions(&self) -> Vec<Vec<f64>> {
        let raw = match self.k() {
            1 => {
                // constant advantage: a continuum of mixtures when it vanishes
                if self.corners[0][0].abs() <= DEGENERATE {
                    vec![vec![0.5]]
                } else {
                    vec![]
                }
            }
            2 => self.solve_two(),
            3 => self.solve_three(),
            k => {
                let grid = [0.2, 0.5, 0.8];
                let seeds = (0..grid.len().pow(k as u32)).map(|mut idx| {
                    (0..k)
                        .map(|_| {
                            let g = grid[idx % grid.len()];
                            idx /= grid.len();
                            g
                        })
                        .collect::<Vec<_>>()
                });
                seeds.filter_map(|s| self.newton(&s)).collect()
            }
        };
        raw.into_iter()
            .filter_map(|x| {
                // polish closed-form roots; keep them if Newton wanders off
                let x = if self.k() >= 2 {
                    self.newton(&x).unwrap_or(x)
                } else {
                    x
                };
                x.iter().all(|&v| v > 0.0 && v < 1.0).then_some(x)
            })
            .collect()
    }

    fn solve_two(&self) -> Vec<Vec<f64>> {
        // mixer 0's advantage is linear in x1, mixer 1's in x0
        let linear_root = |f0: f64, f1: f64| -> Option<f64> {
            let slope = f1 - f0;
            (slope.abs() > DEGENERATE).then(|| -f0 / slope)
        };
        let x1 = linear_root(self.corners[0][0], self.corners[0][2]);
        let x0 = linear_root(self.corners[1][0], self.corners[1][1]);
        match (x0, x1) {
            (Some(a), Some(b)) => vec![vec![a, b]],
            _ => vec![],
        }
    }

    fn solve_three(&self) -> Vec<Vec<f64>> {
        // eliminate x1 (from mixer 0) and x0 (from mixer 1) as linear
        // fractions of t = x2, then mixer 2's equation is quadratic in t
        let (_, _, [a1, b1, c1, d1]) = self.bilinear(0); // in (x1, x2)
        let (_, _, [a2, b2, c2, d2]) = self.bilinear(1); // in (x0, x2)
        let (_, _, [a3, b3, c3, d3]) = self.bilinear(2); // in (x0, x1)
                                                         // x1 = -A1/B1, x0 = -A2/B2 with A = a + c t, B = b + d t
        let lin = |p: f64, q: f64| [p, q];
        let mul = |u: [f64; 2], v: [f64; 2]| [u[0] * v[0], u[0] * v[1] + u[1] * v[0], u[1] * v[1]];
        let (big_a1, big_b1) = (lin(a1, c1), lin(b1, d1));
        let (big_a2, big_b2) = (lin(a2, c2), lin(b2, d2));
        let terms = [
            (a3, mul(big_b1, big_b2)),
            (-b3, mul(big_a2, big_b1)),
            (-c3, mul(big_a1, big_b2)),
            (d3, mul(big_a1, big_a2)),
        ];
        let mut poly = [0.0; 3];
        for (coef, q) in terms {
            for (acc, x) in poly.iter_mut().zip(q) {
                *acc += coef * x;
            }
        }
        let scale = poly.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
        if scale == 0.0 {
            return vec![];
        }
        let roots = quadratic_roots(poly[2] / scale, poly[1] / scale, poly[0] / scale);
        roots
            .into_iter()
            .filter_map(|t| {
                let den1 = b1 + d1 * t;
                let den2 = b2 + d2 * t;
                if den1.abs() <= DEGENERATE || den2.abs() <= DEGENERATE {
                    return None;
                }
                let x1 = -(a1 + c1 * t) / den1;
                let x0 = -(a2 + c2 * t) / den2;
                Some(vec![x0, x1, t])
            })
            .collect()
    }

    fn profile(&self, x: &[f64]) -> Option<MixedProfile> {
        let probs =
            self.mixers
                .iter()
                .zip(x)
                .fold(self.base.probs().to_vec(), |mut probs, (&i, &v)| {
                    probs[i] = v;
                    probs
                });
        MixedProfile::new(probs).ok()
    }
}

/// Real roots of `a t² + b t + c`, tolerating a vanishing leading term.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() <= DEGENERATE {
        if b.abs() <= DEGENERATE {
            return vec![];
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Profiles whose equilibrium ε* is at most `eps`, sorted lexicographically
/// and deduplicated.
pub fn find_one_step_equilibrium(g: &OneStepGame, eps: f64) -> Result<Vec<MixedProfile>> {
    let n = g.num_players();
    if n > MAX_SOLVER_PLAYERS {
        return Err(Error::TooManyPlayers {
            players: n,
            max: MAX_SOLVER_PLAYERS,
        });
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::BadEpsilon(eps));
    }
    // each player: 0 = continue, 1 = quit, 2 = mix
    let assignments: Vec<Vec<u8>> = (0..3usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let c = (code % 3) as u8;
                    code /= 3;
                    c
                })
                .collect()
        })
        .collect();

    let candidates: Vec<MixedProfile> = assignments
        .par_iter()
        .map(|classes| {
            let probs = classes
                .iter()
                .map(|&c| if c == 1 { 1.0 } else { 0.0 })
                .collect();
            let base = MixedProfile::new(probs).expect("pure profile");
            let mixers: Vec<usize> = (0..n).filter(|&i| classes[i] == 2).collect();
            if mixers.is_empty() {
                return vec![base];
            }
            let system = IndifferenceSystem::new(g, base, mixers);
            system
                .solutions()
                .iter()
                .filter_map(|x| system.profile(x))
                .collect()
        })
        .flatten()
        .filter(|p| equilibrium_certificate(g, p).epsilon_star <= eps)
        .collect();

    let mut sorted = candidates;
    sorted.sort_by(|a, b| {
        a.probs()
            .iter()
            .zip(b.probs())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut found: Vec<MixedProfile> = Vec::new();
    for p in sorted {
        if found.iter().all(|q| q.distance(&p) > DEDUP_DISTANCE) {
            found.push(p);
        }
    }
    if found.is_empty() {
        return Err(Error::NoneFound { eps });
    }
    Ok(found)
}

/// Player whose quit probability gets shifted toward 1.
///
/// For `p = 0` this is the first player with `v^m = 1`; otherwise the first
/// player with `p^m > 0` and `γ_v^m(p) ≤ 1`.
pub fn select_player_m(g: &OneStepGame, p: &MixedProfile) -> Result<usize> {
    g.game().check_profile(p)?;
    let n = g.num_players();
    if p.is_zero() {
        return (0..n)
            .find(|&m| (g.v()[m] - 1.0).abs() <= CERT_SLACK)
            .ok_or_else(|| {
                Error::NoQualifyingPlayer(
                    "the all-continue profile needs a player with v^m = 1".into(),
                )
            });
    }
    (0..n)
        .find(|&m| p.get(m) > 0.0 && payoff_component(g, p, m) <= 1.0 + CERT_SLACK)
        .ok_or_else(|| {
            Error::NoQualifyingPlayer("every quitting player has an expected payoff above 1".into())
        })
}

/// Membership test for `V = {ṽ ∈ [−2r_max, 2r_max]^N : ∃n ṽ^n ≤ 1}`.
/// Returns the first witness player when `x ∈ V` within `slack`.
pub fn in_v(x: &[f64], r_max: f64, slack: f64) -> Option<usize> {
    let bound = 2.0 * r_max + slack;
    if x.iter().any(|v| v.abs() > bound) {
        return None;
    }
    x.iter().position(|&v| v <= 1.0 + slack)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InVCheck {
    pub holds: bool,
    pub witness: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfectCheck {
    pub holds: bool,
    pub epsilon_star: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinueCheck {
    pub holds: bool,
    pub continue_prob: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiMembershipCertificate {
    pub v: Vec<f64>,
    pub eps: f64,
    pub r_max: f64,
    pub p_source: Vec<f64>,
    pub m: usize,
    pub p_hat: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    /// `γ_v^m(p)` and `γ_v^m(p̂)` for the selected player.
    pub gamma_m_source: f64,
    pub gamma_m_hat: f64,
    pub in_v: InVCheck,
    pub perfect: PerfectCheck,
    pub continue_bound: ContinueCheck,
}

impl PsiMembershipCertificate {
    pub fn is_valid(&self) -> bool {
        self.in_v.holds && self.perfect.holds && self.continue_bound.holds
    }
}

fn check_assumptions(g: &OneStepGame, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadEpsilon(eps));
    }
    let game = g.game();
    for n in 0..g.num_players() {
        let own = game.payoff(Coalition::singleton(n))[n];
        if (own - 1.0).abs() > DEGENERATE {
            return Err(Error::AssumptionViolated(format!(
                "r^{0}_{{{0}}} = {own}, expected 1",
                n + 1
            )));
        }
    }
    let r_max = game.r_max();
    if g.v().iter().any(|x| x.abs() > 2.0 * r_max) {
        return Err(Error::AssumptionViolated(format!(
            "v lies outside [-2 r_max, 2 r_max]^N with r_max = {r_max}"
        )));
    }
    if g.v().iter().all(|&x| x > 1.0) {
        return Err(Error::AssumptionViolated(
            "v has no component at most 1".into(),
        ));
    }
    Ok(r_max)
}

/// Ranking key among equilibria usable as the source profile: the smallest
/// margin `1 − γ_v^n(p)` over quitting players, larger is better.
fn selection_margin(g: &OneStepGame, p: &MixedProfile) -> f64 {
    (0..g.num_players())
        .filter(|&n| p.get(n) > 0.0)
        .map(|n| 1.0 - payoff_component(g, p, n))
        .fold(f64::INFINITY, f64::min)
}

/// Builds `p̂` with `γ_v(p̂) ∈ ψ_ε(v)` and certifies it.
pub fn construct_psi_member(g: &OneStepGame, eps: f64) -> Result<PsiMembershipCertificate> {
    let r_max = check_assumptions(g, eps)?;
    let equilibria = find_one_step_equilibrium(g, EQUILIBRIUM_TOL).map_err(|e| match e {
        Error::NoneFound { .. } => Error::NoEquilibriumFound(e.to_string()),
        other => other,
    })?;

    let zero = equilibria
        .iter()
        .find(|p| p.is_zero())
        .and_then(|p| select_player_m(g, p).ok().map(|m| (p.clone(), m)));
    let (source, m) = match zero {
        Some(choice) => choice,
        None => {
            let mut best: Option<(f64, MixedProfile, usize)> = None;
            for p in equilibria.iter().filter(|p| !p.is_zero()) {
                let Ok(m) = select_player_m(g, p) else {
                    continue;
                };
                let margin = selection_margin(g, p);
                if best.as_ref().is_none_or(|(b, _, _)| margin > *b) {
                    best = Some((margin, p.clone(), m));
                }
            }
            let (_, p, m) = best.ok_or_else(|| {
                Error::AssumptionViolated(
                    "no equilibrium is all-continue or has a quitting player with payoff at most 1"
                        .into(),
                )
            })?;
            (p, m)
        }
    };

    let p_hat = perturb(&source, m, eps)?;
    let gamma_hat = one_step_payoff(g, &p_hat);
    let witness = in_v(&gamma_hat, r_max, CERT_SLACK);
    let perf_bound = 2.0 * eps * r_max;
    let perf = perfectness_report(g, &p_hat).epsilon_star;
    let cont = continue_prob(&p_hat);
    Ok(PsiMembershipCertificate {
        v: g.v().to_vec(),
        eps,
        r_max,
        p_source: source.probs().to_vec(),
        m,
        gamma_m_source: payoff_component(g, &source, m),
        gamma_m_hat: gamma_hat[m],
        p_hat: p_hat.probs().to_vec(),
        gamma_hat,
        in_v: InVCheck {
            holds: witness.is_some(),
            witness,
        },
        perfect: PerfectCheck {
            holds: perf <= perf_bound + CERT_SLACK,
            epsilon_star: perf,
            bound: perf_bound,
        },
        continue_bound: ContinueCheck {
            holds: cont <= 1.0 - eps + CERT_SLACK,
            continue_prob: cont,
            bound: 1.0 - eps,
        },
    })
}

/// Independent re-check of a certificate from `p̂` alone: payoff by direct
/// enumeration of pure action profiles, perfectness, and the continue
/// probability.
pub fn verify_psi_certificate(g: &OneStepGame, cert: &PsiMembershipCertificate) -> bool {
    let Ok(p_hat) = MixedProfile::new(cert.p_hat.clone()) else {
        return false;
    };
    if g.game().check_profile(&p_hat).is_err() {
        return false;
    }
    let n = g.num_players();
    let r_max = game_constants(g).r_max;
    let mut gamma = vec![0.0; n];
    for s in Coalition::all(n) {
        let w = rho(&p_hat, s);
        for (acc, x) in gamma.iter_mut().zip(g.outcome(s)) {
            *acc += w * x;
        }
    }
    let in_v_ok = in_v(&gamma, r_max, CERT_SLACK).is_some();
    let perf_ok = perfectness_report(g, &p_hat).epsilon_star <= 2.0 * cert.eps * r_max + CERT_SLACK;
    let cont_ok = rho(&p_hat, Coalition::EMPTY) <= 1.0 - cert.eps + CERT_SLACK;
    in_v_ok && perf_ok && cont_ok
}
