//! One function per subcommand. Each returns the canonical inputs (for the
//! digest), the structured result and any warnings. Players are 1-indexed
//! in everything shown to the user.

use serde_json::{json, Value};

use quitting::format::{game_to_json, profile_to_json};
use quitting::montecarlo::simulate;
use quitting::one_step::{
    convert_certificates, equilibrium_certificate, game_constants, one_step_payoff,
    perfectness_report, SupportClass,
};
use quitting::perturbation::{theorem1_report, PerfectnessGuarantee};
use quitting::probability::continue_prob;
use quitting::repeated::{
    bellman_residual, best_response, equilibrium_certificate_repeated, repeated_payoff,
    subgame_certificate, truncated_payoff,
};
use quitting::solver::{construct_psi_member, find_one_step_equilibrium, PsiMembershipCertificate};
use quitting::{
    Action, Error, EventuallyCyclicProfile, MixedProfile, OneStepGame, QuittingGame, Result,
};

pub struct Outcome {
    pub inputs: Value,
    pub result: Value,
    pub warnings: Vec<String>,
}

fn action(a: Action) -> &'static str {
    match a {
        Action::Continue => "continue",
        Action::Quit => "quit",
    }
}

fn actions(list: &[Action]) -> Vec<&'static str> {
    list.iter().copied().map(action).collect()
}

fn class(c: SupportClass) -> &'static str {
    match c {
        SupportClass::AtZero => "at_zero",
        SupportClass::Interior => "interior",
        SupportClass::AtOne => "at_one",
    }
}

/// Converts a 1-indexed player to an internal index.
fn player_index(game: &QuittingGame, player: usize) -> Result<usize> {
    if player == 0 || player > game.num_players() {
        return Err(Error::BadPlayer {
            player,
            players: game.num_players(),
        });
    }
    Ok(player - 1)
}

fn one_step_inputs(g: &OneStepGame, p: Option<&MixedProfile>) -> Value {
    let mut inputs = json!({ "game": game_to_json(g.game()), "v": g.v() });
    if let Some(p) = p {
        inputs["p"] = json!(p.probs());
    }
    inputs
}

fn repeated_inputs(g: &QuittingGame, pi: &EventuallyCyclicProfile) -> Value {
    json!({ "game": game_to_json(g), "profile": profile_to_json(pi) })
}

fn boundary_warnings(g: &OneStepGame, p: &MixedProfile) -> Vec<String> {
    perfectness_report(g, p).warnings
}

pub fn eval_onestep(g: &OneStepGame, p: &MixedProfile) -> Result<Outcome> {
    g.game().check_profile(p)?;
    let c = game_constants(g);
    Ok(Outcome {
        inputs: one_step_inputs(g, Some(p)),
        result: json!({
            "payoff": one_step_payoff(g, p),
            "continue_prob": continue_prob(p),
            "r_max": c.r_max,
            "delta_v": c.delta_v,
        }),
        warnings: boundary_warnings(g, p),
    })
}

pub fn check_perfect(g: &OneStepGame, p: &MixedProfile) -> Result<Outcome> {
    g.game().check_profile(p)?;
    let r = perfectness_report(g, p);
    let players: Vec<Value> = (0..p.len())
        .map(|n| {
            json!({
                "player": n + 1,
                "prob": p.get(n),
                "class": class(r.classes[n]),
                "quit_advantage": r.diffs[n],
                "violation": r.violations[n],
            })
        })
        .collect();
    Ok(Outcome {
        inputs: one_step_inputs(g, Some(p)),
        result: json!({ "players": players, "epsilon_star": r.epsilon_star }),
        warnings: r.warnings,
    })
}

pub fn check_eq(g: &OneStepGame, p: &MixedProfile) -> Result<Outcome> {
    g.game().check_profile(p)?;
    let cert = equilibrium_certificate(g, p);
    let gains = cert.gains();
    let players: Vec<Value> = (0..p.len())
        .map(|n| {
            json!({
                "player": n + 1,
                "value": cert.current_values[n],
                "best_deviation_value": cert.best_deviation_values[n],
                "best_action": action(cert.best_actions[n]),
                "gain": gains[n],
            })
        })
        .collect();
    Ok(Outcome {
        inputs: one_step_inputs(g, Some(p)),
        result: json!({ "players": players, "epsilon_star": cert.epsilon_star }),
        warnings: boundary_warnings(g, p),
    })
}

pub fn convert(g: &OneStepGame, p: &MixedProfile) -> Result<Outcome> {
    g.game().check_profile(p)?;
    let r = convert_certificates(g, p);
    let sharper: Vec<Value> = r
        .sharper
        .iter()
        .map(|s| {
            json!({
                "player": s.player + 1,
                "lower": s.lower,
                "upper": s.upper,
                "quit_advantage": s.diff,
                "holds": s.holds,
            })
        })
        .collect();
    Ok(Outcome {
        inputs: one_step_inputs(g, Some(p)),
        result: json!({
            "xi_per_player": r.xi_per_player,
            "xi": r.xi,
            "equilibrium_epsilon": r.equilibrium_epsilon,
            "perfectness_epsilon": r.perfectness_epsilon,
            "forward_holds": r.forward_holds,
            "backward_bound": r.backward_bound,
            "backward_holds": r.backward_holds,
            "sharper_intervals": sharper,
        }),
        warnings: boundary_warnings(g, p),
    })
}

pub fn perturb(
    g: &OneStepGame,
    p: &MixedProfile,
    player: usize,
    lambda: f64,
    eta: f64,
) -> Result<Outcome> {
    g.game().check_profile(p)?;
    let m = player_index(g.game(), player)?;
    let r = theorem1_report(g, p, m, lambda, eta)?;
    let mut warnings = boundary_warnings(g, p);
    let guarantee = match &r.guarantee {
        PerfectnessGuarantee::Full {
            epsilon_star,
            holds,
        } => json!({
            "kind": "full",
            "epsilon_star": epsilon_star,
            "holds": holds,
        }),
        PerfectnessGuarantee::Partial {
            others_epsilon,
            others_hold,
            player_m_diff,
        } => {
            warnings.push(format!(
                "player {player} starts at probability 0; the perfectness bound covers the other players only"
            ));
            json!({
                "kind": "partial",
                "others_epsilon": others_epsilon,
                "others_hold": others_hold,
                "player_quit_advantage": player_m_diff,
            })
        }
    };
    let mut inputs = one_step_inputs(g, Some(p));
    inputs["player"] = json!(player);
    inputs["lambda"] = json!(lambda);
    inputs["eta"] = json!(eta);
    Ok(Outcome {
        inputs,
        result: json!({
            "player": player,
            "lambda": lambda,
            "eta": eta,
            "p_hat": r.p_hat,
            "r_max": r.r_max,
            "delta_v": r.delta_v,
            "continue_prob": {
                "before": r.continue_prob,
                "after": r.continue_prob_hat,
                "ratio": r.continue_prob_ratio,
                "residual": r.continue_residual,
                "holds": r.continue_identity_holds(),
            },
            "payoff": {
                "before": r.payoff,
                "after": r.payoff_hat,
                "mix_residual": r.payoff_mix_residual,
                "mix_holds": r.mix_identity_holds(),
                "shift": r.payoff_shift,
                "shift_bound": r.shift_bound,
                "shift_holds": r.shift_bound_holds(),
            },
            "perfectness": {
                "after": r.perfectness_hat,
                "eta_tilde": r.eta_tilde,
                "guarantee": guarantee,
            },
            "all_hold": r.all_hold(),
        }),
        warnings,
    })
}

pub fn eval(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
    truncate: Option<usize>,
) -> Result<Outcome> {
    g.check_cyclic(pi)?;
    let r = repeated_payoff(g, pi);
    let mut result = json!({
        "payoff": r.payoff,
        "termination_prob": r.termination_prob,
        "per_cycle_continue": r.per_cycle_continue,
    });
    let mut inputs = repeated_inputs(g, pi);
    if let Some(k) = truncate {
        let t = truncated_payoff(g, pi, k);
        result["truncated"] = json!({
            "horizon": k,
            "payoff": t.payoff,
            "tail_bound": t.tail_bound,
        });
        inputs["truncate"] = json!(k);
    }
    let mut warnings = Vec::new();
    if r.termination_prob < 1.0 {
        warnings.push(format!(
            "the game continues forever with probability {}; that branch pays 0",
            crate::output::format_number(1.0 - r.termination_prob)
        ));
    }
    Ok(Outcome {
        inputs,
        result,
        warnings,
    })
}

pub fn best_response_cmd(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
    player: usize,
) -> Result<Outcome> {
    g.check_cyclic(pi)?;
    let n = player_index(g, player)?;
    let value = repeated_payoff(g, pi).payoff[n];
    let br = best_response(g, pi, n);
    let mut inputs = repeated_inputs(g, pi);
    inputs["player"] = json!(player);
    Ok(Outcome {
        inputs,
        result: json!({
            "player": player,
            "value": value,
            "best_value": br.best_value,
            "gain": (br.best_value - value).max(0.0),
            "prefix_values": br.prefix_values,
            "prefix_policy": actions(&br.prefix_policy),
            "cycle_values": br.cycle_values,
            "cycle_policy": actions(&br.cycle_policy),
            "bellman_residual": bellman_residual(g, pi, &br),
        }),
        warnings: Vec::new(),
    })
}

pub fn check_eq_quitting(g: &QuittingGame, pi: &EventuallyCyclicProfile) -> Result<Outcome> {
    g.check_cyclic(pi)?;
    let cert = equilibrium_certificate_repeated(g, pi);
    let players: Vec<Value> = cert
        .players
        .iter()
        .enumerate()
        .map(|(n, p)| {
            json!({
                "player": n + 1,
                "value": p.value,
                "best_value": p.best_value,
                "gap": p.gap,
            })
        })
        .collect();
    Ok(Outcome {
        inputs: repeated_inputs(g, pi),
        result: json!({ "players": players, "epsilon_star": cert.epsilon_star }),
        warnings: Vec::new(),
    })
}

pub fn check_subgame(g: &QuittingGame, pi: &EventuallyCyclicProfile) -> Result<Outcome> {
    g.check_cyclic(pi)?;
    let cert = subgame_certificate(g, pi);
    let shifts: Vec<Value> = cert
        .shifts
        .iter()
        .enumerate()
        .map(|(j, e)| json!({ "stage": j + 1, "epsilon_star": e }))
        .collect();
    Ok(Outcome {
        inputs: repeated_inputs(g, pi),
        result: json!({
            "shifts": shifts,
            "epsilon_star": cert.epsilon_star,
            "worst_stage": cert.worst_shift,
        }),
        warnings: Vec::new(),
    })
}

pub fn solve_onestep(g: &OneStepGame, eps: f64) -> Result<Outcome> {
    let eqs = find_one_step_equilibrium(g, eps)?;
    let list: Vec<Value> = eqs
        .iter()
        .map(|p| {
            json!({
                "p": p.probs(),
                "payoff": one_step_payoff(g, p),
                "epsilon_star": equilibrium_certificate(g, p).epsilon_star,
            })
        })
        .collect();
    let mut inputs = one_step_inputs(g, None);
    inputs["eps"] = json!(eps);
    Ok(Outcome {
        inputs,
        result: json!({ "count": eqs.len(), "equilibria": list }),
        warnings: Vec::new(),
    })
}

fn psi_json(cert: &PsiMembershipCertificate) -> Value {
    json!({
        "v": cert.v,
        "eps": cert.eps,
        "r_max": cert.r_max,
        "source_profile": cert.p_source,
        "player": cert.m + 1,
        "p_hat": cert.p_hat,
        "payoff": cert.gamma_hat,
        "player_payoff": { "source": cert.gamma_m_source, "perturbed": cert.gamma_m_hat },
        "in_v": {
            "holds": cert.in_v.holds,
            "witness": cert.in_v.witness.map(|w| w + 1),
        },
        "perfect": {
            "holds": cert.perfect.holds,
            "epsilon_star": cert.perfect.epsilon_star,
            "bound": cert.perfect.bound,
        },
        "continue_prob": {
            "holds": cert.continue_bound.holds,
            "value": cert.continue_bound.continue_prob,
            "bound": cert.continue_bound.bound,
        },
        "valid": cert.is_valid(),
    })
}

pub fn psi(g: &OneStepGame, eps: f64) -> Result<Outcome> {
    let cert = construct_psi_member(g, eps)?;
    let mut inputs = one_step_inputs(g, None);
    inputs["eps"] = json!(eps);
    Ok(Outcome {
        inputs,
        result: psi_json(&cert),
        warnings: Vec::new(),
    })
}

pub fn simulate_cmd(
    g: &QuittingGame,
    pi: &EventuallyCyclicProfile,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<Outcome> {
    g.check_cyclic(pi)?;
    let s = simulate(g, pi, trials, horizon, seed);
    let histogram: serde_json::Map<String, Value> = s
        .quit_stage_histogram
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    let mut inputs = repeated_inputs(g, pi);
    inputs["trials"] = json!(trials);
    inputs["horizon"] = json!(horizon);
    inputs["seed"] = json!(seed);
    let mut warnings = Vec::new();
    let terminated: u64 = s.quit_stage_histogram.values().sum();
    if terminated < trials {
        warnings.push(format!(
            "{} of {trials} trials reached the horizon and were paid 0",
            trials - terminated
        ));
    }
    Ok(Outcome {
        inputs,
        result: json!({
            "trials": s.trials,
            "horizon": s.horizon,
            "seed": s.seed,
            "mean_payoff": s.mean_payoff,
            "stderr": s.stderr,
            "termination_rate": s.termination_rate,
            "quit_stage_histogram": histogram,
        }),
        warnings,
    })
}
