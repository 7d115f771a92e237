//! `qg`: command-line front end for quitting-game analysis.
//!
//! Exit codes: 0 on success, 1 for domain errors (reported with the error
//! name), 2 for usage errors.

mod commands;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use commands::Outcome;
use quitting::format::{
    parse_game, parse_number, parse_one_step_input, parse_profile, parse_vector,
};
use quitting::montecarlo::DEFAULT_HORIZON;
use quitting::{EventuallyCyclicProfile, MixedProfile, OneStepGame, QuittingGame};

#[derive(Parser)]
#[command(
    name = "qg",
    version,
    about = "Payoffs, certificates and equilibria for quitting games"
)]
struct Cli {
    /// Print the result as JSON instead of a table
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

/// A comma-separated vector such as `0.1,0` or `9/10,10/9`.
#[derive(Clone, Debug)]
struct Vector(Vec<f64>);

fn vector(text: &str) -> Result<Vector, String> {
    parse_vector(text).map(Vector).map_err(|e| e.to_string())
}

fn number(text: &str) -> Result<f64, String> {
    parse_number(text).map_err(|e| e.to_string())
}

#[derive(Args)]
struct GameV {
    /// Game file
    #[arg(long, value_name = "FILE")]
    game: PathBuf,
    /// Continuation payoff vector
    #[arg(long, value_name = "V", value_parser = vector, allow_hyphen_values = true)]
    v: Option<Vector>,
    /// One-step input file with "v" and/or "p"
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct GameVp {
    #[command(flatten)]
    base: GameV,
    /// Stage profile: one quit probability per player
    #[arg(long, value_name = "P", value_parser = vector, allow_hyphen_values = true)]
    p: Option<Vector>,
}

#[derive(Args)]
struct GameProfile {
    /// Game file
    #[arg(long, value_name = "FILE")]
    game: PathBuf,
    /// Eventually-cyclic profile file
    #[arg(long, value_name = "FILE")]
    profile: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One-step payoff of a stage profile
    EvalOnestep(GameVp),
    /// Perfectness certificate of a stage profile
    CheckPerfect(GameVp),
    /// Equilibrium certificate of a stage profile
    CheckEq(GameVp),
    /// Conversion between equilibrium and perfectness certificates
    Convert(GameVp),
    /// Shift one player's quit probability toward 1 and check the bounds
    Perturb {
        #[command(flatten)]
        args: GameVp,
        /// Player to perturb (1-indexed)
        #[arg(long)]
        player: usize,
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        lambda: f64,
        /// Perfectness level claimed for the unperturbed profile
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        eta: f64,
    },
    /// Expected payoff of an eventually-cyclic profile
    Eval {
        #[command(flatten)]
        args: GameProfile,
        /// Also report the partial sum over the first K stages
        #[arg(long, value_name = "K")]
        truncate: Option<usize>,
    },
    /// Best unilateral deviation of one player
    BestResponse {
        #[command(flatten)]
        args: GameProfile,
        /// Deviating player (1-indexed)
        #[arg(long)]
        player: usize,
    },
    /// Equilibrium certificate of an eventually-cyclic profile
    CheckEqQuitting(GameProfile),
    /// Equilibrium certificate of every subgame profile
    CheckSubgame(GameProfile),
    /// All equilibria of the one-step game
    SolveOnestep {
        #[command(flatten)]
        args: GameV,
        /// Equilibrium tolerance
        #[arg(long, value_parser = number, allow_hyphen_values = true, default_value = "1e-9")]
        eps: f64,
    },
    /// Construct and certify a member of psi_eps(v)
    Psi {
        #[command(flatten)]
        args: GameV,
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        eps: f64,
    },
    /// Monte-Carlo estimate of the expected payoff
    Simulate {
        #[command(flatten)]
        args: GameProfile,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_HORIZON, value_parser = clap::value_parser!(u64).range(1..))]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::EvalOnestep(_) => "eval-onestep",
            Command::CheckPerfect(_) => "check-perfect",
            Command::CheckEq(_) => "check-eq",
            Command::Convert(_) => "convert",
            Command::Perturb { .. } => "perturb",
            Command::Eval { .. } => "eval",
            Command::BestResponse { .. } => "best-response",
            Command::CheckEqQuitting(_) => "check-eq-quitting",
            Command::CheckSubgame(_) => "check-subgame",
            Command::SolveOnestep { .. } => "solve-onestep",
            Command::Psi { .. } => "psi",
            Command::Simulate { .. } => "simulate",
        }
    }
}

enum Failure {
    Usage(String),
    Domain(quitting::Error),
}

impl From<quitting::Error> for Failure {
    fn from(e: quitting::Error) -> Self {
        Failure::Domain(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Domain(e) => write!(f, "{}: {e}", e.name()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_game(path: &Path) -> Result<QuittingGame, Failure> {
    Ok(parse_game(&read(path)?)?)
}

fn load_profile(path: &Path) -> Result<EventuallyCyclicProfile, Failure> {
    Ok(parse_profile(&read(path)?)?)
}

/// Picks a vector from the flag or the input file; both at once is an error.
fn pick(name: &str, flag: Option<Vector>, file: Option<Vec<f64>>) -> Result<Vec<f64>, Failure> {
    match (flag, file) {
        (Some(_), Some(_)) => Err(Failure::Usage(format!(
            "--{name} conflicts with \"{name}\" in the input file"
        ))),
        (Some(Vector(v)), None) | (None, Some(v)) => Ok(v),
        (None, None) => Err(Failure::Usage(format!(
            "missing --{name} (or \"{name}\" in --input)"
        ))),
    }
}

fn load_one_step(
    args: GameV,
    p: Option<Option<Vector>>,
) -> Result<(OneStepGame, Option<MixedProfile>), Failure> {
    let game = load_game(&args.game)?;
    let file = match &args.input {
        Some(path) => parse_one_step_input(&read(path)?)?,
        None => Default::default(),
    };
    let v = pick("v", args.v, file.v)?;
    let g = OneStepGame::new(game, v)?;
    let p = match p {
        Some(flag) => {
            let p = MixedProfile::new(pick("p", flag, file.p)?)?;
            g.game().check_profile(&p)?;
            Some(p)
        }
        None => None,
    };
    Ok((g, p))
}

fn with_p(args: GameVp) -> Result<(OneStepGame, MixedProfile), Failure> {
    let (g, p) = load_one_step(args.base, Some(args.p))?;
    Ok((g, p.expect("profile requested")))
}

fn repeated(args: &GameProfile) -> Result<(QuittingGame, EventuallyCyclicProfile), Failure> {
    Ok((load_game(&args.game)?, load_profile(&args.profile)?))
}

fn run(command: Command) -> Result<Outcome, Failure> {
    let outcome = match command {
        Command::EvalOnestep(a) => {
            let (g, p) = with_p(a)?;
            commands::eval_onestep(&g, &p)?
        }
        Command::CheckPerfect(a) => {
            let (g, p) = with_p(a)?;
            commands::check_perfect(&g, &p)?
        }
        Command::CheckEq(a) => {
            let (g, p) = with_p(a)?;
            commands::check_eq(&g, &p)?
        }
        Command::Convert(a) => {
            let (g, p) = with_p(a)?;
            commands::convert(&g, &p)?
        }
        Command::Perturb {
            args,
            player,
            lambda,
            eta,
        } => {
            let (g, p) = with_p(args)?;
            commands::perturb(&g, &p, player, lambda, eta)?
        }
        Command::Eval { args, truncate } => {
            let (g, pi) = repeated(&args)?;
            commands::eval(&g, &pi, truncate)?
        }
        Command::BestResponse { args, player } => {
            let (g, pi) = repeated(&args)?;
            commands::best_response_cmd(&g, &pi, player)?
        }
        Command::CheckEqQuitting(args) => {
            let (g, pi) = repeated(&args)?;
            commands::check_eq_quitting(&g, &pi)?
        }
        Command::CheckSubgame(args) => {
            let (g, pi) = repeated(&args)?;
            commands::check_subgame(&g, &pi)?
        }
        Command::SolveOnestep { args, eps } => {
            let (g, _) = load_one_step(args, None)?;
            commands::solve_onestep(&g, eps)?
        }
        Command::Psi { args, eps } => {
            let (g, _) = load_one_step(args, None)?;
            commands::psi(&g, eps)?
        }
        Command::Simulate {
            args,
            trials,
            horizon,
            seed,
        } => {
            let (g, pi) = repeated(&args)?;
            commands::simulate_cmd(&g, &pi, trials, horizon, seed)?
        }
    };
    Ok(outcome)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("QG_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t >= 1).ok_or_else(|| {
        Failure::Usage(format!(
            "QG_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure {threads} threads: {e}")))
}

fn digest(command: &str, inputs: &serde_json::Value) -> String {
    let canonical = output::canonical(&json!({ "command": command, "inputs": inputs }));
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let result = configure_threads().and_then(|()| run(cli.command));
    match result {
        Ok(outcome) => {
            if cli.json {
                let envelope = json!({
                    "command": name,
                    "inputs_digest": digest(name, &outcome.inputs),
                    "result": outcome.result,
                    "warnings": outcome.warnings,
                });
                print!("{}", output::to_json(&envelope));
            } else {
                print!(
                    "{}",
                    output::to_table(name, &outcome.result, &outcome.warnings)
                );
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("qg {name}: error: {failure}");
            match failure {
                Failure::Usage(_) => ExitCode::from(2),
                Failure::Domain(e) => {
                    if cli.json {
                        let body = json!({
                            "command": name,
                            "error": { "name": e.name(), "message": e.to_string() },
                        });
                        print!("{}", output::to_json(&body));
                    }
                    ExitCode::from(1)
                }
            }
        }
    }
}
