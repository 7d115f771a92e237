//! Toolkit for N-player quitting games.
//!
//! - [`game`]: games, coalitions, one-stage and eventually-cyclic profiles
//! - [`format`]: JSON file formats
//! - [`probability`]: the coalition kernel `ϱ(p, S)`
//! - [`one_step`]: one-step game payoffs, ε-perfectness and ε-equilibrium
//! - [`perturbation`]: shifting one player toward quitting, with its bounds
//! - [`repeated`]: payoffs and best responses in the repeated game
//! - [`solver`]: one-step equilibria and `ψ_ε` membership certificates
//! - [`montecarlo`]: seeded simulation of the quitting process

pub mod error;
pub mod format;
pub mod game;
pub mod montecarlo;
pub mod one_step;
pub mod perturbation;
pub mod probability;
pub mod repeated;
pub mod solver;

pub use error::{Error, Result};
pub use game::{
    Action, Coalition, EventuallyCyclicProfile, MixedProfile, OneStepGame, QuittingGame,
};
