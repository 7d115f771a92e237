use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("game must have at least one player")]
    NoPlayers,

    #[error("{players} players exceeds the supported maximum of {max}")]
    TooManyPlayers { players: usize, max: usize },

    #[error("missing payoff for coalition {coalition}")]
    MissingCoalition { coalition: String },

    #[error("invalid coalition key {key:?}: {reason}")]
    BadCoalition { key: String, reason: String },

    #[error("{what} has length {found}, expected {expected}")]
    BadVectorLength {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("{what} contains a non-finite entry")]
    NonFiniteEntry { what: String },

    #[error("{what}: probability {value} is outside [0, 1]")]
    BadProbability { what: String, value: f64 },

    #[error("profile cycle must contain at least one stage")]
    EmptyCycle,

    #[error("cannot parse number {0:?}")]
    BadNumber(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("lambda {0} is outside [0, 1]")]
    BadLambda(f64),

    #[error("epsilon {0} is outside (0, 1)")]
    BadEpsilon(f64),

    #[error("player index {player} out of range for {players} players")]
    BadPlayer { player: usize, players: usize },

    #[error("profile is not {eta}-perfect (epsilon* = {actual})")]
    NotEtaPerfect { eta: f64, actual: f64 },

    #[error("no profile with epsilon* <= {eps} was found")]
    NoneFound { eps: f64 },

    #[error("no qualifying player for the perturbation: {0}")]
    NoQualifyingPlayer(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("equilibrium finder failed: {0}")]
    NoEquilibriumFound(String),
}

impl Error {
    /// Stable variant name, used by the CLI when reporting domain errors.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NoPlayers => "NoPlayers",
            Error::TooManyPlayers { .. } => "TooManyPlayers",
            Error::MissingCoalition { .. } => "MissingCoalition",
            Error::BadCoalition { .. } => "BadCoalition",
            Error::BadVectorLength { .. } => "BadVectorLength",
            Error::NonFiniteEntry { .. } => "NonFiniteEntry",
            Error::BadProbability { .. } => "BadProbability",
            Error::EmptyCycle => "EmptyCycle",
            Error::BadNumber(_) => "BadNumber",
            Error::Format(_) => "Format",
            Error::BadLambda(_) => "BadLambda",
            Error::BadEpsilon(_) => "BadEpsilon",
            Error::BadPlayer { .. } => "BadPlayer",
            Error::NotEtaPerfect { .. } => "NotEtaPerfect",
            Error::NoneFound { .. } => "NoneFound",
            Error::NoQualifyingPlayer(_) => "NoQualifyingPlayer",
            Error::AssumptionViolated(_) => "AssumptionViolated",
            Error::NoEquilibriumFound(_) => "NoEquilibriumFound",
        }
    }
}
