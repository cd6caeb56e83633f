use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("price must be positive and finite, got {0}")]
    InvalidPrice(f64),

    #[error("invalid price range [{lower}, {upper}]: need 0 <= lower < upper")]
    InvertedRange { lower: f64, upper: f64 },

    #[error("price {price} lies outside the range [{lower}, {upper}]")]
    OutOfRange { price: f64, lower: f64, upper: f64 },

    #[error("invalid {name} = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// An Euler–Maruyama step of the mean-reverting price left the positive axis.
    #[error("degenerate AMM price step at step {step}: Z = {z}, P = {p} gives Z' = {z_next}")]
    DegenerateStep {
        step: usize,
        z: f64,
        p: f64,
        z_next: f64,
    },

    /// The rebalancing rule produced a negative liquidity, i.e. the one-step
    /// move was too large for the configured range width.
    #[error(
        "negative liquidity at step {step}: L = {liquidity}, Z = {z}, Z' = {z_next}, P' = {p_next} gives L' = {value}"
    )]
    NegativeLiquidity {
        step: usize,
        liquidity: f64,
        z: f64,
        z_next: f64,
        p_next: f64,
        value: f64,
    },

    #[error("root bracketing failed on ({lo}, {hi})")]
    RootBracket { lo: f64, hi: f64 },

    #[error("need at least {required} observations, got {got}")]
    TooFewObservations { required: usize, got: usize },

    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Σ(P − Z)²/Z² vanished, so the mean-reversion speed is not identifiable.
    #[error("P and Z coincide on every observation; mean-reversion estimate is undefined")]
    DegenerateDeviation,

    #[error("invalid experiment config: {0}")]
    InvalidConfig(&'static str),

    #[error("all {rounds} rounds aborted")]
    AllPathsAborted { rounds: usize },
}

impl Error {
    /// Attach a step index to a step-level error.
    pub fn at_step(self, index: usize) -> Self {
        match self {
            Error::DegenerateStep { z, p, z_next, .. } => Error::DegenerateStep {
                step: index,
                z,
                p,
                z_next,
            },
            Error::NegativeLiquidity {
                liquidity,
                z,
                z_next,
                p_next,
                value,
                ..
            } => Error::NegativeLiquidity {
                step: index,
                liquidity,
                z,
                z_next,
                p_next,
                value,
            },
            other => other,
        }
    }
}
