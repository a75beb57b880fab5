//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("evaluation error at t = {t}: {reason} in `{subexpr}`")]
    Eval {
        t: f64,
        reason: &'static str,
        subexpr: String,
    },

    #[error("leading coefficient a2 not strictly positive at t = {t} (a2 = {value})")]
    LeadingCoefficient { t: f64, value: f64 },

    #[error("initial state must be finite")]
    InvalidInitialState,

    #[error("invalid pair constants: {0}")]
    InvalidConstants(String),

    #[error("system not commutativity-eligible: invariant varies by {residual:e} on the grid")]
    NotEligible { residual: f64 },

    #[error("no commuting nonzero initial state exists for these constants (feasibility gap {gap:e})")]
    NoCommutingState { gap: f64 },

    #[error("degenerate composition: composed c1 = {c1:e} is within tolerance of zero")]
    DegenerateComposition { c1: f64 },

    #[error("systems have different initial times ({0} vs {1})")]
    InitialTimeMismatch(f64, f64),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid simulation config: {0}")]
    Config(String),

    #[error("state became non-finite at step {step} (t = {t})")]
    Unstable { step: usize, t: f64 },

    #[error("trajectories are sampled on different grids")]
    GridMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
