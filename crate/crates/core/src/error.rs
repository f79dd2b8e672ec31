use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parity of level {level} is not sharp (|<Π>| = {expectation:.3e}); increase the Fock cutoff")]
    ParityNotSharp { level: usize, expectation: f64 },

    #[error("χ element ({k},{j}) between equal-parity levels is {value:.3e}")]
    SelectionRuleViolated { k: usize, j: usize, value: f64 },

    #[error("direct (a+a†)² elements disagree with Σχχ by {relative:.3e} (relative)")]
    SquaredFieldMismatch { relative: f64 },

    #[error("DC flux offset {0} rad leaves cos(Φ) ≤ 0")]
    FluxOffsetOutOfRange(f64),

    #[error("the two sites have identical transition frequencies; two distinct species are required")]
    IdenticalSpecies,

    #[error("vanishing matrix element χ_{k}{j} on site {site}")]
    VanishingMatrixElement { site: usize, k: usize, j: usize },

    #[error("transitions {first} and {second} are {spacing:.3e} rad/s apart, inside the {guard:.3e} rad/s guard band")]
    FrequencyCollision { first: String, second: String, spacing: f64, guard: f64 },

    #[error("rotating-wave condition violated: strength {strength:.3e} rad/s against margin {margin:.3e} rad/s (need ratio < {limit})")]
    RwaViolation { strength: f64, margin: f64, limit: f64 },

    #[error("integration step underflow at t = {time:.6e} s (step {step:.3e} s)")]
    StepUnderflow { time: f64, step: f64 },

    #[error("norm drift {drift:.3e} exceeds the budget {budget:.3e} at t = {time:.6e} s")]
    NormDrift { drift: f64, budget: f64, time: f64 },

    #[error("density matrix lost positivity: minimum eigenvalue {min_eig:.3e} at t = {time:.6e} s")]
    PositivityLost { min_eig: f64, time: f64 },

    #[error("state leaked {leakage:.3e} of its population out of the spin-1 subspace")]
    Leakage { leakage: f64 },

    #[error("dense path limited to dimension {limit}, got {dim}")]
    TooLarge { dim: usize, limit: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("segment {index} ({kind}): {source}")]
    Segment {
        index: usize,
        kind: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("refusing to overwrite {path}: it was produced by config {existing}, current config is {current}")]
    HashMismatch { path: String, existing: String, current: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
