//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("enumeration needs {needed} steps, budget is {budget} (set DISTILLERY_BUDGET to raise)")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("matrix is not self-orthogonal: rows {0} and {1} overlap oddly")]
    NotSelfOrthogonal(usize, usize),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("qubit {0} cannot be punctured: no stabilizer generator is supported there")]
    InvalidQubit(usize),

    #[error("invalid outer code: {0}")]
    InvalidOuter(String),

    #[error("check row incompatible with inner code: {0}")]
    IncompatibleCheck(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("unknown code {0:?}")]
    UnknownCode(String),

    #[error("sampling failed after {0} attempts")]
    SamplingFailed(u64),

    #[error("simulation error: {0}")]
    Simulation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
