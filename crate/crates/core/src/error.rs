use thiserror::Error;

/// Errors produced by the simulator and the best-arm pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bandit instance has no arms")]
    EmptyInstance,

    #[error("bias {value} of arm {arm} is outside [0, 1]")]
    BiasOutOfRange { arm: usize, value: f64 },

    #[error("best arm not unique")]
    BestArmNotUnique,

    #[error("instance already carries the synthetic arm 0")]
    SyntheticArmPresent,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("arm count mismatch: {left} vs {right}")]
    ArmCountMismatch { left: usize, right: usize },

    #[error("qubit budget exceeded: register {register} needs {needed} qubits, total {total} > {budget}")]
    QubitBudget {
        register: String,
        needed: usize,
        total: usize,
        budget: usize,
    },

    #[error("empty success subspace")]
    EmptySuccessSubspace,

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("separation not achieved after {rounds} rounds")]
    SeparationNotAchieved { rounds: usize },

    #[error("bias {value} outside [{floor}, {ceil}]")]
    BiasOutsideFloor { value: f64, floor: f64, ceil: f64 },

    #[error("budget too small: T = {budget} is below every Tc")]
    BudgetTooSmall { budget: f64 },

    #[error("no decision: every capped run exceeded its budget")]
    NoDecision,

    #[error("instances differ")]
    InstanceMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
