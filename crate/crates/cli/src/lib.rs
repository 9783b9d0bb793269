//! Experiment harness for quantum best-arm identification: single runs,
//! Monte Carlo confidence checks, hardness sweeps, classical baselines,
//! lower bounds and validation suites.

pub mod args;
pub mod commands;
pub mod config;
pub mod families;
pub mod sweep;
pub mod validate;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] qbai::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input or configuration, 1 for failures during a run.
    pub fn exit_code(&self) -> u8 {
        use qbai::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(
                E::EmptyInstance
                | E::BiasOutOfRange { .. }
                | E::BestArmNotUnique
                | E::SyntheticArmPresent
                | E::InvalidParameter(_)
                | E::BiasOutsideFloor { .. }
                | E::BudgetTooSmall { .. }
                | E::Json(_)
                | E::Io(_),
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

/// Caps the global rayon pool at `QBAI_THREADS` when set.
pub fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("QBAI_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("QBAI_THREADS={v} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}
