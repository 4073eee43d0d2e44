use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] conveyor::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use conveyor::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::Instability { .. } | E::Convergence { .. } | E::Resolution { .. } => 3,
                E::Domain(_)
                | E::Input(_)
                | E::Shape(_)
                | E::BelowClassicalLimit { .. }
                | E::InfeasibleCompensation { .. } => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}
