use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] mmskit_core::Error),
}

impl CliError {
    /// 1 for bad input, 2 for exhausted resources, 3 for a failed guarantee.
    pub fn exit_code(&self) -> u8 {
        use mmskit_core::Error as E;
        match self {
            CliError::Core(E::BudgetExhausted { .. } | E::TooLarge { .. }) => 2,
            CliError::Core(E::GuaranteeViolated(_)) => 3,
            _ => 1,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}
