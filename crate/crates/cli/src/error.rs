use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] desklab::Error),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical divergence, 4 for
    /// violated invariants, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        use desklab::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Parameter(_) | E::InvalidSetup(_)) => 2,
            CliError::Core(E::Divergence { .. }) => 3,
            CliError::Core(E::Consistency(_) | E::LengthMismatch { .. }) => 4,
            CliError::Invariant(_) => 4,
            CliError::Core(E::Io(_) | E::Csv(_)) | CliError::Io(_) => 1,
        }
    }
}
