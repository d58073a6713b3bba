use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown subcommand `{0}`")]
    UnknownSubcommand(String),

    #[error("invalid config at {pointer}: {message}")]
    ConfigInvalid { pointer: String, message: String },

    #[error(transparent)]
    Solver(#[from] nonlocal_spectra::Error),

    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for validation errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownSubcommand(_) | CliError::ConfigInvalid { .. } => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}
