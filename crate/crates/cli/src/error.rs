use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation: unknown subcommand, unknown or missing parameters.
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ncconc::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        use ncconc::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                E::Input(_) => "input",
                E::Parameter(_) => "parameter",
                E::Domain(_) => "domain",
                E::DimensionMismatch { .. } => "dimension-mismatch",
                E::Degenerate(_) => "degenerate",
                E::Precondition(_) => "precondition",
                E::Budget(_) => "budget",
                E::Window(_) => "window",
                E::Verification(_) => "verification",
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
