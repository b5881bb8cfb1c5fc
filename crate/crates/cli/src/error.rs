use hybridcast::Error;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Data(String),
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Data(_) => 3,
            CliError::Model(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Data(m) | CliError::Model(m) => m,
        }
    }

    /// Error raised while reading or parsing input.
    pub fn data(e: Error) -> Self {
        match e {
            Error::Io(m) => CliError::Io(m),
            other => CliError::Data(other.to_string()),
        }
    }

    /// Error raised while fitting or forecasting.
    pub fn model(e: Error) -> Self {
        match e {
            Error::Io(m) => CliError::Io(m),
            other => CliError::Model(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
