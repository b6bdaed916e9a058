use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    /// A required input file is missing or unreadable.
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] rnerf_core::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub(crate) fn config_value(key: &str, value: &str, why: &str) -> Self {
        CliError::Config(format!("invalid value {value:?} for `{key}`: {why}"))
    }

    /// 2 for bad configuration, usage or input data; 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Usage(_) => 2,
            CliError::Core(
                rnerf_core::Error::Parse { .. } | rnerf_core::Error::InvalidArgument(_),
            ) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }

    /// Stable category name used in the error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Input(_) => "input",
            CliError::Usage(_) => "usage",
            CliError::Core(rnerf_core::Error::Parse { .. }) => "parse",
            CliError::Core(rnerf_core::Error::InvalidArgument(_)) => "invalid-argument",
            CliError::Core(rnerf_core::Error::NumericFailure { .. }) => "numeric",
            CliError::Core(rnerf_core::Error::Checkpoint(_)) => "checkpoint",
            CliError::Core(_) => "runtime",
            CliError::Io(_) => "io",
        }
    }

    /// `rnerf: error[<kind>]: <message>` on one line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("rnerf: error[{}]: {msg}", self.kind())
    }
}
