use std::fmt;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data; one message per offending field.
    Config(Vec<String>),
    /// Numerical abort or I/O failure while computing.
    Abort(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Abort(_) => 3,
        }
    }

    /// Prefixes the message(s) with where the failure happened.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Self::Config(msgs) => Self::Config(msgs.into_iter().map(|m| format!("{ctx}: {m}")).collect()),
            Self::Abort(m) => Self::Abort(format!("{ctx}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msgs) => {
                writeln!(f, "invalid configuration:")?;
                for m in msgs {
                    writeln!(f, "  {m}")?;
                }
                Ok(())
            }
            Self::Abort(m) => writeln!(f, "run aborted: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<flowsde::Error> for CliError {
    fn from(e: flowsde::Error) -> Self {
        match e {
            flowsde::Error::Usage(_) | flowsde::Error::Domain(_) => Self::config(e.to_string()),
            other => Self::Abort(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Abort(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Abort(format!("serialization error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
