use friendrep::graphgen::GraphError;
use friendrep::sessiongen::SessionError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::InvalidSpec { .. } | GraphError::Unreachable { .. } | GraphError::NoNodes => {
                CliError::Config(e.to_string())
            }
            GraphError::Parse { .. } | GraphError::BadEdge { .. } | GraphError::Io(_) => {
                CliError::Input(e.to_string())
            }
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::InvalidModel { .. } | SessionError::NoUsers => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Wraps write failures on output files.
pub fn output(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Internal(format!("writing {}: {e}", path.display()))
}
