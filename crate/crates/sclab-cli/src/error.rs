use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("scenario kind is `{found}` but the command is `{expected}`")]
    KindMismatch { expected: &'static str, found: &'static str },
    #[error("{context}: {source}")]
    Module { context: String, source: sclab::Error },
}

impl CliError {
    /// 2 for problems with the input, 1 for failures inside a computation.
    pub fn exit_code(&self) -> i32 {
        use sclab::Error as E;
        match self {
            CliError::Module { source, .. } => match source {
                E::InvalidInput(_)
                | E::DimensionMismatch(_)
                | E::UnsupportedDimension(_)
                | E::UnsupportedOrder { .. }
                | E::DegenerateForm(_)
                | E::NotExact(_)
                | E::Precondition(_)
                | E::ChartTooLarge { .. }
                | E::OffCone(_) => 2,
                _ => 1,
            },
            _ => 2,
        }
    }
}

pub(crate) trait Context<T> {
    fn context(self, what: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for sclab::Result<T> {
    fn context(self, what: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Module { context: what.to_string(), source })
    }
}
