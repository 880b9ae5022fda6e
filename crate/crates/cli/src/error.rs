use thiserror::Error;

/// Failure of one CLI invocation, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Input {
        context: String,
        #[source]
        source: bevloc::Error,
    },

    #[error("{context}: {source}")]
    Runtime {
        context: String,
        #[source]
        source: bevloc::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } => 2,
            CliError::Runtime { .. } => 3,
        }
    }

    pub fn input(context: impl Into<String>) -> impl FnOnce(bevloc::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Input { context, source }
    }

    pub fn runtime(context: impl Into<String>) -> impl FnOnce(bevloc::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Runtime { context, source }
    }

    /// Sorts a pipeline error by whether the caller's inputs were at fault.
    pub fn classify(context: impl Into<String>) -> impl FnOnce(bevloc::Error) -> CliError {
        let context = context.into();
        move |source| {
            use bevloc::Error as E;
            match source {
                E::MalformedXml { .. }
                | E::DanglingNodeRef { .. }
                | E::BadShape(_)
                | E::DimensionMismatch(_)
                | E::InvalidArgument(_)
                | E::InvalidRaster(_)
                | E::OutOfCoverage { .. }
                | E::Json(_) => CliError::Input { context, source },
                _ => CliError::Runtime { context, source },
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
