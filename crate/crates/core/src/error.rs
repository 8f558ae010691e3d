use thiserror::Error;

/// Errors raised by the simulator and the estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coincident atoms: separation must be positive")]
    CoincidentAtoms,

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("{0}")]
    NoRadiation(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("time integration unstable (trace drift {drift:.3e}); use a smaller time step")]
    Unstable { drift: f64 },

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("no closed-form prediction; adjust drive strength")]
    NoClosedForm,

    #[error("no dipole-dipole splitting resolved")]
    NoSplitting,

    #[error("scan range insufficient: found {found} intensity zeros, need 3")]
    InsufficientScan { found: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("task {task}: {source}")]
    Task {
        task: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user input or the file system rather than
    /// numerics.
    pub fn is_input_error(&self) -> bool {
        if let Error::Task { source, .. } = self {
            return source.is_input_error();
        }
        matches!(
            self,
            Error::CoincidentAtoms
                | Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::NoRadiation(_)
                | Error::Csv(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
