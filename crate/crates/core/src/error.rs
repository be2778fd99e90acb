use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller violated a precondition (mismatched spaces, bad window, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Map or rate parameters violate construction invariants.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// A point lies outside the image of the requested inverse branch.
    #[error("point {y:?} is outside the image of branch {branch}")]
    Domain { branch: usize, y: Vec<f64> },

    /// No gluing trajectory could be built at the given trajectory index.
    #[error("gluing failed at index {index}: {reason}")]
    GluingFailure { index: i64, reason: String },

    /// A gluing failure raised inside a parallel or consecutive merge.
    #[error("gluing failed at level {level}, moment {moment}: {source}")]
    MergeFailure {
        level: usize,
        moment: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// The requested series has no finite sum.
    #[error("series diverges: {0}")]
    Diverges(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config: missing required key '{0}'")]
    ConfigMissing(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameters(msg.into())
    }

    /// True for failures of the numerical machinery (gluing, root finding)
    /// as opposed to caller mistakes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::GluingFailure { .. }
                | Error::MergeFailure { .. }
                | Error::RootFinding(_)
                | Error::Diverges(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
