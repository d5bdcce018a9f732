use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-manifold mesh: face {face:?} is shared by {count} tetrahedra")]
    NonManifold { face: [usize; 3], count: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate element: volume {volume:e} below threshold {threshold:e}")]
    DegenerateElement { volume: f64, threshold: f64 },

    #[error("assembly integrity violated: {0}")]
    AssemblyIntegrity(String),

    #[error("factorization failed for block {block} ({node})")]
    Factorization { block: usize, node: String },

    #[error("{solver} did not converge after {iterations} iterations (last value {last:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        last: f64,
    },

    #[error("time integration became unstable at step {step}")]
    Instability { step: usize },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
