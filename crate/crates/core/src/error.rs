use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operating-point search is degenerate: response is flat over region {region}")]
    DegenerateRegion { region: &'static str },

    #[error("reference frequency {f_ref} Hz is at or above the Nyquist frequency {nyquist} Hz")]
    Aliasing { f_ref: f64, nyquist: f64 },

    #[error("record of {duration} s is shorter than the required settling time {required} s")]
    InsufficientSettling { duration: f64, required: f64 },

    #[error(
        "map pitch {pitch} m is coarser than half the standoff {standoff} m; \
         pixel-dipole discretization is not accurate at this resolution"
    )]
    ResolutionTooCoarse { pitch: f64, standoff: f64 },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("out of range: {0}")]
    Range(String),

    #[error("cannot normalize: profile has no positive peak")]
    DegenerateNormalization,

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error(transparent)]
    Fit(#[from] FitError),

    #[error("config {location}: {message}")]
    Config { location: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Failures of the least-squares fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("fit did not converge after {iterations} iterations (cost {cost:e}, last step {last_step:e})")]
    NotConverged {
        iterations: usize,
        cost: f64,
        last_step: f64,
    },

    #[error("normal equations are singular; parameters are not identifiable from the data")]
    Singular,

    #[error("response is flat over the sampled band; cutoff is above {lower_bound} Hz")]
    UnboundedCutoff { lower_bound: f64 },

    #[error("not enough data: need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

pub(crate) fn ensure_positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}

pub(crate) fn ensure_non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}
