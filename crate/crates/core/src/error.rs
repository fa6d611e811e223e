//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or structural precondition was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Propagation requested with t_f <= t_i (an acausal path).
    #[error("acausal path: t_f = {t_f:e} s is not later than t_i = {t_i:e} s")]
    AcausalPath { t_i: f64, t_f: f64 },

    /// Two traces or spectra do not share the same detection grid.
    #[error("grid mismatch between operands")]
    GridMismatch,

    /// An operation required normalized amplitude traces.
    #[error("amplitude trace is not normalized")]
    NotNormalized,

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error(
        "quadrature did not converge after {doublings} doublings \
         (last relative change {last_change:e})"
    )]
    Convergence { doublings: u32, last_change: f64 },

    /// Input with no usable content (e.g. a zero-norm trace).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Temporal slits overlap.
    #[error("temporal slits overlap: [{0:e}, {1:e}] s intersects [{2:e}, {3:e}] s")]
    OverlappingSlits(f64, f64, f64, f64),

    /// Exact pair enumeration refused because N exceeds the configured cap.
    #[error(
        "exact pair enumeration for N = {n} exceeds the cap of {cap}; \
         use the approximate mixture instead"
    )]
    PairCountCap { n: u32, cap: u32 },

    /// Configuration parse or validation failure.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed CSV handed to the SVG renderer.
    #[error("csv error at line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code for the CLI: 2 invalid parameters, 3 quadrature
    /// non-convergence, 4 I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence { .. } => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}
