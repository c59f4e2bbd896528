//! Error types shared across the solver, verification and certificate stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation was applied outside its mathematical domain, e.g. division
    /// by a ball containing zero or a square root of a negative quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Taylor propagation could not continue, either because the estimated
    /// convergence radius collapsed or a runtime magnitude assertion failed.
    /// `reached` is the largest time covered before the failure.
    #[error("propagation stalled at t = {reached}: {reason}")]
    Propagation { reached: f64, reason: String },

    /// The stopping condition d2/t + eta_3(t) = 0 did not change sign within
    /// the covered interval.
    #[error("stopping time not reached within coverage (t_end = {t_end})")]
    StoppingNotReached { t_end: f64 },

    /// Root finding failed to converge; carries the iterate trace for
    /// diagnostics.
    #[error("root finding did not converge: {reason}\ntrace:\n{trace}")]
    Convergence { reason: String, trace: String },

    /// A finite-difference quotient lost all significant digits; the caller
    /// should increase the working precision.
    #[error("precision exhausted: {0}")]
    Precision(String),

    /// Inputs to the certificate chain are inconsistent with the constants the
    /// proof requires.
    #[error("certificate inconsistency: {0}")]
    Certificate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
