//! Crate-wide error type.

use std::fmt;

/// Failure modes surfaced by simulation, decomposition, and the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A dimension did not match what the operation requires.
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    /// An input contained NaN or infinity.
    NonFinite { context: &'static str },
    /// A precondition unrelated to shapes was violated.
    Precondition { context: &'static str, detail: String },
    /// The eigenvalue iteration did not converge within its sweep cap.
    EigenDivergence { sweeps: usize },
    /// The target vector is not in the requested range space.
    RangeMismatch { residual: f64, tolerance: f64 },
    /// A spike cascade exceeded its round cap; the step size `alpha` is too
    /// large for the network.
    CascadeDivergence { time: f64, rounds: usize },
    /// An iterative solver hit its iteration cap.
    IterationCap { context: &'static str, cap: usize },
    /// An exhaustive enumeration would exceed its cap; use a sampled
    /// estimate instead.
    EnumerationCap { required: u128, cap: u128 },
    /// A linear system that should be uniquely solvable was singular, or a
    /// decomposition found no consistent candidate.
    Degenerate { detail: String },
    /// No exact solution exists (the right-hand side is not interpolable).
    Infeasible { residual: f64 },
    /// The trace lacks the diagnostic payloads this check needs.
    MissingDiagnostics,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                context,
                expected,
                actual,
            } => write!(f, "{context}: expected dimension {expected}, got {actual}"),
            Error::NonFinite { context } => write!(f, "{context}: non-finite value"),
            Error::Precondition { context, detail } => write!(f, "{context}: {detail}"),
            Error::EigenDivergence { sweeps } => {
                write!(f, "eigenvalue iteration did not converge after {sweeps} sweeps")
            }
            Error::RangeMismatch {
                residual,
                tolerance,
            } => write!(
                f,
                "vector lies outside the range space (residual {residual:.3e} > tolerance {tolerance:.3e})"
            ),
            Error::CascadeDivergence { time, rounds } => write!(
                f,
                "spike cascade at t = {time} exceeded {rounds} rounds; alpha is too large"
            ),
            Error::IterationCap { context, cap } => {
                write!(f, "{context}: iteration cap {cap} exceeded")
            }
            Error::EnumerationCap { required, cap } => write!(
                f,
                "enumeration needs {required} candidates, cap is {cap}; use the sampled variant"
            ),
            Error::Degenerate { detail } => write!(f, "degenerate geometry: {detail}"),
            Error::Infeasible { residual } => write!(
                f,
                "no exact solution: best support leaves residual {residual:.3e}"
            ),
            Error::MissingDiagnostics => {
                write!(f, "trace carries no diagnostic payloads for this check")
            }
        }
    }
}

impl std::error::Error for Error {}
