//! Problem data: a dense matrix `A` and a right-hand side `b`.

use crate::error::Error;
use crate::numerics::DenseMatrix;

/// An instance `(A, b)` of `A x ≈ b`, with `A` an `m × n` dense matrix and
/// `b ∈ ℝ^m`. Columns of `A` are the dictionary elements; the simulators
/// assign one neuron per column.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self, Error> {
        if b.len() != a.rows() {
            return Err(Error::Dimension {
                context: "ProblemInstance rhs length",
                expected: a.rows(),
                actual: b.len(),
            });
        }
        if !b.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "ProblemInstance rhs",
            });
        }
        Ok(Self { a, b })
    }

    /// Ambient dimension (rows of `A`).
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Number of columns / neurons.
    pub fn n(&self) -> usize {
        self.a.cols()
    }
}
