//! Small hand-checked instances reused across tests and examples.

use crate::instance::ProblemInstance;
use crate::numerics::DenseMatrix;
use crate::snn::{Network, Sidedness};

/// Two-neuron relay: the first neuron integrates constant input and fires
/// every 10 time units; each of its spikes nudges the second neuron, which
/// therefore fires once per 100 time units. Long-run rates (0.1, 0.01).
pub fn relay_network() -> Network {
    let w = DenseMatrix::from_rows(vec![vec![1.0, -0.1], vec![0.0, 1.0]]).unwrap();
    Network::new(w, vec![0.1, 0.0], Sidedness::OneSided, 1.0, 1.0).unwrap()
}

/// Steady spike rates of [`relay_network`].
pub fn relay_rates() -> Vec<f64> {
    vec![0.1, 0.01]
}

/// A 2x3 instance whose minimum-l1 interpolation is worked out in closed
/// form: the third column is the expensive diagonal direction.
pub fn l1_demo() -> ProblemInstance {
    let a = DenseMatrix::from_rows(vec![
        vec![1.0, 0.0, 2.0 / 3.0],
        vec![0.0, 1.0, 2.0 / 3.0],
    ])
    .unwrap();
    ProblemInstance::new(a, vec![0.1, 0.4]).unwrap()
}

/// Optimum of [`l1_demo`]: primal x*, dual certificate v*, objective.
pub fn l1_demo_optimum() -> (Vec<f64>, Vec<f64>, f64) {
    (vec![0.0, 0.3, 0.15], vec![0.5, 1.0], 0.45)
}

/// Two walls meeting at an oblique angle, with a query point outside both;
/// exercises decomposition onto a non-orthogonal active set.
pub fn oblique_pair() -> ProblemInstance {
    let s = 1.0 / f64::sqrt(2.0);
    let a = DenseMatrix::from_rows(vec![vec![0.0, s], vec![-1.0, -s]]).unwrap();
    ProblemInstance::new(a, vec![0.4, -0.9]).unwrap()
}
