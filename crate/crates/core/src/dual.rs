//! Dual-space view of a run.
//!
//! The potentials of an optimizer network stay in the image of Aᵀ: writing
//! v for the dual trajectory that charges by `b·dt` each step and drops by
//! `α·(±A_j)` on every spike of neuron j, the identity `u = Aᵀv` holds to
//! rounding error for the whole run. The spikes keep v essentially inside
//! the polytope `{ v : ‖Aᵀv‖∞ ≤ η }`, whose faces we call walls; where v
//! presses against walls encodes the support of the emerging solution.

use serde::Serialize;

use crate::coupling::CouplingTracker;
use crate::error::Error;
use crate::instance::ProblemInstance;
use crate::numerics::{self, DenseMatrix};
use crate::snn::{Network, SimConfig, SimObserver, SimState, SpikeTrace, StepFire};

/// Signed 1-based wall index: wall `+j` is the constraint `A_jᵀv ≤ η` and
/// wall `−j` is `−A_jᵀv ≤ η`, for `j ∈ 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct WallId(i32);

impl WallId {
    pub fn new(raw: i32) -> Result<Self, Error> {
        if raw == 0 {
            return Err(Error::Precondition {
                context: "WallId",
                detail: "wall indices are signed and 1-based; 0 is not a wall".into(),
            });
        }
        Ok(Self(raw))
    }

    /// Wall for 0-based column `index`, on the positive or negative side.
    pub fn from_column(index: usize, positive: bool) -> Self {
        let id = (index + 1) as i32;
        Self(if positive { id } else { -id })
    }

    pub fn raw(self) -> i32 {
        self.0
    }

    /// 0-based column index of the underlying matrix column.
    pub fn index(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn sign(self) -> f64 {
        if self.0 > 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The signed column `±A_j` this wall is normal to.
    pub fn column(self, a: &DenseMatrix) -> Vec<f64> {
        let s = self.sign();
        a.col(self.index()).iter().map(|x| s * x).collect()
    }
}

/// `(±A_j)ᵀ v`, the progress of `v` toward the wall.
pub fn wall_value(a: &DenseMatrix, v: &[f64], wall: WallId) -> f64 {
    let j = wall.index();
    let mut s = 0.0;
    for (i, vi) in v.iter().enumerate() {
        s += a.get(i, j) * vi;
    }
    wall.sign() * s
}

/// All walls with value strictly above `cutoff`, in (+1..+n, −1..−n) order.
pub fn walls_above(a: &DenseMatrix, v: &[f64], cutoff: f64) -> Vec<WallId> {
    let atv = a.tr_matvec(v);
    let mut out = Vec::new();
    for (j, &val) in atv.iter().enumerate() {
        if val > cutoff {
            out.push(WallId::from_column(j, true));
        }
    }
    for (j, &val) in atv.iter().enumerate() {
        if -val > cutoff {
            out.push(WallId::from_column(j, false));
        }
    }
    out
}

/// Walls the point has crossed beyond tolerance.
pub fn violated_walls(a: &DenseMatrix, v: &[f64], eta: f64, tolerance: f64) -> Vec<WallId> {
    walls_above(a, v, eta + tolerance)
}

/// Walls the point rests on, within `tolerance`.
pub fn active_walls(a: &DenseMatrix, v: &[f64], eta: f64, tolerance: f64) -> Vec<WallId> {
    let atv = a.tr_matvec(v);
    let mut out = Vec::new();
    for (j, &val) in atv.iter().enumerate() {
        if (val - eta).abs() <= tolerance {
            out.push(WallId::from_column(j, true));
        }
    }
    for (j, &val) in atv.iter().enumerate() {
        if (-val - eta).abs() <= tolerance {
            out.push(WallId::from_column(j, false));
        }
    }
    out
}

/// `bᵀv`; weak duality puts `bᵀv ≤ η·OPT` for any v in the polytope.
pub fn dual_objective(b: &[f64], v: &[f64]) -> f64 {
    numerics::dot(b, v)
}

/// The m×k matrix of signed wall columns.
pub fn wall_matrix(a: &DenseMatrix, walls: &[WallId]) -> DenseMatrix {
    let m = a.rows();
    let k = walls.len();
    let mut data = vec![0.0; m * k];
    for (c, w) in walls.iter().enumerate() {
        let j = w.index();
        let s = w.sign();
        for i in 0..m {
            data[i * k + c] = s * a.get(i, j);
        }
    }
    DenseMatrix::new(m, k, data).expect("signed columns of a finite matrix are finite")
}

/// `‖u − Aᵀv‖∞`, the drift between the potentials and the dual pullback.
pub fn consistency_gap(a: &DenseMatrix, u: &[f64], v: &[f64]) -> f64 {
    let atv = a.tr_matvec(v);
    u.iter()
        .zip(&atv)
        .fold(0.0_f64, |acc, (ui, pi)| acc.max((ui - pi).abs()))
}

/// Dual trajectory state.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub t: f64,
    pub step: u64,
    pub v: Vec<f64>,
}

impl DualState {
    pub fn new(m: usize) -> Self {
        Self {
            t: 0.0,
            step: 0,
            v: vec![0.0; m],
        }
    }
}

/// Advances the dual point through one primal step: charge by `b·dt`, then
/// subtract `α·(±A_j)` for each spike, in the order they were applied.
pub fn dual_step(
    state: &mut DualState,
    instance: &ProblemInstance,
    fire: &StepFire,
    alpha: f64,
    dt: f64,
) {
    let a = &instance.a;
    let m = a.rows();
    for (vi, bi) in state.v.iter_mut().zip(&instance.b) {
        *vi += bi * dt;
    }
    for &(j, sign) in &fire.fired {
        let scale = alpha * sign as f64;
        for i in 0..m {
            state.v[i] -= scale * a.get(i, j);
        }
    }
    state.step += 1;
    state.t = state.step as f64 * dt;
}

/// Observer that integrates the dual trajectory alongside the primal run
/// and, optionally, feeds a coupling tracker at every probe.
pub struct DualObserver<'a> {
    instance: &'a ProblemInstance,
    alpha: f64,
    pub dual: DualState,
    pub tracker: Option<CouplingTracker<'a>>,
}

impl<'a> DualObserver<'a> {
    pub fn new(instance: &'a ProblemInstance, alpha: f64) -> Self {
        Self {
            instance,
            alpha,
            dual: DualState::new(instance.m()),
            tracker: None,
        }
    }

    pub fn with_tracker(instance: &'a ProblemInstance, alpha: f64, tracker: CouplingTracker<'a>) -> Self {
        Self {
            tracker: Some(tracker),
            ..Self::new(instance, alpha)
        }
    }
}

impl SimObserver for DualObserver<'_> {
    fn observe(
        &mut self,
        t: f64,
        dt: f64,
        state: &SimState,
        fire: &StepFire,
        is_probe: bool,
    ) -> Result<(), Error> {
        if state.u.len() != self.instance.n() {
            return Err(Error::Dimension {
                context: "DualObserver expects the undoubled optimizer network",
                expected: self.instance.n(),
                actual: state.u.len(),
            });
        }
        dual_step(&mut self.dual, self.instance, fire, self.alpha, dt);
        if let Some(tracker) = &mut self.tracker {
            // Every cascade is recorded (the before/after comparison only
            // exists at the step it happened); quiet steps are sampled at
            // the probe stride.
            if is_probe || !fire.fired.is_empty() {
                let a = &self.instance.a;
                let m = a.rows();
                // Rebuild the point the cascade started from by adding the
                // spike kicks back in.
                let v_pre = if fire.fired.is_empty() {
                    None
                } else {
                    let mut vp = self.dual.v.clone();
                    for &(j, sign) in &fire.fired {
                        let scale = self.alpha * sign as f64;
                        for (i, vpi) in vp.iter_mut().enumerate().take(m) {
                            *vpi += scale * a.get(i, j);
                        }
                    }
                    Some(vp)
                };
                tracker.record(t, &self.dual.v, v_pre.as_deref())?;
            }
        }
        Ok(())
    }

    fn dual_state(&self) -> Option<&[f64]> {
        Some(&self.dual.v)
    }
}

/// Runs the network with its dual trajectory; snapshots carry `v`.
pub fn simulate_with_dual(
    instance: &ProblemInstance,
    net: &Network,
    cfg: &SimConfig,
) -> Result<SpikeTrace, Error> {
    let mut obs = DualObserver::new(instance, net.alpha());
    crate::snn::simulate_with(net, cfg, &mut obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{build_network, Sidedness};

    fn oblique_instance() -> ProblemInstance {
        let r = 1.0 / 2.0_f64.sqrt();
        let a = DenseMatrix::from_rows(vec![vec![0.0, r], vec![-1.0, -r]]).unwrap();
        ProblemInstance::new(a, vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn wall_values_and_queries() {
        let inst = oblique_instance();
        let v = vec![0.4, -0.9];
        let w1 = WallId::from_column(0, true);
        let w2 = WallId::from_column(1, true);
        assert!((wall_value(&inst.a, &v, w1) - 0.9).abs() < 1e-12);
        assert!((wall_value(&inst.a, &v, w2) - 1.3 / 2.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(walls_above(&inst.a, &v, 0.85), vec![w1, w2]);
        // Strictly above: the wall at exactly 0.9 does not count.
        assert_eq!(violated_walls(&inst.a, &v, 0.9, 0.0), vec![w2]);
        assert!(active_walls(&inst.a, &v, 1.0, 0.05).is_empty());
        assert_eq!(active_walls(&inst.a, &v, 0.9, 1e-9), vec![w1]);
    }

    #[test]
    fn wall_matrix_uses_signed_columns() {
        let inst = oblique_instance();
        let walls = vec![WallId::from_column(1, true), WallId::from_column(0, false)];
        let wm = wall_matrix(&inst.a, &walls);
        let r = 1.0 / 2.0_f64.sqrt();
        assert_eq!(wm.col(0), vec![r, -r]);
        assert_eq!(wm.col(1), vec![0.0, 1.0]);
    }

    #[test]
    fn mirrored_wall_ids_address_both_sides() {
        let w = WallId::new(-3).unwrap();
        assert_eq!(w.index(), 2);
        assert_eq!(w.sign(), -1.0);
        assert!(WallId::new(0).is_err());
    }

    #[test]
    fn dual_pullback_matches_potentials() {
        let a = DenseMatrix::from_rows(vec![
            vec![0.8, -0.3, 0.2, 0.5],
            vec![0.1, 0.7, -0.4, 0.3],
            vec![-0.2, 0.4, 0.6, -0.1],
        ])
        .unwrap();
        let inst = ProblemInstance::new(a, vec![0.5, -0.2, 0.4]).unwrap();
        let net = build_network(&inst, Sidedness::TwoSided, 0.05, 1.0).unwrap();
        let cfg = SimConfig::new(0.002, 20.0, 40, 50).unwrap();
        let trace = simulate_with_dual(&inst, &net, &cfg).unwrap();

        for snap in &trace.snapshots {
            let v = snap.v.as_ref().expect("dual snapshots carry v");
            assert!(consistency_gap(&inst.a, &snap.u, v) <= 1e-9);
            if snap.time > 0.0 {
                // v(t) = t·(b − A x(t)) with x from the firing rates.
                let ax = inst.a.matvec(&snap.rates);
                for i in 0..inst.m() {
                    let expect = snap.time * (inst.b[i] - ax[i]);
                    assert!((v[i] - expect).abs() <= 1e-9, "at t={}", snap.time);
                }
            }
        }
    }
}
