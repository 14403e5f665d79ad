//! Shrunken-polytope diagnostics for dual trajectories.
//!
//! The dual point of a run can overshoot the polytope walls by up to one
//! spike, so raw wall activity is too noisy to reason about. Shrinking the
//! polytope by a factor `(1 − τ)` and splitting `v = v_ideal + Σ z_j (±A_j)`
//! with `z ≥ 0` and every correction wall pinned exactly to the shrunken
//! boundary yields an ideal trajectory that ignores cascade details. From it
//! follow a restricted non-negative fit `x_ideal`, per-support-size
//! auxiliary states, and a potential `Φ = bᵀ(v_ideal + Σ aux)` whose growth
//! tracks the squared residual. [`check_lemma_suite`] audits all of these
//! properties on a recorded run.

use serde::Serialize;

use crate::dual::{self, DualObserver, WallId};
use crate::error::Error;
use crate::instance::ProblemInstance;
use crate::numerics::{self, DenseMatrix, QrFactor};
use crate::oracles;
use crate::snn::{self, Sidedness, SimConfig, SpikeTrace};

/// Shrink factor, threshold, numeric slack, and which wall signs exist
/// (one-sided runs only press the positive walls).
#[derive(Debug, Clone, Copy)]
pub struct CouplingConfig {
    pub tau: f64,
    pub eta: f64,
    pub tolerance: f64,
    pub sidedness: Sidedness,
}

impl CouplingConfig {
    pub fn new(
        tau: f64,
        eta: f64,
        tolerance: f64,
        sidedness: Sidedness,
    ) -> Result<Self, Error> {
        if !(tau.is_finite() && 0.0 < tau && tau < 1.0) {
            return Err(Error::Precondition {
                context: "CouplingConfig",
                detail: format!("shrink factor must lie in (0, 1), got {tau}"),
            });
        }
        if !(eta.is_finite() && eta > 0.0) || !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(Error::Precondition {
                context: "CouplingConfig",
                detail: format!("eta and tolerance must be positive (eta={eta}, tolerance={tolerance})"),
            });
        }
        Ok(Self {
            tau,
            eta,
            tolerance,
            sidedness,
        })
    }

    /// Radius of the shrunken polytope, `(1 − τ)η`.
    pub fn shrunken(&self) -> f64 {
        (1.0 - self.tau) * self.eta
    }

    /// Padding below the shrunken boundary when collecting candidate walls.
    /// Plain tolerance is not enough: corrections on one wall can pull a
    /// cross-correlated wall from as deep as one shrink gap below the
    /// boundary, so the gap `τη` itself is used when larger.
    pub fn margin(&self) -> f64 {
        self.tolerance.max(self.tau * self.eta)
    }
}

/// Shrink factor recommendation `min(0.1, γ̂ / (n² λmax²))`.
pub fn recommended_tau(gamma_hat: f64, n: usize, lambda_max: f64) -> f64 {
    let nf = n as f64;
    (gamma_hat / (nf * nf * lambda_max * lambda_max)).min(0.1)
}

/// Spike size recommendation `min(τ/m, τ²γ̂³)`.
pub fn recommended_alpha(tau: f64, m: usize, gamma_hat: f64) -> f64 {
    (tau / m as f64).min(tau * tau * gamma_hat.powi(3))
}

fn polytope_walls_above(
    a: &DenseMatrix,
    v: &[f64],
    cutoff: f64,
    sidedness: Sidedness,
) -> Vec<WallId> {
    let atv = a.tr_matvec(v);
    let mut out = Vec::new();
    for (j, &val) in atv.iter().enumerate() {
        if val > cutoff {
            out.push(WallId::from_column(j, true));
        }
    }
    if sidedness == Sidedness::TwoSided {
        for (j, &val) in atv.iter().enumerate() {
            if -val > cutoff {
                out.push(WallId::from_column(j, false));
            }
        }
    }
    out
}

fn worst_wall_overrun(a: &DenseMatrix, v: &[f64], radius: f64, sidedness: Sidedness) -> f64 {
    let atv = a.tr_matvec(v);
    atv.iter().fold(0.0_f64, |acc, &val| {
        let reach = if sidedness == Sidedness::TwoSided {
            val.abs()
        } else {
            val
        };
        acc.max(reach - radius)
    })
}

/// A dual point split as `v = v_ideal + Σ z_j (±A_j)` with `z ≥ 0`, every
/// correction wall exactly on the shrunken boundary, and `v_ideal` inside
/// the shrunken polytope.
#[derive(Debug, Clone)]
pub struct IdealPoint {
    pub v_ideal: Vec<f64>,
    /// Walls at the shrunken boundary under `v_ideal`, within tolerance.
    pub active: Vec<WallId>,
    /// Correction walls with their coefficients.
    pub corrections: Vec<(WallId, f64)>,
}

/// Most candidate walls [`ideal_decompose`] will enumerate subsets of.
pub const DECOMPOSE_WALL_CAP: usize = 15;

/// Splits `v` against the shrunken polytope.
///
/// Candidate walls are those within [`CouplingConfig::margin`] of the
/// shrunken boundary; every subset is tried by pinning its walls exactly to
/// the boundary (a Gram solve on the signed wall columns) and scoring the
/// worst constraint violation. The best-scoring subset wins, with earlier
/// subsets preferred on ties so results do not depend on evaluation order.
pub fn ideal_decompose(
    a: &DenseMatrix,
    v: &[f64],
    cfg: &CouplingConfig,
) -> Result<IdealPoint, Error> {
    if v.len() != a.rows() {
        return Err(Error::Dimension {
            context: "ideal_decompose point length",
            expected: a.rows(),
            actual: v.len(),
        });
    }
    let radius = cfg.shrunken();
    let candidates = polytope_walls_above(a, v, radius - cfg.margin(), cfg.sidedness);
    let k = candidates.len();
    if k > DECOMPOSE_WALL_CAP {
        return Err(Error::EnumerationCap {
            required: 1u128 << k.min(127),
            cap: 1u128 << DECOMPOSE_WALL_CAP,
        });
    }
    let values: Vec<f64> = candidates
        .iter()
        .map(|w| dual::wall_value(a, v, *w))
        .collect();

    let mut best: Option<(f64, u32, Vec<f64>, Vec<f64>)> = None;
    'masks: for mask in 0u32..(1u32 << k) {
        let picked: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let (z, v_cand) = if picked.is_empty() {
            (Vec::new(), v.to_vec())
        } else {
            let walls: Vec<WallId> = picked.iter().map(|&i| candidates[i]).collect();
            let wm = dual::wall_matrix(a, &walls);
            let rhs: Vec<f64> = picked.iter().map(|&i| values[i] - radius).collect();
            let Some(z) = QrFactor::factor(&wm, true).gram_solve(&rhs) else {
                continue; // linearly dependent subset
            };
            let mut v_cand = v.to_vec();
            for (c, w) in walls.iter().enumerate() {
                let col = w.column(a);
                for (vi, ci) in v_cand.iter_mut().zip(&col) {
                    *vi -= z[c] * ci;
                }
            }
            (z, v_cand)
        };
        let z_under = z.iter().fold(0.0_f64, |acc, &zi| acc.max(-zi));
        let overrun = worst_wall_overrun(a, &v_cand, radius, cfg.sidedness);
        let score = z_under.max(overrun);
        if best.as_ref().is_none_or(|(s, ..)| score < *s) {
            let exact = score == 0.0;
            best = Some((score, mask, z, v_cand));
            if exact {
                break 'masks;
            }
        }
    }

    let (score, mask, z, v_ideal) = best.expect("the empty subset is always scored");
    if score > cfg.tolerance {
        return Err(Error::Degenerate {
            detail: format!(
                "no wall decomposition within tolerance: best violation {score:.3e}"
            ),
        });
    }
    let corrections: Vec<(WallId, f64)> = (0..k)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| candidates[i])
        .zip(z)
        .collect();
    let active = polytope_walls_above(a, &v_ideal, radius - cfg.tolerance, cfg.sidedness);
    Ok(IdealPoint {
        v_ideal,
        active,
        corrections,
    })
}

/// Restricted non-negative fit on the active walls of an ideal point.
#[derive(Debug, Clone)]
pub struct IdealSolution {
    /// Signed coefficients per matrix column, length n.
    pub x: Vec<f64>,
    /// Walls whose coefficients are strictly positive.
    pub support: Vec<WallId>,
    pub residual_norm: f64,
    pub ax_norm: f64,
}

/// Non-negative least squares of `b` over the signed active-wall columns.
pub fn ideal_solution(
    instance: &ProblemInstance,
    ideal: &IdealPoint,
    cfg: &CouplingConfig,
) -> Result<IdealSolution, Error> {
    let a = &instance.a;
    let b = &instance.b;
    let mut x = vec![0.0; a.cols()];
    let mut support = Vec::new();
    if !ideal.active.is_empty() {
        let wm = dual::wall_matrix(a, &ideal.active);
        let coeffs = oracles::nnls_solve(&wm, b, None)?;
        for (w, &c) in ideal.active.iter().zip(&coeffs) {
            if c > cfg.tolerance {
                support.push(*w);
            }
            x[w.index()] += w.sign() * c;
        }
    }
    let ax = a.matvec(&x);
    let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    Ok(IdealSolution {
        x,
        support,
        residual_norm: numerics::norm2(&residual),
        ax_norm: numerics::norm2(&ax),
    })
}

/// The point reached from `v` by pinning exactly the given walls to the
/// shrunken boundary: `v′ = v − W z` with `Wᵀv′ = (1−τ)η`.
pub fn super_point(
    a: &DenseMatrix,
    v: &[f64],
    walls: &[WallId],
    cfg: &CouplingConfig,
) -> Result<Vec<f64>, Error> {
    if walls.is_empty() {
        return Ok(v.to_vec());
    }
    let wm = dual::wall_matrix(a, walls);
    let rhs: Vec<f64> = walls
        .iter()
        .map(|w| dual::wall_value(a, v, *w) - cfg.shrunken())
        .collect();
    let z = QrFactor::factor(&wm, true)
        .gram_solve(&rhs)
        .ok_or_else(|| Error::Degenerate {
            detail: "super point walls are linearly dependent".into(),
        })?;
    let mut out = v.to_vec();
    for (c, w) in walls.iter().enumerate() {
        let col = w.column(a);
        for (oi, ci) in out.iter_mut().zip(&col) {
            *oi -= z[c] * ci;
        }
    }
    Ok(out)
}

/// One auxiliary reset: the state tracking `size` jumped to a fresh super
/// point, changing its objective by `objective_gain`.
#[derive(Debug, Clone, Serialize)]
pub struct AuxReset {
    pub size: usize,
    pub objective_gain: f64,
    /// True when this support size had never been touched before; such
    /// resets start from the zero placeholder and carry no progress claim.
    pub first_touch: bool,
}

/// Diagnostics gathered at one probe.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingRecord {
    pub time: f64,
    pub phi: f64,
    pub v_ideal: Vec<f64>,
    pub active: Vec<WallId>,
    pub support: Vec<WallId>,
    pub x_ideal: Vec<f64>,
    pub residual_norm: f64,
    pub ax_norm: f64,
    /// `‖v_ideal(pre-cascade) − v_ideal(post)‖∞` when spikes fired at the
    /// probed step.
    pub cascade_gap: Option<f64>,
    pub aux_resets: Vec<AuxReset>,
}

/// Full diagnostic log of a coupled run.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticTrace {
    pub tau: f64,
    pub eta: f64,
    pub records: Vec<CouplingRecord>,
    /// Probes where no consistent decomposition existed (the run was not
    /// compliant, or not probed finely enough).
    pub failed_decompositions: usize,
    /// Probe intervals in which the support size jumped by more than one;
    /// the auxiliary bank cannot attribute those cleanly.
    pub multi_step_transitions: usize,
}

struct AuxState {
    v: Vec<f64>,
    touched: bool,
}

struct PrevProbe {
    t: f64,
    support_size: usize,
    x_ideal: Vec<f64>,
}

/// Probe-time observer: decomposes the dual point, maintains the auxiliary
/// bank (one state per support size `1..m`), and accumulates records.
pub struct CouplingTracker<'a> {
    instance: &'a ProblemInstance,
    cfg: CouplingConfig,
    aux: Vec<AuxState>,
    prev: Option<PrevProbe>,
    records: Vec<CouplingRecord>,
    failed_decompositions: usize,
    multi_step_transitions: usize,
}

impl<'a> CouplingTracker<'a> {
    pub fn new(instance: &'a ProblemInstance, cfg: CouplingConfig) -> Self {
        let m = instance.m();
        let aux = (1..m)
            .map(|_| AuxState {
                v: vec![0.0; m],
                touched: false,
            })
            .collect();
        Self {
            instance,
            cfg,
            aux,
            prev: None,
            records: Vec::new(),
            failed_decompositions: 0,
            multi_step_transitions: 0,
        }
    }

    pub fn config(&self) -> &CouplingConfig {
        &self.cfg
    }

    fn skip_probe(&mut self) {
        self.failed_decompositions += 1;
        self.prev = None;
    }

    /// Ingests one probe. `v_pre` is the pre-cascade dual point, present
    /// when spikes fired at the probed step. Probes without a consistent
    /// decomposition are counted and skipped, not errored.
    pub fn record(&mut self, t: f64, v_post: &[f64], v_pre: Option<&[f64]>) -> Result<(), Error> {
        let a = &self.instance.a;
        let b = &self.instance.b;
        let ideal = match ideal_decompose(a, v_post, &self.cfg) {
            Ok(p) => p,
            Err(Error::Degenerate { .. } | Error::EnumerationCap { .. }) => {
                self.skip_probe();
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        let sol = ideal_solution(self.instance, &ideal, &self.cfg)?;
        let cascade_gap = match v_pre {
            None => None,
            Some(vp) => match ideal_decompose(a, vp, &self.cfg) {
                Ok(pre) => Some(
                    pre.v_ideal
                        .iter()
                        .zip(&ideal.v_ideal)
                        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs())),
                ),
                Err(Error::Degenerate { .. } | Error::EnumerationCap { .. }) => {
                    self.failed_decompositions += 1;
                    None
                }
                Err(e) => return Err(e),
            },
        };

        let m = self.instance.m();
        let d_now = sol.support.len();
        let prev_size = self.prev.as_ref().map(|p| p.support_size);
        let mut aux_resets = Vec::new();

        if let Some(prev) = &self.prev {
            if d_now.abs_diff(prev.support_size) > 1 {
                self.multi_step_transitions += 1;
            }
            // While the support size holds steady its auxiliary state
            // drifts with the (piecewise constant) restricted residual.
            if prev.support_size == d_now && d_now >= 1 && d_now < m {
                let dt = t - prev.t;
                let ax_prev = a.matvec(&prev.x_ideal);
                let st = &mut self.aux[d_now - 1];
                for ((vi, bi), axi) in st.v.iter_mut().zip(b).zip(&ax_prev) {
                    *vi += (bi - axi) * dt;
                }
            }
        }
        if d_now >= 1 && d_now < m && prev_size != Some(d_now) {
            let vs = match super_point(a, v_post, &sol.support, &self.cfg) {
                Ok(v) => v,
                Err(Error::Degenerate { .. }) => {
                    self.skip_probe();
                    return Ok(());
                }
                Err(e) => return Err(e),
            };
            let st = &mut self.aux[d_now - 1];
            let gain = numerics::dot(b, &vs) - numerics::dot(b, &st.v);
            aux_resets.push(AuxReset {
                size: d_now,
                objective_gain: gain,
                first_touch: !st.touched,
            });
            st.v = vs;
            st.touched = true;
        }

        let mut phi = numerics::dot(b, &ideal.v_ideal);
        for st in &self.aux {
            phi += numerics::dot(b, &st.v);
        }

        self.records.push(CouplingRecord {
            time: t,
            phi,
            v_ideal: ideal.v_ideal,
            active: ideal.active,
            support: sol.support.clone(),
            x_ideal: sol.x.clone(),
            residual_norm: sol.residual_norm,
            ax_norm: sol.ax_norm,
            cascade_gap,
            aux_resets,
        });
        self.prev = Some(PrevProbe {
            t,
            support_size: d_now,
            x_ideal: sol.x,
        });
        Ok(())
    }

    pub fn finish(self) -> DiagnosticTrace {
        DiagnosticTrace {
            tau: self.cfg.tau,
            eta: self.cfg.eta,
            records: self.records,
            failed_decompositions: self.failed_decompositions,
            multi_step_transitions: self.multi_step_transitions,
        }
    }
}

/// Result of one audited property.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub evaluated: usize,
    pub violations: usize,
    /// Extreme of the audited quantity: the largest gap or deviation for
    /// the invariance, identity, and monotonicity checks, the smallest
    /// margin or gain for the growth and progress checks. `None` when
    /// nothing was evaluated.
    pub worst: Option<f64>,
    pub passed: bool,
}

/// Outcome of the six-property audit of a diagnostic trace.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaSuiteReport {
    pub tolerance: f64,
    pub checks: Vec<LemmaCheck>,
    pub failed_decompositions: usize,
    pub multi_step_transitions: usize,
    /// Probe intervals excluded from the growth check because an auxiliary
    /// state was touched for the first time inside them.
    pub skipped_first_touch_intervals: usize,
    pub passed: bool,
}

fn max_track(worst: &mut Option<f64>, value: f64) {
    *worst = Some(worst.map_or(value, |w| w.max(value)));
}

fn min_track(worst: &mut Option<f64>, value: f64) {
    *worst = Some(worst.map_or(value, |w| w.min(value)));
}

/// Audits a recorded run against the six structural properties of the
/// ideal trajectory: cascades leave it fixed, it drifts with the projected
/// residual, repeat super-point resets gain objective, the potential grows
/// at least as fast as the squared residual, the restricted fit satisfies
/// its energy identities, and the residual/fit norms are monotone.
pub fn check_lemma_suite(
    diag: &DiagnosticTrace,
    instance: &ProblemInstance,
    tolerance: f64,
) -> Result<LemmaSuiteReport, Error> {
    let a = &instance.a;
    let b = &instance.b;
    let recs = &diag.records;
    let mut checks = Vec::with_capacity(6);

    // Cascades must not move the ideal point. Probes that failed to
    // decompose at all count as violations: they mean the trajectory left
    // the regime where the split is defined.
    {
        let mut evaluated = diag.failed_decompositions;
        let mut violations = diag.failed_decompositions;
        let mut worst = None;
        for r in recs {
            if let Some(g) = r.cascade_gap {
                evaluated += 1;
                max_track(&mut worst, g);
                if g > tolerance {
                    violations += 1;
                }
            }
        }
        checks.push(LemmaCheck {
            name: "cascade_invariance",
            evaluated,
            violations,
            worst,
            passed: violations == 0,
        });
    }

    // Between probes with the same active set, the ideal point moves by
    // exactly the component of b orthogonal to the active span.
    {
        let mut evaluated = 0;
        let mut violations = 0;
        let mut worst = None;
        for pair in recs.windows(2) {
            let (r1, r2) = (&pair[0], &pair[1]);
            if r1.active != r2.active {
                continue;
            }
            let wm = dual::wall_matrix(a, &r1.active);
            let pb = numerics::project_onto_span(&wm, b)?;
            let dt = r2.time - r1.time;
            let mut dev = 0.0_f64;
            for i in 0..b.len() {
                let expect = (b[i] - pb[i]) * dt;
                dev = dev.max((r2.v_ideal[i] - r1.v_ideal[i] - expect).abs());
            }
            evaluated += 1;
            max_track(&mut worst, dev);
            if dev > tolerance {
                violations += 1;
            }
        }
        checks.push(LemmaCheck {
            name: "drift_alignment",
            evaluated,
            violations,
            worst,
            passed: violations == 0,
        });
    }

    // Re-touching a support size must not lose objective value.
    {
        let mut evaluated = 0;
        let mut violations = 0;
        let mut worst = None;
        for r in recs {
            for ar in &r.aux_resets {
                if ar.first_touch {
                    continue;
                }
                evaluated += 1;
                min_track(&mut worst, ar.objective_gain);
                if ar.objective_gain <= -tolerance {
                    violations += 1;
                }
            }
        }
        checks.push(LemmaCheck {
            name: "reset_progress",
            evaluated,
            violations,
            worst,
            passed: violations == 0,
        });
    }

    // The potential must grow at least as fast as the squared residual.
    // Intervals with a first-touch reset are excluded: those resets start
    // from the zero placeholder and make no progress claim.
    let mut skipped_first_touch = 0;
    {
        let mut evaluated = 0;
        let mut violations = 0;
        let mut worst = None;
        for pair in recs.windows(2) {
            let (r1, r2) = (&pair[0], &pair[1]);
            if r2.aux_resets.iter().any(|ar| ar.first_touch) {
                skipped_first_touch += 1;
                continue;
            }
            let dt = r2.time - r1.time;
            let margin = (r2.phi - r1.phi) - r2.residual_norm * r2.residual_norm * dt;
            evaluated += 1;
            min_track(&mut worst, margin);
            if margin < -tolerance {
                violations += 1;
            }
        }
        checks.push(LemmaCheck {
            name: "potential_growth",
            evaluated,
            violations,
            worst,
            passed: violations == 0,
        });
    }

    // The restricted fit satisfies bᵀ(Ax) = ‖Ax‖² and the Pythagorean
    // split ‖b − Ax‖² = ‖b‖² − ‖Ax‖², both scaled by max(1, ‖b‖²).
    {
        let b2 = numerics::dot(b, b);
        let scale = b2.max(1.0);
        let mut evaluated = 0;
        let mut violations = 0;
        let mut worst = None;
        for r in recs {
            let ax = a.matvec(&r.x_ideal);
            let ax2 = numerics::dot(&ax, &ax);
            let e1 = (numerics::dot(b, &ax) - ax2).abs();
            let e2 = (r.residual_norm * r.residual_norm - (b2 - ax2)).abs();
            let err = e1.max(e2) / scale;
            evaluated += 1;
            max_track(&mut worst, err);
            if err > tolerance {
                violations += 1;
            }
        }
        checks.push(LemmaCheck {
            name: "energy_identities",
            evaluated,
            violations,
            worst,
            passed: violations == 0,
        });
    }

    // The residual never grows and the fitted norm never shrinks.
    {
        let mut evaluated = 0;
        let mut violations = 0;
        let mut worst = None;
        for pair in recs.windows(2) {
            let (r1, r2) = (&pair[0], &pair[1]);
            let bad = (r2.residual_norm - r1.residual_norm).max(r1.ax_norm - r2.ax_norm);
            evaluated += 1;
            max_track(&mut worst, bad);
            if bad > tolerance {
                violations += 1;
            }
        }
        checks.push(LemmaCheck {
            name: "residual_monotone",
            evaluated,
            violations,
            worst,
            passed: violations == 0,
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(LemmaSuiteReport {
        tolerance,
        checks,
        failed_decompositions: diag.failed_decompositions,
        multi_step_transitions: diag.multi_step_transitions,
        skipped_first_touch_intervals: skipped_first_touch,
        passed,
    })
}

/// Runs the optimizer network for `instance` with the dual trajectory and
/// coupling tracker attached, then audits the recorded diagnostics.
pub fn audit_run(
    instance: &ProblemInstance,
    alpha: f64,
    cfg: &CouplingConfig,
    sim: &SimConfig,
    suite_tolerance: f64,
) -> Result<(SpikeTrace, DiagnosticTrace, LemmaSuiteReport), Error> {
    let net = snn::build_network(instance, cfg.sidedness, alpha, cfg.eta)?;
    let tracker = CouplingTracker::new(instance, *cfg);
    let mut obs = DualObserver::with_tracker(instance, alpha, tracker);
    let trace = snn::simulate_with(&net, sim, &mut obs)?;
    let diag = obs
        .tracker
        .take()
        .expect("observer was constructed with a tracker")
        .finish();
    let report = check_lemma_suite(&diag, instance, suite_tolerance)?;
    Ok((trace, diag, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_sided_cfg(tau: f64) -> CouplingConfig {
        CouplingConfig::new(tau, 1.0, 1e-9, Sidedness::TwoSided).unwrap()
    }

    fn wall(index: usize, positive: bool) -> WallId {
        WallId::from_column(index, positive)
    }

    #[test]
    fn axis_aligned_decompositions() {
        let a = DenseMatrix::identity(2);
        let cfg = two_sided_cfg(0.4); // shrunken radius 0.6

        let p = ideal_decompose(&a, &[0.8, 0.1], &cfg).unwrap();
        assert_abs_diff_eq!(p.v_ideal[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_ideal[1], 0.1, epsilon = 1e-12);
        assert_eq!(p.active, vec![wall(0, true)]);
        assert_eq!(p.corrections.len(), 1);
        assert_abs_diff_eq!(p.corrections[0].1, 0.2, epsilon = 1e-12);

        let p = ideal_decompose(&a, &[0.3, 0.1], &cfg).unwrap();
        assert_eq!(p.v_ideal, vec![0.3, 0.1]);
        assert!(p.active.is_empty());
        assert!(p.corrections.is_empty());

        let p = ideal_decompose(&a, &[0.9, 0.95], &cfg).unwrap();
        assert_abs_diff_eq!(p.v_ideal[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v_ideal[1], 0.6, epsilon = 1e-12);
        assert_eq!(p.active, vec![wall(0, true), wall(1, true)]);

        let p = ideal_decompose(&a, &[-0.8, 0.0], &cfg).unwrap();
        assert_abs_diff_eq!(p.v_ideal[0], -0.6, epsilon = 1e-12);
        assert_eq!(p.active, vec![wall(0, false)]);
    }

    #[test]
    fn one_sided_polytope_ignores_negative_reach() {
        let a = DenseMatrix::identity(2);
        let cfg = CouplingConfig::new(0.4, 1.0, 1e-9, Sidedness::OneSided).unwrap();
        let p = ideal_decompose(&a, &[0.0, -5.0], &cfg).unwrap();
        assert_eq!(p.v_ideal, vec![0.0, -5.0]);
        assert!(p.active.is_empty());
    }

    fn oblique() -> (DenseMatrix, Vec<f64>) {
        let r = 1.0 / 2.0_f64.sqrt();
        let a = DenseMatrix::from_rows(vec![vec![0.0, r], vec![-1.0, -r]]).unwrap();
        (a, vec![0.4, -0.9])
    }

    #[test]
    fn oblique_decomposition_matches_hand_solution() {
        let (a, v) = oblique();
        let cfg = two_sided_cfg(0.4);
        let p = ideal_decompose(&a, &v, &cfg).unwrap();
        assert_abs_diff_eq!(p.v_ideal[0], 0.248_528_137_423_857, epsilon = 1e-9);
        assert_abs_diff_eq!(p.v_ideal[1], -0.6, epsilon = 1e-9);
        assert_eq!(p.active, vec![wall(0, true), wall(1, true)]);
        assert_eq!(p.corrections.len(), 2);
        assert_abs_diff_eq!(p.corrections[0].1, 0.148_528, epsilon = 1e-5);
        assert_abs_diff_eq!(p.corrections[1].1, 0.214_214, epsilon = 1e-5);
    }

    #[test]
    fn restricted_fit_and_super_point() {
        let (a, v) = oblique();
        let cfg = two_sided_cfg(0.4);
        let inst = ProblemInstance::new(a, vec![1.0, 0.0]).unwrap();
        let p = ideal_decompose(&inst.a, &v, &cfg).unwrap();
        let sol = ideal_solution(&inst, &p, &cfg).unwrap();
        assert_eq!(sol.support, vec![wall(1, true)]);
        assert_abs_diff_eq!(sol.x[1], 1.0 / 2.0_f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(sol.residual_norm, 1.0 / 2.0_f64.sqrt(), epsilon = 1e-9);

        let sp = super_point(&inst.a, &v, &sol.support, &cfg).unwrap();
        assert_abs_diff_eq!(sp[0], 0.174_264_068_711_928, epsilon = 1e-9);
        assert_abs_diff_eq!(sp[1], -0.674_264_068_711_928, epsilon = 1e-9);
        assert_abs_diff_eq!(
            dual::wall_value(&inst.a, &sp, wall(1, true)),
            cfg.shrunken(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn decompose_caps_wide_candidate_sets() {
        let mut a = DenseMatrix::zeros(2, 16);
        for j in 0..16 {
            a.set(0, j, 1.0);
            a.set(1, j, j as f64 * 1e-3);
        }
        let cfg = two_sided_cfg(0.4);
        match ideal_decompose(&a, &[2.0, 0.0], &cfg) {
            Err(Error::EnumerationCap { cap, .. }) => {
                assert_eq!(cap, 1u128 << DECOMPOSE_WALL_CAP)
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn config_rejects_bad_shrink_factors() {
        assert!(CouplingConfig::new(0.0, 1.0, 1e-9, Sidedness::TwoSided).is_err());
        assert!(CouplingConfig::new(1.0, 1.0, 1e-9, Sidedness::TwoSided).is_err());
        assert!(CouplingConfig::new(0.5, -1.0, 1e-9, Sidedness::TwoSided).is_err());
    }

    #[test]
    fn recommendations_scale_as_documented() {
        assert_abs_diff_eq!(recommended_tau(1.0, 1, 1.0), 0.1, epsilon = 1e-15);
        let tau = recommended_tau(0.5, 3, 2.0);
        assert_abs_diff_eq!(tau, 0.5 / 36.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            recommended_alpha(0.1, 2, 1.0),
            (0.1_f64 / 2.0).min(0.01),
            epsilon = 1e-15
        );
    }

    #[test]
    fn audit_passes_on_compliant_run() {
        let a = DenseMatrix::from_rows(vec![
            vec![1.0, 0.0, 2.0 / 3.0],
            vec![0.0, 1.0, 2.0 / 3.0],
        ])
        .unwrap();
        let inst = ProblemInstance::new(a, vec![0.1, 0.4]).unwrap();
        let cfg = CouplingConfig::new(0.1, 1.0, 1e-8, Sidedness::TwoSided).unwrap();
        let sim = SimConfig::new(0.001, 20.0, 30, 50).unwrap();
        let (_, diag, report) = audit_run(&inst, 0.005, &cfg, &sim, 1e-6).unwrap();
        assert!(diag.records.len() > 100);
        assert_eq!(diag.failed_decompositions, 0);
        assert!(report.passed, "{report:?}");
    }
}
