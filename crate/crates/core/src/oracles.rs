//! Reference solvers and solution checkers.
//!
//! The simulators converge to optima of two convex programs; everything here
//! computes those optima (or certifies candidate solutions) by independent
//! means so trajectories can be scored against ground truth.

use std::cmp::Ordering;

use itertools::Itertools;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Error;
use crate::instance::ProblemInstance;
use crate::numerics::{self, DenseMatrix};

/// The two programs a network can solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProblemKind {
    /// min ‖Ax − b‖₂ subject to x ≥ 0 (one-sided network).
    NonNegativeLeastSquares,
    /// min ‖x‖₁ subject to Ax = b (two-sided network).
    MinimumL1,
}

fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn residual(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter().zip(a.matvec(x)).map(|(bi, axi)| bi - axi).collect()
}

/// Active-set non-negative least squares (Lawson–Hanson).
///
/// `iteration_cap` bounds the total number of passive-set updates; `None`
/// uses `10·n`, generous for the problem sizes here.
pub fn nnls_solve(
    a: &DenseMatrix,
    b: &[f64],
    iteration_cap: Option<usize>,
) -> Result<Vec<f64>, Error> {
    let m = a.rows();
    let n = a.cols();
    if b.len() != m {
        return Err(Error::Dimension {
            context: "nnls_solve right-hand side",
            expected: m,
            actual: b.len(),
        });
    }
    let cap = iteration_cap.unwrap_or(10 * n.max(1));
    let grad_scale = a
        .tr_matvec(b)
        .iter()
        .fold(1.0_f64, |acc, g| acc.max(g.abs()));
    let tol = 1e-10 * grad_scale;

    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut iterations = 0usize;

    loop {
        let w = a.tr_matvec(&residual(a, b, &x));
        let mut entering: Option<(usize, f64)> = None;
        for (j, &wj) in w.iter().enumerate() {
            if !passive[j] && wj > tol && entering.is_none_or(|(_, best)| wj > best) {
                entering = Some((j, wj));
            }
        }
        let Some((j_star, _)) = entering else {
            return Ok(x);
        };
        passive[j_star] = true;

        loop {
            iterations += 1;
            if iterations > cap {
                return Err(Error::IterationCap {
                    context: "nnls_solve",
                    cap,
                });
            }
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(&idx);
            let z = numerics::least_squares_solve(&sub, b)?;
            if z.iter().all(|&zi| zi > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                break;
            }
            // Step toward z only as far as the positivity boundary allows,
            // then drop the coordinate that hit it.
            let mut alpha = f64::INFINITY;
            let mut leaving = None;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = x[j] - z[k];
                    if denom > 0.0 {
                        let step = x[j] / denom;
                        if step < alpha {
                            alpha = step;
                            leaving = Some(j);
                        }
                    }
                }
            }
            let Some(q) = leaving else {
                return Err(Error::Degenerate {
                    detail: "nnls inner step has no blocking coordinate".into(),
                });
            };
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
            }
            x[q] = 0.0;
            passive[q] = false;
            for j in 0..n {
                if passive[j] && x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
}

/// Exact solver output: the minimizer, its objective value, and (for the
/// l1 problem, when available) a dual certificate.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub certificate: Option<Vec<f64>>,
}

/// Largest number of candidate supports [`l1_solve_enum`] will scan.
pub const L1_ENUMERATION_CAP: u128 = 1 << 20;

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 1..=k {
        c = match c.checked_mul((n - k + i) as u128) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
    }
    c
}

fn better_candidate(
    a: &(f64, Vec<usize>, Vec<f64>),
    b: &(f64, Vec<usize>, Vec<f64>),
) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

/// Exact minimum-l1 interpolation by support enumeration.
///
/// Some optimum is supported on at most m columns, so every support of size
/// up to m is scanned; candidates whose least-squares residual exceeds
/// `1e−9·max(1, ‖b‖)` are discarded and the smallest l1 norm wins. Ties break
/// toward the lexicographically smallest support, so the result is
/// independent of evaluation order. When the winning support has exactly m
/// columns and the square system is invertible, the dual point v solving
/// `A_Sᵀv = sign(x_S)` is attached after verifying `‖Aᵀv‖∞ ≤ 1 + 1e−9`.
pub fn l1_solve_enum(instance: &ProblemInstance) -> Result<OracleSolution, Error> {
    let a = &instance.a;
    let b = &instance.b;
    let m = a.rows();
    let n = a.cols();
    let kmax = m.min(n);

    let mut required: u128 = 0;
    for k in 0..=kmax {
        required = required.saturating_add(binomial(n, k));
    }
    if required > L1_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            required,
            cap: L1_ENUMERATION_CAP,
        });
    }

    let feas_tol = 1e-9 * numerics::norm2(b).max(1.0);
    let x_ls = numerics::least_squares_solve(a, b)?;
    let r_ls = numerics::norm2(&residual(a, b, &x_ls));
    if r_ls > feas_tol {
        return Err(Error::Infeasible { residual: r_ls });
    }

    let supports: Vec<Vec<usize>> = (0..=kmax)
        .flat_map(|k| (0..n).combinations(k))
        .collect();
    let eval = |s: &Vec<usize>| -> Option<(f64, Vec<usize>, Vec<f64>)> {
        let sub = a.select_columns(s);
        let xs = numerics::least_squares_solve(&sub, b).ok()?;
        if numerics::norm2(&residual(&sub, b, &xs)) > feas_tol {
            return None;
        }
        Some((l1_norm(&xs), s.clone(), xs))
    };

    #[cfg(feature = "parallel")]
    let best = supports.par_iter().filter_map(eval).min_by(better_candidate);
    #[cfg(not(feature = "parallel"))]
    let best = supports.iter().filter_map(eval).min_by(better_candidate);

    let (objective, support, xs) = best.ok_or(Error::Infeasible { residual: r_ls })?;
    let mut x = vec![0.0; n];
    for (k, &j) in support.iter().enumerate() {
        x[j] = xs[k];
    }

    let mut certificate = None;
    if support.len() == m {
        let sub_t = a.select_columns(&support).transpose();
        let signs: Vec<f64> = xs
            .iter()
            .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        if let Some(v) = numerics::QrFactor::factor(&sub_t, true).square_solve(&signs) {
            if numerics::norm_inf(&a.tr_matvec(&v)) <= 1.0 + 1e-9 {
                certificate = Some(v);
            }
        }
    }

    Ok(OracleSolution {
        x,
        objective,
        certificate,
    })
}

/// Worst violation of each first-order optimality condition.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub kind: ProblemKind,
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    pub tolerance: f64,
    pub satisfied: bool,
}

/// Scores `x` against the optimality conditions of `kind`.
///
/// For the non-negative problem the multiplier is derived from `x` itself
/// (`y = Aᵀ(Ax − b)`), so no certificate is needed. The l1 problem requires
/// a dual point `certificate`; coordinates with `|x_i| ≤ tolerance` count as
/// inactive.
pub fn kkt_check(
    kind: ProblemKind,
    instance: &ProblemInstance,
    x: &[f64],
    certificate: Option<&[f64]>,
    tolerance: f64,
) -> Result<KktReport, Error> {
    let a = &instance.a;
    let b = &instance.b;
    if x.len() != a.cols() {
        return Err(Error::Dimension {
            context: "kkt_check solution length",
            expected: a.cols(),
            actual: x.len(),
        });
    }

    let (primal, dual, stationarity, complementarity) = match kind {
        ProblemKind::NonNegativeLeastSquares => {
            let grad: Vec<f64> = a
                .tr_matvec(&residual(a, b, x))
                .iter()
                .map(|g| -g)
                .collect();
            let primal = x.iter().fold(0.0_f64, |acc, &xi| acc.max(-xi));
            let dual = grad.iter().fold(0.0_f64, |acc, &g| acc.max(-g));
            let stationarity = x
                .iter()
                .zip(&grad)
                .filter(|(&xi, _)| xi > tolerance)
                .fold(0.0_f64, |acc, (_, &g)| acc.max(g.abs()));
            let complementarity = x
                .iter()
                .zip(&grad)
                .fold(0.0_f64, |acc, (&xi, &g)| acc.max((xi * g).abs()));
            (primal, dual, stationarity, complementarity)
        }
        ProblemKind::MinimumL1 => {
            let v = certificate.ok_or(Error::Precondition {
                context: "kkt_check",
                detail: "the l1 problem needs a dual certificate".into(),
            })?;
            if v.len() != a.rows() {
                return Err(Error::Dimension {
                    context: "kkt_check certificate length",
                    expected: a.rows(),
                    actual: v.len(),
                });
            }
            let atv = a.tr_matvec(v);
            let primal = numerics::norm_inf(&residual(a, b, x));
            let dual = (numerics::norm_inf(&atv) - 1.0).max(0.0);
            let stationarity = x
                .iter()
                .zip(&atv)
                .filter(|(&xi, _)| xi.abs() > tolerance)
                .fold(0.0_f64, |acc, (&xi, &g)| acc.max((g - xi.signum()).abs()));
            let complementarity = (l1_norm(x) - numerics::dot(b, v)).abs();
            (primal, dual, stationarity, complementarity)
        }
    };

    let satisfied = primal <= tolerance
        && dual <= tolerance
        && stationarity <= tolerance
        && complementarity <= tolerance;
    Ok(KktReport {
        kind,
        primal_feasibility: primal,
        dual_feasibility: dual,
        stationarity,
        complementarity,
        tolerance,
        satisfied,
    })
}

/// Relative error of a candidate solution against a reference optimum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsReport {
    /// Fit error: ‖Ax − Ax*‖₂/‖b‖₂ for the non-negative problem,
    /// ‖b − Ax‖₂/‖b‖₂ for the l1 problem. Absolute when ‖b‖ = 0.
    pub eps_l2: f64,
    /// Objective gap (‖x‖₁ − OPT)/OPT for the l1 problem, absolute when
    /// OPT = 0; not defined for the non-negative problem.
    pub eps_l1: Option<f64>,
}

pub fn epsilon_report(
    kind: ProblemKind,
    instance: &ProblemInstance,
    x: &[f64],
    reference_x: &[f64],
) -> Result<EpsReport, Error> {
    let a = &instance.a;
    let b = &instance.b;
    if x.len() != a.cols() || reference_x.len() != a.cols() {
        return Err(Error::Dimension {
            context: "epsilon_report solution length",
            expected: a.cols(),
            actual: x.len(),
        });
    }
    let b_norm = numerics::norm2(b);
    let rel = |err: f64| if b_norm > 0.0 { err / b_norm } else { err };

    Ok(match kind {
        ProblemKind::NonNegativeLeastSquares => {
            let diff: Vec<f64> = a
                .matvec(x)
                .iter()
                .zip(a.matvec(reference_x))
                .map(|(p, q)| p - q)
                .collect();
            EpsReport {
                eps_l2: rel(numerics::norm2(&diff)),
                eps_l1: None,
            }
        }
        ProblemKind::MinimumL1 => {
            let opt = l1_norm(reference_x);
            let gap = (l1_norm(x) - opt).max(0.0);
            EpsReport {
                eps_l2: rel(numerics::norm2(&residual(a, b, x))),
                eps_l1: Some(if opt > 0.0 { gap / opt } else { gap }),
            }
        }
    })
}

/// Stability estimates tying a near-feasible pair to the exact optimum.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub l1_gap: f64,
    pub l1_bound: f64,
    pub dual_norm: f64,
    pub dual_bound: f64,
    pub lambda_min: f64,
    pub satisfied: bool,
}

/// Checks that the objective gap of `x` is controlled by its residual
/// through `√(n/λmin)` and that the dual point obeys `‖v‖₂ ≤ η·√(n/λmin)`
/// (any v with `‖Aᵀv‖∞ ≤ η` must). λmin is the smallest nonzero eigenvalue
/// of `AᵀA`.
pub fn perturbation_bound_check(
    instance: &ProblemInstance,
    x: &[f64],
    opt: f64,
    v: &[f64],
    eta: f64,
) -> Result<PerturbationReport, Error> {
    let a = &instance.a;
    if v.len() != a.rows() {
        return Err(Error::Dimension {
            context: "perturbation_bound_check dual length",
            expected: a.rows(),
            actual: v.len(),
        });
    }
    let spec = numerics::spectral_summary(a)?;
    let root = (a.cols() as f64 / spec.lambda_min).sqrt();
    let l1_gap = (l1_norm(x) - opt).abs();
    let l1_bound = root * numerics::norm2(&residual(a, &instance.b, x));
    let dual_norm = numerics::norm2(v);
    let dual_bound = eta * root;
    let slack = 1e-12;
    Ok(PerturbationReport {
        l1_gap,
        l1_bound,
        dual_norm,
        dual_bound,
        lambda_min: spec.lambda_min,
        satisfied: l1_gap <= l1_bound * (1.0 + slack) + slack
            && dual_norm <= dual_bound * (1.0 + slack) + slack,
    })
}

/// Unconstrained least squares through the sign-splitting reduction: solve
/// NNLS on `[A | −A]` and return `x = x⁺ − x⁻`. Exercises the same doubling
/// the two-sided network uses.
pub fn ls_via_nnls_doubling(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, Error> {
    let m = a.rows();
    let n = a.cols();
    let mut data = Vec::with_capacity(m * 2 * n);
    for i in 0..m {
        let row = a.row(i);
        data.extend_from_slice(row);
        data.extend(row.iter().map(|w| -w));
    }
    let doubled = DenseMatrix::new(m, 2 * n, data)?;
    let z = nnls_solve(&doubled, b, None)?;
    Ok((0..n).map(|j| z[j] - z[n + j]).collect())
}
