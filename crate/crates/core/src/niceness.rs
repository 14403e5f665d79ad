//! The conditioning measure γ(A) of a wall arrangement.
//!
//! Three floors each bound a way the polytope `{v : ‖Aᵀv‖∞ ≤ 1}` can
//! degenerate: a column lying nearly inside the span of m−1 others, two
//! vertices nearly coinciding, and a vertex coordinate near zero. Their
//! minimum is γ(A); runs are well behaved when it stays away from zero.
//! Positive γ also makes the minimum-l1 interpolation unique.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Error;
use crate::instance::ProblemInstance;
use crate::numerics::{self, DenseMatrix, QrFactor};
use crate::oracles::binomial;

/// Most column subsets [`gamma_exact`] will enumerate.
pub const GAMMA_SUBSET_CAP: u128 = 5000;
/// Most sign patterns per subset (so m ≤ 12 for exact vertex work).
pub const GAMMA_SIGN_CAP: u128 = 4096;

/// Vertices closer than this count as one geometric point.
const VERTEX_DEDUP_TOL: f64 = 1e-9;

/// The components of γ(A).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaReport {
    /// min of the defined components below.
    pub gamma: f64,
    /// Condition 1: min over size-m column subsets Γ and i ∈ Γ of the
    /// distance from A_i to the span of the other columns of Γ.
    pub gamma_nondegen: f64,
    /// Condition 2: min pairwise distance among distinct polytope vertices;
    /// `None` when fewer than two vertices exist.
    pub gamma_vertex_gap: Option<f64>,
    /// Condition 3: min |coordinate| over all vertices; `None` without
    /// vertices.
    pub gamma_min_coord: Option<f64>,
    /// Whether the whole space was enumerated.
    pub exact: bool,
    /// Subsets examined (all of them for exact, trials for sampled).
    pub samples_used: usize,
}

/// A polytope vertex: the unique v with `A_Sᵀ v = signs` for a nonsingular
/// size-m support.
#[derive(Debug, Clone)]
pub struct Vertex {
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
    pub v: Vec<f64>,
}

fn check_shape(a: &DenseMatrix, context: &'static str) -> Result<(), Error> {
    if a.rows() == 0 || a.cols() < a.rows() {
        return Err(Error::Precondition {
            context,
            detail: format!(
                "need at least as many columns as rows (m={}, n={})",
                a.rows(),
                a.cols()
            ),
        });
    }
    Ok(())
}

fn check_caps(a: &DenseMatrix) -> Result<u128, Error> {
    let m = a.rows();
    let n = a.cols();
    let subsets = binomial(n, m);
    if subsets > GAMMA_SUBSET_CAP {
        return Err(Error::EnumerationCap {
            required: subsets,
            cap: GAMMA_SUBSET_CAP,
        });
    }
    let signs = if m >= 127 {
        u128::MAX
    } else {
        1u128 << m
    };
    if signs > GAMMA_SIGN_CAP {
        return Err(Error::EnumerationCap {
            required: signs,
            cap: GAMMA_SIGN_CAP,
        });
    }
    Ok(subsets)
}

/// Distance from each column of the subset to the span of the others,
/// minimized over the subset.
fn subset_clearance(a: &DenseMatrix, s: &[usize]) -> f64 {
    let mut clearance = f64::INFINITY;
    for &i in s {
        let others: Vec<usize> = s.iter().copied().filter(|&j| j != i).collect();
        let span = a.select_columns(&others);
        let ai = a.col(i);
        let proj = numerics::project_onto_span(&span, &ai)
            .expect("columns of one matrix share a length");
        let dist = ai
            .iter()
            .zip(&proj)
            .map(|(x, p)| (x - p) * (x - p))
            .sum::<f64>()
            .sqrt();
        clearance = clearance.min(dist);
    }
    clearance
}

/// All vertices carried by one support; empty when the square system is
/// singular.
fn subset_vertices(a: &DenseMatrix, s: &[usize]) -> Vec<Vertex> {
    let m = a.rows();
    let f = QrFactor::factor(&a.select_columns(s).transpose(), true);
    if f.rank() < m {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(1 << m);
    for pattern in 0u32..(1u32 << m) {
        let signs: Vec<i8> = (0..m)
            .map(|bit| if pattern >> bit & 1 == 1 { 1 } else { -1 })
            .collect();
        let rhs: Vec<f64> = signs.iter().map(|&s| f64::from(s)).collect();
        if let Some(v) = f.square_solve(&rhs) {
            out.push(Vertex {
                support: s.to_vec(),
                signs,
                v,
            });
        }
    }
    out
}

/// Every polytope vertex, by full enumeration. Same caps as [`gamma_exact`].
pub fn polytope_vertices(a: &DenseMatrix) -> Result<Vec<Vertex>, Error> {
    check_shape(a, "polytope_vertices")?;
    check_caps(a)?;
    let m = a.rows();
    let n = a.cols();
    Ok((0..n)
        .combinations(m)
        .flat_map(|s| subset_vertices(a, &s))
        .collect())
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn dedupe_points(vertices: &[Vertex]) -> Vec<&[f64]> {
    let mut out: Vec<&[f64]> = Vec::new();
    let tol2 = VERTEX_DEDUP_TOL * VERTEX_DEDUP_TOL;
    'outer: for vtx in vertices {
        for kept in &out {
            if sq_dist(kept, &vtx.v) <= tol2 {
                continue 'outer;
            }
        }
        out.push(&vtx.v);
    }
    out
}

fn min_pairwise_distance(points: &[&[f64]]) -> Option<f64> {
    let k = points.len();
    if k < 2 {
        return None;
    }
    #[cfg(feature = "parallel")]
    let best = (0..k - 1)
        .into_par_iter()
        .map(|i| {
            let mut local = f64::INFINITY;
            for j in i + 1..k {
                local = local.min(sq_dist(points[i], points[j]));
            }
            local
        })
        .reduce(|| f64::INFINITY, f64::min);
    #[cfg(not(feature = "parallel"))]
    let best = {
        let mut local = f64::INFINITY;
        for i in 0..k - 1 {
            for j in i + 1..k {
                local = local.min(sq_dist(points[i], points[j]));
            }
        }
        local
    };
    Some(best.sqrt())
}

fn assemble_report(
    clearance: f64,
    vertices: &[Vertex],
    exact: bool,
    samples_used: usize,
) -> GammaReport {
    let distinct = dedupe_points(vertices);
    let gamma_vertex_gap = min_pairwise_distance(&distinct);
    let gamma_min_coord = if vertices.is_empty() {
        None
    } else {
        Some(
            vertices
                .iter()
                .flat_map(|vtx| vtx.v.iter())
                .fold(f64::INFINITY, |acc, &c| acc.min(c.abs())),
        )
    };
    let gamma = [Some(clearance), gamma_vertex_gap, gamma_min_coord]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
    GammaReport {
        gamma,
        gamma_nondegen: clearance,
        gamma_vertex_gap,
        gamma_min_coord,
        exact,
        samples_used,
    }
}

/// γ(A) by full enumeration of supports and sign patterns.
///
/// Refuses arrangements beyond [`GAMMA_SUBSET_CAP`] supports or
/// [`GAMMA_SIGN_CAP`] sign patterns; use [`gamma_sampled`] there.
pub fn gamma_exact(a: &DenseMatrix) -> Result<GammaReport, Error> {
    check_shape(a, "gamma_exact")?;
    check_caps(a)?;
    let m = a.rows();
    let n = a.cols();
    let subsets: Vec<Vec<usize>> = (0..n).combinations(m).collect();

    #[cfg(feature = "parallel")]
    let stats: Vec<(f64, Vec<Vertex>)> = subsets
        .par_iter()
        .map(|s| (subset_clearance(a, s), subset_vertices(a, s)))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let stats: Vec<(f64, Vec<Vertex>)> = subsets
        .iter()
        .map(|s| (subset_clearance(a, s), subset_vertices(a, s)))
        .collect();

    let mut clearance = f64::INFINITY;
    let mut vertices = Vec::new();
    for (c, vs) in stats {
        clearance = clearance.min(c);
        vertices.extend(vs);
    }
    Ok(assemble_report(clearance, &vertices, true, subsets.len()))
}

fn sample_subset(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let j = rng.gen_range(k..n);
        idx.swap(k, j);
    }
    let mut s = idx[..m].to_vec();
    s.sort_unstable();
    s
}

/// Monte Carlo surrogate for [`gamma_exact`]: the same minima over `trials`
/// uniformly drawn supports (all sign patterns per support). The result is
/// an upper bound on γ(A) and equals the exact value once the draws cover
/// every support.
pub fn gamma_sampled(a: &DenseMatrix, trials: usize, seed: u64) -> Result<GammaReport, Error> {
    check_shape(a, "gamma_sampled")?;
    if trials == 0 {
        return Err(Error::Precondition {
            context: "gamma_sampled",
            detail: "need at least one trial".into(),
        });
    }
    let m = a.rows();
    if m >= 127 || (1u128 << m) > GAMMA_SIGN_CAP {
        return Err(Error::EnumerationCap {
            required: if m >= 127 { u128::MAX } else { 1u128 << m },
            cap: GAMMA_SIGN_CAP,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clearance = f64::INFINITY;
    let mut vertices = Vec::new();
    for _ in 0..trials {
        let s = sample_subset(&mut rng, a.cols(), m);
        clearance = clearance.min(subset_clearance(a, &s));
        vertices.extend(subset_vertices(a, &s));
    }
    Ok(assemble_report(clearance, &vertices, false, trials))
}

/// Matrix with i.i.d. uniform unit-sphere columns, reproducible per seed.
pub fn rsm_sample(m: usize, n: usize, seed: u64) -> Result<DenseMatrix, Error> {
    if m == 0 || n == 0 {
        return Err(Error::Precondition {
            context: "rsm_sample",
            detail: "matrix dimensions must be positive".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DenseMatrix::zeros(m, n);
    for j in 0..n {
        loop {
            let col: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let norm = numerics::norm2(&col);
            if norm > 1e-12 {
                for (i, c) in col.iter().enumerate() {
                    out.set(i, j, c / norm);
                }
                break;
            }
        }
    }
    Ok(out)
}

/// Random instance: unit-sphere columns plus a Gaussian right-hand side of
/// moderate norm, fully determined by the seed.
pub fn rsm_instance(m: usize, n: usize, seed: u64) -> Result<ProblemInstance, Error> {
    let a = rsm_sample(m, n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let b = (0..m)
        .map(|_| 0.4 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ProblemInstance::new(a, b)
}

/// Residual decay of the greedy bucketed projection.
#[derive(Debug, Clone, Serialize)]
pub struct GammaProbeReport {
    pub m: usize,
    pub n: usize,
    pub tau: f64,
    pub seed: Option<u64>,
    /// Residual norms of column 1 against the growing chosen span,
    /// normalized so the sequence starts at 1; length m+1.
    pub residuals: Vec<f64>,
    /// Column picked in each bucket.
    pub chosen: Vec<usize>,
    /// c such that the final residual is `m^(−c·τ)`; positive whenever the
    /// greedy construction makes progress.
    pub decay_coefficient: f64,
}

/// Greedy bucketed projection on a given matrix: columns `2..n` are split
/// into m buckets of `⌊(n−1)/m⌋`; each round picks the bucket column best
/// correlated with the current residual of column 1 and projects the target
/// onto the chosen span. Upper-bound probe for how quickly one column is
/// approximated by the rest.
pub fn gamma_upper_probe_on(a: &DenseMatrix, tau: f64) -> Result<GammaProbeReport, Error> {
    let m = a.rows();
    let n = a.cols();
    if m < 2 {
        return Err(Error::Precondition {
            context: "gamma_upper_probe",
            detail: "need at least two buckets (m >= 2)".into(),
        });
    }
    if n < 2 * m {
        return Err(Error::Precondition {
            context: "gamma_upper_probe",
            detail: format!("need n >= 2m columns, got m={m}, n={n}"),
        });
    }
    if !(tau.is_finite() && tau > 0.0 && tau <= m as f64 / 4.0) {
        return Err(Error::Precondition {
            context: "gamma_upper_probe",
            detail: format!("tau must lie in (0, m/4], got {tau}"),
        });
    }
    let target = a.col(0);
    let target_norm = numerics::norm2(&target);
    if target_norm == 0.0 {
        return Err(Error::Precondition {
            context: "gamma_upper_probe",
            detail: "first column is zero".into(),
        });
    }

    let width = (n - 1) / m;
    let mut residual = target.clone();
    let mut residuals = vec![1.0];
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for bucket in 0..m {
        let start = 1 + bucket * width;
        let mut best = start;
        let mut best_score = -1.0;
        for j in start..start + width {
            let col = a.col(j);
            let norm = numerics::norm2(&col);
            if norm == 0.0 {
                continue;
            }
            let score = numerics::dot(&residual, &col).abs() / norm;
            if score > best_score {
                best_score = score;
                best = j;
            }
        }
        chosen.push(best);
        let span = a.select_columns(&chosen);
        let proj = numerics::project_onto_span(&span, &target)?;
        residual = target.iter().zip(&proj).map(|(t, p)| t - p).collect();
        residuals.push(numerics::norm2(&residual) / target_norm);
    }

    let r_final = residuals.last().copied().unwrap_or(1.0).max(1e-300);
    let decay_coefficient = -r_final.ln() / (tau * (m as f64).ln());
    Ok(GammaProbeReport {
        m,
        n,
        tau,
        seed: None,
        residuals,
        chosen,
        decay_coefficient,
    })
}

/// [`gamma_upper_probe_on`] applied to a fresh unit-sphere sample.
pub fn gamma_upper_probe(
    m: usize,
    n: usize,
    tau: f64,
    seed: u64,
) -> Result<GammaProbeReport, Error> {
    let a = rsm_sample(m, n, seed)?;
    let mut report = gamma_upper_probe_on(&a, tau)?;
    report.seed = Some(seed);
    Ok(report)
}
