//! Run configuration: a JSON file, command-line flags on top (flags win),
//! and defaults derived from the instance itself for anything left open.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use spikesolve::coupling::{recommended_alpha, recommended_tau};
use spikesolve::niceness::{gamma_exact, gamma_sampled, rsm_instance, rsm_sample};
use spikesolve::numerics::{self, DenseMatrix};
use spikesolve::snn::{default_cascade_cap, default_dt};
use spikesolve::Error as CoreError;
use spikesolve::ProblemInstance;

use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// JSON run configuration; flags given here override file values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Matrix Market array file holding the matrix.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Right-hand side, one value per line.
    #[arg(long, value_name = "FILE")]
    pub rhs: Option<PathBuf>,
    /// Generate a random unit-column instance of this shape instead of
    /// reading files.
    #[arg(long, num_args = 2, value_names = ["M", "N"])]
    pub rsm: Option<Vec<usize>>,
    /// Seed for generated instances and sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Spike strength.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Firing threshold.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Polytope shrink factor for the diagnostics.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Step size.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time to run for.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Steps between snapshots.
    #[arg(long)]
    pub probe_stride: Option<u64>,
    /// Numerical slack for wall membership.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Max cascade rounds per step before declaring divergence.
    #[arg(long)]
    pub cascade_cap: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// The same knobs as [`CommonOpts`], as an on-disk JSON document.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    matrix: Option<PathBuf>,
    rhs: Option<PathBuf>,
    rsm: Option<[usize; 2]>,
    seed: Option<u64>,
    alpha: Option<f64>,
    eta: Option<f64>,
    tau: Option<f64>,
    dt: Option<f64>,
    horizon: Option<f64>,
    probe_stride: Option<u64>,
    tolerance: Option<f64>,
    cascade_cap: Option<usize>,
    count: Option<usize>,
    trials: Option<usize>,
    out: Option<PathBuf>,
}

/// Flag-over-file merge of every knob; still unresolved.
#[derive(Debug, Clone)]
pub struct Merged {
    pub matrix: Option<PathBuf>,
    pub rhs: Option<PathBuf>,
    pub rsm: Option<(usize, usize)>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub probe_stride: Option<u64>,
    pub tolerance: Option<f64>,
    pub cascade_cap: Option<usize>,
    pub count: Option<usize>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn merge(opts: &CommonOpts) -> Result<Merged, CliError> {
    let file = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str::<FileConfig>(&text).map_err(|e| CliError::Parse {
                path: path.clone(),
                line: Some(e.line()),
                detail: e.to_string(),
            })?
        }
        None => FileConfig::default(),
    };
    let rsm_flag = match opts.rsm.as_deref() {
        Some([m, n]) => Some((*m, *n)),
        Some(_) => unreachable!("clap enforces two values"),
        None => None,
    };
    Ok(Merged {
        matrix: opts.matrix.clone().or(file.matrix),
        rhs: opts.rhs.clone().or(file.rhs),
        rsm: rsm_flag.or(file.rsm.map(|[m, n]| (m, n))),
        seed: opts.seed.or(file.seed),
        alpha: opts.alpha.or(file.alpha),
        eta: opts.eta.or(file.eta),
        tau: opts.tau.or(file.tau),
        dt: opts.dt.or(file.dt),
        horizon: opts.horizon.or(file.horizon),
        probe_stride: opts.probe_stride.or(file.probe_stride),
        tolerance: opts.tolerance.or(file.tolerance),
        cascade_cap: opts.cascade_cap.or(file.cascade_cap),
        count: file.count,
        trials: file.trials,
        out: opts.out.clone().or(file.out),
    })
}

impl Merged {
    /// Loads or generates just the matrix; the seed is returned when the
    /// matrix was generated.
    pub fn load_arrangement(&self) -> Result<(DenseMatrix, Option<u64>), CliError> {
        match (&self.matrix, self.rsm) {
            (Some(_), Some(_)) => Err(CliError::Usage(
                "give either --matrix or --rsm, not both".into(),
            )),
            (Some(path), None) => Ok((io::read_matrix(path)?, None)),
            (None, Some((m, n))) => {
                let seed = self.seed.unwrap_or(0);
                Ok((rsm_sample(m, n, seed)?, Some(seed)))
            }
            (None, None) => Err(CliError::Usage(
                "no instance given: use --matrix FILE or --rsm M N".into(),
            )),
        }
    }

    /// Loads or generates a full instance (matrix and right-hand side).
    pub fn load_instance(&self) -> Result<(ProblemInstance, Option<u64>), CliError> {
        if self.matrix.is_some() && self.rsm.is_some() {
            return Err(CliError::Usage(
                "give either --matrix or --rsm, not both".into(),
            ));
        }
        if let Some((m, n)) = self.rsm {
            let seed = self.seed.unwrap_or(0);
            let instance = match &self.rhs {
                Some(path) => {
                    let a = rsm_sample(m, n, seed)?;
                    ProblemInstance::new(a, io::read_vector(path)?)?
                }
                None => rsm_instance(m, n, seed)?,
            };
            return Ok((instance, Some(seed)));
        }
        let Some(matrix) = &self.matrix else {
            return Err(CliError::Usage(
                "no instance given: use --matrix FILE or --rsm M N".into(),
            ));
        };
        let Some(rhs) = &self.rhs else {
            return Err(CliError::Usage(
                "--matrix also needs --rhs FILE".into(),
            ));
        };
        let a = io::read_matrix(matrix)?;
        let b = io::read_vector(rhs)?;
        Ok((ProblemInstance::new(a, b)?, None))
    }
}

/// Everything a run needs, with all defaults filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub alpha: f64,
    pub eta: f64,
    pub tau: f64,
    pub dt: f64,
    pub horizon: f64,
    pub probe_stride: u64,
    pub tolerance: f64,
    pub cascade_cap: usize,
    pub out: PathBuf,
}

fn estimate_gamma(a: &DenseMatrix, seed: u64) -> f64 {
    match gamma_exact(a) {
        Ok(r) => r.gamma,
        Err(CoreError::EnumerationCap { .. }) => gamma_sampled(a, 500, seed)
            .map(|r| r.gamma)
            .unwrap_or(0.1),
        Err(_) => 0.1,
    }
}

/// Fills unset knobs from the arrangement itself: conditioning feeds the
/// shrink factor and spike strength, the top curvature feeds the step size.
pub fn resolve(merged: &Merged, a: &DenseMatrix) -> Result<Resolved, CliError> {
    let spec = numerics::spectral_summary(a)?;
    let eta = merged.eta.unwrap_or(1.0);
    let tolerance = merged.tolerance.unwrap_or(1e-9);
    let (tau, alpha) = match (merged.tau, merged.alpha) {
        (Some(t), Some(al)) => (t, al),
        (t_opt, al_opt) => {
            let gamma_hat = estimate_gamma(a, merged.seed.unwrap_or(0)).max(1e-3);
            // The worst-case recommendations shrink like γ̂³ and can push a
            // default run past any usable step count, so defaults are
            // clamped to a practical band; explicit flags bypass this.
            let t = t_opt.unwrap_or_else(|| {
                recommended_tau(gamma_hat, a.cols(), spec.lambda_max).clamp(0.02, 0.1)
            });
            let al = al_opt.unwrap_or_else(|| {
                let practical = t * eta / (4.0 * a.rows() as f64 * spec.lambda_max);
                recommended_alpha(t, a.rows(), gamma_hat)
                    .max(practical)
                    .min(t / a.rows() as f64)
            });
            (t, al)
        }
    };
    let dt = merged.dt.unwrap_or_else(|| default_dt(alpha, spec.lambda_max));
    let horizon = merged.horizon.unwrap_or(100.0);
    let cascade_cap = merged
        .cascade_cap
        .unwrap_or_else(|| default_cascade_cap(a.cols()));
    let steps = (horizon / dt).ceil().max(1.0) as u64;
    let probe_stride = merged.probe_stride.unwrap_or_else(|| (steps / 1000).max(1));
    let out = merged.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok(Resolved {
        alpha,
        eta,
        tau,
        dt,
        horizon,
        probe_stride,
        tolerance,
        cascade_cap,
        out,
    })
}

pub fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.to_path_buf(),
        source: e,
    })
}
