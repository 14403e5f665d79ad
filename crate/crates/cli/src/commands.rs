//! The four commands: solve, verify, gamma, bench.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use spikesolve::coupling::{audit_run, CouplingConfig, LemmaSuiteReport};
use spikesolve::dual::simulate_with_dual;
use spikesolve::niceness::{self, GammaProbeReport, GammaReport};
use spikesolve::numerics;
use spikesolve::oracles::{
    epsilon_report, l1_solve_enum, nnls_solve, EpsReport, OracleSolution, ProblemKind,
};
use spikesolve::snn::{build_network, firing_rate, simulate, SimConfig, Sidedness};
use spikesolve::Error as CoreError;
use spikesolve::ProblemInstance;

use crate::config::{ensure_out_dir, resolve, Merged, Resolved};
use crate::error::CliError;
use crate::io;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Non-negative least squares on a one-sided network.
    Nnls,
    /// Minimum-l1 interpolation on a two-sided network.
    L1,
}

impl Kind {
    fn problem(self) -> ProblemKind {
        match self {
            Kind::Nnls => ProblemKind::NonNegativeLeastSquares,
            Kind::L1 => ProblemKind::MinimumL1,
        }
    }

    fn sidedness(self) -> Sidedness {
        match self {
            Kind::Nnls => Sidedness::OneSided,
            Kind::L1 => Sidedness::TwoSided,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Nnls => "nnls",
            Kind::L1 => "l1",
        }
    }
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_failed(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn objective_of(kind: Kind, instance: &ProblemInstance, x: &[f64]) -> f64 {
    match kind {
        Kind::Nnls => {
            let ax = instance.a.matvec(x);
            let diff: Vec<f64> = instance.b.iter().zip(&ax).map(|(b, p)| b - p).collect();
            numerics::norm2(&diff)
        }
        Kind::L1 => x.iter().map(|v| v.abs()).sum(),
    }
}

fn oracle_solution(kind: Kind, instance: &ProblemInstance) -> Result<OracleSolution, CoreError> {
    match kind {
        Kind::Nnls => {
            let x = nnls_solve(&instance.a, &instance.b, None)?;
            let objective = objective_of(Kind::Nnls, instance, &x);
            Ok(OracleSolution {
                x,
                objective,
                certificate: None,
            })
        }
        Kind::L1 => l1_solve_enum(instance),
    }
}

#[derive(Serialize)]
struct SolutionArtifact<'a> {
    kind: &'static str,
    m: usize,
    n: usize,
    alpha: f64,
    eta: f64,
    dt: f64,
    horizon: f64,
    steps: u64,
    seed: Option<u64>,
    spike_count: usize,
    x: &'a [f64],
    objective: f64,
    oracle: Option<&'a OracleSolution>,
    eps: Option<EpsReport>,
    oracle_unavailable: Option<String>,
}

/// A generated instance is written next to the reports so the exact run
/// can be repeated from files alone.
fn materialize_generated(
    instance: &ProblemInstance,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    if seed.is_some() {
        io::write_matrix(&out.join("matrix.mtx"), &instance.a)?;
        io::write_vector(&out.join("rhs.txt"), &instance.b)?;
    }
    Ok(())
}

pub fn cmd_solve(kind: Kind, merged: &Merged) -> Result<i32, CliError> {
    let (instance, seed) = merged.load_instance()?;
    let r = resolve(merged, &instance.a)?;
    ensure_out_dir(&r.out)?;
    materialize_generated(&instance, seed, &r.out)?;

    let net = build_network(&instance, kind.sidedness(), r.alpha, r.eta)?;
    let sim = SimConfig::new(r.dt, r.horizon, r.cascade_cap, r.probe_stride)?;
    let trace = simulate_with_dual(&instance, &net, &sim)?;
    let x = firing_rate(&trace.final_state, r.alpha)?;
    let objective = objective_of(kind, &instance, &x);

    let (oracle, eps, oracle_unavailable) = match oracle_solution(kind, &instance) {
        Ok(sol) => {
            let eps = epsilon_report(kind.problem(), &instance, &x, &sol.x)?;
            (Some(sol), Some(eps), None)
        }
        // The solve stands on its own; a refused or failed oracle only
        // downgrades the report.
        Err(e) => (None, None, Some(e.to_string())),
    };

    let events_path = r.out.join("events.csv");
    trace
        .write_events_csv(&mut create(&events_path)?)
        .map_err(|e| write_failed(&events_path, e))?;
    let snapshots_path = r.out.join("snapshots.csv");
    trace
        .write_snapshots_csv(&mut create(&snapshots_path)?)
        .map_err(|e| write_failed(&snapshots_path, e))?;

    let artifact = SolutionArtifact {
        kind: kind.name(),
        m: instance.m(),
        n: instance.n(),
        alpha: r.alpha,
        eta: r.eta,
        dt: r.dt,
        horizon: r.horizon,
        steps: trace.final_state.step,
        seed,
        spike_count: trace.events.len(),
        x: &x,
        objective,
        oracle: oracle.as_ref(),
        eps,
        oracle_unavailable,
    };
    io::write_json(&r.out.join("solution.json"), &artifact)?;

    println!(
        "solve {}: objective {objective:.6e}, {} spikes, artifacts in {}",
        kind.name(),
        trace.events.len(),
        r.out.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct VerifyArtifact<'a> {
    alpha: f64,
    eta: f64,
    tau: f64,
    dt: f64,
    horizon: f64,
    seed: Option<u64>,
    spike_count: usize,
    probes: usize,
    report: &'a LemmaSuiteReport,
}

pub fn cmd_verify(merged: &Merged, check_tolerance: f64) -> Result<i32, CliError> {
    let (instance, seed) = merged.load_instance()?;
    let r = resolve(merged, &instance.a)?;
    ensure_out_dir(&r.out)?;
    materialize_generated(&instance, seed, &r.out)?;

    let cfg = CouplingConfig::new(r.tau, r.eta, r.tolerance, Sidedness::TwoSided)?;
    let sim = SimConfig::new(r.dt, r.horizon, r.cascade_cap, r.probe_stride)?;
    let (trace, diag, report) = audit_run(&instance, r.alpha, &cfg, &sim, check_tolerance)?;

    let artifact = VerifyArtifact {
        alpha: r.alpha,
        eta: r.eta,
        tau: r.tau,
        dt: r.dt,
        horizon: r.horizon,
        seed,
        spike_count: trace.events.len(),
        probes: diag.records.len(),
        report: &report,
    };
    io::write_json(&r.out.join("lemma_report.json"), &artifact)?;

    for check in &report.checks {
        let worst = check
            .worst
            .map_or_else(|| "n/a".into(), |w| format!("{w:.3e}"));
        println!(
            "check {}: {} ({} evaluated, {} violations, worst {worst})",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.evaluated,
            check.violations,
        );
    }
    println!(
        "lemma suite: {} ({} failed decompositions)",
        if report.passed { "pass" } else { "FAIL" },
        report.failed_decompositions
    );
    Ok(if report.passed { 0 } else { 4 })
}

#[derive(Serialize)]
struct GammaArtifact {
    mode: &'static str,
    m: usize,
    n: usize,
    seed: Option<u64>,
    trials: Option<usize>,
    gamma: GammaReport,
    probe: Option<GammaProbeReport>,
}

pub fn cmd_gamma(
    merged: &Merged,
    exact: bool,
    trials_flag: Option<usize>,
    probe_tau: Option<f64>,
) -> Result<i32, CliError> {
    let (a, gen_seed) = merged.load_arrangement()?;
    let out = merged
        .out
        .clone()
        .unwrap_or_else(|| std::path::PathBuf::from("out"));
    ensure_out_dir(&out)?;
    let seed = merged.seed.unwrap_or(0);
    let trials = trials_flag.or(merged.trials).unwrap_or(1000);

    let (mode, report, used_trials) = match niceness::gamma_exact(&a) {
        Ok(rep) => ("exact", rep, None),
        Err(CoreError::EnumerationCap { required, cap }) => {
            if exact {
                return Err(CliError::Cap(format!(
                    "exact enumeration needs {required} subsets but the cap is {cap}; \
                     drop --exact to sample instead"
                )));
            }
            ("sampled", niceness::gamma_sampled(&a, trials, seed)?, Some(trials))
        }
        Err(e) => return Err(e.into()),
    };

    let probe = match probe_tau {
        Some(tau) => Some(match (merged.rsm, gen_seed) {
            (Some((m, n)), Some(s)) => niceness::gamma_upper_probe(m, n, tau, s)?,
            _ => niceness::gamma_upper_probe_on(&a, tau)?,
        }),
        None => None,
    };

    let artifact = GammaArtifact {
        mode,
        m: a.rows(),
        n: a.cols(),
        seed: gen_seed.or(if mode == "sampled" { Some(seed) } else { None }),
        trials: used_trials,
        gamma: report,
        probe,
    };
    io::write_json(&out.join("gamma.json"), &artifact)?;
    println!("gamma = {:.6e} ({mode})", report.gamma);
    Ok(0)
}

const EPS_GRID: [f64; 6] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01];

#[derive(Serialize)]
struct BenchRow {
    id: usize,
    seed: Option<u64>,
    status: &'static str,
    error: Option<String>,
    final_eps_l2: Option<f64>,
    final_eps_l1: Option<f64>,
    /// First simulated time at which the tracked eps reaches each grid
    /// threshold; null when never reached.
    time_to_eps: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct BenchSummary {
    kind: &'static str,
    eps_grid: Vec<f64>,
    warnings: usize,
    instances: Vec<BenchRow>,
}

fn bench_one(
    kind: Kind,
    merged: &Merged,
    id: usize,
    seed: Option<u64>,
    instance: &ProblemInstance,
    out: &Path,
) -> Result<BenchRow, CliError> {
    let r: Resolved = resolve(merged, &instance.a)?;
    let oracle = oracle_solution(kind, instance)?;
    let net = build_network(instance, kind.sidedness(), r.alpha, r.eta)?;
    let sim = SimConfig::new(r.dt, r.horizon, r.cascade_cap, r.probe_stride)?;
    let trace = simulate(&net, &sim)?;

    let mut curve: Vec<(f64, f64, Option<f64>)> = Vec::with_capacity(trace.snapshots.len());
    for snap in &trace.snapshots {
        let eps = epsilon_report(kind.problem(), instance, &snap.rates, &oracle.x)?;
        curve.push((snap.time, eps.eps_l2, eps.eps_l1));
    }

    let path = out.join(format!("eps_{id:03}.csv"));
    let mut text = String::from("time,eps_l2,eps_l1\n");
    for &(t, l2, l1) in &curve {
        let l1s = l1.map_or_else(String::new, |v| format!("{v:.16e}"));
        text.push_str(&format!("{t:.16e},{l2:.16e},{l1s}\n"));
    }
    fs::write(&path, text).map_err(|e| write_failed(&path, e))?;

    // Convergence needs both near-feasibility and a small objective gap;
    // the gap alone is blind to infeasible iterates (x = 0 has gap 0).
    let metric = |l2: f64, l1: Option<f64>| match kind {
        Kind::L1 => l1.map_or(f64::INFINITY, |gap| gap.max(l2)),
        Kind::Nnls => l2,
    };
    let time_to_eps = EPS_GRID
        .iter()
        .map(|&thr| {
            curve
                .iter()
                .skip(1)
                .find(|&&(_, l2, l1)| metric(l2, l1) <= thr)
                .map(|&(t, _, _)| t)
        })
        .collect();
    let &(_, last_l2, last_l1) = curve.last().expect("at least the initial snapshot");
    Ok(BenchRow {
        id,
        seed,
        status: "ok",
        error: None,
        final_eps_l2: Some(last_l2),
        final_eps_l1: last_l1,
        time_to_eps,
    })
}

pub fn cmd_bench(kind: Kind, merged: &Merged, count_flag: Option<usize>) -> Result<i32, CliError> {
    let out = merged
        .out
        .clone()
        .unwrap_or_else(|| std::path::PathBuf::from("out"));
    ensure_out_dir(&out)?;

    let mut items: Vec<(usize, Option<u64>, ProblemInstance)> = Vec::new();
    if let Some((m, n)) = merged.rsm {
        let count = count_flag.or(merged.count).unwrap_or(10);
        let base = merged.seed.unwrap_or(0);
        for k in 0..count {
            let seed = base + k as u64;
            items.push((k, Some(seed), niceness::rsm_instance(m, n, seed)?));
        }
    } else {
        let (instance, seed) = merged.load_instance()?;
        items.push((0, seed, instance));
    }

    let run_row = |(id, seed, instance): &(usize, Option<u64>, ProblemInstance)| -> BenchRow {
        match bench_one(kind, merged, *id, *seed, instance, &out) {
            Ok(row) => row,
            Err(e) => BenchRow {
                id: *id,
                seed: *seed,
                status: "failed",
                error: Some(e.to_string()),
                final_eps_l2: None,
                final_eps_l1: None,
                time_to_eps: vec![None; EPS_GRID.len()],
            },
        }
    };

    // Each worker owns its run and its curve file; the summary is written
    // once at the end.
    #[cfg(feature = "parallel")]
    let instances: Vec<BenchRow> = {
        use rayon::prelude::*;
        items.par_iter().map(run_row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let instances: Vec<BenchRow> = items.iter().map(run_row).collect();

    let warnings = instances.iter().filter(|r| r.status != "ok").count();
    let summary = BenchSummary {
        kind: kind.name(),
        eps_grid: EPS_GRID.to_vec(),
        warnings,
        instances,
    };
    io::write_json(&out.join("summary.json"), &summary)?;

    if warnings > 0 {
        eprintln!("warning: {warnings} of {} instances failed", items.len());
    }
    println!(
        "bench {}: {} instances, {warnings} failed, artifacts in {}",
        kind.name(),
        items.len(),
        out.display()
    );
    Ok(0)
}
