//! Discrete-time integrate-and-fire simulation.
//!
//! Dynamics per step of size `dt`: every potential charges by `I_i · dt`,
//! then a synchronous cascade runs: all neurons beyond threshold fire, each
//! spike of neuron `j` changes potential `i` by `−α · W[j][i]`, and the
//! round repeats until no neuron is beyond threshold. One-sided networks
//! fire only upward (`u_i > η`); two-sided networks also fire downward
//! (`u_i < −η`) with sign −1. Within a round, positive spikes apply before
//! negative ones, each in neuron order; this fixed order is what makes the
//! two-sided ↔ doubled one-sided reduction reproduce identical traces.

use std::io;

use crate::error::Error;
use crate::instance::ProblemInstance;
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Static network: connectivity `W` (entry `W[j][i]` is the strength from
/// neuron `j` to neuron `i`), constant input `I`, spike size `α`, and
/// threshold `η`.
#[derive(Debug, Clone)]
pub struct Network {
    weights: DenseMatrix,
    input: Vec<f64>,
    sidedness: Sidedness,
    alpha: f64,
    threshold: f64,
}

impl Network {
    pub fn new(
        weights: DenseMatrix,
        input: Vec<f64>,
        sidedness: Sidedness,
        alpha: f64,
        threshold: f64,
    ) -> Result<Self, Error> {
        if weights.rows() != weights.cols() {
            return Err(Error::Dimension {
                context: "Network connectivity must be square",
                expected: weights.rows(),
                actual: weights.cols(),
            });
        }
        if input.len() != weights.rows() {
            return Err(Error::Dimension {
                context: "Network input length",
                expected: weights.rows(),
                actual: input.len(),
            });
        }
        if !input.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "Network input",
            });
        }
        if !(alpha.is_finite() && alpha > 0.0) || !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::Precondition {
                context: "Network",
                detail: format!("alpha and threshold must be positive (alpha={alpha}, eta={threshold})"),
            });
        }
        Ok(Self {
            weights,
            input,
            sidedness,
            alpha,
            threshold,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Optimizer network for an instance: connectivity `AᵀA`, input `Aᵀb`.
/// One-sided drives firing rates to non-negative least squares, two-sided
/// to minimum-l1 interpolation.
pub fn build_network(
    instance: &ProblemInstance,
    sidedness: Sidedness,
    alpha: f64,
    threshold: f64,
) -> Result<Network, Error> {
    let weights = instance.a.gram();
    let input = instance.a.tr_matvec(&instance.b);
    Network::new(weights, input, sidedness, alpha, threshold)
}

/// Doubles a two-sided network into an equivalent one-sided one: neuron
/// `n + i` mirrors the downward side of neuron `i`, with connectivity
/// `[[C, −C], [−C, C]]` and input `(I, −I)`. Entries are exact negations so
/// the doubled run reproduces the two-sided trace bit for bit.
pub fn two_sided_to_one_sided(net: &Network) -> Result<Network, Error> {
    if net.sidedness != Sidedness::TwoSided {
        return Err(Error::Precondition {
            context: "two_sided_to_one_sided",
            detail: "network is not two-sided".into(),
        });
    }
    let n = net.n();
    let mut w = DenseMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let c = net.weights.get(j, i);
            w.set(j, i, c);
            w.set(j, n + i, -c);
            w.set(n + j, i, -c);
            w.set(n + j, n + i, c);
        }
    }
    let mut input = Vec::with_capacity(2 * n);
    input.extend_from_slice(&net.input);
    input.extend(net.input.iter().map(|x| -x));
    Network::new(w, input, Sidedness::OneSided, net.alpha, net.threshold)
}

/// Step size, horizon, cascade round cap, and snapshot stride.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub cascade_cap: usize,
    pub probe_stride: u64,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, cascade_cap: usize, probe_stride: u64) -> Result<Self, Error> {
        let cfg = Self {
            dt,
            horizon,
            cascade_cap,
            probe_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.dt.is_finite() && self.dt > 0.0) || !(self.horizon.is_finite() && self.horizon > 0.0)
        {
            return Err(Error::Precondition {
                context: "SimConfig",
                detail: format!("dt and horizon must be positive (dt={}, horizon={})", self.dt, self.horizon),
            });
        }
        if self.cascade_cap == 0 || self.probe_stride == 0 {
            return Err(Error::Precondition {
                context: "SimConfig",
                detail: "cascade_cap and probe_stride must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Default step size `min(0.01, α / (10 λmax))`: one step of charging stays
/// small relative to a spike.
pub fn default_dt(alpha: f64, lambda_max: f64) -> f64 {
    (alpha / (10.0 * lambda_max)).min(0.01)
}

/// Default cascade round cap, `10 n`.
pub fn default_cascade_cap(n: usize) -> usize {
    10 * n
}

/// Mutable simulation state: time, potentials, and signed spike counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub u: Vec<f64>,
    pub k_pos: Vec<u64>,
    pub k_neg: Vec<u64>,
}

impl SimState {
    pub fn new(n: usize) -> Self {
        Self {
            t: 0.0,
            step: 0,
            u: vec![0.0; n],
            k_pos: vec![0; n],
            k_neg: vec![0; n],
        }
    }

    /// Signed spike counts `k⁺ − k⁻`.
    pub fn signed_counts(&self) -> Vec<f64> {
        self.k_pos
            .iter()
            .zip(&self.k_neg)
            .map(|(&p, &n)| p as f64 - n as f64)
            .collect()
    }
}

/// Firing-rate vector `x_i(t) = α (k⁺_i − k⁻_i) / t`.
pub fn firing_rate(state: &SimState, alpha: f64) -> Result<Vec<f64>, Error> {
    if state.t <= 0.0 {
        return Err(Error::Precondition {
            context: "firing_rate",
            detail: "rates are undefined at t = 0".into(),
        });
    }
    Ok(state
        .signed_counts()
        .iter()
        .map(|&k| alpha * k / state.t)
        .collect())
}

/// Spikes emitted during one step, in application order.
#[derive(Debug, Clone, Default)]
pub struct StepFire {
    pub fired: Vec<(usize, i8)>,
    pub rounds: usize,
}

/// One spike `(time, neuron, sign)`; neurons are 0-based in memory and
/// 1-based in CSV exports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub time: f64,
    pub neuron: usize,
    pub sign: i8,
}

/// Probe record: potentials, firing rates, and (when a dual tracker runs
/// alongside) the dual state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub u: Vec<f64>,
    pub rates: Vec<f64>,
    pub v: Option<Vec<f64>>,
}

/// Full record of a run: every spike event plus periodic snapshots.
#[derive(Debug, Clone)]
pub struct SpikeTrace {
    pub events: Vec<SpikeEvent>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SimState,
}

/// Advances the state by one step: charge, then cascade. Fails when a
/// cascade needs more rounds than `cfg.cascade_cap`.
pub fn step(net: &Network, state: &mut SimState, cfg: &SimConfig) -> Result<StepFire, Error> {
    let n = net.n();
    debug_assert_eq!(state.u.len(), n);
    let t_next = (state.step + 1) as f64 * cfg.dt;

    for (ui, ii) in state.u.iter_mut().zip(&net.input) {
        *ui += ii * cfg.dt;
    }

    let mut fire = StepFire::default();
    let eta = net.threshold;
    let two_sided = net.sidedness == Sidedness::TwoSided;
    loop {
        // Positive spikes first, then negative, each in neuron order.
        let mut round: Vec<(usize, i8)> = Vec::new();
        for (i, &ui) in state.u.iter().enumerate() {
            if ui > eta {
                round.push((i, 1));
            }
        }
        if two_sided {
            for (i, &ui) in state.u.iter().enumerate() {
                if ui < -eta {
                    round.push((i, -1));
                }
            }
        }
        if round.is_empty() {
            break;
        }
        fire.rounds += 1;
        if fire.rounds > cfg.cascade_cap {
            return Err(Error::CascadeDivergence {
                time: t_next,
                rounds: fire.rounds,
            });
        }
        for &(j, sign) in &round {
            let scale = net.alpha * sign as f64;
            let row = net.weights.row(j);
            for (ui, &wji) in state.u.iter_mut().zip(row) {
                *ui -= scale * wji;
            }
            if sign > 0 {
                state.k_pos[j] += 1;
            } else {
                state.k_neg[j] += 1;
            }
        }
        fire.fired.extend_from_slice(&round);
    }

    state.step += 1;
    state.t = t_next;
    Ok(fire)
}

/// Per-step observer; used to run the dual trajectory and diagnostics
/// alongside the primal simulation. `dt` is passed through unchanged so an
/// observer can charge its own state with exactly the arithmetic the primal
/// step used.
pub trait SimObserver {
    fn observe(
        &mut self,
        t: f64,
        dt: f64,
        state: &SimState,
        fire: &StepFire,
        is_probe: bool,
    ) -> Result<(), Error>;

    /// Dual state to embed in snapshots, if this observer maintains one.
    fn dual_state(&self) -> Option<&[f64]> {
        None
    }
}

/// Observer that does nothing.
pub struct NoObserver;

impl SimObserver for NoObserver {
    fn observe(
        &mut self,
        _: f64,
        _: f64,
        _: &SimState,
        _: &StepFire,
        _: bool,
    ) -> Result<(), Error> {
        Ok(())
    }
}

/// Runs `step` from `t = 0` until `t ≥ horizon`, recording every spike and
/// a snapshot every `probe_stride` steps (plus the initial and final ones).
pub fn simulate_with<O: SimObserver>(
    net: &Network,
    cfg: &SimConfig,
    observer: &mut O,
) -> Result<SpikeTrace, Error> {
    cfg.validate()?;
    let n = net.n();
    let mut state = SimState::new(n);
    let steps = ((cfg.horizon / cfg.dt) - 1e-9).ceil().max(1.0) as u64;

    let mut events = Vec::new();
    let mut snapshots = Vec::new();
    snapshots.push(Snapshot {
        time: 0.0,
        u: vec![0.0; n],
        rates: vec![0.0; n],
        v: observer.dual_state().map(<[f64]>::to_vec),
    });

    for s in 1..=steps {
        let fire = step(net, &mut state, cfg)?;
        let is_probe = s % cfg.probe_stride == 0 || s == steps;
        observer.observe(state.t, cfg.dt, &state, &fire, is_probe)?;
        for &(neuron, sign) in &fire.fired {
            events.push(SpikeEvent {
                time: state.t,
                neuron,
                sign,
            });
        }
        if is_probe {
            let rates = firing_rate(&state, net.alpha)?;
            snapshots.push(Snapshot {
                time: state.t,
                u: state.u.clone(),
                rates,
                v: observer.dual_state().map(<[f64]>::to_vec),
            });
        }
    }

    Ok(SpikeTrace {
        events,
        snapshots,
        final_state: state,
    })
}

/// [`simulate_with`] and no observer: primal trajectory only.
pub fn simulate(net: &Network, cfg: &SimConfig) -> Result<SpikeTrace, Error> {
    simulate_with(net, cfg, &mut NoObserver)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

impl SpikeTrace {
    /// CSV of spike events with columns `time,neuron,sign` (neurons 1-based).
    pub fn write_events_csv<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "time,neuron,sign")?;
        for e in &self.events {
            writeln!(w, "{},{},{}", fmt(e.time), e.neuron + 1, e.sign)?;
        }
        Ok(())
    }

    /// CSV of snapshots with columns `time,u_1..u_n,x_1..x_n` and, when the
    /// dual state was tracked, `v_1..v_m`.
    pub fn write_snapshots_csv<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        let n = self
            .snapshots
            .first()
            .map_or(0, |s: &Snapshot| s.u.len());
        let m = self
            .snapshots
            .first()
            .and_then(|s| s.v.as_ref())
            .map_or(0, Vec::len);
        let mut header = String::from("time");
        for i in 1..=n {
            header.push_str(&format!(",u_{i}"));
        }
        for i in 1..=n {
            header.push_str(&format!(",x_{i}"));
        }
        for i in 1..=m {
            header.push_str(&format!(",v_{i}"));
        }
        writeln!(w, "{header}")?;
        for s in &self.snapshots {
            let mut line = fmt(s.time);
            for x in s.u.iter().chain(&s.rates) {
                line.push(',');
                line.push_str(&fmt(*x));
            }
            if let Some(v) = &s.v {
                for x in v {
                    line.push(',');
                    line.push_str(&fmt(*x));
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
