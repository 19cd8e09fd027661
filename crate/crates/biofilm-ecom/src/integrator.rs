//! Time integration: classical fixed-step RK4 over the method-of-lines
//! system, with impulse events applied as exact state jumps, domain
//! extension on growth, and stability guards that turn blow-ups into
//! actionable faults.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::grid::{extend_domain, growth_rate, laplacian_with_bcs, BoundarySpec, Grid};
use crate::model::{
    growth_propensity, node_reaction_rhs, BiofilmState, Field, NodeDerivative, Parameters,
};
use crate::observe::{sample_probe, ProbeSample, RunMetadata, Snapshot, Trajectory};
use crate::signals::{continuous_rate, pending_impulses, InputSignal, SourceMode};

/// Fields may not exceed this magnitude; larger values signal a blow-up.
const BLOWUP_LIMIT: f64 = 1e9;
/// Concentrations whose dynamics preserve positivity (G_e, G_i) are
/// clamped to zero inside this band; beyond it is a fault.
const CONCENTRATION_TOLERANCE: f64 = 1e-6;
/// Same for the gate variable against [0, 1].
const GATE_TOLERANCE: f64 = 1e-9;
/// The exchange-coupled potassium pools swing signed during a wave: the
/// rigid dV = dK_i/F coupling overdraws the intracellular store (minima
/// near -270 mM against the 300 mM store in the strongest scenarios) and
/// the absorb phase pulls K_e tens of mM below zero (K_ac, relaxing
/// toward K_e, follows). The potassium pools run unclamped so the
/// membrane exchange stays exactly antisymmetric; the pump's own
/// max(.., 0) keeps the excursions self-correcting. Beyond the floor is
/// a fault.
const POTASSIUM_FLOOR: f64 = -1000.0;

/// Time-stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    /// Base step, hr. Must satisfy the CFL bound at construction.
    pub dt: f64,
    /// Fraction of the diffusive CFL limit the step may use, in (0, 1].
    pub cfl_safety: f64,
    /// Horizon, hr.
    pub t_end: f64,
    /// Probe sampling cadence, hr.
    pub record_every: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt: 2.0e-3,
            cfl_safety: 0.9,
            t_end: 40.0,
            record_every: 0.02,
        }
    }
}

/// Diffusive stability limit dx²/(2 D) for the explicit scheme.
pub fn cfl_limit(dx: f64, max_diffusivity: f64) -> f64 {
    dx * dx / (2.0 * max_diffusivity)
}

impl StepControl {
    pub fn validate(&self, dx: f64, max_diffusivity: f64) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::validation("step.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::validation(
                "step.cfl_safety",
                format!("must lie in (0, 1], got {}", self.cfl_safety),
            ));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::validation(
                "step.t_end",
                format!("must be non-negative, got {}", self.t_end),
            ));
        }
        if !(self.record_every > 0.0) {
            return Err(Error::validation(
                "step.record_every",
                format!("must be positive, got {}", self.record_every),
            ));
        }
        let bound = self.cfl_safety * cfl_limit(dx, max_diffusivity);
        if self.dt > bound {
            return Err(Error::validation(
                "step.dt",
                format!(
                    "dt = {} exceeds the stability bound {bound:.6e} (cfl_safety * dx^2 / (2 max(D_G, D_K)))",
                    self.dt
                ),
            ));
        }
        Ok(())
    }
}

/// Time derivative of the full state: one `NodeDerivative` per node plus
/// the elongation rate.
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub nodes: Vec<NodeDerivative>,
    /// dL/dt, mm/hr.
    pub d_length: f64,
}

fn source_increment(amount: f64, grid: &Grid, mode: SourceMode) -> f64 {
    match mode {
        SourceMode::Concentration => amount,
        SourceMode::Mass => amount / grid.dx,
    }
}

/// Complete right-hand side at time `t`: diffusion with boundary exchange,
/// reaction terms, continuous sources at node 0, and the growth integral.
pub fn full_rhs(
    state: &BiofilmState,
    t: f64,
    p: &Parameters,
    sig_glutamate: &InputSignal,
    sig_potassium: &InputSignal,
    grid: &Grid,
    mode: SourceMode,
) -> Result<RhsEval> {
    let n = grid.n_nodes;
    debug_assert_eq!(state.nodes.len(), n);

    let g_e: Vec<f64> = state.nodes.iter().map(|s| s.g_e).collect();
    let k_e: Vec<f64> = state.nodes.iter().map(|s| s.k_e).collect();
    let remap = |e: Error| match e {
        Error::Stability { message, .. } => Error::stability(t, message),
        other => other,
    };
    let lap_g = laplacian_with_bcs(&g_e, grid, &BoundarySpec::glutamate(p)).map_err(remap)?;
    let lap_k = laplacian_with_bcs(&k_e, grid, &BoundarySpec::potassium(p)).map_err(remap)?;

    let mut nodes = Vec::with_capacity(n);
    let mut g_i = Vec::with_capacity(n);
    let mut m_g = Vec::with_capacity(n);
    for (i, s) in state.nodes.iter().enumerate() {
        let mut d = node_reaction_rhs(s, p);
        d.g_e += p.glutamate_diffusivity * lap_g[i];
        d.k_e += p.potassium_diffusivity * lap_k[i];
        g_i.push(s.g_i);
        m_g.push(growth_propensity(s.g_i, s.v, p));
        nodes.push(d);
    }

    nodes[0].g_e += source_increment(continuous_rate(sig_glutamate, t), grid, mode);
    nodes[0].k_e += source_increment(continuous_rate(sig_potassium, t), grid, mode);

    for (i, d) in nodes.iter().enumerate() {
        for (field, v) in [
            (Field::Ge, d.g_e),
            (Field::Ke, d.k_e),
            (Field::Gi, d.g_i),
            (Field::Ki, d.k_i),
            (Field::Kac, d.k_ac),
            (Field::V, d.v),
            (Field::N, d.n),
        ] {
            if !v.is_finite() {
                return Err(Error::stability(
                    t,
                    format!("non-finite derivative of {field} at node {i}"),
                ));
            }
        }
    }

    let d_length = growth_rate(&g_i, &m_g, grid, p);
    Ok(RhsEval { nodes, d_length })
}

fn advanced(base: &BiofilmState, k: &RhsEval, h: f64, t: f64) -> BiofilmState {
    let nodes = base
        .nodes
        .iter()
        .zip(&k.nodes)
        .map(|(s, d)| crate::model::NodeState {
            g_e: s.g_e + h * d.g_e,
            k_e: s.k_e + h * d.k_e,
            g_i: s.g_i + h * d.g_i,
            k_i: s.k_i + h * d.k_i,
            k_ac: s.k_ac + h * d.k_ac,
            v: s.v + h * d.v,
            n: s.n + h * d.n,
        })
        .collect();
    BiofilmState {
        nodes,
        length: base.length + h * k.d_length,
        time: t,
    }
}

fn post_step_guard(state: &mut BiofilmState) -> Result<()> {
    let t = state.time;
    if !state.length.is_finite() || state.length.abs() > BLOWUP_LIMIT {
        return Err(Error::stability(t, format!("biofilm length = {}", state.length)));
    }
    for (i, node) in state.nodes.iter_mut().enumerate() {
        for (field, v) in [
            (Field::Ge, node.g_e),
            (Field::Ke, node.k_e),
            (Field::Gi, node.g_i),
            (Field::Ki, node.k_i),
            (Field::Kac, node.k_ac),
            (Field::V, node.v),
            (Field::N, node.n),
        ] {
            if !v.is_finite() || v.abs() > BLOWUP_LIMIT {
                return Err(Error::stability(
                    t,
                    format!("{field} = {v} at node {i}; reduce step.dt"),
                ));
            }
        }
        for (field, v) in [(Field::Ge, &mut node.g_e), (Field::Gi, &mut node.g_i)] {
            if *v < -CONCENTRATION_TOLERANCE {
                return Err(Error::stability(
                    t,
                    format!("{field} = {v} at node {i} below clamp tolerance; reduce step.dt"),
                ));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        for (field, v) in [(Field::Ke, node.k_e), (Field::Ki, node.k_i), (Field::Kac, node.k_ac)] {
            if v < POTASSIUM_FLOOR {
                return Err(Error::stability(
                    t,
                    format!("{field} = {v} at node {i} beyond the overdraw band"),
                ));
            }
        }
        if node.n < -GATE_TOLERANCE || node.n > 1.0 + GATE_TOLERANCE {
            return Err(Error::stability(
                t,
                format!("n = {} at node {i} outside [0, 1]; reduce step.dt", node.n),
            ));
        }
        node.n = node.n.clamp(0.0, 1.0);
    }
    Ok(())
}

/// One classical RK4 step of length `dt` over the full state vector
/// including L, followed by the clamp/blow-up guards and domain extension.
#[allow(clippy::too_many_arguments)]
pub fn rk4_step(
    state: &mut BiofilmState,
    grid: &mut Grid,
    dt: f64,
    p: &Parameters,
    sig_glutamate: &InputSignal,
    sig_potassium: &InputSignal,
    mode: SourceMode,
) -> Result<()> {
    let t = state.time;
    let k1 = full_rhs(state, t, p, sig_glutamate, sig_potassium, grid, mode)?;
    let y2 = advanced(state, &k1, 0.5 * dt, t + 0.5 * dt);
    let k2 = full_rhs(&y2, y2.time, p, sig_glutamate, sig_potassium, &grid.at_length(y2.length), mode)?;
    let y3 = advanced(state, &k2, 0.5 * dt, t + 0.5 * dt);
    let k3 = full_rhs(&y3, y3.time, p, sig_glutamate, sig_potassium, &grid.at_length(y3.length), mode)?;
    let y4 = advanced(state, &k3, dt, t + dt);
    let k4 = full_rhs(&y4, y4.time, p, sig_glutamate, sig_potassium, &grid.at_length(y4.length), mode)?;

    let sixth = dt / 6.0;
    for (((s, d1), (d2, d3)), d4) in state
        .nodes
        .iter_mut()
        .zip(&k1.nodes)
        .zip(k2.nodes.iter().zip(&k3.nodes))
        .zip(&k4.nodes)
    {
        s.g_e += sixth * (d1.g_e + 2.0 * d2.g_e + 2.0 * d3.g_e + d4.g_e);
        s.k_e += sixth * (d1.k_e + 2.0 * d2.k_e + 2.0 * d3.k_e + d4.k_e);
        s.g_i += sixth * (d1.g_i + 2.0 * d2.g_i + 2.0 * d3.g_i + d4.g_i);
        s.k_i += sixth * (d1.k_i + 2.0 * d2.k_i + 2.0 * d3.k_i + d4.k_i);
        s.k_ac += sixth * (d1.k_ac + 2.0 * d2.k_ac + 2.0 * d3.k_ac + d4.k_ac);
        s.v += sixth * (d1.v + 2.0 * d2.v + 2.0 * d3.v + d4.v);
        s.n += sixth * (d1.n + 2.0 * d2.n + 2.0 * d3.n + d4.n);
    }
    state.length +=
        sixth * (k1.d_length + 2.0 * k2.d_length + 2.0 * k3.d_length + k4.d_length);
    state.time = t + dt;

    post_step_guard(state)?;
    extend_domain(state, grid)?;
    Ok(())
}

/// Ordered integration breakpoint with the actions due there.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Breakpoint {
    t: f64,
    record: bool,
    snapshot: bool,
    impulse: Option<f64>,
}

fn build_breakpoints(config: &ExperimentConfig) -> Vec<Breakpoint> {
    let t_end = config.step.t_end;
    let mut points: Vec<Breakpoint> = Vec::new();
    let mut push = |t: f64, record: bool, snapshot: bool, impulse: Option<f64>| {
        if t <= 0.0 || t > t_end {
            return;
        }
        if let Some(existing) = points.iter_mut().find(|b| b.t == t) {
            existing.record |= record;
            existing.snapshot |= snapshot;
            if impulse.is_some() {
                existing.impulse = impulse;
            }
        } else {
            points.push(Breakpoint { t, record, snapshot, impulse });
        }
    };

    let cadence = config.step.record_every;
    let n_records = (t_end / cadence).ceil() as u64;
    for k in 1..=n_records {
        push((k as f64 * cadence).min(t_end), true, false, None);
    }
    push(t_end, true, false, None);

    if let Some(spacetime) = &config.outputs.spacetime {
        let mut j = 1u64;
        loop {
            let t = j as f64 * spacetime.every;
            if t > t_end {
                break;
            }
            push(t, false, true, None);
            j += 1;
        }
    }

    if t_end > 0.0 {
        for (t, magnitude) in pending_impulses(&config.signals.potassium, 0.0, t_end) {
            push(t, false, false, Some(magnitude));
        }
    }

    points.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite breakpoint times"));
    points
}

fn stimulus_times(config: &ExperimentConfig) -> Vec<f64> {
    let t_end = config.step.t_end;
    let mut times = Vec::new();
    for sig in [&config.signals.glutamate, &config.signals.potassium] {
        match sig {
            InputSignal::ImpulseTrain { event_times, .. } => {
                times.extend(event_times.iter().copied().filter(|t| *t <= t_end));
            }
            InputSignal::PulseTrain {
                event_times, period, count, ..
            } => {
                for k in 0..*count {
                    let t = event_times[0] + k as f64 * period;
                    if t <= t_end {
                        times.push(t);
                    }
                }
            }
            InputSignal::ConstantSupply { .. } => {}
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    times
}

fn record_samples(
    samples: &mut Vec<ProbeSample>,
    state: &BiofilmState,
    grid: &Grid,
    probes: &[crate::observe::Probe],
    t: f64,
) {
    for (idx, probe) in probes.iter().enumerate() {
        for (field, value, out_of_domain) in sample_probe(state, grid, probe) {
            samples.push(ProbeSample {
                t,
                probe: idx,
                field,
                value,
                out_of_domain,
            });
        }
    }
}

/// Runs a validated configuration from the paper's initial condition to
/// `t_end`. Deterministic: one config produces one bit-identical trajectory.
pub fn run(config: &ExperimentConfig) -> Result<Trajectory> {
    config.validate()?;
    let p = &config.parameters;
    let mode = config.signals.source_mode;
    let mut grid = Grid::new(config.grid.dx, config.grid.initial_length)?;
    let mut state = BiofilmState::initial(grid.n_nodes, grid.length);

    let mut trajectory = Trajectory {
        samples: Vec::new(),
        snapshots: Vec::new(),
        length_series: Vec::new(),
        impulses_applied: Vec::new(),
        stimulus_times: stimulus_times(config),
        metadata: RunMetadata {
            config_hash: config.content_hash(),
            scenario: config.scenario.clone(),
            parameters: p.clone(),
            probes: config.probes.clone(),
            dx: grid.dx,
        },
    };

    record_samples(&mut trajectory.samples, &state, &grid, &config.probes, 0.0);
    trajectory.length_series.push((0.0, state.length));

    for bp in build_breakpoints(config) {
        // advance to the breakpoint in steps no longer than dt
        let span = bp.t - state.time;
        if span > 0.0 {
            let n_sub = (span / config.step.dt).ceil().max(1.0) as u64;
            let h = span / n_sub as f64;
            for _ in 0..n_sub {
                rk4_step(
                    &mut state,
                    &mut grid,
                    h,
                    p,
                    &config.signals.glutamate,
                    &config.signals.potassium,
                    mode,
                )?;
            }
        }
        state.time = bp.t;

        if let Some(magnitude) = bp.impulse {
            // bracket the jump with samples at the exact event time
            record_samples(&mut trajectory.samples, &state, &grid, &config.probes, bp.t);
            state.nodes[0].k_e += source_increment(magnitude, &grid, mode);
            trajectory.impulses_applied.push((bp.t, magnitude));
            record_samples(&mut trajectory.samples, &state, &grid, &config.probes, bp.t);
        } else if bp.record {
            record_samples(&mut trajectory.samples, &state, &grid, &config.probes, bp.t);
        }
        if bp.record {
            trajectory.length_series.push((bp.t, state.length));
        }
        if bp.snapshot {
            trajectory.snapshots.push(Snapshot {
                t: bp.t,
                length: state.length,
                k_e: state.nodes.iter().map(|s| s.k_e).collect(),
            });
        }
    }

    Ok(trajectory)
}
