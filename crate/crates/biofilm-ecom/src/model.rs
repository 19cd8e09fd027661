//! Domain types and the pointwise (non-spatial) reaction kinetics.
//!
//! Units are hours, millimetres, millimolar and millivolts throughout.
//! Every operation here is a pure function of its inputs; the spatial
//! coupling (diffusion, boundary exchange, growth) lives in [`crate::grid`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments of `exp` and `tanh` are clamped to this magnitude before
/// evaluation. Changes no result by more than ~2e-22 absolute.
const EXP_CLAMP: f64 = 50.0;

pub(crate) fn clamped_exp(x: f64) -> f64 {
    x.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

pub(crate) fn clamped_tanh(x: f64) -> f64 {
    x.clamp(-EXP_CLAMP, EXP_CLAMP).tanh()
}

fn pow_gate(base: f64, m: f64) -> f64 {
    // m = 2 is the default set; powf(negative, non-integer) would be NaN,
    // so the callers clamp the base at zero first.
    if m == 2.0 {
        base * base
    } else {
        base.powf(m)
    }
}

/// Every model constant, with the operational units noted per field.
///
/// JSON keys follow the conventional symbol names so that config overrides
/// read like the parameter table (`"delta_L": 60`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    /// Glutamate diffusivity in the biofilm, mm²/hr.
    #[serde(rename = "D_G")]
    pub glutamate_diffusivity: f64,
    /// Potassium diffusivity in the biofilm, mm²/hr.
    #[serde(rename = "D_K")]
    pub potassium_diffusivity: f64,
    /// Glutamate diffusivity in the surrounding fluid, mm²/hr.
    #[serde(rename = "D_G_fl")]
    pub glutamate_diffusivity_fluid: f64,
    /// Potassium diffusivity in the surrounding fluid, mm²/hr.
    #[serde(rename = "D_K_fl")]
    pub potassium_diffusivity_fluid: f64,
    /// Far-field glutamate concentration in the fluid, mM.
    #[serde(rename = "G_0")]
    pub glutamate_far_field: f64,
    /// Far-field potassium concentration in the fluid, mM.
    #[serde(rename = "K_0")]
    pub potassium_far_field: f64,
    /// Glutamate uptake rate, 1/(hr·mM).
    #[serde(rename = "delta_G")]
    pub uptake_rate: f64,
    /// Voltage above which uptake is blocked, mV.
    #[serde(rename = "V_t")]
    pub uptake_block_voltage: f64,
    /// Maximum intracellular glutamate, mM.
    #[serde(rename = "G_m")]
    pub glutamate_capacity: f64,
    /// Voltage ↔ potassium conversion factor, mM/mV.
    #[serde(rename = "F")]
    pub voltage_conversion: f64,
    /// Potassium gate strength, 1/hr.
    #[serde(rename = "g_K")]
    pub channel_strength: f64,
    /// Leak gate strength, 1/hr.
    #[serde(rename = "g_L")]
    pub leak_strength: f64,
    /// Potassium pump strength, 1/(hr·mM).
    #[serde(rename = "gamma_K")]
    pub pump_strength: f64,
    /// Intracellular potassium level at which the pump saturates, mM.
    #[serde(rename = "K_m")]
    pub pump_saturation: f64,
    /// Boundary-layer width at the biofilm/fluid interface, mm.
    #[serde(rename = "L_b")]
    pub boundary_layer_width: f64,
    /// Glutamate consumption rate, 1/hr.
    #[serde(rename = "gamma_G")]
    pub consumption_rate: f64,
    /// Basal consumption fraction, dimensionless.
    #[serde(rename = "r_b")]
    pub basal_consumption: f64,
    /// Glutamate level below which cells do not grow, mM.
    #[serde(rename = "G_u")]
    pub growth_glutamate_bound: f64,
    /// Voltage influence shape factor in the growth propensity, dimensionless.
    #[serde(rename = "eta_V")]
    pub voltage_influence: f64,
    /// Voltage transition speed in the growth propensity, dimensionless.
    #[serde(rename = "gamma_V")]
    pub voltage_transition_speed: f64,
    /// Voltage below which cells do not grow, mV.
    #[serde(rename = "V_l")]
    pub growth_voltage_bound: f64,
    /// Growth yield, mm/(mM·hr).
    #[serde(rename = "delta_g")]
    pub growth_yield: f64,
    /// Acclimation rate to potassium changes, 1/hr.
    #[serde(rename = "eta_K")]
    pub acclimation_rate: f64,
    /// Potassium gate opening rate, 1/hr.
    #[serde(rename = "alpha")]
    pub gate_opening_rate: f64,
    /// Potassium gate closing rate, 1/hr.
    #[serde(rename = "beta")]
    pub gate_closing_rate: f64,
    /// Gate Hill exponent, dimensionless.
    #[serde(rename = "m")]
    pub gate_exponent: f64,
    /// Glutamate level below which cells hyperpolarize, mM.
    #[serde(rename = "G_l")]
    pub hyperpolarization_glutamate_bound: f64,
    /// Basal potassium reversal potential, mV.
    #[serde(rename = "V_K0")]
    pub channel_reversal_base: f64,
    /// Basal leak reversal potential, mV.
    #[serde(rename = "V_L0")]
    pub leak_reversal_base: f64,
    /// Potassium reversal shift per mM of extracellular potassium, mV/mM.
    #[serde(rename = "delta_K")]
    pub channel_reversal_slope: f64,
    /// Leak reversal shift per mM of unacclimated potassium, mV/mM.
    #[serde(rename = "delta_L")]
    pub leak_reversal_slope: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            glutamate_diffusivity: 0.540,
            potassium_diffusivity: 0.497,
            glutamate_diffusivity_fluid: 0.900,
            potassium_diffusivity_fluid: 4.97,
            glutamate_far_field: 30.0,
            potassium_far_field: 8.0,
            uptake_rate: 10.0,
            uptake_block_voltage: -150.0,
            glutamate_capacity: 20.0,
            voltage_conversion: 5.6,
            channel_strength: 180.0,
            leak_strength: 1.2,
            pump_strength: 0.025,
            pump_saturation: 300.0,
            boundary_layer_width: 0.5,
            consumption_rate: 1.125,
            basal_consumption: 0.1,
            growth_glutamate_bound: 18.0,
            voltage_influence: 20.0,
            voltage_transition_speed: 20.0,
            growth_voltage_bound: -175.0,
            growth_yield: 0.0075,
            acclimation_rate: 30.0,
            gate_opening_rate: 5.0,
            gate_closing_rate: 2.5,
            gate_exponent: 2.0,
            hyperpolarization_glutamate_bound: 10.0,
            channel_reversal_base: -380.0,
            leak_reversal_base: -156.0,
            channel_reversal_slope: 1.0,
            leak_reversal_slope: 60.0,
        }
    }
}

impl Parameters {
    /// Largest extracellular diffusivity, for the explicit-scheme CFL bound.
    pub fn max_diffusivity(&self) -> f64 {
        self.glutamate_diffusivity.max(self.potassium_diffusivity)
    }

    /// Checks the parameter invariants, reporting the first violation with
    /// its JSON field path. `allow_nonstandard` skips the two default-set
    /// sanity checks (`K_m > K_0`, `V_l < V_t`).
    pub fn validate(&self, allow_nonstandard: bool) -> Result<()> {
        let positive: [(&str, f64); 18] = [
            ("D_G", self.glutamate_diffusivity),
            ("D_K", self.potassium_diffusivity),
            ("D_G_fl", self.glutamate_diffusivity_fluid),
            ("D_K_fl", self.potassium_diffusivity_fluid),
            ("delta_G", self.uptake_rate),
            ("F", self.voltage_conversion),
            ("g_K", self.channel_strength),
            ("g_L", self.leak_strength),
            ("gamma_K", self.pump_strength),
            ("L_b", self.boundary_layer_width),
            ("gamma_G", self.consumption_rate),
            ("eta_V", self.voltage_influence),
            ("gamma_V", self.voltage_transition_speed),
            ("delta_g", self.growth_yield),
            ("eta_K", self.acclimation_rate),
            ("alpha", self.gate_opening_rate),
            ("beta", self.gate_closing_rate),
            ("G_l", self.hyperpolarization_glutamate_bound),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::validation(
                    format!("parameters.{name}"),
                    format!("must be strictly positive, got {value}"),
                ));
            }
        }
        let finite: [(&str, f64); 8] = [
            ("G_0", self.glutamate_far_field),
            ("K_0", self.potassium_far_field),
            ("V_t", self.uptake_block_voltage),
            ("V_l", self.growth_voltage_bound),
            ("V_K0", self.channel_reversal_base),
            ("V_L0", self.leak_reversal_base),
            ("delta_K", self.channel_reversal_slope),
            ("delta_L", self.leak_reversal_slope),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::validation(
                    format!("parameters.{name}"),
                    "must be finite",
                ));
            }
        }
        if self.glutamate_far_field < 0.0 || self.potassium_far_field < 0.0 {
            return Err(Error::validation(
                "parameters.G_0/K_0",
                "far-field concentrations must be non-negative",
            ));
        }
        if self.basal_consumption < 0.0 {
            return Err(Error::validation("parameters.r_b", "must be non-negative"));
        }
        if self.gate_exponent < 1.0 {
            return Err(Error::validation(
                "parameters.m",
                format!("gate exponent must be >= 1, got {}", self.gate_exponent),
            ));
        }
        if !(self.hyperpolarization_glutamate_bound < self.growth_glutamate_bound
            && self.growth_glutamate_bound < self.glutamate_capacity)
        {
            return Err(Error::validation(
                "parameters.G_l",
                format!(
                    "threshold ordering G_l < G_u < G_m violated: {} / {} / {}",
                    self.hyperpolarization_glutamate_bound,
                    self.growth_glutamate_bound,
                    self.glutamate_capacity
                ),
            ));
        }
        if !allow_nonstandard {
            if self.pump_saturation <= self.potassium_far_field {
                return Err(Error::validation(
                    "parameters.K_m",
                    format!(
                        "expected K_m > K_0 ({} vs {}); set allow_nonstandard_parameters to override",
                        self.pump_saturation, self.potassium_far_field
                    ),
                ));
            }
            if self.growth_voltage_bound >= self.uptake_block_voltage {
                return Err(Error::validation(
                    "parameters.V_l",
                    format!(
                        "expected V_l < V_t ({} vs {}); set allow_nonstandard_parameters to override",
                        self.growth_voltage_bound, self.uptake_block_voltage
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// The seven unknowns at one grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    /// Extracellular glutamate, mM.
    pub g_e: f64,
    /// Extracellular potassium, mM.
    pub k_e: f64,
    /// Intracellular glutamate, mM.
    pub g_i: f64,
    /// Intracellular potassium, mM.
    pub k_i: f64,
    /// Acclimated potassium level, mM.
    pub k_ac: f64,
    /// Membrane potential, mV.
    pub v: f64,
    /// Potassium gate openness, in [0, 1].
    pub n: f64,
}

/// Reaction part of the time derivative at one node (diffusion excluded).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeDerivative {
    pub g_e: f64,
    pub k_e: f64,
    pub g_i: f64,
    pub k_i: f64,
    pub k_ac: f64,
    pub v: f64,
    pub n: f64,
}

/// Full simulation state: one `NodeState` per grid node over [0, L],
/// the biofilm length and the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct BiofilmState {
    pub nodes: Vec<NodeState>,
    /// Biofilm length, mm.
    pub length: f64,
    /// Simulation time, hr.
    pub time: f64,
}

impl BiofilmState {
    /// The paper's initial condition, uniform over the grid.
    pub fn initial(n_nodes: usize, length: f64) -> Self {
        let node = NodeState {
            g_e: 30.0,
            k_e: 8.0,
            g_i: 20.0,
            k_i: 300.0,
            k_ac: 9.0,
            v: -156.0,
            n: 0.1,
        };
        BiofilmState {
            nodes: vec![node; n_nodes],
            length,
            time: 0.0,
        }
    }

    pub fn field(&self, field: Field) -> Vec<f64> {
        self.nodes.iter().map(|s| field.get(s)).collect()
    }
}

/// Identifies one of the seven per-node unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "G_e")]
    Ge,
    #[serde(rename = "K_e")]
    Ke,
    #[serde(rename = "G_i")]
    Gi,
    #[serde(rename = "K_i")]
    Ki,
    #[serde(rename = "K_ac")]
    Kac,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "n")]
    N,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::Ge,
        Field::Ke,
        Field::Gi,
        Field::Ki,
        Field::Kac,
        Field::V,
        Field::N,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Ge => "G_e",
            Field::Ke => "K_e",
            Field::Gi => "G_i",
            Field::Ki => "K_i",
            Field::Kac => "K_ac",
            Field::V => "V",
            Field::N => "n",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Field::V => "mV",
            Field::N => "",
            _ => "mM",
        }
    }

    pub fn get(self, s: &NodeState) -> f64 {
        match self {
            Field::Ge => s.g_e,
            Field::Ke => s.k_e,
            Field::Gi => s.g_i,
            Field::Ki => s.k_i,
            Field::Kac => s.k_ac,
            Field::V => s.v,
            Field::N => s.n,
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Voltage modulation of glutamate uptake: 1 near rest, 0 above `V_t`.
///
/// The exponent is clamped to ±50 so the result never overflows; the exact
/// value lies in (0, 1), though deep hyperpolarization rounds to 1.0 in
/// f64 (1 + e^-50 is not representable below one).
pub fn uptake_sigmoid(v: f64, p: &Parameters) -> f64 {
    1.0 / (1.0 + clamped_exp(v - p.uptake_block_voltage))
}

/// Glutamate flux from the exterior into the cell, mM/hr.
pub fn glutamate_uptake(g_e: f64, g_i: f64, v: f64, p: &Parameters) -> f64 {
    p.uptake_rate * uptake_sigmoid(v, p) * g_e * (p.glutamate_capacity - g_i)
}

/// Hodgkin-Huxley potassium channel term `g_K n⁴ (V − V_K)`, mV/hr.
pub fn potassium_channel_flux(v: f64, n: f64, v_k: f64, p: &Parameters) -> f64 {
    let n2 = n * n;
    p.channel_strength * n2 * n2 * (v - v_k)
}

/// Leak gate term `g_L (V − V_L)`, mV/hr.
pub fn leak_flux(v: f64, v_l: f64, p: &Parameters) -> f64 {
    p.leak_strength * (v - v_l)
}

/// Potassium pump rate, mM/hr. Active only while the cell is below its
/// saturation level; never negative.
pub fn pump_rate(k_e: f64, k_i: f64, p: &Parameters) -> f64 {
    (p.pump_strength * k_e * (p.pump_saturation - k_i)).max(0.0)
}

/// Growth propensity in [0, 1]: glutamate sufficiency against electrical
/// stress. Zero at `G_i = 0` (no glutamate means no growth); the 0/0 guard
/// is unreachable under exponent clamping but kept as a pure guard.
pub fn growth_propensity(g_i: f64, v: f64, p: &Parameters) -> f64 {
    let t_g = g_i / (g_i + p.growth_glutamate_bound);
    let t_v = p.voltage_influence
        * (clamped_tanh(p.voltage_transition_speed * (v / p.growth_voltage_bound - 1.0)) + 1.0);
    let denom = t_g + t_v;
    if denom == 0.0 {
        0.0
    } else {
        t_g / denom
    }
}

/// Glutamate-starvation activation of the potassium gate, 1/hr, in [0, alpha).
pub fn gate_opening_activation(g_i: f64, p: &Parameters) -> f64 {
    let headroom = (p.glutamate_capacity - g_i).max(0.0);
    let half = p.glutamate_capacity - p.hyperpolarization_glutamate_bound;
    let num = pow_gate(headroom, p.gate_exponent);
    p.gate_opening_rate * num / (pow_gate(half, p.gate_exponent) + num)
}

/// Potassium and leak reversal potentials shifted by the extracellular and
/// acclimated potassium levels: `(V_K, V_L)` in mV.
pub fn reversal_potentials(k_e: f64, k_ac: f64, p: &Parameters) -> (f64, f64) {
    let v_k = p.channel_reversal_base + p.channel_reversal_slope * k_e;
    let v_l = p.leak_reversal_base + p.leak_reversal_slope * (k_e - k_ac);
    (v_k, v_l)
}

/// Assembles every reaction term at one node.
///
/// The membrane exchange is computed once and reused with opposite signs,
/// so `dK_e + dK_i == 0` holds exactly and `dV == dK_i / F` is the literal
/// expression used.
pub fn node_reaction_rhs(s: &NodeState, p: &Parameters) -> NodeDerivative {
    let (v_k, v_l) = reversal_potentials(s.k_e, s.k_ac, p);
    let uptake = glutamate_uptake(s.g_e, s.g_i, s.v, p);
    let channel = potassium_channel_flux(s.v, s.n, v_k, p);
    let leak = leak_flux(s.v, v_l, p);
    let pump = pump_rate(s.k_e, s.k_i, p);
    // Net potassium released by the cell, mM/hr.
    let exchange = p.voltage_conversion * (channel + leak) - pump;
    let consumption =
        p.consumption_rate * s.g_i * (growth_propensity(s.g_i, s.v, p) + p.basal_consumption);
    let d_k_i = -exchange;
    NodeDerivative {
        g_e: -uptake,
        k_e: exchange,
        g_i: uptake - consumption,
        k_i: d_k_i,
        k_ac: p.acclimation_rate * (s.k_e - s.k_ac),
        v: d_k_i / p.voltage_conversion,
        n: gate_opening_activation(s.g_i, p) * (1.0 - s.n) - p.gate_closing_rate * s.n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Parameters {
        Parameters::default()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn sigmoid_midpoint() {
        assert_eq!(uptake_sigmoid(-150.0, &p()), 0.5);
    }

    #[test]
    fn sigmoid_at_rest() {
        // V = -156, V_t = -150 -> 1/(1+e^-6)
        let expect = 1.0 / (1.0 + (-6.0f64).exp());
        assert!(rel_close(uptake_sigmoid(-156.0, &p()), expect, 1e-15));
        assert!((uptake_sigmoid(-156.0, &p()) - 0.997527).abs() < 1e-6);
    }

    #[test]
    fn sigmoid_clamps_large_depolarization() {
        // V - V_t = 100 clamps to 50
        let expect = 1.0 / (1.0 + 50.0f64.exp());
        assert_eq!(uptake_sigmoid(-50.0, &p()), expect);
        assert!(uptake_sigmoid(-50.0, &p()) > 0.0);
    }

    #[test]
    fn sigmoid_stays_in_unit_range() {
        for v in [-1e9, -400.0, -150.0, 0.0, 1e9] {
            let s = uptake_sigmoid(v, &p());
            assert!(s > 0.0 && s <= 1.0, "sigmoid({v}) = {s}");
        }
        // strictly below one wherever f64 can resolve the gap
        assert!(uptake_sigmoid(-160.0, &p()) < 1.0);
    }

    #[test]
    fn uptake_zero_when_saturated_or_empty() {
        assert_eq!(glutamate_uptake(30.0, 20.0, -156.0, &p()), 0.0);
        assert_eq!(glutamate_uptake(0.0, 10.0, -156.0, &p()), 0.0);
    }

    #[test]
    fn uptake_at_default_point() {
        // 10 * sigmoid(-6) * 30 * 10
        let expect = 10.0 * (1.0 / (1.0 + (-6.0f64).exp())) * 30.0 * 10.0;
        let got = glutamate_uptake(30.0, 10.0, -156.0, &p());
        assert!(rel_close(got, expect, 1e-15));
        assert!((got - 2992.58).abs() < 0.01);
    }

    #[test]
    fn channel_flux_cases() {
        assert_eq!(potassium_channel_flux(-156.0, 0.0, -372.0, &p()), 0.0);
        assert_eq!(potassium_channel_flux(-372.0, 0.5, -372.0, &p()), 0.0);
        let got = potassium_channel_flux(-156.0, 0.1, -372.0, &p());
        assert!(rel_close(got, 180.0 * 1e-4 * 216.0, 1e-12));
        assert!((got - 3.888).abs() < 1e-12);
    }

    #[test]
    fn leak_flux_cases() {
        assert_eq!(leak_flux(-156.0, -156.0, &p()), 0.0);
        assert_eq!(leak_flux(-156.0, -216.0, &p()), 72.0);
        assert_eq!(leak_flux(-216.0, -156.0, &p()), -72.0);
    }

    #[test]
    fn pump_rate_cases() {
        assert_eq!(pump_rate(8.0, 300.0, &p()), 0.0);
        assert_eq!(pump_rate(8.0, 350.0, &p()), 0.0);
        assert!(rel_close(pump_rate(8.0, 290.0, &p()), 2.0, 1e-15));
    }

    #[test]
    fn growth_propensity_frozen_values() {
        assert_eq!(growth_propensity(0.0, -400.0, &p()), 0.0);
        // G_i = 20, V = -156: T_G = 20/38, T_V = 20(tanh(20(-156/-175 - 1)) + 1)
        let t_g = 20.0 / 38.0;
        let t_v = 20.0 * ((20.0_f64 * (-156.0 / -175.0 - 1.0)).tanh() + 1.0);
        let expect = t_g / (t_g + t_v);
        assert!(rel_close(growth_propensity(20.0, -156.0, &p()), expect, 1e-15));
        assert!((growth_propensity(20.0, -156.0, &p()) - 0.5063).abs() < 1e-4);
        assert!((growth_propensity(20.0, -250.0, &p()) - 0.0130).abs() < 1e-4);
    }

    #[test]
    fn growth_propensity_range_and_monotonicity() {
        let p = p();
        // non-decreasing in G_i at fixed V; non-increasing in V at fixed G_i
        let mut prev = -1.0;
        for i in 0..=400 {
            let g_i = i as f64 * 0.05;
            let m = growth_propensity(g_i, -156.0, &p);
            assert!((0.0..=1.0).contains(&m));
            assert!(m >= prev - 1e-12, "not monotone in G_i at {g_i}");
            prev = m;
        }
        // hyperpolarization suppresses growth: non-decreasing as V rises
        // toward zero (T_V collapses once V clears V_l)
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = -400.0 + i as f64 * 0.75;
            let m = growth_propensity(15.0, v, &p);
            assert!((0.0..=1.0).contains(&m));
            assert!(m >= prev - 1e-12, "not monotone in V at {v}");
            prev = m;
        }
    }

    #[test]
    fn gate_activation_cases() {
        let p = p();
        assert_eq!(gate_opening_activation(20.0, &p), 0.0);
        assert_eq!(gate_opening_activation(10.0, &p), 2.5);
        assert_eq!(gate_opening_activation(15.0, &p), 1.0);
        // monotone non-increasing in G_i, range [0, alpha)
        let mut prev = f64::INFINITY;
        for i in 0..=200 {
            let g_i = i as f64 * 0.1;
            let a = gate_opening_activation(g_i, &p);
            assert!(a >= 0.0 && a < p.gate_opening_rate);
            assert!(a <= prev + 1e-15);
            prev = a;
        }
    }

    #[test]
    fn reversal_potential_cases() {
        let p = p();
        assert_eq!(reversal_potentials(8.0, 8.0, &p).1, -156.0);
        assert_eq!(reversal_potentials(8.0, 9.0, &p).0, -372.0);
        assert_eq!(reversal_potentials(8.0, 9.0, &p).1, -216.0);
    }

    #[test]
    fn reaction_rhs_equilibrium_probe() {
        // With K_e = K_ac = 224 both reversals sit at -156 exactly:
        // V_K = -380 + 224, V_L = -156 + 60*0. All terms vanish.
        let p = p();
        let s = NodeState {
            g_e: 12.3,
            k_e: 224.0,
            g_i: 20.0,
            k_i: 300.0,
            k_ac: 224.0,
            v: -156.0,
            n: 0.0,
        };
        let (v_k, v_l) = reversal_potentials(s.k_e, s.k_ac, &p);
        assert_eq!(v_k, -156.0);
        assert_eq!(v_l, -156.0);
        let d = node_reaction_rhs(&s, &p);
        assert_eq!(d.v, 0.0);
        assert_eq!(d.k_e, 0.0);
        assert_eq!(d.g_e, 0.0);
        // n = 0 with G_i = G_m: activation 0, decay 0
        assert_eq!(d.n, 0.0);
    }

    #[test]
    fn reaction_rhs_default_initial_condition() {
        let p = p();
        let s = NodeState {
            g_e: 30.0,
            k_e: 8.0,
            g_i: 20.0,
            k_i: 300.0,
            k_ac: 9.0,
            v: -156.0,
            n: 0.1,
        };
        let d = node_reaction_rhs(&s, &p);
        assert_eq!(d.g_e, 0.0);
        let expect_k_e = 5.6 * (3.888 + 72.0);
        assert!(rel_close(d.k_e, expect_k_e, 1e-12), "dK_e = {}", d.k_e);
        assert!((d.k_e - 424.97).abs() < 0.01);
        assert_eq!(d.k_i, -d.k_e);
        // dV = -(channel + leak) + pump/F = -75.888 (pump = 0 here)
        assert!(rel_close(d.v, -75.888, 1e-12), "dV = {}", d.v);
        assert_eq!(d.k_ac, -30.0);
    }

    #[test]
    fn exchange_antisymmetry_exact() {
        let p = p();
        let states = [
            NodeState { g_e: 30.0, k_e: 8.0, g_i: 20.0, k_i: 300.0, k_ac: 9.0, v: -156.0, n: 0.1 },
            NodeState { g_e: 3.0, k_e: 120.0, g_i: 6.0, k_i: 140.0, k_ac: 40.0, v: -320.0, n: 0.6 },
            NodeState { g_e: 55.0, k_e: 0.5, g_i: 12.0, k_i: 299.0, k_ac: 0.5, v: -120.0, n: 0.3 },
        ];
        for s in states {
            let d = node_reaction_rhs(&s, &p);
            assert_eq!(d.k_e + d.k_i, 0.0);
            assert_eq!(d.v, d.k_i / p.voltage_conversion);
            // uptake contribution: dG_e == -uptake exactly
            let uptake = glutamate_uptake(s.g_e, s.g_i, s.v, &p);
            assert_eq!(d.g_e, -uptake);
        }
    }

    #[test]
    fn gate_ode_keeps_n_in_unit_interval() {
        let p = p();
        for i in 0..=40 {
            let g_i = i as f64 * 0.5;
            let at0 = node_reaction_rhs(
                &NodeState { g_e: 1.0, k_e: 8.0, g_i, k_i: 200.0, k_ac: 8.0, v: -156.0, n: 0.0 },
                &p,
            );
            assert!(at0.n >= 0.0, "vector field must point inward at n = 0");
            let at1 = node_reaction_rhs(
                &NodeState { g_e: 1.0, k_e: 8.0, g_i, k_i: 200.0, k_ac: 8.0, v: -156.0, n: 1.0 },
                &p,
            );
            assert!(at1.n <= 0.0, "vector field must point inward at n = 1");
        }
    }

    #[test]
    fn finite_difference_consistency() {
        // analytic derivatives coded here as test oracles; central
        // differences of the public ops must match to 1e-6 relative.
        let p = p();
        let h = 1e-5;

        // d/dV uptake_sigmoid = -e^x / (1+e^x)^2, x = V - V_t
        for v in [-160.0, -156.0, -150.0, -140.0] {
            let x = v - p.uptake_block_voltage;
            let analytic = -x.exp() / (1.0 + x.exp()).powi(2);
            let numeric = (uptake_sigmoid(v + h, &p) - uptake_sigmoid(v - h, &p)) / (2.0 * h);
            assert!(
                rel_close(analytic, numeric, 1e-6),
                "sigmoid' at V={v}: {analytic} vs {numeric}"
            );
        }

        // d/dG_i of the gate Hill term, m = 2:
        // f = a u^2/(c + u^2), u = G_m - G_i -> df/dG_i = -2 a c u / (c + u^2)^2
        for g_i in [2.0, 8.0, 14.0, 19.0] {
            let u = p.glutamate_capacity - g_i;
            let c = (p.glutamate_capacity - p.hyperpolarization_glutamate_bound).powi(2);
            let analytic = -2.0 * p.gate_opening_rate * c * u / (c + u * u).powi(2);
            let numeric =
                (gate_opening_activation(g_i + h, &p) - gate_opening_activation(g_i - h, &p))
                    / (2.0 * h);
            assert!(
                rel_close(analytic, numeric, 1e-6),
                "gate' at G_i={g_i}: {analytic} vs {numeric}"
            );
        }

        // d/dV growth_propensity via the tanh chain rule
        for v in [-200.0, -175.0, -160.0] {
            let g_i = 15.0;
            let t_g = g_i / (g_i + p.growth_glutamate_bound);
            let z = p.voltage_transition_speed * (v / p.growth_voltage_bound - 1.0);
            let t_v = p.voltage_influence * (z.tanh() + 1.0);
            let dt_v = p.voltage_influence
                * (1.0 - z.tanh().powi(2))
                * p.voltage_transition_speed
                / p.growth_voltage_bound;
            let analytic = -t_g * dt_v / (t_g + t_v).powi(2);
            let numeric =
                (growth_propensity(g_i, v + h, &p) - growth_propensity(g_i, v - h, &p)) / (2.0 * h);
            assert!(
                rel_close(analytic, numeric, 1e-6),
                "propensity' at V={v}: {analytic} vs {numeric}"
            );
        }
    }

    #[test]
    fn default_parameters_pass_validation() {
        p().validate(false).unwrap();
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut bad = p();
        bad.channel_strength = 0.0;
        let err = bad.validate(false).unwrap_err();
        assert!(err.to_string().contains("parameters.g_K"), "{err}");

        let mut bad = p();
        bad.pump_saturation = 5.0;
        let err = bad.validate(false).unwrap_err();
        assert!(err.to_string().contains("parameters.K_m"), "{err}");
        bad.validate(true).unwrap();
    }
}
