//! Experiment configuration: JSON schema, validation with field-path
//! errors, and the committed scenario presets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::StepControl;
use crate::model::{Field, Parameters};
use crate::observe::Probe;
use crate::signals::{InputSignal, SourceMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Node spacing, mm.
    pub dx: f64,
    /// Initial biofilm length, mm.
    #[serde(rename = "initial_L")]
    pub initial_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dx: 0.05,
            initial_length: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub glutamate: InputSignal,
    pub potassium: InputSignal,
    /// How point-source magnitudes map onto the injection node.
    pub source_mode: SourceMode,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            glutamate: InputSignal::off(),
            potassium: InputSignal::off(),
            source_mode: SourceMode::Concentration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacetimeOutput {
    pub path: String,
    /// Snapshot cadence, hr. Snapshots are taken at k * every for k >= 1.
    pub every: f64,
    /// Number of raster points across [0, x_max].
    pub points: usize,
    /// Raster extent, mm. Defaults to the final biofilm length.
    pub x_max: Option<f64>,
}

impl Default for SpacetimeOutput {
    fn default() -> Self {
        SpacetimeOutput {
            path: "spacetime.csv".into(),
            every: 1.0,
            points: 100,
            x_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvgOutput {
    pub path: String,
    pub field: Field,
    /// Index into `probes`.
    pub probe: usize,
}

impl Default for SvgOutput {
    fn default() -> Self {
        SvgOutput {
            path: "plot.svg".into(),
            field: Field::Ke,
            probe: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub timeseries_path: Option<String>,
    pub metrics_path: Option<String>,
    pub spacetime: Option<SpacetimeOutput>,
    pub svg: Option<SvgOutput>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            timeseries_path: Some("timeseries.csv".into()),
            metrics_path: Some("metrics.json".into()),
            spacetime: None,
            svg: None,
        }
    }
}

/// Knobs for the derived signal metrics, committed per scenario rather
/// than hard-coded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Minimum peak prominence, mM.
    pub min_prominence: f64,
    /// Oscillation level above baseline, mM.
    pub oscillation_threshold: f64,
    /// Pre-stimulus window used for the peak baseline, hr.
    pub baseline_window: f64,
    /// Initial span ignored by the oscillation counter, hr.
    pub transient_skip: f64,
    /// Growth-rate fraction below which growth counts as arrested.
    pub stall_fraction: f64,
    /// Peaks before this time are ignored (e.g. the direct diffusion spike
    /// of an impulse). Zero keeps everything.
    pub peak_window_start: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            min_prominence: 1.0,
            oscillation_threshold: 5.0,
            baseline_window: 4.0,
            transient_skip: 2.0,
            stall_fraction: 0.2,
            peak_window_start: 0.0,
        }
    }
}

/// One full experiment description. An empty JSON document deserializes to
/// the quench-without-supply scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<String>,
    /// Free-form commentary (e.g. how a calibrated rate was derived).
    pub notes: Option<String>,
    pub parameters: Parameters,
    pub grid: GridConfig,
    pub step: StepControl,
    pub signals: SignalConfig,
    pub probes: Vec<Probe>,
    pub outputs: OutputConfig,
    pub metrics: MetricsConfig,
    /// Skips the default-set sanity checks (K_m > K_0, V_l < V_t).
    pub allow_nonstandard_parameters: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: None,
            notes: None,
            parameters: Parameters::default(),
            grid: GridConfig::default(),
            step: StepControl::default(),
            signals: SignalConfig::default(),
            probes: vec![Probe {
                x: 10.0,
                fields: vec![Field::Ke, Field::V],
            }],
            outputs: OutputConfig::default(),
            metrics: MetricsConfig::default(),
            allow_nonstandard_parameters: false,
        }
    }
}

pub const PRESET_NAMES: [&str; 6] = [
    "quench-off",
    "quench-on",
    "impulse",
    "impulse-train",
    "spacetime",
    "pulse-train",
];

const PRESET_QUENCH_OFF: &str = include_str!("../presets/quench-off.json");
const PRESET_QUENCH_ON: &str = include_str!("../presets/quench-on.json");
const PRESET_IMPULSE: &str = include_str!("../presets/impulse.json");
const PRESET_IMPULSE_TRAIN: &str = include_str!("../presets/impulse-train.json");
const PRESET_SPACETIME: &str = include_str!("../presets/spacetime.json");
const PRESET_PULSE_TRAIN: &str = include_str!("../presets/pulse-train.json");

impl ExperimentConfig {
    /// Parses and validates a JSON config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Stable content hash of the experiment definition. Output paths and
    /// free-form notes identify where results land, not what is computed,
    /// so they are excluded; rebasing outputs does not change the hash.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.outputs = OutputConfig::default();
        canonical.notes = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(16);
        for byte in &digest[..8] {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.parameters.validate(self.allow_nonstandard_parameters)?;
        Grid::new(self.grid.dx, self.grid.initial_length)?;
        self.step
            .validate(self.grid.dx, self.parameters.max_diffusivity())?;
        self.signals.glutamate.validate("signals.glutamate")?;
        self.signals.potassium.validate("signals.potassium")?;
        if matches!(self.signals.glutamate, InputSignal::ImpulseTrain { .. }) {
            return Err(Error::validation(
                "signals.glutamate.kind",
                "glutamate is supplied continuously; impulse_train is potassium-only",
            ));
        }
        if self.probes.is_empty() {
            return Err(Error::validation("probes", "at least one probe is required"));
        }
        for (i, probe) in self.probes.iter().enumerate() {
            if !probe.x.is_finite() || probe.x < 0.0 {
                return Err(Error::validation(
                    format!("probes[{i}].x"),
                    format!("must be finite and non-negative, got {}", probe.x),
                ));
            }
            if probe.fields.is_empty() {
                return Err(Error::validation(
                    format!("probes[{i}].fields"),
                    "must record at least one field",
                ));
            }
        }
        for (name, path) in [
            ("outputs.timeseries_path", &self.outputs.timeseries_path),
            ("outputs.metrics_path", &self.outputs.metrics_path),
        ] {
            if let Some(p) = path {
                if p.is_empty() {
                    return Err(Error::validation(name, "path must be non-empty"));
                }
            }
        }
        if let Some(st) = &self.outputs.spacetime {
            if st.path.is_empty() {
                return Err(Error::validation("outputs.spacetime.path", "path must be non-empty"));
            }
            if !(st.every > 0.0) {
                return Err(Error::validation(
                    "outputs.spacetime.every",
                    format!("must be positive, got {}", st.every),
                ));
            }
            if st.points < 2 {
                return Err(Error::validation(
                    "outputs.spacetime.points",
                    "needs at least 2 raster points",
                ));
            }
            if let Some(x_max) = st.x_max {
                if !(x_max > 0.0) {
                    return Err(Error::validation(
                        "outputs.spacetime.x_max",
                        format!("must be positive, got {x_max}"),
                    ));
                }
            }
        }
        if let Some(svg) = &self.outputs.svg {
            if svg.path.is_empty() {
                return Err(Error::validation("outputs.svg.path", "path must be non-empty"));
            }
            if svg.probe >= self.probes.len() {
                return Err(Error::validation(
                    "outputs.svg.probe",
                    format!("probe index {} out of range ({} probes)", svg.probe, self.probes.len()),
                ));
            }
            if !self.probes[svg.probe].fields.contains(&svg.field) {
                return Err(Error::validation(
                    "outputs.svg.field",
                    format!("probe {} does not record {}", svg.probe, svg.field),
                ));
            }
        }
        let m = &self.metrics;
        for (name, v) in [
            ("metrics.min_prominence", m.min_prominence),
            ("metrics.oscillation_threshold", m.oscillation_threshold),
            ("metrics.baseline_window", m.baseline_window),
            ("metrics.transient_skip", m.transient_skip),
            ("metrics.stall_fraction", m.stall_fraction),
            ("metrics.peak_window_start", m.peak_window_start),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Rebases every relative output path onto `dir`.
    pub fn rebase_outputs(&mut self, dir: &Path) {
        let rebase = |p: &mut String| {
            let path = Path::new(p.as_str());
            if path.is_relative() {
                *p = dir.join(path).to_string_lossy().into_owned();
            }
        };
        if let Some(p) = self.outputs.timeseries_path.as_mut() {
            rebase(p);
        }
        if let Some(p) = self.outputs.metrics_path.as_mut() {
            rebase(p);
        }
        if let Some(st) = self.outputs.spacetime.as_mut() {
            rebase(&mut st.path);
        }
        if let Some(svg) = self.outputs.svg.as_mut() {
            rebase(&mut svg.path);
        }
    }
}

/// Loads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text)
}

/// Returns the committed configuration for one of the paper's experiments.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = match name {
        "quench-off" => PRESET_QUENCH_OFF,
        "quench-on" => PRESET_QUENCH_ON,
        "impulse" => PRESET_IMPULSE,
        "impulse-train" => PRESET_IMPULSE_TRAIN,
        "spacetime" => PRESET_SPACETIME,
        "pulse-train" => PRESET_PULSE_TRAIN,
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    ExperimentConfig::from_json(text)
}
