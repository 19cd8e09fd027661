//! Stimulation inputs applied at x = 0: continuous supply, impulse trains
//! and rectangular pulse trains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// How a point source magnitude maps onto the injection node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    /// The magnitude is a concentration (or concentration rate) applied to
    /// node 0 as-is — dx-independent in amplitude, matching how inputs are
    /// quoted in mM. The default.
    #[default]
    Concentration,
    /// The magnitude is a mass deposited over the first cell: node 0
    /// receives `amount / dx`. For convergence studies.
    Mass,
}

/// Stimulation waveform at x = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSignal {
    /// Constant supply at `rate` mM/hr for all t. A rate of zero is "off".
    ConstantSupply { rate: f64 },
    /// Instantaneous concentration jumps of `impulse_magnitude` mM at each
    /// of `event_times`.
    ImpulseTrain {
        impulse_magnitude: f64,
        event_times: Vec<f64>,
    },
    /// `count` rectangular windows of `rate` mM/hr, each `width` hr long,
    /// starting at `event_times[0] + k * period`.
    PulseTrain {
        rate: f64,
        event_times: Vec<f64>,
        width: f64,
        period: f64,
        count: u32,
    },
}

impl InputSignal {
    pub fn off() -> Self {
        InputSignal::ConstantSupply { rate: 0.0 }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            InputSignal::ConstantSupply { .. } => "constant_supply",
            InputSignal::ImpulseTrain { .. } => "impulse_train",
            InputSignal::PulseTrain { .. } => "pulse_train",
        }
    }

    /// Validates the signal invariants; `path` is the JSON path prefix used
    /// in error messages.
    pub fn validate(&self, path: &str) -> Result<()> {
        let check_times = |times: &[f64]| -> Result<()> {
            for window in times.windows(2) {
                if !(window[0] < window[1]) {
                    return Err(Error::validation(
                        format!("{path}.event_times"),
                        "must be strictly increasing",
                    ));
                }
            }
            if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(Error::validation(
                    format!("{path}.event_times"),
                    "must be finite and non-negative",
                ));
            }
            Ok(())
        };
        match self {
            InputSignal::ConstantSupply { rate } => {
                if !rate.is_finite() || *rate < 0.0 {
                    return Err(Error::validation(
                        format!("{path}.rate"),
                        "must be finite and non-negative",
                    ));
                }
            }
            InputSignal::ImpulseTrain {
                impulse_magnitude,
                event_times,
            } => {
                if !impulse_magnitude.is_finite() || *impulse_magnitude < 0.0 {
                    return Err(Error::validation(
                        format!("{path}.impulse_magnitude"),
                        "must be finite and non-negative",
                    ));
                }
                check_times(event_times)?;
            }
            InputSignal::PulseTrain {
                rate,
                event_times,
                width,
                period,
                count,
            } => {
                if !rate.is_finite() || *rate < 0.0 {
                    return Err(Error::validation(
                        format!("{path}.rate"),
                        "must be finite and non-negative",
                    ));
                }
                if !(*width > 0.0) {
                    return Err(Error::validation(
                        format!("{path}.width"),
                        format!("must be positive, got {width}"),
                    ));
                }
                if !(*period >= *width) {
                    return Err(Error::validation(
                        format!("{path}.period"),
                        format!("must be >= width ({period} < {width})"),
                    ));
                }
                if *count == 0 {
                    return Err(Error::validation(format!("{path}.count"), "must be >= 1"));
                }
                if event_times.len() != 1 {
                    return Err(Error::validation(
                        format!("{path}.event_times"),
                        "pulse_train takes exactly one start time",
                    ));
                }
                check_times(event_times)?;
            }
        }
        Ok(())
    }
}

/// Continuous source rate at time `t`, mM/hr. Impulses carry no continuous
/// rate; pulse trains contribute inside each half-open window [t_k, t_k + W).
pub fn continuous_rate(sig: &InputSignal, t: f64) -> f64 {
    match sig {
        InputSignal::ConstantSupply { rate } => *rate,
        InputSignal::ImpulseTrain { .. } => 0.0,
        InputSignal::PulseTrain {
            rate,
            event_times,
            width,
            period,
            count,
        } => {
            let start = event_times[0];
            if t < start {
                return 0.0;
            }
            let k = ((t - start) / period).floor();
            if k >= *count as f64 {
                return 0.0;
            }
            let into_window = t - (start + k * period);
            if into_window < *width {
                *rate
            } else {
                0.0
            }
        }
    }
}

/// Impulse events with time in the half-open window (t0, t1], as
/// (time, magnitude) pairs. Empty for non-impulse signals.
pub fn pending_impulses(sig: &InputSignal, t0: f64, t1: f64) -> Vec<(f64, f64)> {
    debug_assert!(t0 < t1);
    match sig {
        InputSignal::ImpulseTrain {
            impulse_magnitude,
            event_times,
        } => event_times
            .iter()
            .filter(|&&t| t0 < t && t <= t1)
            .map(|&t| (t, *impulse_magnitude))
            .collect(),
        _ => Vec::new(),
    }
}

/// Deposits a point source into the injection node (node 0). `amount` is a
/// concentration jump for impulses or a rate for continuous sources; the
/// interpretation of its magnitude follows `mode`.
pub fn apply_delta_source(field: &mut [f64], grid: &Grid, amount: f64, mode: SourceMode) {
    let scaled = match mode {
        SourceMode::Concentration => amount,
        SourceMode::Mass => amount / grid.dx,
    };
    field[0] += scaled;
}
