//! Probes, recorded trajectories and the signal metrics used to evaluate
//! experiments: peak detection, oscillation counting and growth-arrest
//! intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{BiofilmState, Field, Parameters};

/// A fixed observation coordinate and the fields recorded there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    /// Observation coordinate, mm. May exceed the biofilm length; such
    /// samples clamp to the last node and are flagged out-of-domain.
    pub x: f64,
    #[serde(default = "default_probe_fields")]
    pub fields: Vec<Field>,
}

pub(crate) fn default_probe_fields() -> Vec<Field> {
    vec![Field::Ke, Field::V]
}

/// One recorded probe value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub t: f64,
    pub probe: usize,
    pub field: Field,
    pub value: f64,
    pub out_of_domain: bool,
}

/// Full extracellular-potassium profile at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub length: f64,
    pub k_e: Vec<f64>,
}

/// Run provenance carried alongside the recorded data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub config_hash: String,
    pub scenario: Option<String>,
    pub parameters: Parameters,
    pub probes: Vec<Probe>,
    pub dx: f64,
}

/// Everything recorded by one simulation run. Sample times are
/// non-decreasing per (probe, field) stream; the only repeated times are
/// the pre/post pairs bracketing an impulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<ProbeSample>,
    pub snapshots: Vec<Snapshot>,
    /// (t, L) records at the probe cadence.
    pub length_series: Vec<(f64, f64)>,
    /// (time, magnitude) of every impulse actually applied.
    pub impulses_applied: Vec<(f64, f64)>,
    /// Stimulus onset times (impulses and pulse-window starts), for plots.
    pub stimulus_times: Vec<f64>,
    pub metadata: RunMetadata,
}

impl Trajectory {
    /// Time series of one field at one probe.
    pub fn series(&self, probe: usize, field: Field) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.probe == probe && s.field == field)
            .map(|s| (s.t, s.value))
            .collect()
    }
}

/// Pulse-shape metrics extracted from one probe series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseMetrics {
    /// Median of the pre-stimulus window, mM.
    pub baseline: f64,
    pub peak_times: Vec<f64>,
    /// Peak heights above baseline, mM.
    pub peak_amplitudes: Vec<f64>,
    /// amplitude_k / amplitude_1 for k = 2..; empty below two peaks.
    pub attenuation_ratios: Vec<f64>,
}

/// Value of `field` at coordinate `x`: linear interpolation between the
/// bracketing nodes, clamping to the last node beyond the domain. The flag
/// is true when `x` lies outside [0, L].
pub fn interpolate_at(values: &[f64], grid: &Grid, x: f64) -> (f64, bool) {
    let n = values.len();
    if x > grid.length {
        return (values[n - 1], true);
    }
    let pos = (x / grid.dx).max(0.0);
    let i = pos.floor() as usize;
    if i >= n - 1 {
        return (values[n - 1], false);
    }
    let theta = pos - i as f64;
    (values[i] * (1.0 - theta) + values[i + 1] * theta, false)
}

/// Samples every recorded field of `probe`, as (field, value, out_of_domain).
pub fn sample_probe(
    state: &BiofilmState,
    grid: &Grid,
    probe: &Probe,
) -> Vec<(Field, f64, bool)> {
    probe
        .fields
        .iter()
        .map(|&field| {
            let values: Vec<f64> = state.nodes.iter().map(|s| field.get(s)).collect();
            let (v, ood) = interpolate_at(&values, grid, probe.x);
            (field, v, ood)
        })
        .collect()
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Detects prominent peaks in a time series.
///
/// The baseline is the median of the first `baseline_window` hours. Peaks
/// are strict local maxima (plateaus count once, at their first sample)
/// whose prominence — height above the higher of the two flanking minima,
/// where each flank extends until a strictly higher sample — exceeds
/// `min_prominence`. Amplitudes are measured above baseline; peaks at or
/// below baseline are not reported.
pub fn detect_peaks(
    series: &[(f64, f64)],
    min_prominence: f64,
    baseline_window: f64,
) -> Result<PulseMetrics> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let t0 = series[0].0;
    let mut window: Vec<f64> = series
        .iter()
        .take_while(|(t, _)| *t <= t0 + baseline_window)
        .map(|&(_, v)| v)
        .collect();
    if window.is_empty() {
        window.push(series[0].1);
    }
    let baseline = median(&mut window);

    let values: Vec<f64> = series.iter().map(|&(_, v)| v).collect();
    let n = values.len();
    let mut peak_times = Vec::new();
    let mut peak_amplitudes = Vec::new();

    let mut i = 1;
    while i < n {
        // plateau [i, j] of equal values
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        let rises = values[i] > values[i - 1];
        let falls = j + 1 < n && values[j + 1] < values[i];
        if rises && falls {
            let peak = values[i];
            // left flank: walk until a strictly higher sample, tracking the minimum
            let mut left_base = peak;
            let mut k = i;
            while k > 0 {
                k -= 1;
                if values[k] > peak {
                    break;
                }
                left_base = left_base.min(values[k]);
            }
            let mut right_base = peak;
            let mut k = j;
            while k + 1 < n {
                k += 1;
                if values[k] > peak {
                    break;
                }
                right_base = right_base.min(values[k]);
            }
            let prominence = peak - left_base.max(right_base);
            if prominence > min_prominence && peak > baseline {
                peak_times.push(series[i].0);
                peak_amplitudes.push(peak - baseline);
            }
        }
        i = j + 1;
    }

    let attenuation_ratios = if peak_amplitudes.len() >= 2 {
        peak_amplitudes[1..]
            .iter()
            .map(|a| a / peak_amplitudes[0])
            .collect()
    } else {
        Vec::new()
    };

    Ok(PulseMetrics {
        baseline,
        peak_times,
        peak_amplitudes,
        attenuation_ratios,
    })
}

/// Counts upward excursions above `baseline + threshold` after the first
/// `transient_skip` hours. The baseline is the series value at the skip
/// (the run is deterministic, so that sample is noise-free). An excursion
/// is counted when the series reaches the level while armed; it re-arms by
/// falling back below the baseline, which keeps the count monotone
/// non-increasing in the threshold.
pub fn count_oscillations(series: &[(f64, f64)], threshold: f64, transient_skip: f64) -> usize {
    if series.is_empty() {
        return 0;
    }
    let t0 = series[0].0;
    let tail: Vec<f64> = series
        .iter()
        .filter(|(t, _)| *t >= t0 + transient_skip)
        .map(|&(_, v)| v)
        .collect();
    if tail.is_empty() {
        return 0;
    }
    let baseline = tail[0];
    let level = baseline + threshold;
    let mut armed = tail[0] < level;
    let mut count = 0;
    for &v in &tail {
        if armed && v >= level {
            count += 1;
            armed = false;
        } else if !armed && v < baseline {
            armed = true;
        }
    }
    count
}

/// Maximal intervals over which the centred-difference growth rate of L
/// falls to or below `stall_fraction` times the mean growth rate over
/// t <= `baseline_until` (the pre-stimulus window).
pub fn growth_arrest_intervals(
    l_series: &[(f64, f64)],
    stall_fraction: f64,
    baseline_until: f64,
) -> Vec<(f64, f64)> {
    if l_series.len() < 3 {
        return Vec::new();
    }
    let n = l_series.len();
    let rate = |i: usize| -> f64 {
        let (t0, l0) = l_series[i - 1];
        let (t1, l1) = l_series[i + 1];
        (l1 - l0) / (t1 - t0)
    };
    let mut baseline_sum = 0.0;
    let mut baseline_count = 0usize;
    for i in 1..n - 1 {
        if l_series[i].0 <= baseline_until {
            baseline_sum += rate(i);
            baseline_count += 1;
        }
    }
    if baseline_count == 0 {
        return Vec::new();
    }
    let cutoff = stall_fraction * (baseline_sum / baseline_count as f64);

    let mut intervals = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for i in 1..n - 1 {
        let t = l_series[i].0;
        if rate(i) <= cutoff {
            open = match open {
                None => Some((t, t)),
                Some((start, _)) => Some((start, t)),
            };
        } else if let Some(interval) = open.take() {
            intervals.push(interval);
        }
    }
    if let Some(interval) = open {
        intervals.push(interval);
    }
    intervals
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> Vec<(f64, f64)> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64, v))
            .collect()
    }

    #[test]
    fn interpolation_cases() {
        let g = Grid::new(0.5, 2.0).unwrap();
        let values = vec![0.0, 4.0, 8.0, 2.0, 6.0];
        assert_eq!(interpolate_at(&values, &g, 1.0), (8.0, false));
        assert_eq!(interpolate_at(&values, &g, 0.75), (6.0, false));
        assert_eq!(interpolate_at(&values, &g, 10.0), (6.0, true));
    }

    #[test]
    fn probe_sampling_flags_out_of_domain() {
        let g = Grid::new(0.05, 0.12).unwrap();
        let state = BiofilmState::initial(g.n_nodes, g.length);
        let probe = Probe {
            x: 10.0,
            fields: vec![Field::Ke],
        };
        let got = sample_probe(&state, &g, &probe);
        assert_eq!(got, vec![(Field::Ke, 8.0, true)]);
    }

    #[test]
    fn interpolation_is_exact_for_linear_fields() {
        let g = Grid::new(0.25, 3.0).unwrap();
        let values: Vec<f64> = (0..g.n_nodes).map(|i| 2.0 + 3.0 * g.node_x(i)).collect();
        for k in 0..=24 {
            let x = k as f64 * 0.125;
            let (v, ood) = interpolate_at(&values, &g, x);
            assert!(!ood);
            assert!((v - (2.0 + 3.0 * x)).abs() < 1e-12, "at {x}: {v}");
        }
    }

    #[test]
    fn constant_series_has_no_peaks() {
        let m = detect_peaks(&series(&[4.0; 10]), 1.0, 2.0).unwrap();
        assert!(m.peak_times.is_empty());
        assert_eq!(m.baseline, 4.0);
    }

    #[test]
    fn hand_traced_peaks_and_ratio() {
        let m = detect_peaks(&series(&[0.0, 0.0, 5.0, 0.0, 0.0, 3.0, 0.0]), 1.0, 1.0).unwrap();
        assert_eq!(m.baseline, 0.0);
        assert_eq!(m.peak_times, vec![2.0, 5.0]);
        assert_eq!(m.peak_amplitudes, vec![5.0, 3.0]);
        assert_eq!(m.attenuation_ratios, vec![0.6]);
    }

    #[test]
    fn plateau_counts_once_at_first_sample() {
        let m = detect_peaks(&series(&[0.0, 0.0, 5.0, 5.0, 0.0, 0.0]), 1.0, 1.0).unwrap();
        assert_eq!(m.peak_times, vec![2.0]);
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(matches!(detect_peaks(&[], 1.0, 1.0), Err(Error::EmptySeries)));
    }

    #[test]
    fn peak_detection_shift_invariance() {
        let base = [1.0, 1.0, 6.0, 1.5, 1.0, 4.0, 1.0, 1.2];
        let a = detect_peaks(&series(&base), 0.5, 1.0).unwrap();
        let shifted: Vec<f64> = base.iter().map(|v| v + 100.0).collect();
        let b = detect_peaks(&series(&shifted), 0.5, 1.0).unwrap();
        assert_eq!(a.peak_times, b.peak_times);
        assert_eq!(a.peak_amplitudes, b.peak_amplitudes);
        assert_eq!(a.attenuation_ratios, b.attenuation_ratios);
        assert!((b.baseline - a.baseline - 100.0).abs() < 1e-12);
    }

    #[test]
    fn peak_count_matches_under_time_reversal() {
        let base = [0.0, 2.0, 7.0, 1.0, 0.5, 3.0, 3.0, 0.0, 1.0];
        let fwd = detect_peaks(&series(&base), 0.5, 0.0).unwrap();
        let mut rev = base;
        rev.reverse();
        let bwd = detect_peaks(&series(&rev), 0.5, 0.0).unwrap();
        assert_eq!(fwd.peak_times.len(), bwd.peak_times.len());
    }

    #[test]
    fn oscillation_count_cases() {
        assert_eq!(count_oscillations(&series(&[5.0; 20]), 1.0, 2.0), 0);

        // sine of amplitude 2*threshold with 3 full periods after the skip
        let threshold = 2.0;
        let skip = 5.0;
        let samples: Vec<(f64, f64)> = (0..=2900)
            .map(|i| {
                let t = i as f64 * 0.01;
                let phase = (t - skip).max(0.0) / 8.0; // period 8 hr
                (t, 2.0 * threshold * (std::f64::consts::TAU * phase).sin())
            })
            .collect();
        assert_eq!(count_oscillations(&samples, threshold, skip), 3);

        // always above the level after skip: one crossing if it starts below
        let ramp: Vec<(f64, f64)> = (0..100)
            .map(|i| (i as f64, if i < 5 { 0.0 } else { 100.0 }))
            .collect();
        assert_eq!(count_oscillations(&ramp, 5.0, 0.0), 1);
        let high: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, 100.0)).collect();
        assert_eq!(count_oscillations(&high, 5.0, 0.0), 0);
    }

    #[test]
    fn oscillation_count_monotone_in_threshold() {
        let noisy: Vec<(f64, f64)> = (0..400)
            .map(|i| {
                let t = i as f64 * 0.1;
                (t, (t * 1.7).sin() * 3.0 + (t * 0.31).sin() * 5.0)
            })
            .collect();
        let mut prev = usize::MAX;
        for k in 0..20 {
            let c = count_oscillations(&noisy, 0.5 + k as f64 * 0.5, 0.0);
            assert!(c <= prev, "count rose from {prev} to {c} at threshold step {k}");
            prev = c;
        }
    }

    #[test]
    fn growth_arrest_cases() {
        // strictly linear growth: no stalls
        let linear: Vec<(f64, f64)> = (0..200).map(|i| (i as f64 * 0.1, i as f64 * 0.01)).collect();
        assert!(growth_arrest_intervals(&linear, 0.1, 5.0).is_empty());

        // flat on [8, 9], growing at 0.01/0.1 elsewhere
        let stalled: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.1;
                let l = if t < 8.0 {
                    t * 0.1
                } else if t < 9.0 {
                    0.8
                } else {
                    0.8 + (t - 9.0) * 0.1
                };
                (t, l)
            })
            .collect();
        let intervals = growth_arrest_intervals(&stalled, 0.2, 5.0);
        assert_eq!(intervals.len(), 1);
        let (start, end) = intervals[0];
        assert!((start - 8.0).abs() <= 0.2, "start {start}");
        assert!((end - 9.0).abs() <= 0.2, "end {end}");

        // stall_fraction = 0: empty unless the rate is exactly zero somewhere
        assert!(growth_arrest_intervals(&linear, 0.0, 5.0).is_empty());
        let flat_zero = growth_arrest_intervals(&stalled, 0.0, 5.0);
        assert_eq!(flat_zero.len(), 1);
    }
}
