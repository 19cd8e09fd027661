//! Byte-deterministic file outputs: probe time series as CSV, the
//! space-time potassium field as CSV on a fixed raster, derived metrics as
//! JSON, and standalone SVG line plots.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, SpacetimeOutput};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::Field;
use crate::observe::{
    count_oscillations, detect_peaks, growth_arrest_intervals, interpolate_at, PulseMetrics,
    Trajectory,
};

/// Fixed-point with nine significant digits, counting from the integer
/// part (at least one digit). `0 -> "0.00000000"`, `10 -> "10.0000000"`,
/// `-156 -> "-156.000000"`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    let mut int_digits = 1usize;
    let mut bound = 10.0;
    while a >= bound && int_digits < 9 {
        bound *= 10.0;
        int_digits += 1;
    }
    format!("{:.*}", 9 - int_digits, v)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(bytes)?;
    Ok(())
}

/// Probe samples in time order: `t_hr,probe_x_mm,field,value,out_of_domain`.
pub fn emit_timeseries_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    if trajectory.samples.is_empty() {
        return Err(Error::validation("trajectory", "no samples recorded"));
    }
    let mut out = String::with_capacity(64 * trajectory.samples.len());
    out.push_str("t_hr,probe_x_mm,field,value,out_of_domain\n");
    for s in &trajectory.samples {
        let x = trajectory.metadata.probes[s.probe].x;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_value(s.t),
            format_value(x),
            s.field,
            format_value(s.value),
            s.out_of_domain
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Space-time potassium field rasterized onto fixed coordinates:
/// `t_hr,x_mm,K_e_mM,in_biofilm`. Raster values come from the same
/// interpolation as probe sampling.
pub fn emit_spacetime_csv(
    trajectory: &Trajectory,
    spec: &SpacetimeOutput,
    path: &Path,
) -> Result<()> {
    if trajectory.snapshots.is_empty() {
        return Err(Error::validation(
            "outputs.spacetime",
            "no snapshots recorded (is spacetime output enabled?)",
        ));
    }
    let x_max = spec.x_max.unwrap_or_else(|| {
        trajectory
            .snapshots
            .iter()
            .map(|s| s.length)
            .fold(0.0, f64::max)
    });
    let points = spec.points;
    let mut out = String::new();
    out.push_str("t_hr,x_mm,K_e_mM,in_biofilm\n");
    for snap in &trajectory.snapshots {
        let grid = Grid {
            dx: trajectory.metadata.dx,
            n_nodes: snap.k_e.len(),
            length: snap.length,
        };
        for j in 0..points {
            let x = x_max * j as f64 / (points - 1) as f64;
            let (value, _) = interpolate_at(&snap.k_e, &grid, x);
            let in_biofilm = x <= snap.length;
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_value(snap.t),
                format_value(x),
                format_value(value),
                in_biofilm
            ));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Metrics for one probe's extracellular-potassium series.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeMetrics {
    pub probe_x_mm: f64,
    #[serde(rename = "baseline_mM")]
    pub baseline: f64,
    pub peak_times_hr: Vec<f64>,
    #[serde(rename = "peak_amplitudes_mM")]
    pub peak_amplitudes: Vec<f64>,
    pub attenuation_ratios: Vec<f64>,
    pub oscillation_count: usize,
}

/// The full derived-metrics document.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub scenario: Option<String>,
    pub config_hash: String,
    pub probes: Vec<ProbeMetrics>,
    pub growth_arrest_intervals_hr: Vec<(f64, f64)>,
    pub final_length_mm: f64,
}

fn window_peaks(full: &PulseMetrics, start: f64) -> PulseMetrics {
    let keep: Vec<usize> = full
        .peak_times
        .iter()
        .enumerate()
        .filter(|(_, t)| **t >= start)
        .map(|(i, _)| i)
        .collect();
    let peak_times: Vec<f64> = keep.iter().map(|&i| full.peak_times[i]).collect();
    let peak_amplitudes: Vec<f64> = keep.iter().map(|&i| full.peak_amplitudes[i]).collect();
    let attenuation_ratios = if peak_amplitudes.len() >= 2 {
        peak_amplitudes[1..]
            .iter()
            .map(|a| a / peak_amplitudes[0])
            .collect()
    } else {
        Vec::new()
    };
    PulseMetrics {
        baseline: full.baseline,
        peak_times,
        peak_amplitudes,
        attenuation_ratios,
    }
}

/// Derives the per-probe pulse metrics (on K_e), oscillation counts and
/// the growth-arrest intervals using the thresholds committed in the
/// scenario config.
pub fn compute_metrics(trajectory: &Trajectory, config: &ExperimentConfig) -> Result<RunMetrics> {
    let m = &config.metrics;
    let mut probes = Vec::new();
    for (idx, probe) in trajectory.metadata.probes.iter().enumerate() {
        if !probe.fields.contains(&Field::Ke) {
            continue;
        }
        let series = trajectory.series(idx, Field::Ke);
        let full = detect_peaks(&series, m.min_prominence, m.baseline_window)?;
        // the detection window drops early peaks (e.g. the direct
        // diffusion spike of an impulse); baseline and prominence still
        // come from the full series
        let peaks = window_peaks(&full, m.peak_window_start);
        let oscillation_count =
            count_oscillations(&series, m.oscillation_threshold, m.transient_skip);
        probes.push(ProbeMetrics {
            probe_x_mm: probe.x,
            baseline: peaks.baseline,
            peak_times_hr: peaks.peak_times,
            peak_amplitudes: peaks.peak_amplitudes,
            attenuation_ratios: peaks.attenuation_ratios,
            oscillation_count,
        });
    }
    let baseline_until = trajectory
        .stimulus_times
        .first()
        .copied()
        .unwrap_or(config.step.t_end);
    let arrests =
        growth_arrest_intervals(&trajectory.length_series, m.stall_fraction, baseline_until);
    let final_length = trajectory
        .length_series
        .last()
        .map(|&(_, l)| l)
        .unwrap_or(config.grid.initial_length);
    Ok(RunMetrics {
        scenario: trajectory.metadata.scenario.clone(),
        config_hash: trajectory.metadata.config_hash.clone(),
        probes,
        growth_arrest_intervals_hr: arrests,
        final_length_mm: final_length,
    })
}

/// Serializes the metrics document with stable key order.
pub fn emit_metrics_json(metrics: &RunMetrics, path: &Path) -> Result<()> {
    let mut json = serde_json::to_string_pretty(metrics)?;
    json.push('\n');
    write_atomic(path, json.as_bytes())
}

/// Standalone SVG line chart of one probe series, with axes, units and
/// dashed markers at the stimulus times.
pub fn emit_svg_plot(
    trajectory: &Trajectory,
    field: Field,
    probe: usize,
    path: &Path,
) -> Result<()> {
    let series = trajectory.series(probe, field);
    if series.is_empty() {
        return Err(Error::validation(
            "outputs.svg",
            format!("no samples recorded for {field} at probe {probe}"),
        ));
    }
    const W: f64 = 800.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0; // left margin
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;

    let (t0, t1) = (
        series.first().unwrap().0,
        series.last().unwrap().0.max(series.first().unwrap().0 + 1e-9),
    );
    let mut v0 = f64::INFINITY;
    let mut v1 = f64::NEG_INFINITY;
    for &(_, v) in &series {
        v0 = v0.min(v);
        v1 = v1.max(v);
    }
    if v1 - v0 < 1e-12 {
        // horizontal line: pad the range so the polyline sits mid-plot
        v0 -= 1.0;
        v1 += 1.0;
    }
    let pad = 0.05 * (v1 - v0);
    let (v0, v1) = (v0 - pad, v1 + pad);

    let sx = |t: f64| ML + (t - t0) / (t1 - t0) * (W - ML - MR);
    let sy = |v: f64| H - MB - (v - v0) / (v1 - v0) * (H - MT - MB);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));

    // ticks and labels
    for k in 0..=4 {
        let t = t0 + (t1 - t0) * k as f64 / 4.0;
        let x = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            H - MB + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            H - MB + 18.0,
            format_compact(t)
        ));
        let v = v0 + (v1 - v0) * k as f64 / 4.0;
        let y = sy(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{ML}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            ML - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            ML - 8.0,
            y + 4.0,
            format_compact(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">t (hr)</text>\n",
        (ML + W - MR) / 2.0,
        H - 10.0
    ));
    let unit = if field.unit().is_empty() {
        String::new()
    } else {
        format!(" ({})", field.unit())
    };
    svg.push_str(&format!(
        "<text x=\"15\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 15 {})\">{}{unit}</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        field
    ));

    // stimulus markers
    for &t in &trajectory.stimulus_times {
        if t < t0 || t > t1 {
            continue;
        }
        let x = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{MT}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
            H - MB
        ));
    }

    // data polyline
    let mut points = String::new();
    for &(t, v) in &series {
        points.push_str(&format!("{:.2},{:.2} ", sx(t), sy(v)));
    }
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1565c0\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.trim_end()
    ));
    svg.push_str("</svg>\n");
    write_atomic(path, svg.as_bytes())
}

fn format_compact(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

/// Runs every enabled emitter for one finished trajectory.
pub fn emit_all(trajectory: &Trajectory, config: &ExperimentConfig) -> Result<Option<RunMetrics>> {
    if let Some(path) = &config.outputs.timeseries_path {
        emit_timeseries_csv(trajectory, Path::new(path))?;
    }
    if let Some(spec) = &config.outputs.spacetime {
        emit_spacetime_csv(trajectory, spec, Path::new(&spec.path))?;
    }
    let mut metrics = None;
    if let Some(path) = &config.outputs.metrics_path {
        let m = compute_metrics(trajectory, config)?;
        emit_metrics_json(&m, Path::new(path))?;
        metrics = Some(m);
    }
    if let Some(svg) = &config.outputs.svg {
        emit_svg_plot(trajectory, svg.field, svg.probe, Path::new(&svg.path))?;
    }
    Ok(metrics)
}

/// Parses a timeseries CSV back into (t, probe_x, field, value, flag) rows.
/// Used by the round-trip tests; values compare exactly at the emitted
/// precision.
pub fn parse_timeseries_csv(text: &str) -> Result<Vec<(f64, f64, String, f64, bool)>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::EmptySeries)?;
    if header != "t_hr,probe_x_mm,field,value,out_of_domain" {
        return Err(Error::Parse(format!("unexpected header: {header}")));
    }
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("row {i}: expected 5 columns")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {i}: {e}")))
        };
        rows.push((
            parse(parts[0])?,
            parse(parts[1])?,
            parts[2].to_string(),
            parse(parts[3])?,
            parts[4] == "true",
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Parameters;
    use crate::observe::{Probe, ProbeSample, RunMetadata, Snapshot, Trajectory};

    fn tiny_trajectory() -> Trajectory {
        Trajectory {
            samples: vec![ProbeSample {
                t: 0.0,
                probe: 0,
                field: Field::V,
                value: -156.0,
                out_of_domain: false,
            }],
            snapshots: vec![],
            length_series: vec![(0.0, 0.12)],
            impulses_applied: vec![],
            stimulus_times: vec![],
            metadata: RunMetadata {
                config_hash: "0".into(),
                scenario: None,
                parameters: Parameters::default(),
                probes: vec![Probe {
                    x: 10.0,
                    fields: vec![Field::V],
                }],
                dx: 0.05,
            },
        }
    }

    #[test]
    fn value_formatting_shapes() {
        assert_eq!(format_value(0.0), "0.00000000");
        assert_eq!(format_value(10.0), "10.0000000");
        assert_eq!(format_value(-156.0), "-156.000000");
        assert_eq!(format_value(5.0), "5.00000000");
        assert_eq!(format_value(123456.5), "123456.500");
    }

    #[test]
    fn single_sample_gives_header_plus_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        emit_timeseries_csv(&tiny_trajectory(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "t_hr,probe_x_mm,field,value,out_of_domain");
        assert_eq!(lines[1], "0.00000000,10.0000000,V,-156.000000,false");
    }

    #[test]
    fn csv_round_trip_is_lossless_at_emitted_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        let mut traj = tiny_trajectory();
        traj.samples.push(ProbeSample {
            t: 1.2345678987,
            probe: 0,
            field: Field::V,
            value: -123.456789123,
            out_of_domain: true,
        });
        emit_timeseries_csv(&traj, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let rows = parse_timeseries_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        for (row, sample) in rows.iter().zip(&traj.samples) {
            // parsing the formatted value reproduces the emitted precision
            assert_eq!(format_value(row.0), format_value(sample.t));
            assert_eq!(format_value(row.3), format_value(sample.value));
            assert_eq!(row.4, sample.out_of_domain);
        }
    }

    #[test]
    fn spacetime_line_count_matches_raster() {
        // 20 snapshots (cadence 1 over 20 hr, k >= 1) x 100 points + header
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.csv");
        let mut traj = tiny_trajectory();
        for k in 1..=20 {
            traj.snapshots.push(Snapshot {
                t: k as f64,
                length: 0.12,
                k_e: vec![8.0, 8.0, 8.0],
            });
        }
        let spec = SpacetimeOutput {
            path: String::new(),
            every: 1.0,
            points: 100,
            x_max: Some(0.3),
        };
        emit_spacetime_csv(&traj, &spec, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2001);
        // raster points beyond L are flagged out of the biofilm
        let beyond: Vec<&str> = text
            .lines()
            .skip(1)
            .filter(|l| l.ends_with("false"))
            .collect();
        assert!(!beyond.is_empty());
        for line in text.lines().skip(1) {
            let x: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            let flag = line.ends_with("true");
            assert_eq!(flag, x <= 0.12, "{line}");
        }
    }

    #[test]
    fn svg_renders_constant_series_as_horizontal_polyline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.svg");
        let mut traj = tiny_trajectory();
        traj.samples = (0..10)
            .map(|i| ProbeSample {
                t: i as f64,
                probe: 0,
                field: Field::V,
                value: -156.0,
                out_of_domain: false,
            })
            .collect();
        traj.stimulus_times = vec![5.0];
        emit_svg_plot(&traj, Field::V, 0, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("<polyline"));
        assert!(text.contains("stroke-dasharray"), "stimulus marker missing");
        // all polyline y values identical
        let points = text
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let ys: Vec<&str> = points
            .split_whitespace()
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]), "{ys:?}");
    }

    #[test]
    fn emitters_reject_empty_trajectories() {
        let dir = tempfile::tempdir().unwrap();
        let mut traj = tiny_trajectory();
        traj.samples.clear();
        let err = emit_timeseries_csv(&traj, &dir.path().join("x.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!dir.path().join("x.csv").exists(), "file must not be written");
    }
}
