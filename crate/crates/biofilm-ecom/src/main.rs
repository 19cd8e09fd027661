//! Command-line entry point: run scenario presets or config files, sweep
//! pulse periods, and validate configs.
//!
//! Exit codes: 0 success, 2 validation failure, 3 stability fault, 4 i/o.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use biofilm_ecom::config::{load_config, preset, ExperimentConfig};
use biofilm_ecom::error::{Error, Result};
use biofilm_ecom::output::{emit_all, RunMetrics};
use biofilm_ecom::signals::InputSignal;

#[derive(Parser)]
#[command(
    name = "biofilm-ecom",
    about = "Deterministic 1-D simulator of potassium-wave signaling in a growing bacterial biofilm",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file or a named preset.
    Simulate {
        /// Path to a JSON experiment config.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Preset name: quench-off, quench-on, impulse, impulse-train,
        /// spacetime, pulse-train.
        #[arg(long)]
        preset: Option<String>,
        /// Override the pulse-train period T_p, hr.
        #[arg(long)]
        period: Option<f64>,
        /// Directory receiving relative output paths.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the pulse-train preset over several periods and summarize.
    Sweep {
        /// Preset to sweep (pulse-train).
        #[arg(long)]
        preset: String,
        /// Comma-separated list of periods, hr.
        #[arg(long, value_delimiter = ',', required = true)]
        periods: Vec<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Load and validate a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn resolve_config(
    config: Option<&PathBuf>,
    preset_name: Option<&str>,
    period: Option<f64>,
) -> Result<ExperimentConfig> {
    let mut cfg = match (config, preset_name) {
        (Some(path), None) => load_config(path)?,
        (None, Some(name)) => preset(name)?,
        _ => {
            return Err(Error::validation(
                "simulate",
                "exactly one of --config or --preset is required",
            ))
        }
    };
    if let Some(t_p) = period {
        apply_period(&mut cfg, t_p)?;
    }
    Ok(cfg)
}

fn apply_period(cfg: &mut ExperimentConfig, t_p: f64) -> Result<()> {
    match &mut cfg.signals.potassium {
        InputSignal::PulseTrain { period, .. } => {
            *period = t_p;
            cfg.validate()
        }
        _ => Err(Error::validation(
            "--period",
            "only applies to pulse-train stimuli",
        )),
    }
}

fn report(metrics: &Option<RunMetrics>, cfg: &ExperimentConfig) {
    if let Some(m) = metrics {
        for p in &m.probes {
            println!(
                "probe x = {} mm: {} peaks, oscillation_count = {}, baseline = {:.3} mM",
                p.probe_x_mm,
                p.peak_times_hr.len(),
                p.oscillation_count,
                p.baseline
            );
        }
        println!(
            "final length = {:.4} mm, growth arrests: {}",
            m.final_length_mm,
            m.growth_arrest_intervals_hr.len()
        );
    }
    if let Some(path) = &cfg.outputs.timeseries_path {
        println!("wrote {path}");
    }
    if let Some(st) = &cfg.outputs.spacetime {
        println!("wrote {}", st.path);
    }
    if let Some(path) = &cfg.outputs.metrics_path {
        println!("wrote {path}");
    }
    if let Some(svg) = &cfg.outputs.svg {
        println!("wrote {}", svg.path);
    }
}

fn simulate(cfg: &ExperimentConfig) -> Result<Option<RunMetrics>> {
    let trajectory = biofilm_ecom::run(cfg)?;
    emit_all(&trajectory, cfg)
}

#[derive(Serialize)]
struct SweepEntry {
    period_hr: f64,
    peak_times_hr: Vec<f64>,
    #[serde(rename = "peak_amplitudes_mM")]
    peak_amplitudes: Vec<f64>,
    attenuation_ratios: Vec<f64>,
    mean_attenuation_ratio: Option<f64>,
}

fn sweep_worker_count(jobs: usize) -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("BIOFILM_ECOM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(available);
    cap.min(jobs).max(1)
}

fn sweep(preset_name: &str, periods: &[f64], out_dir: &PathBuf) -> Result<()> {
    if preset_name != "pulse-train" {
        return Err(Error::validation(
            "sweep.preset",
            format!("sweep supports the pulse-train preset, got '{preset_name}'"),
        ));
    }
    if periods.is_empty() {
        return Err(Error::validation("sweep.periods", "need at least one period"));
    }
    let mut ordered: Vec<f64> = periods.to_vec();
    ordered.sort_by(|a, b| a.partial_cmp(b).expect("finite periods"));
    ordered.dedup();

    // validate every job before spawning any
    let mut jobs = Vec::new();
    for &t_p in &ordered {
        let mut cfg = preset(preset_name)?;
        apply_period(&mut cfg, t_p)?;
        let sub_dir = out_dir.join(format!("Tp_{t_p}"));
        cfg.rebase_outputs(&sub_dir);
        jobs.push((t_p, cfg));
    }

    let workers = sweep_worker_count(jobs.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<Option<RunMetrics>>>>> =
        jobs.iter().map(|_| std::sync::Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let outcome = simulate(&jobs[i].1);
                *results[i].lock().expect("result slot") = Some(outcome);
            });
        }
    });

    // merge deterministically in period order
    let mut entries = Vec::new();
    for ((t_p, _), slot) in jobs.iter().zip(results) {
        let outcome = slot.into_inner().expect("result slot").expect("worker ran");
        let metrics = outcome?;
        let probe = metrics
            .as_ref()
            .and_then(|m| m.probes.first())
            .ok_or_else(|| Error::validation("sweep", "pulse-train preset emits no metrics"))?;
        let ratios = probe.attenuation_ratios.clone();
        let mean = if ratios.is_empty() {
            None
        } else {
            Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
        };
        println!(
            "T_p = {t_p} hr: {} peaks, mean attenuation ratio {}",
            probe.peak_times_hr.len(),
            mean.map_or("n/a".to_string(), |m| format!("{m:.3}")),
        );
        entries.push(SweepEntry {
            period_hr: *t_p,
            peak_times_hr: probe.peak_times_hr.clone(),
            peak_amplitudes: probe.peak_amplitudes.clone(),
            attenuation_ratios: ratios,
            mean_attenuation_ratio: mean,
        });
    }

    let summary_path = out_dir.join("sweep_summary.json");
    let mut json = serde_json::to_string_pretty(&entries)?;
    json.push('\n');
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(&summary_path, json)?;
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            preset,
            period,
            out_dir,
        } => {
            let mut cfg = resolve_config(config.as_ref(), preset.as_deref(), period)?;
            cfg.rebase_outputs(&out_dir);
            let metrics = simulate(&cfg)?;
            report(&metrics, &cfg);
            Ok(())
        }
        Command::Sweep {
            preset,
            periods,
            out_dir,
        } => sweep(&preset, &periods, &out_dir),
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!(
                "ok: scenario = {}, horizon = {} hr, dx = {} mm, dt = {} hr",
                cfg.scenario.as_deref().unwrap_or("(none)"),
                cfg.step.t_end,
                cfg.grid.dx,
                cfg.step.dt
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
