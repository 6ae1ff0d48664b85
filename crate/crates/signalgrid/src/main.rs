//! Thin command-line front end over the library: `run` executes experiment
//! presets or config files, `plot` renders result directories to SVG.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use signalgrid::config::{preset, ScenarioConfig};
use signalgrid::plot::{collect_aggregates, render_line_chart, switch_markers_from_manifests, PlotOptions};
use signalgrid::runner::execute;

/// Output root used when neither `--out` nor the config names a directory.
const OUT_ENV: &str = "SIGNALGRID_OUT";
const OUT_FALLBACK: &str = "signalgrid-out";

#[derive(Parser)]
#[command(name = "signalgrid", version, about = "Grid-traffic signal control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset or a scenario config file
    Run {
        /// Preset name: fixed-baseline, freeze, observability, discretization
        /// (or a single arm like observability-partial)
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Path to a scenario config JSON file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the number of seeded runs
        #[arg(long)]
        runs: Option<u32>,
        /// Override the horizon in simulation seconds
        #[arg(long)]
        horizon: Option<u64>,
        /// Override the base seed; run i uses seed base+i
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: config, then $SIGNALGRID_OUT, then ./signalgrid-out)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the aggregate CSVs of a results directory to an SVG line chart
    Plot {
        /// Results directory holding *.agg.csv files
        #[arg(long = "in")]
        input: PathBuf,
        /// Output SVG path
        #[arg(long)]
        out: PathBuf,
        /// Moving-average window in seconds
        #[arg(long, default_value_t = 15)]
        window: usize,
        /// Samples trimmed from both ends
        #[arg(long, default_value_t = 1_000)]
        trim: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run {
            preset: preset_name,
            config,
            runs,
            horizon,
            seed,
            out,
        } => {
            let mut configs: Vec<ScenarioConfig> = match (preset_name, config) {
                (Some(name), None) => preset(&name).map_err(|e| e.to_string())?,
                (None, Some(path)) => vec![ScenarioConfig::from_json_file(&path).map_err(|e| e.to_string())?],
                _ => return Err("exactly one of --preset or --config is required".into()),
            };
            for config in &mut configs {
                if let Some(runs) = runs {
                    config.n_runs = runs;
                }
                if let Some(horizon) = horizon {
                    config.horizon_s = horizon;
                }
                if let Some(seed) = seed {
                    config.base_seed = seed;
                }
                let out_dir = out
                    .clone()
                    .or_else(|| config.out_dir.clone())
                    .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                    .unwrap_or_else(|| PathBuf::from(OUT_FALLBACK));
                let artifacts = execute(config, &out_dir).map_err(|e| e.to_string())?;
                println!(
                    "{}: {} runs, horizon {} -> {}",
                    config.name,
                    config.n_runs,
                    config.horizon_s,
                    artifacts.out_dir.display()
                );
            }
            Ok(())
        }
        Command::Plot {
            input,
            out,
            window,
            trim,
        } => {
            let series = collect_aggregates(&input).map_err(|e| e.to_string())?;
            let options = PlotOptions {
                window_s: window,
                trim_s: trim,
                switch_markers: switch_markers_from_manifests(&input),
                title: input
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                ..PlotOptions::default()
            };
            let svg = render_line_chart(&series, &options).map_err(|e| e.to_string())?;
            std::fs::write(&out, svg).map_err(|e| format!("{}: {e}", out.display()))?;
            println!("{} series -> {}", series.len(), out.display());
            Ok(())
        }
    }
}
