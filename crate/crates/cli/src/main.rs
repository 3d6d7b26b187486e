use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use mgd_cli::ablate::{run_ablation, Axis};
use mgd_cli::plot::export_plots;
use mgd_cli::run::{compare_sets, run_experiment};
use mgd_cli::ExperimentConfig;
use mgd_core::Execution;

#[derive(Parser)]
#[command(name = "mgd", version, about = "Manifold-guided training-free dataset distillation")]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distill the configured dataset and write the run artifacts.
    Distill {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-class coreset table.
        #[arg(long)]
        export_coreset: bool,
    },
    /// Sweep one configured axis over every seed.
    Ablate {
        /// Experiment config (JSON) with an `ablation` section.
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a labeled CSV against a reference labeled CSV.
    Metrics {
        /// Labeled CSV to score, e.g. a run's synthetic.csv.
        synthetic: PathBuf,
        /// Labeled CSV of real points.
        reference: PathBuf,
        /// Neighbors for the kNN accuracy.
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Render SVG figures for a run directory.
    Plot { run_dir: PathBuf },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Distill { config, out, export_coreset } => {
            let cfg = load(&config, out)?;
            for r in run_experiment(&cfg, export_coreset, exec)? {
                for w in &r.warnings {
                    eprintln!("warning (seed {}): {w}", r.seed);
                }
                let line: Vec<String> = r.metrics.values().iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
                println!("seed {}: {}", r.seed, line.join(" "));
            }
            println!("artifacts in {}", cfg.output_dir.display());
        }
        Command::Ablate { config, axis, out } => {
            let cfg = load(&config, out)?;
            let table = run_ablation(&cfg, axis, exec)?;
            println!("{} rows over {} values of {}", table.rows.len(), table.labels.len(), axis.name());
            println!("{}", table.csv_path.display());
            for c in &table.charts {
                println!("{}", c.display());
            }
        }
        Command::Metrics { synthetic, reference, k } => {
            let report = compare_sets(&synthetic, &reference, k, exec)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Plot { run_dir } => {
            let out = export_plots(&run_dir, exec)?;
            for n in &out.notices {
                eprintln!("{n}");
            }
            for f in &out.files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
