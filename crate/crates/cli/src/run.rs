//! `mgd distill`: one or more seeded runs and their artifacts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mgd_core::data::LabeledLatentSet;
use mgd_core::io::{read_labeled_csv, write_coreset_csv, write_synthetic_csv, write_trajectory_csv};
use mgd_core::metrics::{Identity, MetricReport};
use mgd_core::sampler::{distill, DistillConfig, DistillOutput};
use mgd_core::Execution;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;

pub const SYNTHETIC_CSV: &str = "synthetic.csv";
pub const TRAJECTORY_CSV: &str = "trajectories.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const RESOLVED_CONFIG: &str = "config.resolved.json";
pub const CORESET_CSV: &str = "coreset.csv";
pub const AGGREGATE_JSON: &str = "aggregate.json";

/// Writes through a temporary file in the target directory, then renames
/// it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot write into {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("moving output into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub n_synthetic: usize,
    pub metrics: MetricReport,
    pub warnings: Vec<String>,
}

/// Distills the dataset drawn for `seed` and scores the result.
pub fn evaluate(
    cfg: &ExperimentConfig,
    distill_cfg: &DistillConfig,
    data: &(LabeledLatentSet, LabeledLatentSet),
    seed: u64,
    exec: Execution,
) -> Result<(DistillOutput, RunMetrics)> {
    let (train, test) = data;
    let out = distill(train, distill_cfg, seed, exec)?;
    if out.set.is_empty() {
        bail!("every trajectory aborted: {}", out.warnings.join("; "));
    }
    let synth = out.set.as_labeled()?;
    let metrics =
        MetricReport::compute(&synth, train, test, Some(&cfg.dataset.spec), cfg.metrics.knn_k, &Identity, exec)?;
    let run = RunMetrics { seed, n_synthetic: out.set.len(), metrics, warnings: out.warnings.clone() };
    Ok((out, run))
}

/// One seeded run written to `dir`.
pub fn run_single(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
    export_coreset: bool,
    exec: Execution,
) -> Result<RunMetrics> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let data = cfg.sample_data(seed)?;
    let (out, run) = evaluate(cfg, &cfg.distill_config(), &data, seed, exec)?;

    let mut resolved = cfg.clone();
    resolved.seeds.master = seed;
    resolved.seeds.repetitions = 1;
    resolved.output_dir = dir.to_path_buf();

    write_atomic(&dir.join(SYNTHETIC_CSV), |w| Ok(write_synthetic_csv(w, &out.set)?))?;
    write_atomic(&dir.join(TRAJECTORY_CSV), |w| Ok(write_trajectory_csv(w, &out.records)?))?;
    write_json(&dir.join(METRICS_JSON), &run)?;
    write_atomic(&dir.join(RESOLVED_CONFIG), |w| Ok(w.write_all(resolved.to_json()?.as_bytes())?))?;
    if export_coreset {
        write_atomic(&dir.join(CORESET_CSV), |w| Ok(write_coreset_csv(w, &out.plans)?))?;
    }
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let std =
        if n > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    Summary { mean, std, n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, Summary>,
}

pub fn aggregate(runs: &[RunMetrics]) -> Aggregate {
    let mut per: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in runs {
        for (name, v) in r.metrics.values() {
            per.entry(name.to_string()).or_default().push(v);
        }
    }
    Aggregate {
        seeds: runs.iter().map(|r| r.seed).collect(),
        metrics: per.into_iter().map(|(k, v)| (k, summarize(&v))).collect(),
    }
}

pub fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed-{seed}"))
}

/// Runs every repetition. A single repetition writes straight into the
/// output directory; several get one `seed-<n>` directory each plus an
/// aggregate.
pub fn run_experiment(cfg: &ExperimentConfig, export_coreset: bool, exec: Execution) -> Result<Vec<RunMetrics>> {
    let root = &cfg.output_dir;
    let seeds = cfg.run_seeds();
    if seeds.len() == 1 {
        return Ok(vec![run_single(cfg, seeds[0], root, export_coreset, exec)?]);
    }
    let runs = seeds
        .iter()
        .map(|&s| run_single(cfg, s, &seed_dir(root, s), export_coreset, exec))
        .collect::<Result<Vec<_>>>()?;
    write_json(&root.join(AGGREGATE_JSON), &aggregate(&runs))?;
    Ok(runs)
}

fn read_set(path: &Path) -> Result<LabeledLatentSet> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_labeled_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

/// Scores the labeled set in `synthetic` against the real set in `real`,
/// which serves as both the reference and the held-out data.
pub fn compare_sets(synthetic: &Path, real: &Path, k: usize, exec: Execution) -> Result<MetricReport> {
    let s = read_set(synthetic)?;
    let r = read_set(real)?;
    if s.dim() != r.dim() {
        bail!("{} has {} columns of coordinates, {} has {}", synthetic.display(), s.dim(), real.display(), r.dim());
    }
    Ok(MetricReport::compute(&s, &r, &r, None, k, &Identity, exec)?)
}
