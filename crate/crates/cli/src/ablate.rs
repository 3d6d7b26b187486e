//! `mgd ablate`: one run per axis value per seed, collected in a long table.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use clap::ValueEnum;
use mgd_core::sampler::DistillConfig;
use mgd_core::Execution;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::run::{evaluate, summarize, write_atomic};
use crate::svg::{bounds, color, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    Kernel,
    TStop,
    RadiusSchedule,
    Clustering,
    Lambda,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Kernel => "kernel",
            Axis::TStop => "t_stop",
            Axis::RadiusSchedule => "radius_schedule",
            Axis::Clustering => "clustering",
            Axis::Lambda => "lambda",
        }
    }

    fn is_numeric(self) -> bool {
        matches!(self, Axis::TStop | Axis::Lambda)
    }
}

/// One configuration on the axis.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub config: DistillConfig,
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::from("?"),
    }
}

fn values<T>(axis: Axis, v: &Option<Vec<T>>) -> Result<&[T]> {
    match v {
        None => bail!("ablation.{}: no values configured", axis.name()),
        Some(v) if v.is_empty() => bail!("ablation.{}: empty axis list", axis.name()),
        Some(v) => Ok(v),
    }
}

/// Expands the configured axis values into validated configurations. The
/// kernel axis pairs every kernel with and without normal cancellation
/// (λ = 1 and λ = 0); numeric axes are sorted ascending.
pub fn variants(cfg: &ExperimentConfig, axis: Axis) -> Result<Vec<Variant>> {
    let base = cfg.distill_config();
    let a = &cfg.ablation;
    let mut out = Vec::new();
    let mut push = |label: String, edit: &dyn Fn(&mut DistillConfig)| {
        let mut c = base.clone();
        edit(&mut c);
        out.push(Variant { label, config: c });
    };
    match axis {
        Axis::Kernel => {
            for &k in values(axis, &a.kernel)? {
                for (suffix, lambda) in [("manifold", 1.0), ("mode", 0.0)] {
                    push(format!("{}+{suffix}", k.name()), &|c| {
                        c.guidance.kernel = k;
                        c.guidance.lambda_man = lambda;
                    });
                }
            }
        }
        Axis::TStop => {
            let mut v = values(axis, &a.t_stop)?.to_vec();
            v.sort_unstable();
            v.dedup();
            for t in v {
                push(t.to_string(), &|c| c.guidance.t_stop = t);
            }
        }
        Axis::Lambda => {
            let mut v = values(axis, &a.lambda)?.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            for l in v {
                push(l.to_string(), &|c| c.guidance.lambda_man = l);
            }
        }
        Axis::RadiusSchedule => {
            for &r in values(axis, &a.radius_schedule)? {
                push(r.name().to_string(), &|c| c.coreset.radius.schedule = r);
            }
        }
        Axis::Clustering => {
            for &m in values(axis, &a.clustering)? {
                push(label(&m), &|c| c.coreset.method = m);
            }
        }
    }
    let dim = cfg.dataset.spec.dim();
    for v in &out {
        v.config
            .validate(dim)
            .map_err(|(path, msg)| anyhow!("ablation.{} = {}: {path}: {msg}", axis.name(), v.label))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis_value: String,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct AblationTable {
    pub axis: Axis,
    pub labels: Vec<String>,
    pub rows: Vec<Row>,
    pub csv_path: PathBuf,
    pub charts: Vec<PathBuf>,
}

pub fn run_ablation(cfg: &ExperimentConfig, axis: Axis, exec: Execution) -> Result<AblationTable> {
    let vars = variants(cfg, axis)?;
    let seeds = cfg.run_seeds();
    let data = seeds.iter().map(|&s| cfg.sample_data(s)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for v in &vars {
        for (&seed, d) in seeds.iter().zip(&data) {
            let (_, run) = evaluate(cfg, &v.config, d, seed, exec)?;
            for (metric, value) in run.metrics.values() {
                rows.push(Row { axis_value: v.label.clone(), seed, metric: metric.to_string(), value });
            }
        }
    }

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("ablation_{}.csv", axis.name()));
    write_atomic(&csv_path, |w| {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["axis_value", "seed", "metric", "value"])?;
        for r in &rows {
            out.write_record([r.axis_value.clone(), r.seed.to_string(), r.metric.clone(), r.value.to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;

    let labels: Vec<String> = vars.iter().map(|v| v.label.clone()).collect();
    let mut metrics: Vec<&str> = Vec::new();
    for r in &rows {
        if !metrics.contains(&r.metric.as_str()) {
            metrics.push(&r.metric);
        }
    }
    let mut charts = Vec::new();
    for m in metrics {
        let path = dir.join(format!("ablation_{}_{m}.svg", axis.name()));
        let svg = chart(axis, &labels, &rows, m);
        write_atomic(&path, |w| Ok(w.write_all(svg.as_bytes())?))?;
        charts.push(path);
    }
    Ok(AblationTable { axis, labels, rows, csv_path, charts })
}

/// Mean ± sample std of `metric` per axis value, as a line chart for
/// numeric axes and a bar chart otherwise.
fn chart(axis: Axis, labels: &[String], rows: &[Row], metric: &str) -> String {
    let stats: Vec<(f64, f64)> = labels
        .iter()
        .map(|l| {
            let v: Vec<f64> =
                rows.iter().filter(|r| &r.axis_value == l && r.metric == metric).map(|r| r.value).collect();
            let s = summarize(&v);
            (s.mean, s.std)
        })
        .collect();
    let xs: Vec<f64> = if axis.is_numeric() {
        labels.iter().map(|l| l.parse().unwrap_or(f64::NAN)).collect()
    } else {
        (0..labels.len()).map(|i| i as f64).collect()
    };
    let y = bounds(stats.iter().flat_map(|&(m, s)| [m - s, m + s]));
    let y = if axis.is_numeric() { y } else { (y.0.min(0.0), y.1) };
    let x = if axis.is_numeric() { bounds(xs.iter().copied()) } else { (-0.5, labels.len() as f64 - 0.5) };
    let title = format!("{metric} vs {}", axis.name());
    let mut f = Frame::new(&title, axis.name(), metric, x, y);
    if axis.is_numeric() {
        let pts: Vec<(f64, f64)> = xs.iter().zip(&stats).map(|(&x, &(m, _))| (x, m)).collect();
        f.polyline(&pts, color(0), 2.0, 1.0);
        for (&x, &(m, s)) in xs.iter().zip(&stats) {
            f.circle(x, m, 3.0, color(0), 1.0);
            f.error_bar(x, m - s, m + s, "#333");
        }
    } else {
        for (i, (l, &(m, s))) in labels.iter().zip(&stats).enumerate() {
            f.bar(i as f64, 0.35, m, color(i));
            f.error_bar(i as f64, m - s, m + s, "#333");
            f.x_category(i as f64, l);
        }
    }
    f.finish()
}

/// Reads an ablation CSV back into rows.
pub fn read_table(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(Row {
                axis_value: rec[0].to_string(),
                seed: rec[1].parse()?,
                metric: rec[2].to_string(),
                value: rec[3].parse()?,
            })
        })
        .collect()
}
