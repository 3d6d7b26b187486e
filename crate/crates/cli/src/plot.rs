//! `mgd plot`: SVG figures from a finished run directory.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mgd_core::coreset::{centroid_matrix, convex_hull};
use mgd_core::io::{norm_series, read_labeled_csv, read_trajectory_csv};
use mgd_core::sampler::plan_classes;
use mgd_core::Execution;

use crate::config::ExperimentConfig;
use crate::run::{write_atomic, RESOLVED_CONFIG, SYNTHETIC_CSV, TRAJECTORY_CSV};
use crate::svg::{bounds, color, Frame};

pub const TRAJECTORY_SVG: &str = "trajectories.svg";
pub const SCATTER_SVG: &str = "scatter.svg";

#[derive(Debug, Default)]
pub struct PlotOutput {
    pub files: Vec<PathBuf>,
    pub notices: Vec<String>,
}

pub fn export_plots(dir: &Path, exec: Execution) -> Result<PlotOutput> {
    let missing: Vec<&str> =
        [TRAJECTORY_CSV, RESOLVED_CONFIG, SYNTHETIC_CSV].into_iter().filter(|n| !dir.join(n).is_file()).collect();
    if !missing.is_empty() {
        bail!("missing run artifacts in {}: {}", dir.display(), missing.join(", "));
    }
    let mut out = PlotOutput::default();

    let traj_path = dir.join(TRAJECTORY_CSV);
    let rows = read_trajectory_csv(BufReader::new(File::open(&traj_path)?))
        .with_context(|| format!("reading {}", traj_path.display()))?;
    if rows.is_empty() {
        bail!("{} contains no trajectory rows", traj_path.display());
    }
    let path = dir.join(TRAJECTORY_SVG);
    let svg = trajectory_svg(&norm_series(&rows));
    write_atomic(&path, |w| Ok(w.write_all(svg.as_bytes())?))?;
    out.files.push(path);

    let cfg_path = dir.join(RESOLVED_CONFIG);
    let text = std::fs::read_to_string(&cfg_path)?;
    let cfg = ExperimentConfig::from_json(&text).with_context(|| format!("in {}", cfg_path.display()))?;
    let dim = cfg.dataset.spec.dim();
    if dim != 2 {
        out.notices.push(format!("scatter plot skipped: latent dimension is {dim}, not 2"));
        return Ok(out);
    }
    let synth_path = dir.join(SYNTHETIC_CSV);
    let synthetic = read_labeled_csv(BufReader::new(File::open(&synth_path)?))
        .with_context(|| format!("reading {}", synth_path.display()))?;
    let path = dir.join(SCATTER_SVG);
    let svg = scatter_svg(&cfg, &synthetic, exec)?;
    write_atomic(&path, |w| Ok(w.write_all(svg.as_bytes())?))?;
    out.files.push(path);
    Ok(out)
}

/// ‖x_t‖ per trajectory against the reverse step, with the across-trajectory
/// mean ± one standard deviation drawn over it.
fn trajectory_svg(series: &[(usize, Vec<f64>)]) -> String {
    let len = series.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    let y = bounds(series.iter().flat_map(|(_, s)| s.iter().copied()));
    let mut f = Frame::new("trajectory norms", "reverse step", "||x||", (0.0, len.saturating_sub(1) as f64), y);
    for (_, s) in series {
        let pts: Vec<(f64, f64)> = s.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        f.polyline(&pts, "#7f7f7f", 0.8, 0.35);
    }
    let mut upper = Vec::with_capacity(len);
    let mut lower = Vec::with_capacity(len);
    let mut mean_line = Vec::with_capacity(len);
    for step in 0..len {
        let v: Vec<f64> = series.iter().filter_map(|(_, s)| s.get(step).copied()).collect();
        let s = crate::run::summarize(&v);
        mean_line.push((step as f64, s.mean));
        upper.push((step as f64, s.mean + s.std));
        lower.push((step as f64, s.mean - s.std));
    }
    let band: Vec<(f64, f64)> = upper.iter().copied().chain(lower.iter().rev().copied()).collect();
    f.polygon(&band, color(1), 0.2);
    f.polyline(&mean_line, color(0), 2.5, 1.0);
    f.legend(&[("trajectory", "#7f7f7f"), ("mean", color(0)), ("mean ± std", color(1))]);
    f.finish()
}

/// Training latents by class, each class's coreset centroids with their
/// convex hull, and the distilled points on top.
fn scatter_svg(
    cfg: &ExperimentConfig,
    synthetic: &mgd_core::data::LabeledLatentSet,
    exec: Execution,
) -> Result<String> {
    let seed = cfg.seeds.master;
    let (train, _) = cfg.sample_data(seed)?;
    let plans = plan_classes(&train, &cfg.distill_config(), seed, exec)?;

    let xs = train.points.column(0).iter().chain(synthetic.points.column(0).iter()).copied().collect::<Vec<_>>();
    let ys = train.points.column(1).iter().chain(synthetic.points.column(1).iter()).copied().collect::<Vec<_>>();
    let mut f = Frame::equal_aspect("latents, centroids and distilled set", bounds(xs), bounds(ys));
    for (p, &l) in train.points.outer_iter().zip(&train.labels) {
        f.circle(p[0], p[1], 1.8, color(l), 0.3);
    }
    let mut legend = Vec::new();
    for plan in &plans {
        let c = centroid_matrix(&plan.coreset);
        let pts: Vec<[f64; 2]> = c.outer_iter().map(|r| [r[0], r[1]]).collect();
        let hull: Vec<(f64, f64)> = convex_hull(&pts).into_iter().map(|[a, b]| (a, b)).collect();
        f.polygon(&hull, color(plan.class), 0.12);
        for q in &pts {
            f.marker_cross(q[0], q[1], 4.0, color(plan.class));
        }
        legend.push(format!("class {}", plan.class));
    }
    for (p, &l) in synthetic.points.outer_iter().zip(&synthetic.labels) {
        f.circle(p[0], p[1], 4.5, "#000", 0.9);
        f.circle(p[0], p[1], 3.0, color(l), 1.0);
    }
    let entries: Vec<(&str, &str)> = legend.iter().zip(&plans).map(|(s, p)| (s.as_str(), color(p.class))).collect();
    f.legend(&entries);
    Ok(f.finish())
}
