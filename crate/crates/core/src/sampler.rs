//! Guided reverse diffusion and distilled-set assembly.
//!
//! One trajectory per synthetic sample. Each trajectory is conditioned on a
//! fixed coreset centroid; at every guided step the centroid's neighborhood
//! is forward-diffused to the current noise level, a tangent frame is fit
//! around the current state, and the kernel mode guidance has its normal
//! component cancelled before the reverse update.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coreset::{
    build_class_coreset, nearest_points, radius_ball, CentroidKind, ClassCoresetParams, ClusteringMethod, IpcCoreset,
};
use crate::data::LabeledLatentSet;
use crate::error::{Error, Result};
use crate::geometry::{build_patch, knn, tangent_frame};
use crate::guidance::{
    guidance_active, kernel_sigma, lambda_at, manifold_guidance, mode_guidance, radius_at, KernelKind, RadiusSchedule,
};
use crate::linalg::{gather_rows, norm};
use crate::oracle::MixtureOracle;
use crate::par::{map_range, map_slice, Execution};
use crate::rng::{derive_seed, rng_from_seed, standard_normal, stream};
use crate::schedule::NoiseSchedule;

fn check_finite(v: ArrayView1<f64>, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Noise variance of the ancestral DDPM step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DdpmVariance {
    /// β̃_t = β_t (1 − ᾱ_{t−1}) / (1 − ᾱ_t).
    #[default]
    Posterior,
    /// β_t, the upper choice. Keeps a unit-variance target exactly stationary.
    Beta,
}

/// Ancestral DDPM update with the score↔ε identity ε = −√(1−ᾱ_t)·s:
///
/// x_{t−1} = (x_t + β_t (s + g)) / √α_t + √β̃_t ε,
///
/// with no noise at t = 1. Score and guidance share the same step size.
pub fn reverse_step_ddpm<R: Rng + ?Sized>(
    x: ArrayView1<f64>,
    t: usize,
    score: ArrayView1<f64>,
    guidance: ArrayView1<f64>,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<Array1<f64>> {
    reverse_step_ddpm_with(x, t, score, guidance, sched, DdpmVariance::Posterior, rng)
}

/// [`reverse_step_ddpm`] with a selectable noise variance.
pub fn reverse_step_ddpm_with<R: Rng + ?Sized>(
    x: ArrayView1<f64>,
    t: usize,
    score: ArrayView1<f64>,
    guidance: ArrayView1<f64>,
    sched: &NoiseSchedule,
    variance: DdpmVariance,
    rng: &mut R,
) -> Result<Array1<f64>> {
    sched.check_timestep(t)?;
    check_finite(x, "state")?;
    check_finite(score, "score")?;
    check_finite(guidance, "guidance")?;
    let beta = sched.beta(t);
    let mut next = (&x + &((&score + &guidance) * beta)) / sched.alpha(t).sqrt();
    if t > 1 {
        let var = match variance {
            DdpmVariance::Posterior => sched.posterior_variance(t),
            DdpmVariance::Beta => beta,
        };
        let eps = standard_normal(rng, x.len());
        next.scaled_add(var.sqrt(), &eps);
    }
    check_finite(next.view(), "state")?;
    Ok(next)
}

/// Deterministic DDIM (η = 0) update driven by the guided score:
/// ε̂ = −√(1−ᾱ_t)(s + g), x̂₀ = (x_t − √(1−ᾱ_t) ε̂)/√ᾱ_t,
/// x_{t−1} = √ᾱ_{t−1} x̂₀ + √(1−ᾱ_{t−1}) ε̂.
pub fn reverse_step_ddim(
    x: ArrayView1<f64>,
    t: usize,
    score: ArrayView1<f64>,
    guidance: ArrayView1<f64>,
    sched: &NoiseSchedule,
) -> Result<Array1<f64>> {
    sched.check_timestep(t)?;
    check_finite(x, "state")?;
    check_finite(score, "score")?;
    check_finite(guidance, "guidance")?;
    let ab = sched.alpha_bar(t);
    let ab_prev = sched.alpha_bar(t - 1);
    let eps = (&score + &guidance) * -(1.0 - ab).sqrt();
    let x0 = (&x - &(&eps * (1.0 - ab).sqrt())) / ab.sqrt();
    let next = x0 * ab_prev.sqrt() + eps * (1.0 - ab_prev).sqrt();
    check_finite(next.view(), "state")?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Ddpm,
    Ddim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { steps: 50, beta_start: 1e-4, beta_end: 0.2 }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::linear(self.steps, self.beta_start, self.beta_end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusConfig {
    pub schedule: RadiusSchedule,
    /// Radius at the start of the reverse process; also the static
    /// neighborhood radius recorded with the coreset.
    pub r0: f64,
    pub r_min: f64,
}

impl Default for RadiusConfig {
    fn default() -> Self {
        Self { schedule: RadiusSchedule::Exponential, r0: 1.0, r_min: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoresetConfig {
    /// Synthetic samples (and centroids) per class.
    pub ipc: usize,
    pub max_depth: usize,
    pub s_start: usize,
    #[serde(default)]
    pub method: ClusteringMethod,
    #[serde(default)]
    pub centroid: CentroidKind,
    #[serde(default)]
    pub radius: RadiusConfig,
}

impl Default for CoresetConfig {
    fn default() -> Self {
        Self {
            ipc: 10,
            max_depth: 4,
            s_start: 2,
            method: ClusteringMethod::DivisiveLevelwise,
            centroid: CentroidKind::Mean,
            radius: RadiusConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceConfig {
    pub kernel: KernelKind,
    pub lambda_man: f64,
    #[serde(default)]
    pub anneal_lambda: bool,
    /// Number of leading reverse steps that receive guidance.
    pub t_stop: usize,
    /// Neighbors used for each tangent frame (clamped to the patch size).
    pub k_t: usize,
    pub tangent_dim: usize,
    pub ridge: f64,
    /// Guide toward √ᾱ_t·c (the centroid at the current noise level)
    /// instead of the clean-space centroid c.
    #[serde(default)]
    pub align_centroid: bool,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Rbf,
            lambda_man: 1.0,
            anneal_lambda: false,
            t_stop: 25,
            k_t: 300,
            tangent_dim: 3,
            ridge: 1e-6,
            align_centroid: false,
        }
    }
}

/// Score oracle built from the training latents: an equal-weight isotropic
/// mixture centered on the points with standard deviation `bandwidth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub bandwidth: f64,
    /// Fit one oracle per class (class-conditional denoiser) instead of a
    /// single oracle over all classes.
    #[serde(default = "yes")]
    pub conditional: bool,
}

fn yes() -> bool {
    true
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { bandwidth: 0.1, conditional: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistillConfig {
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub coreset: CoresetConfig,
    #[serde(default)]
    pub guidance: GuidanceConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub ddpm_variance: DdpmVariance,
}

impl DistillConfig {
    /// Checks every field; returns the dotted path of the first bad one.
    pub fn validate(&self, dim: usize) -> std::result::Result<(), (String, String)> {
        let bad = |path: &str, msg: String| Err((path.to_string(), msg));
        if let Err(e) = self.schedule.build() {
            return bad("schedule", e.to_string());
        }
        let c = &self.coreset;
        if c.ipc == 0 {
            return bad("coreset.ipc", "must be at least 1".into());
        }
        if c.s_start > c.max_depth {
            return bad("coreset.s_start", format!("{} exceeds max_depth {}", c.s_start, c.max_depth));
        }
        if !(c.radius.r0 > 0.0) || !(c.radius.r_min > 0.0) {
            return bad("coreset.radius", "radii must be positive".into());
        }
        if c.radius.r_min > c.radius.r0 {
            return bad("coreset.radius.r_min", "must not exceed r0".into());
        }
        let g = &self.guidance;
        if !(0.0..=1.0).contains(&g.lambda_man) {
            return bad("guidance.lambda_man", format!("{} outside [0,1]", g.lambda_man));
        }
        if g.t_stop > self.schedule.steps {
            return bad("guidance.t_stop", format!("{} exceeds {} steps", g.t_stop, self.schedule.steps));
        }
        if g.tangent_dim == 0 || g.tangent_dim >= dim {
            return bad("guidance.tangent_dim", format!("must lie in 1..{dim}"));
        }
        if g.k_t < g.tangent_dim + 1 {
            return bad("guidance.k_t", format!("needs at least tangent_dim + 1 = {}", g.tangent_dim + 1));
        }
        if !(g.ridge >= 0.0) {
            return bad("guidance.ridge", "must be nonnegative".into());
        }
        if !(self.oracle.bandwidth > 0.0) {
            return bad("oracle.bandwidth", "must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Schedule timestep the update was taken at (T down to 1).
    pub t: usize,
    /// Reverse-step counter (0 for the first update).
    pub step: usize,
    /// ‖x‖ of the state returned by this update.
    pub norm_x: f64,
    pub norm_gmode: f64,
    /// ‖P_N g_mode‖ when guidance was active, else 0.
    pub norm_normal: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Global trajectory index (class-major).
    pub traj: usize,
    pub class: usize,
    pub centroid_id: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub final_point: Option<Array1<f64>>,
    /// Set when the trajectory hit a non-finite state.
    pub aborted: Option<String>,
}

/// The distilled set; rows follow trajectory order, aborted ones omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSet {
    pub points: Array2<f64>,
    pub labels: Vec<usize>,
    pub centroid_ids: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl SyntheticSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_labeled(&self) -> Result<LabeledLatentSet> {
        LabeledLatentSet::new(self.points.clone(), self.labels.clone())
    }
}

/// Per-class state shared read-only by that class's trajectories.
#[derive(Debug, Clone)]
pub struct ClassPlan {
    pub class: usize,
    pub points: Array2<f64>,
    pub coreset: IpcCoreset,
    /// Global id of this class's first coreset entry.
    pub centroid_offset: usize,
}

#[derive(Debug, Clone)]
pub struct DistillOutput {
    pub set: SyntheticSet,
    pub records: Vec<TrajectoryRecord>,
    pub plans: Vec<ClassPlan>,
    pub warnings: Vec<String>,
}

/// Builds the per-class coresets.
pub fn plan_classes(
    dataset: &LabeledLatentSet,
    cfg: &DistillConfig,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<ClassPlan>> {
    let classes = dataset.classes();
    let params = ClassCoresetParams {
        budget: cfg.coreset.ipc,
        max_depth: cfg.coreset.max_depth,
        s_start: cfg.coreset.s_start,
        radius: cfg.coreset.radius.r0,
        method: cfg.coreset.method,
        centroid: cfg.coreset.centroid,
    };
    let built = map_slice(exec, &classes, |&class| -> Result<(Array2<f64>, IpcCoreset)> {
        let pts = dataset.class_points(class);
        let mut rng = rng_from_seed(derive_seed(master_seed, &[stream::CORESET, class as u64]));
        let cs = build_class_coreset(pts.view(), &params, &mut rng)?;
        Ok((pts, cs))
    });
    let mut offset = 0;
    let mut plans = Vec::with_capacity(classes.len());
    for (class, res) in classes.into_iter().zip(built) {
        let (points, coreset) = res?;
        let n = coreset.entries.len();
        plans.push(ClassPlan { class, points, coreset, centroid_offset: offset });
        offset += n;
    }
    Ok(plans)
}

struct Job {
    traj: usize,
    plan: usize,
    index_in_class: usize,
    entry: usize,
}

struct RunContext<'a> {
    cfg: &'a DistillConfig,
    sched: NoiseSchedule,
    plans: &'a [ClassPlan],
    oracles: Vec<MixtureOracle>,
    master_seed: u64,
}

const PATCH_STREAM: u64 = 1;
const STEP_STREAM: u64 = 2;

impl RunContext<'_> {
    fn oracle_for(&self, plan: usize) -> &MixtureOracle {
        if self.oracles.len() == 1 {
            &self.oracles[0]
        } else {
            &self.oracles[plan]
        }
    }

    fn run(&self, job: &Job) -> TrajectoryRecord {
        let plan = &self.plans[job.plan];
        let seed = derive_seed(self.master_seed, &[stream::TRAJECTORY, plan.class as u64, job.index_in_class as u64]);
        let mut record = TrajectoryRecord {
            traj: job.traj,
            class: plan.class,
            centroid_id: plan.centroid_offset + job.entry,
            seed,
            steps: Vec::with_capacity(self.sched.steps()),
            final_point: None,
            aborted: None,
        };
        match self.trajectory(job.plan, job.entry, seed, &mut record.steps) {
            Ok(x) => record.final_point = Some(x),
            Err(e) => record.aborted = Some(e.to_string()),
        }
        record
    }

    fn trajectory(&self, plan_idx: usize, entry: usize, seed: u64, log: &mut Vec<StepRecord>) -> Result<Array1<f64>> {
        let plan = &self.plans[plan_idx];
        let g_cfg = &self.cfg.guidance;
        let steps = self.sched.steps();
        let centroid = plan.coreset.entries[entry].centroid.view();
        let oracle = self.oracle_for(plan_idx);
        let dim = plan.points.ncols();

        let mut x = standard_normal(&mut rng_from_seed(derive_seed(seed, &[0])), dim);
        for step in 0..steps {
            let t = steps - step;
            let step_seed = derive_seed(seed, &[t as u64]);
            let score = oracle.score(x.view(), t, &self.sched)?;
            let sigma = kernel_sigma(&self.sched, t);
            let g_mode = if g_cfg.align_centroid {
                let target = &centroid * self.sched.alpha_bar(t).sqrt();
                mode_guidance(x.view(), target.view(), g_cfg.kernel, sigma)?
            } else {
                mode_guidance(x.view(), centroid, g_cfg.kernel, sigma)?
            };
            let active = guidance_active(step, g_cfg.t_stop);

            let (guidance, norm_normal) = if active {
                let lambda = lambda_at(t, steps, g_cfg.lambda_man, g_cfg.anneal_lambda);
                let r = radius_at(
                    t,
                    self.cfg.coreset.radius.schedule,
                    self.cfg.coreset.radius.r0,
                    self.cfg.coreset.radius.r_min,
                    steps,
                );
                match self.frame_at(plan, entry, centroid, r, t, x.view(), derive_seed(step_seed, &[PATCH_STREAM]))? {
                    Some(frame) => {
                        let (_, normal) = frame.project(g_mode.view())?;
                        (manifold_guidance(g_mode.view(), &frame, lambda)?, norm(normal.view()))
                    }
                    None => (g_mode.clone(), 0.0),
                }
            } else {
                (Array1::zeros(dim), 0.0)
            };

            x = match self.cfg.sampler {
                SamplerKind::Ddpm => {
                    let mut rng = rng_from_seed(derive_seed(step_seed, &[STEP_STREAM]));
                    let v = self.cfg.ddpm_variance;
                    reverse_step_ddpm_with(x.view(), t, score.view(), guidance.view(), &self.sched, v, &mut rng)?
                }
                SamplerKind::Ddim => reverse_step_ddim(x.view(), t, score.view(), guidance.view(), &self.sched)?,
            };
            log.push(StepRecord {
                t,
                step,
                norm_x: norm(x.view()),
                norm_gmode: norm(g_mode.view()),
                norm_normal,
                active,
            });
        }
        Ok(x)
    }

    /// Tangent frame at `x` from the centroid's neighborhood at radius `r`,
    /// diffused to step `t`. The neighborhood is padded with the nearest
    /// latents so a frame of the configured dimension always has enough
    /// points; `None` when the class is too small for any frame.
    #[allow(clippy::too_many_arguments)]
    fn frame_at(
        &self,
        plan: &ClassPlan,
        entry: usize,
        centroid: ArrayView1<f64>,
        r: f64,
        t: usize,
        x: ArrayView1<f64>,
        seed: u64,
    ) -> Result<Option<crate::geometry::TangentFrame>> {
        let g_cfg = &self.cfg.guidance;
        let need = g_cfg.tangent_dim + 1;
        if plan.points.nrows() < need.max(2) {
            return Ok(None);
        }
        let (mut idx, _) = radius_ball(plan.points.view(), centroid, r);
        if idx.len() < need {
            idx = nearest_points(plan.points.view(), centroid, need);
        }
        let hood = gather_rows(plan.points.view(), &idx);
        let patch = build_patch(hood.view(), entry, t, &self.sched, &mut rng_from_seed(seed))?;
        let nn = knn(x, patch.points.view(), g_cfg.k_t)?;
        let neighbors = gather_rows(patch.points.view(), &nn);
        tangent_frame(neighbors.view(), g_cfg.tangent_dim, g_cfg.ridge).map(Some)
    }
}

/// Score oracles for the given plans: one per class when conditional,
/// otherwise a single oracle over the whole dataset.
pub fn build_oracles(
    dataset: &LabeledLatentSet,
    plans: &[ClassPlan],
    cfg: &OracleConfig,
) -> Result<Vec<MixtureOracle>> {
    if cfg.conditional {
        plans.iter().map(|p| MixtureOracle::from_points(p.points.view(), cfg.bandwidth)).collect()
    } else {
        Ok(vec![MixtureOracle::from_points(dataset.points.view(), cfg.bandwidth)?])
    }
}

/// Runs the full pipeline: per-class coresets, then `ipc` guided
/// trajectories per class, each bound round-robin to a coreset entry.
pub fn distill(
    dataset: &LabeledLatentSet,
    cfg: &DistillConfig,
    master_seed: u64,
    exec: Execution,
) -> Result<DistillOutput> {
    cfg.validate(dataset.dim()).map_err(|(path, msg)| Error::invalid(format!("{path}: {msg}")))?;
    let plans = plan_classes(dataset, cfg, master_seed, exec)?;
    let oracles = build_oracles(dataset, &plans, &cfg.oracle)?;
    let ctx = RunContext { cfg, sched: cfg.schedule.build()?, plans: &plans, oracles, master_seed };

    let mut jobs = Vec::new();
    for (p, plan) in plans.iter().enumerate() {
        for j in 0..cfg.coreset.ipc {
            jobs.push(Job { traj: jobs.len(), plan: p, index_in_class: j, entry: j % plan.coreset.entries.len() });
        }
    }
    let records = map_range(exec, jobs.len(), |i| ctx.run(&jobs[i]));

    let mut warnings: Vec<String> =
        plans.iter().flat_map(|p| p.coreset.warnings.iter().map(move |w| format!("class {}: {w}", p.class))).collect();
    let kept: Vec<&TrajectoryRecord> = records
        .iter()
        .filter(|r| match &r.aborted {
            Some(msg) => {
                warnings.push(format!("trajectory {} aborted: {msg}", r.traj));
                false
            }
            None => true,
        })
        .collect();

    let dim = dataset.dim();
    let mut points = Array2::zeros((kept.len(), dim));
    for (row, r) in kept.iter().enumerate() {
        points.row_mut(row).assign(r.final_point.as_ref().expect("kept"));
    }
    let set = SyntheticSet {
        points,
        labels: kept.iter().map(|r| r.class).collect(),
        centroid_ids: kept.iter().map(|r| r.centroid_id).collect(),
        seeds: kept.iter().map(|r| r.seed).collect(),
    };
    Ok(DistillOutput { set, records, plans, warnings })
}

/// Draws `n` unguided samples from `oracle`, starting each from N(0, I).
pub fn sample_unguided(
    oracle: &MixtureOracle,
    sched: &NoiseSchedule,
    kind: SamplerKind,
    variance: DdpmVariance,
    n: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Array2<f64>> {
    let dim = oracle.dim();
    let rows = map_range(exec, n, |i| -> Result<Array1<f64>> {
        let seed = derive_seed(master_seed, &[stream::BASELINE, i as u64]);
        let mut x = standard_normal(&mut rng_from_seed(derive_seed(seed, &[0])), dim);
        let zero = Array1::zeros(dim);
        for t in (1..=sched.steps()).rev() {
            let s = oracle.score(x.view(), t, sched)?;
            x = match kind {
                SamplerKind::Ddpm => {
                    let mut rng = rng_from_seed(derive_seed(seed, &[t as u64, STEP_STREAM]));
                    reverse_step_ddpm_with(x.view(), t, s.view(), zero.view(), sched, variance, &mut rng)?
                }
                SamplerKind::Ddim => reverse_step_ddim(x.view(), t, s.view(), zero.view(), sched)?,
            };
        }
        Ok(x)
    });
    let mut out = Array2::zeros((n, dim));
    for (i, r) in rows.into_iter().enumerate() {
        out.row_mut(i).assign(&r?);
    }
    Ok(out)
}

/// Unbiased variance of ‖x‖ across trajectories at each reverse step. The
/// last entry is the final-sample variance.
pub fn trajectory_variance(records: &[TrajectoryRecord]) -> Result<Vec<f64>> {
    if records.len() < 2 {
        return Err(Error::invalid("trajectory variance needs at least two records"));
    }
    let len = records[0].steps.len();
    if let Some(r) = records.iter().find(|r| r.steps.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: r.steps.len() });
    }
    let n = records.len() as f64;
    Ok((0..len)
        .map(|s| {
            let mean = records.iter().map(|r| r.steps[s].norm_x).sum::<f64>() / n;
            records.iter().map(|r| (r.steps[s].norm_x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect())
}

/// Convenience: the final points of the non-aborted records.
pub fn final_points(records: &[TrajectoryRecord]) -> Array2<f64> {
    let rows: Vec<ArrayView1<f64>> = records.iter().filter_map(|r| r.final_point.as_ref().map(|p| p.view())).collect();
    let dim = rows.first().map_or(0, |r| r.len());
    let mut m = Array2::zeros((rows.len(), dim));
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).assign(r);
    }
    m
}

/// Mean distance of `points` to a circle of radius `radius`.
pub fn mean_circle_distance(points: ArrayView2<f64>, radius: f64) -> f64 {
    let n = points.nrows().max(1) as f64;
    points.outer_iter().map(|p| crate::data::distance_to_circle(p, radius)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    #[test]
    fn ddpm_near_identity_for_tiny_beta() {
        let s = NoiseSchedule::linear(2, 1e-12, 1e-12).unwrap();
        let x = array![1.0, -2.0];
        let z = array![0.0, 0.0];
        let y = reverse_step_ddpm(x.view(), 1, z.view(), z.view(), &s, &mut rng_from_seed(0)).unwrap();
        assert!((&y - &x).iter().all(|d| d.abs() < 1e-11));
    }

    #[test]
    fn ddpm_is_reproducible_and_rejects_nan() {
        let s = NoiseSchedule::linear(10, 1e-4, 0.2).unwrap();
        let x = array![0.5, 0.5];
        let sc = array![0.1, -0.3];
        let a = reverse_step_ddpm(x.view(), 7, sc.view(), sc.view(), &s, &mut rng_from_seed(4)).unwrap();
        let b = reverse_step_ddpm(x.view(), 7, sc.view(), sc.view(), &s, &mut rng_from_seed(4)).unwrap();
        assert_eq!(a, b);
        let bad = array![f64::NAN, 0.0];
        assert!(matches!(
            reverse_step_ddpm(x.view(), 7, bad.view(), sc.view(), &s, &mut rng_from_seed(4)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn ddim_zero_score_rescales() {
        let s = NoiseSchedule::linear(10, 1e-4, 0.2).unwrap();
        let x = array![0.5, -1.5];
        let z = array![0.0, 0.0];
        let y = reverse_step_ddim(x.view(), 6, z.view(), z.view(), &s).unwrap();
        let k = (s.alpha_bar(5) / s.alpha_bar(6)).sqrt();
        assert!((y[0] - k * 0.5).abs() < 1e-15 && (y[1] + k * 1.5).abs() < 1e-15);
    }

    #[test]
    fn variance_examples() {
        let rec = |norms: &[f64]| TrajectoryRecord {
            traj: 0,
            class: 0,
            centroid_id: 0,
            seed: 0,
            steps: norms
                .iter()
                .enumerate()
                .map(|(i, &n)| StepRecord {
                    t: norms.len() - i,
                    step: i,
                    norm_x: n,
                    norm_gmode: 0.0,
                    norm_normal: 0.0,
                    active: false,
                })
                .collect(),
            final_point: None,
            aborted: None,
        };
        let v = trajectory_variance(&[rec(&[5.0, 1.0]), rec(&[5.0, 3.0])]).unwrap();
        assert_eq!(v, vec![0.0, 2.0]);
        assert!(trajectory_variance(&[rec(&[1.0])]).is_err());
    }

    #[test]
    fn config_validation_paths() {
        let mut cfg = DistillConfig::default();
        cfg.guidance.tangent_dim = 1;
        assert!(cfg.validate(2).is_ok());
        cfg.guidance.lambda_man = 2.0;
        assert_eq!(cfg.validate(2).unwrap_err().0, "guidance.lambda_man");
        cfg.guidance.lambda_man = 1.0;
        cfg.guidance.tangent_dim = 2;
        assert_eq!(cfg.validate(2).unwrap_err().0, "guidance.tangent_dim");
        cfg.guidance.tangent_dim = 1;
        cfg.coreset.s_start = 9;
        assert_eq!(cfg.validate(2).unwrap_err().0, "coreset.s_start");
    }
}
