//! Distribution-fidelity and coverage metrics.
//!
//! All metrics operate on feature vectors; the default [`Identity`] feature
//! map uses the latents directly.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{distance_to_circle, LabeledLatentSet, ManifoldSpec};
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, distance, norm, row_mean, squared_distance, CompensatedSum};
use crate::par::{map_range, Execution};

/// Maps latents to the feature space the metrics are computed in.
pub trait FeatureMap: Sync {
    fn embed(&self, points: ArrayView2<f64>) -> Result<Array2<f64>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl FeatureMap for Identity {
    fn embed(&self, points: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(points.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Median pairwise distance over A ∪ B, or 1 if that is zero.
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmdEstimator {
    /// V-statistic; always nonnegative.
    #[default]
    Biased,
    /// U-statistic; needs at least two points per set and can go negative
    /// before the final clamp.
    Unbiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MmdOptions {
    pub bandwidth: Bandwidth,
    pub estimator: MmdEstimator,
}

fn check_sets(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<()> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::Empty("point set"));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), got: b.ncols() });
    }
    Ok(())
}

/// Median of all pairwise distances within A ∪ B; 1 when there are no
/// pairs or the median is zero.
pub fn median_heuristic(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let rows: Vec<ArrayView1<f64>> = a.outer_iter().chain(b.outer_iter()).collect();
    let mut d = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            d.push(distance(rows[i], rows[j]));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    let n = d.len();
    let m = if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) };
    if m > 0.0 && m.is_finite() {
        m
    } else {
        1.0
    }
}

fn rbf(a: ArrayView1<f64>, b: ArrayView1<f64>, h: f64) -> f64 {
    (-squared_distance(a, b) / (2.0 * h * h)).exp()
}

/// Σ_i Σ_j k(x_i, y_j), optionally skipping i = j; rows summed in parallel
/// and combined with compensated summation.
fn kernel_sum(x: ArrayView2<f64>, y: ArrayView2<f64>, h: f64, skip_diag: bool, exec: Execution) -> f64 {
    let partial = map_range(exec, x.nrows(), |i| {
        let xi = x.row(i);
        y.outer_iter()
            .enumerate()
            .filter(|&(j, _)| !(skip_diag && i == j))
            .map(|(_, yj)| rbf(xi, yj, h))
            .collect::<CompensatedSum>()
            .total()
    });
    compensated_sum(partial)
}

/// RBF-kernel maximum mean discrepancy (the square root of MMD², clamped
/// at zero).
pub fn mmd_with(a: ArrayView2<f64>, b: ArrayView2<f64>, opts: MmdOptions, exec: Execution) -> Result<f64> {
    check_sets(a, b)?;
    // evaluate in a canonical argument order so mmd(A, B) and mmd(B, A)
    // share every floating-point operation
    let (a, b) = if canonical_order(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    let h = match opts.bandwidth {
        Bandwidth::Auto => median_heuristic(a, b),
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(Error::invalid(format!("bandwidth must be positive, got {h}"))),
    };
    let (n, m) = (a.nrows() as f64, b.nrows() as f64);
    let sq = match opts.estimator {
        MmdEstimator::Biased => {
            kernel_sum(a, a, h, false, exec) / (n * n) + kernel_sum(b, b, h, false, exec) / (m * m)
                - 2.0 * kernel_sum(a, b, h, false, exec) / (n * m)
        }
        MmdEstimator::Unbiased => {
            if a.nrows() < 2 || b.nrows() < 2 {
                return Err(Error::invalid("unbiased MMD needs at least two points per set"));
            }
            kernel_sum(a, a, h, true, exec) / (n * (n - 1.0)) + kernel_sum(b, b, h, true, exec) / (m * (m - 1.0))
                - 2.0 * kernel_sum(a, b, h, false, exec) / (n * m)
        }
    };
    Ok(sq.max(0.0).sqrt())
}

fn canonical_order(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Ordering {
    a.nrows().cmp(&b.nrows()).then_with(|| {
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

/// Biased MMD with the given bandwidth.
pub fn mmd(a: ArrayView2<f64>, b: ArrayView2<f64>, bandwidth: Bandwidth) -> Result<f64> {
    mmd_with(a, b, MmdOptions { bandwidth, estimator: MmdEstimator::Biased }, Execution::default())
}

/// Distance between the mean embeddings of A and B.
pub fn set_l2(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    check_sets(a, b)?;
    Ok(distance(row_mean(a)?.view(), row_mean(b)?.view()))
}

fn unit_rows(points: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = points.to_owned();
    for mut row in out.outer_iter_mut() {
        let n = norm(row.view());
        if n == 0.0 {
            return Err(Error::invalid("zero-norm point has no direction"));
        }
        row /= n;
    }
    Ok(out)
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&b) / (norm(a) * norm(b))
}

/// min over S of the best cosine similarity to any training point.
pub fn representativeness(s: ArrayView2<f64>, train: ArrayView2<f64>) -> Result<f64> {
    check_sets(s, train)?;
    unit_rows(s)?;
    unit_rows(train)?;
    let mut worst = f64::INFINITY;
    for si in s.outer_iter() {
        let best = train.outer_iter().map(|tj| cosine(si, tj)).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.min(best);
    }
    Ok(worst)
}

/// One minus the largest cosine similarity between distinct points of S.
pub fn diversity(s: ArrayView2<f64>) -> Result<f64> {
    if s.nrows() < 2 {
        return Err(Error::invalid("diversity needs at least two points"));
    }
    unit_rows(s)?;
    let mut max = f64::NEG_INFINITY;
    for i in 0..s.nrows() {
        for j in 0..s.nrows() {
            if i != j {
                max = max.max(cosine(s.row(i), s.row(j)));
            }
        }
    }
    Ok(1.0 - max)
}

/// Label voted by the `k` nearest points of `reference` (ties in distance
/// go to the lower index). Vote ties go to the label with the smallest mean
/// distance among its voters, then to the lowest label.
pub fn knn_predict(reference: &LabeledLatentSet, q: ArrayView1<f64>, k: usize) -> usize {
    let mut order: Vec<(f64, usize)> =
        reference.points.outer_iter().enumerate().map(|(i, p)| (squared_distance(q, p), i)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    // label -> (votes, summed distance)
    let mut tally: Vec<(usize, usize, f64)> = Vec::new();
    for &(d2, i) in order.iter().take(k) {
        let label = reference.labels[i];
        match tally.iter_mut().find(|e| e.0 == label) {
            Some(e) => {
                e.1 += 1;
                e.2 += d2.sqrt();
            }
            None => tally.push((label, 1, d2.sqrt())),
        }
    }
    tally
        .into_iter()
        .min_by(|a, b| {
            b.1.cmp(&a.1)
                .then((a.2 / a.1 as f64).partial_cmp(&(b.2 / b.1 as f64)).unwrap_or(Ordering::Equal))
                .then(a.0.cmp(&b.0))
        })
        .map(|e| e.0)
        .expect("k >= 1")
}

/// Fraction of `test` classified correctly by k-NN majority vote over `s`.
pub fn knn_accuracy(s: &LabeledLatentSet, test: &LabeledLatentSet, k: usize) -> Result<f64> {
    if s.is_empty() || test.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    if k == 0 || k > s.len() {
        return Err(Error::invalid(format!("k must lie in 1..={}, got {k}", s.len())));
    }
    if s.dim() != test.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: test.dim() });
    }
    let hits = test.points.outer_iter().zip(&test.labels).filter(|(q, &l)| knn_predict(s, q.view(), k) == l).count();
    Ok(hits as f64 / test.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub max: f64,
}

/// Summary of distance_to_circle over the rows of `s`.
pub fn manifold_distance_stats(s: ArrayView2<f64>, spec: &ManifoldSpec) -> Result<DistanceStats> {
    let ManifoldSpec::Circle { radius, .. } = spec else {
        return Err(Error::invalid("manifold distance needs an analytic circle spec"));
    };
    if s.nrows() == 0 {
        return Err(Error::Empty("point set"));
    }
    let d: Vec<f64> = s.outer_iter().map(|p| distance_to_circle(p, *radius)).collect();
    let n = d.len() as f64;
    let mean = compensated_sum(d.iter().copied()) / n;
    let var = compensated_sum(d.iter().map(|x| (x - mean).powi(2))) / n;
    let max = d.iter().copied().fold(0.0, f64::max);
    Ok(DistanceStats { mean, std: var.sqrt(), max })
}

/// The six headline numbers of a distillation run. `mean_manifold_distance`
/// is `None` when the dataset has no analytic manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mmd: f64,
    /// Distance between the two sets' mean embeddings, not a pairwise distance.
    pub set_l2: f64,
    pub representativeness: f64,
    pub diversity: f64,
    pub knn_accuracy: f64,
    pub mean_manifold_distance: Option<f64>,
}

impl MetricReport {
    /// Scores `synthetic` against held-out `test` data (MMD, ℓ2, k-NN) and
    /// the training data (Rep).
    pub fn compute(
        synthetic: &LabeledLatentSet,
        train: &LabeledLatentSet,
        test: &LabeledLatentSet,
        spec: Option<&ManifoldSpec>,
        k: usize,
        features: &dyn FeatureMap,
        exec: Execution,
    ) -> Result<Self> {
        let fs = features.embed(synthetic.points.view())?;
        let ftrain = features.embed(train.points.view())?;
        let ftest = features.embed(test.points.view())?;
        let mean_manifold_distance = match spec {
            Some(s @ ManifoldSpec::Circle { .. }) => Some(manifold_distance_stats(synthetic.points.view(), s)?.mean),
            _ => None,
        };
        let report = Self {
            mmd: mmd_with(ftest.view(), fs.view(), MmdOptions::default(), exec)?,
            set_l2: set_l2(ftest.view(), fs.view())?,
            representativeness: representativeness(fs.view(), ftrain.view())?,
            diversity: diversity(fs.view())?,
            knn_accuracy: knn_accuracy(
                &LabeledLatentSet::new(fs, synthetic.labels.clone())?,
                &LabeledLatentSet::new(ftest, test.labels.clone())?,
                k.min(synthetic.len()),
            )?,
            mean_manifold_distance,
        };
        Ok(report)
    }

    pub fn values(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("mmd", self.mmd),
            ("set_l2", self.set_l2),
            ("representativeness", self.representativeness),
            ("diversity", self.diversity),
            ("knn_accuracy", self.knn_accuracy),
        ];
        if let Some(d) = self.mean_manifold_distance {
            v.push(("mean_manifold_distance", d));
        }
        v
    }
}
