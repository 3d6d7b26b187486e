//! Labeled synthetic latent point clouds with known manifold structure.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points (one per row) with a class id per point. Class ids are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLatentSet {
    pub points: Array2<f64>,
    pub labels: Vec<usize>,
}

impl LabeledLatentSet {
    pub fn new(points: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::Empty("latent set"));
        }
        if labels.len() != points.nrows() {
            return Err(Error::DimensionMismatch { expected: points.nrows(), got: labels.len() });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent points"));
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Sorted distinct class ids.
    pub fn classes(&self) -> Vec<usize> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Row indices belonging to `class`.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == class).map(|(i, _)| i).collect()
    }

    pub fn class_points(&self, class: usize) -> Array2<f64> {
        crate::linalg::gather_rows(self.points.view(), &self.class_indices(class))
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            points: crate::linalg::gather_rows(self.points.view(), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// One class of the blob benchmark: an equal-weight mixture of isotropic
/// Gaussians sharing a standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobClass {
    pub means: Vec<Vec<f64>>,
    pub std: f64,
}

/// Generative description of a synthetic latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    /// Circle of radius `radius` in the first two coordinates; each mode is a
    /// Gaussian in angle around its center. Extra coordinates (when
    /// `dim > 2`) carry zero-mean Gaussian padding of scale `padding_std`.
    Circle {
        radius: f64,
        mode_angles: Vec<f64>,
        angular_spread: f64,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        padding_std: f64,
    },
    Blobs {
        classes: Vec<BlobClass>,
    },
}

fn default_dim() -> usize {
    2
}

impl ManifoldSpec {
    /// Evenly spaced circle modes starting at angle 0.
    pub fn circle(radius: f64, modes: usize, angular_spread: f64) -> Self {
        let step = std::f64::consts::TAU / modes.max(1) as f64;
        ManifoldSpec::Circle {
            radius,
            mode_angles: (0..modes).map(|k| k as f64 * step).collect(),
            angular_spread,
            dim: 2,
            padding_std: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::Circle { dim, .. } => *dim,
            ManifoldSpec::Blobs { classes } => classes.first().and_then(|c| c.means.first()).map_or(0, |m| m.len()),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            ManifoldSpec::Circle { mode_angles, .. } => mode_angles.len(),
            ManifoldSpec::Blobs { classes } => classes.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldSpec::Circle { radius, mode_angles, angular_spread, dim, padding_std } => {
                if !(*radius > 0.0) {
                    return Err(Error::invalid("circle radius must be positive"));
                }
                if mode_angles.is_empty() {
                    return Err(Error::Empty("circle modes"));
                }
                if !(*angular_spread >= 0.0) || !(*padding_std >= 0.0) {
                    return Err(Error::invalid("spreads must be nonnegative"));
                }
                if *dim < 2 {
                    return Err(Error::invalid("circle needs dim >= 2"));
                }
            }
            ManifoldSpec::Blobs { classes } => {
                if classes.is_empty() {
                    return Err(Error::Empty("blob classes"));
                }
                let d = self.dim();
                if d < 2 {
                    return Err(Error::invalid("blobs need dim >= 2"));
                }
                for c in classes {
                    if c.means.is_empty() {
                        return Err(Error::Empty("blob class components"));
                    }
                    if !(c.std >= 0.0) {
                        return Err(Error::invalid("blob std must be nonnegative"));
                    }
                    if let Some(m) = c.means.iter().find(|m| m.len() != d) {
                        return Err(Error::DimensionMismatch { expected: d, got: m.len() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Dispatches to the sampler for this kind. `noise` only applies to circles.
    pub fn sample<R: Rng + ?Sized>(&self, n_per_class: usize, noise: f64, rng: &mut R) -> Result<LabeledLatentSet> {
        match self {
            ManifoldSpec::Circle { .. } => sample_circle_mixture(self, n_per_class, noise, rng),
            ManifoldSpec::Blobs { .. } => sample_blobs(self, n_per_class, rng),
        }
    }
}

/// Samples `n_per_mode` points per circle mode: angle θ ~ N(center, spread²),
/// radius R + noise·g, label = mode index.
pub fn sample_circle_mixture<R: Rng + ?Sized>(
    spec: &ManifoldSpec,
    n_per_mode: usize,
    noise: f64,
    rng: &mut R,
) -> Result<LabeledLatentSet> {
    let ManifoldSpec::Circle { radius, mode_angles, angular_spread, dim, padding_std } = spec else {
        return Err(Error::invalid("expected a circle manifold spec"));
    };
    spec.validate()?;
    if n_per_mode == 0 {
        return Err(Error::invalid("n_per_mode must be positive"));
    }
    if !(noise >= 0.0) {
        return Err(Error::invalid("noise must be nonnegative"));
    }
    let n = n_per_mode * mode_angles.len();
    let mut points = Array2::zeros((n, *dim));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (k, center) in mode_angles.iter().enumerate() {
        for _ in 0..n_per_mode {
            let theta = center + angular_spread * rng.sample::<f64, _>(StandardNormal);
            let r = radius + noise * rng.sample::<f64, _>(StandardNormal);
            points[[row, 0]] = r * theta.cos();
            points[[row, 1]] = r * theta.sin();
            for j in 2..*dim {
                points[[row, j]] = padding_std * rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(k);
            row += 1;
        }
    }
    LabeledLatentSet::new(points, labels)
}

/// Samples `n_per_class` points per blob class; components are drawn
/// round-robin so every component receives ⌊n/m⌋ or ⌈n/m⌉ points.
pub fn sample_blobs<R: Rng + ?Sized>(spec: &ManifoldSpec, n_per_class: usize, rng: &mut R) -> Result<LabeledLatentSet> {
    let ManifoldSpec::Blobs { classes } = spec else {
        return Err(Error::invalid("expected a blobs manifold spec"));
    };
    spec.validate()?;
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be positive"));
    }
    let d = spec.dim();
    let n = n_per_class * classes.len();
    let mut points = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (label, class) in classes.iter().enumerate() {
        for i in 0..n_per_class {
            let mean = &class.means[i % class.means.len()];
            for j in 0..d {
                points[[row, j]] = mean[j] + class.std * rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(label);
            row += 1;
        }
    }
    LabeledLatentSet::new(points, labels)
}

/// Euclidean distance from x to the radius-R circle in the first two
/// coordinates; reduces to |‖x‖₂ − R| in the plane.
pub fn distance_to_circle(x: ArrayView1<f64>, radius: f64) -> f64 {
    let planar = (x[0].hypot(x[1]) - radius).abs();
    let off: f64 = x.iter().skip(2).map(|v| v * v).sum();
    (planar * planar + off).sqrt()
}

/// Unit tangent (−x₂, x₁)/‖(x₁, x₂)‖ of the circle through x, padded with
/// zeros in any extra coordinates.
pub fn circle_tangent(x: ArrayView1<f64>) -> Array1<f64> {
    let r = x[0].hypot(x[1]);
    let mut t = Array1::zeros(x.len());
    if r > 0.0 {
        t[0] = -x[1] / r;
        t[1] = x[0] / r;
    }
    t
}

/// Stacks rows into a matrix; all rows must share a length.
pub fn points_from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    let mut m = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: r.len() });
        }
        m.row_mut(i).assign(&ArrayView1::from(r.as_slice()));
    }
    Ok(m)
}
