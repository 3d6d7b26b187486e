//! Time-aligned noisy manifold patches and local tangent frames.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, symmetric_eigen};
use crate::rng::standard_normal;
use crate::schedule::NoiseSchedule;

/// A neighborhood forward-diffused to timestep `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPatch {
    pub points: Array2<f64>,
    pub entry: usize,
    pub t: usize,
}

/// Maps every neighbor z_k to √ᾱ_t z_k + √(1 − ᾱ_t) g_k with independent
/// standard normal g_k, drawn row by row from `rng`.
pub fn build_patch<R: Rng + ?Sized>(
    neighborhood: ArrayView2<f64>,
    entry: usize,
    t: usize,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<ManifoldPatch> {
    sched.check_timestep(t)?;
    if neighborhood.nrows() == 0 {
        return Err(Error::Empty("neighborhood"));
    }
    let ab = sched.alpha_bar(t);
    let (scale, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut points = &neighborhood * scale;
    for mut row in points.outer_iter_mut() {
        let g = standard_normal(rng, row.len());
        row.scaled_add(noise, &g);
    }
    Ok(ManifoldPatch { points, entry, t })
}

/// Exact k nearest rows of `points` to `x` (Euclidean), nearest first, ties
/// to the lower index. `k` is clamped to the number of rows.
pub fn knn(x: ArrayView1<f64>, points: ArrayView2<f64>, k: usize) -> Result<Vec<usize>> {
    if points.nrows() == 0 {
        return Err(Error::Empty("patch"));
    }
    if points.ncols() != x.len() {
        return Err(Error::DimensionMismatch { expected: points.ncols(), got: x.len() });
    }
    let k = k.min(points.nrows());
    let mut keyed: Vec<(f64, usize)> = points.outer_iter().map(|p| squared_distance(p, x)).zip(0..).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k > 0 && k < keyed.len() {
        keyed.select_nth_unstable_by(k - 1, cmp);
        keyed.truncate(k);
    }
    keyed.sort_by(cmp);
    keyed.truncate(k);
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Local mean plus the leading `d` eigenvectors of the ridge-regularized
/// neighbor covariance. The columns of `basis` are orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub mean: Array1<f64>,
    /// D × d, columns are tangent directions.
    pub basis: Array2<f64>,
    /// Leading d eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Remaining D − d eigenvalues, descending.
    pub normal_eigenvalues: Vec<f64>,
    pub ridge: f64,
}

impl TangentFrame {
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn tangent_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// P_T = U Uᵀ.
    pub fn tangent_projector(&self) -> Array2<f64> {
        self.basis.dot(&self.basis.t())
    }

    /// P_N = I − U Uᵀ.
    pub fn normal_projector(&self) -> Array2<f64> {
        Array2::eye(self.ambient_dim()) - self.tangent_projector()
    }

    /// Splits `v` into U(Uᵀv) and the remainder v − U(Uᵀv).
    pub fn project(&self, v: ArrayView1<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
        if v.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: v.len() });
        }
        let coeffs = self.basis.t().dot(&v);
        let tangential = self.basis.dot(&coeffs);
        let normal = &v - &tangential;
        Ok((tangential, normal))
    }
}

/// Frame from `neighbors` (rows): C = (1/K) Σ (x − x̄)(x − x̄)ᵀ + γI,
/// eigenvectors sign-normalized so their largest-magnitude entry is
/// positive. Eigenvalues are floored at γ.
pub fn tangent_frame(neighbors: ArrayView2<f64>, d: usize, gamma: f64) -> Result<TangentFrame> {
    let (k, dim) = neighbors.dim();
    if k < 2 {
        return Err(Error::invalid(format!("tangent frame needs at least 2 neighbors, got {k}")));
    }
    if d == 0 || d >= dim {
        return Err(Error::invalid(format!("tangent dimension {d} must lie in 1..{dim}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid("ridge must be nonnegative"));
    }
    let mean = neighbors.mean_axis(Axis(0)).expect("k >= 2");
    let centered = &neighbors - &mean;
    let mut cov = centered.t().dot(&centered) / k as f64;
    cov.diag_mut().mapv_inplace(|v| v + gamma);

    let eig = symmetric_eigen(cov.view())?;
    let floor = |v: f64| v.max(gamma);
    Ok(TangentFrame {
        mean,
        basis: eig.vectors.slice(s![.., ..d]).to_owned(),
        eigenvalues: eig.values[..d].iter().copied().map(floor).collect(),
        normal_eigenvalues: eig.values[d..].iter().copied().map(floor).collect(),
        ridge: gamma,
    })
}

/// Free-function form of [`TangentFrame::project`].
pub fn project(v: ArrayView1<f64>, frame: &TangentFrame) -> Result<(Array1<f64>, Array1<f64>)> {
    frame.project(v)
}
