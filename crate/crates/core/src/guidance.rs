//! Kernel mode guidance, normal-component cancellation, and the radius,
//! weight, and stop schedules that drive them.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TangentFrame;
use crate::schedule::NoiseSchedule;

/// Below this distance to the centroid every kernel returns zero guidance.
pub const ZERO_DISTANCE_GUARD: f64 = 1e-9;

/// Kernel affinity k(x, c) = exp(−φ(‖x − c‖)) with scale σ_t:
///
/// | kind      | φ(r)                 | φ′(r)                          |
/// |-----------|----------------------|--------------------------------|
/// | `rbf`     | r² / 2σ²             | r / σ²                         |
/// | `laplace` | r / σ                | 1 / σ                          |
/// | `imq`     | log(1 + r² / 2σ²)    | (r / σ²) / (1 + r² / 2σ²)      |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Rbf,
    Laplace,
    Imq,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Rbf, KernelKind::Laplace, KernelKind::Imq];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Rbf => "rbf",
            KernelKind::Laplace => "laplace",
            KernelKind::Imq => "imq",
        }
    }

    pub fn potential(self, r: f64, sigma: f64) -> f64 {
        let s2 = sigma * sigma;
        match self {
            KernelKind::Rbf => r * r / (2.0 * s2),
            KernelKind::Laplace => r / sigma,
            KernelKind::Imq => (r * r / (2.0 * s2)).ln_1p(),
        }
    }

    pub fn potential_derivative(self, r: f64, sigma: f64) -> f64 {
        let s2 = sigma * sigma;
        match self {
            KernelKind::Rbf => r / s2,
            KernelKind::Laplace => 1.0 / sigma,
            KernelKind::Imq => (r / s2) / (1.0 + r * r / (2.0 * s2)),
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown kernel {s:?}")))
    }
}

/// log k(x, c) = −φ(‖x − c‖).
pub fn log_affinity(x: ArrayView1<f64>, c: ArrayView1<f64>, kernel: KernelKind, sigma: f64) -> f64 {
    -kernel.potential(crate::linalg::distance(x, c), sigma)
}

/// g = −φ′(‖x − c‖) (x − c) / ‖x − c‖, the gradient of log k(x, c).
pub fn mode_guidance(x: ArrayView1<f64>, c: ArrayView1<f64>, kernel: KernelKind, sigma_t: f64) -> Result<Array1<f64>> {
    if x.len() != c.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: c.len() });
    }
    if !(sigma_t > 0.0) || !sigma_t.is_finite() {
        return Err(Error::invalid(format!("kernel scale must be positive, got {sigma_t}")));
    }
    if x.iter().chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("guidance inputs"));
    }
    let diff = &x - &c;
    let r = crate::linalg::norm(diff.view());
    if r < ZERO_DISTANCE_GUARD {
        return Ok(Array1::zeros(x.len()));
    }
    Ok(diff * (-kernel.potential_derivative(r, sigma_t) / r))
}

/// g − λ P_N g. λ = 1 keeps only the tangential part, λ = 0 returns g.
pub fn manifold_guidance(g_mode: ArrayView1<f64>, frame: &TangentFrame, lambda: f64) -> Result<Array1<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda must lie in [0,1], got {lambda}")));
    }
    let (_, normal) = frame.project(g_mode)?;
    Ok(&g_mode - &(normal * lambda))
}

/// Kernel scale tied to the forward noise level, σ_t = √(1 − ᾱ_t).
pub fn kernel_sigma(sched: &NoiseSchedule, t: usize) -> f64 {
    sched.noise_std(t)
}

/// Decay shape for the neighborhood radius over the reverse process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusSchedule {
    #[default]
    Exponential,
    Cosine,
    Linear,
}

impl RadiusSchedule {
    pub const ALL: [RadiusSchedule; 3] = [RadiusSchedule::Exponential, RadiusSchedule::Cosine, RadiusSchedule::Linear];

    pub fn name(self) -> &'static str {
        match self {
            RadiusSchedule::Exponential => "exponential",
            RadiusSchedule::Cosine => "cosine",
            RadiusSchedule::Linear => "linear",
        }
    }
}

impl std::str::FromStr for RadiusSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RadiusSchedule::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown radius schedule {s:?}")))
    }
}

/// Rate of the exponential radius decay.
pub const EXPONENTIAL_DECAY_RATE: f64 = 5.0;

/// Neighborhood radius at timestep t, decaying from `r0` at t = T to
/// `r_min` at t = 1 (exactly for linear and cosine; the exponential form
/// r_min + (r0 − r_min) e^{−5(T−t)/T} gets within 1% of the gap).
pub fn radius_at(t: usize, kind: RadiusSchedule, r0: f64, r_min: f64, steps: usize) -> f64 {
    if steps <= 1 || t >= steps {
        return r0;
    }
    let t = t.max(1);
    let gap = r0 - r_min;
    let progress = (steps - t) as f64 / (steps - 1) as f64;
    match kind {
        RadiusSchedule::Linear => r0 - gap * progress,
        RadiusSchedule::Cosine => r_min + gap * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()),
        RadiusSchedule::Exponential => {
            r_min + gap * (-EXPONENTIAL_DECAY_RATE * (steps - t) as f64 / steps as f64).exp()
        }
    }
}

/// Guidance runs for the first `t_stop` reverse steps only.
pub fn guidance_active(steps_done: usize, t_stop: usize) -> bool {
    steps_done < t_stop
}

/// Normal-cancellation weight at timestep t. Without annealing this is
/// `lambda0`; with it, a linear ramp from `lambda0` at t = T to 1 at t = 1.
pub fn lambda_at(t: usize, steps: usize, lambda0: f64, anneal: bool) -> f64 {
    if !anneal || steps <= 1 {
        return lambda0;
    }
    let progress = (steps - t.clamp(1, steps)) as f64 / (steps - 1) as f64;
    lambda0 + (1.0 - lambda0) * progress
}
