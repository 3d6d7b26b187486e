//! Linear DDPM noise schedule and the forward noising map.

use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::standard_normal;

/// Per-timestep β_t, α_t = 1 − β_t and ᾱ_t = ∏_{u≤t} α_u.
///
/// Timesteps are 1-based: `t = 1` is the last reverse step and `t = steps()`
/// the pure-noise end. `alpha_bar(0)` is defined as 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// β_t linearly interpolated from `beta_start` to `beta_end`, both inclusive.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("schedule needs at least one step"));
        }
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !in_unit(beta_start) || !in_unit(beta_end) {
            return Err(Error::invalid(format!("beta endpoints must lie in (0,1), got {beta_start} and {beta_end}")));
        }
        if beta_start > beta_end {
            return Err(Error::invalid("beta_start must not exceed beta_end"));
        }
        let betas: Vec<f64> = if steps == 1 {
            vec![beta_start]
        } else {
            let span = (steps - 1) as f64;
            (0..steps).map(|i| beta_start + (beta_end - beta_start) * i as f64 / span).collect()
        };
        Ok(Self::from_betas(betas))
    }

    fn from_betas(betas: Vec<f64>) -> Self {
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Self { betas, alphas, alpha_bars }
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn check_timestep(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            Err(Error::TimestepOutOfRange { t, max: self.steps() })
        } else {
            Ok(())
        }
    }

    /// Panics unless `1 <= t <= steps()`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// Panics unless `1 <= t <= steps()`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// ᾱ_t, with ᾱ_0 = 1. Panics if `t > steps()`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Noise scale √(1 − ᾱ_t) of the forward marginal.
    pub fn noise_std(&self, t: usize) -> f64 {
        (1.0 - self.alpha_bar(t)).sqrt()
    }

    /// Ancestral variance β̃_t = β_t (1 − ᾱ_{t−1}) / (1 − ᾱ_t).
    pub fn posterior_variance(&self, t: usize) -> f64 {
        self.beta(t) * (1.0 - self.alpha_bar(t - 1)) / (1.0 - self.alpha_bar(t))
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}

/// Draws x_t = √ᾱ_t z + √(1 − ᾱ_t) g with g ~ N(0, I).
pub fn forward_diffuse<R: Rng + ?Sized>(
    z: ArrayView1<f64>,
    t: usize,
    sched: &NoiseSchedule,
    rng: &mut R,
) -> Result<Array1<f64>> {
    sched.check_timestep(t)?;
    let ab = sched.alpha_bar(t);
    let g = standard_normal(rng, z.len());
    Ok(&z * ab.sqrt() + &(g * (1.0 - ab).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    #[test]
    fn single_step_schedule() {
        let s = NoiseSchedule::linear(1, 0.1, 0.1).unwrap();
        assert_eq!(s.betas(), &[0.1]);
        assert!((s.alpha_bar(1) - 0.9).abs() < 1e-15);
        assert_eq!(s.alpha_bar(0), 1.0);
    }

    #[test]
    fn two_step_hand_product() {
        let s = NoiseSchedule::linear(2, 0.1, 0.3).unwrap();
        assert!((s.alpha_bar(1) - 0.9).abs() < 1e-15);
        assert!((s.alpha_bar(2) - 0.63).abs() < 1e-15);
    }

    #[test]
    fn fifty_steps_match_log_sum_product() {
        let s = NoiseSchedule::linear(50, 1e-4, 0.2).unwrap();
        // independent route: exp of a sum of logs over freshly computed betas
        let log_sum: f64 = (0..50).map(|i| (1.0 - (1e-4 + (0.2 - 1e-4) * i as f64 / 49.0)).ln()).sum();
        assert!((s.alpha_bar(50) - log_sum.exp()).abs() < 1e-12);
    }

    #[test]
    fn monotone_and_decreasing() {
        let s = NoiseSchedule::linear(50, 1e-4, 0.2).unwrap();
        assert!(s.betas().windows(2).all(|w| w[0] <= w[1]));
        assert!(s.alpha_bars().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(NoiseSchedule::linear(0, 0.1, 0.2).is_err());
        assert!(NoiseSchedule::linear(5, 0.0, 0.2).is_err());
        assert!(NoiseSchedule::linear(5, 0.1, 1.0).is_err());
        assert!(NoiseSchedule::linear(5, 0.3, 0.2).is_err());
    }

    #[test]
    fn forward_diffuse_range_and_determinism() {
        let s = NoiseSchedule::linear(10, 1e-4, 0.2).unwrap();
        let z = array![0.3, -1.2];
        assert!(forward_diffuse(z.view(), 0, &s, &mut rng_from_seed(1)).is_err());
        assert!(forward_diffuse(z.view(), 11, &s, &mut rng_from_seed(1)).is_err());
        let a = forward_diffuse(z.view(), 4, &s, &mut rng_from_seed(9)).unwrap();
        let b = forward_diffuse(z.view(), 4, &s, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }
}
