//! Analytic score of a noised isotropic Gaussian mixture.
//!
//! Under the forward process a mixture Σ w_k N(μ_k, σ²I) becomes, at step t,
//! Σ w_k N(√ᾱ_t μ_k, v_t I) with v_t = ᾱ_t σ² + 1 − ᾱ_t, so its score is
//! available in closed form. It stands in for a trained denoiser.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::schedule::NoiseSchedule;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureOracle {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    means: Array2<f64>,
    component_var: f64,
}

impl MixtureOracle {
    pub fn new(weights: Vec<f64>, means: Array2<f64>, component_var: f64) -> Result<Self> {
        if means.nrows() == 0 {
            return Err(Error::Empty("mixture components"));
        }
        if weights.len() != means.nrows() {
            return Err(Error::DimensionMismatch { expected: means.nrows(), got: weights.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        if !(component_var > 0.0) || !component_var.is_finite() {
            return Err(Error::invalid("component variance must be positive"));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("mixture means"));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self { weights, log_weights, means, component_var })
    }

    /// Equal-weight mixture with one component per row of `means`.
    pub fn uniform(means: Array2<f64>, component_var: f64) -> Result<Self> {
        let n = means.nrows();
        Self::new(vec![1.0 / n.max(1) as f64; n], means, component_var)
    }

    pub fn single(mean: ArrayView1<f64>, component_var: f64) -> Result<Self> {
        let means = mean.to_owned().insert_axis(Axis(0));
        Self::new(vec![1.0], means, component_var)
    }

    /// Builds an equal-weight mixture centered on the given points.
    pub fn from_points(points: ArrayView2<f64>, bandwidth: f64) -> Result<Self> {
        Self::uniform(points.to_owned(), bandwidth * bandwidth)
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> ArrayView2<'_, f64> {
        self.means.view()
    }

    pub fn component_var(&self) -> f64 {
        self.component_var
    }

    /// v_t = ᾱ_t σ² + 1 − ᾱ_t.
    pub fn marginal_variance(&self, alpha_bar: f64) -> f64 {
        alpha_bar * self.component_var + 1.0 - alpha_bar
    }

    fn check(&self, x: ArrayView1<f64>, t: usize, sched: &NoiseSchedule) -> Result<()> {
        sched.check_timestep(t)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("score query point"));
        }
        Ok(())
    }

    /// Per-component log terms log w_k + log N(x; √ᾱ μ_k, v I), without the
    /// shared normalizing constant.
    fn component_logits(&self, x: ArrayView1<f64>, sqrt_ab: f64, v: f64) -> Vec<f64> {
        self.means
            .outer_iter()
            .zip(&self.log_weights)
            .map(|(mu, lw)| {
                let d2: f64 = x.iter().zip(mu.iter()).map(|(xi, mi)| (xi - sqrt_ab * mi).powi(2)).sum();
                lw - d2 / (2.0 * v)
            })
            .collect()
    }

    /// log p_t(x) for the noised mixture.
    pub fn log_density(&self, x: ArrayView1<f64>, t: usize, sched: &NoiseSchedule) -> Result<f64> {
        self.check(x, t, sched)?;
        let ab = sched.alpha_bar(t);
        let v = self.marginal_variance(ab);
        let logits = self.component_logits(x, ab.sqrt(), v);
        let norm = -0.5 * self.dim() as f64 * (2.0 * std::f64::consts::PI * v).ln();
        Ok(log_sum_exp(&logits) + norm)
    }

    /// ∇_x log p_t(x) = Σ_k r_k(x) (√ᾱ_t μ_k − x) / v_t, responsibilities
    /// r_k computed with log-sum-exp.
    pub fn score(&self, x: ArrayView1<f64>, t: usize, sched: &NoiseSchedule) -> Result<Array1<f64>> {
        self.check(x, t, sched)?;
        let ab = sched.alpha_bar(t);
        let sqrt_ab = ab.sqrt();
        let v = self.marginal_variance(ab);
        let logits = self.component_logits(x, sqrt_ab, v);
        let lse = log_sum_exp(&logits);

        let mut mean = Array1::<f64>::zeros(self.dim());
        for (mu, l) in self.means.outer_iter().zip(&logits) {
            let r = (l - lse).exp();
            if r > 0.0 {
                mean.scaled_add(r * sqrt_ab, &mu);
            }
        }
        Ok((mean - x) / v)
    }
}

/// Free-function form of [`MixtureOracle::score`].
pub fn mixture_score(
    x: ArrayView1<f64>,
    t: usize,
    oracle: &MixtureOracle,
    sched: &NoiseSchedule,
) -> Result<Array1<f64>> {
    oracle.score(x, t, sched)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sched() -> NoiseSchedule {
        NoiseSchedule::linear(50, 1e-4, 0.2).unwrap()
    }

    #[test]
    fn score_vanishes_at_scaled_mode() {
        let s = sched();
        let mu = array![1.5, -0.5];
        let o = MixtureOracle::single(mu.view(), 0.3).unwrap();
        let x = &mu * s.alpha_bar(20).sqrt();
        let g = o.score(x.view(), 20, &s).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn single_component_is_gaussian_score() {
        let s = sched();
        let mu = array![1.0, 2.0];
        let o = MixtureOracle::single(mu.view(), 0.25).unwrap();
        let x = array![0.3, -0.7];
        let t = 13;
        let ab = s.alpha_bar(t);
        let v = ab * 0.25 + 1.0 - ab;
        let expect = -(&x - &(&mu * ab.sqrt())) / v;
        let got = o.score(x.view(), t, &s).unwrap();
        for (a, b) in got.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn well_separated_components_do_not_underflow() {
        let s = sched();
        let o = MixtureOracle::uniform(array![[-50.0, 0.0], [50.0, 0.0]], 1e-4).unwrap();
        let g = o.score(array![0.0, 3.0].view(), 1, &s).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_bad_weights() {
        let m = array![[0.0], [1.0]];
        assert!(MixtureOracle::new(vec![0.5, 0.6], m.clone(), 1.0).is_err());
        assert!(MixtureOracle::new(vec![-0.5, 1.5], m.clone(), 1.0).is_err());
        assert!(MixtureOracle::new(vec![0.5, 0.5], m, 0.0).is_err());
    }

    #[test]
    fn range_checks() {
        let s = sched();
        let o = MixtureOracle::single(array![0.0, 0.0].view(), 1.0).unwrap();
        assert!(o.score(array![0.0, 0.0].view(), 0, &s).is_err());
        assert!(o.score(array![0.0, 0.0].view(), 51, &s).is_err());
        assert!(o.score(array![0.0].view(), 3, &s).is_err());
    }
}
