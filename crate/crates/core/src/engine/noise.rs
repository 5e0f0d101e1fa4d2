//! Additive zero-mean perturbations of the local subgradient.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

/// Noise whose law may depend on the agent and its current point.
pub trait StateNoise: fmt::Debug + Send + Sync {
    fn sample(&self, agent: usize, y: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub enum NoiseKind {
    None,
    /// Independent `N(0, std^2)` per coordinate.
    Gaussian { std: f64 },
    StateDependent(Arc<dyn StateNoise>),
}

#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Declared bound on `E|V|^2`; documentation and validation only.
    pub variance_bound: Option<f64>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            variance_bound: None,
        }
    }

    pub fn gaussian(std: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian { std },
            variance_bound: None,
        }
    }

    pub fn is_none(&self) -> bool {
        match self.kind {
            NoiseKind::None => true,
            NoiseKind::Gaussian { std } => std == 0.0,
            NoiseKind::StateDependent(_) => false,
        }
    }

    /// Draws `V_i(t)`. Returns `None` when there is no noise so callers can skip the add.
    pub fn sample(&self, agent: usize, y: &[f64], rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        match &self.kind {
            NoiseKind::None => None,
            NoiseKind::Gaussian { std } if *std == 0.0 => None,
            NoiseKind::Gaussian { std } => Some(
                (0..y.len())
                    .map(|_| std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                    .collect(),
            ),
            NoiseKind::StateDependent(n) => Some(n.sample(agent, y, rng)),
        }
    }

    /// Nominal per-coordinate standard deviation, used by the zero-mean check.
    pub fn nominal_std(&self) -> Option<f64> {
        match self.kind {
            NoiseKind::None => Some(0.0),
            NoiseKind::Gaussian { std } => Some(std),
            NoiseKind::StateDependent(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCheck {
    pub draws: usize,
    pub mean_norm: f64,
    pub limit: f64,
    pub mean_sq_norm: f64,
    pub passed: bool,
}

/// Empirical zero-mean test at a fixed point: the sample mean norm must stay
/// below `5 std sqrt(dim) / sqrt(draws)`, with `std` estimated from the draws.
pub fn check_zero_mean(
    noise: &NoiseModel,
    agent: usize,
    y: &[f64],
    draws: usize,
    rng: &mut dyn RngCore,
) -> NoiseCheck {
    let dim = y.len();
    let mut sum = vec![0.0; dim];
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        if let Some(v) = noise.sample(agent, y, rng) {
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            sum_sq += v.iter().map(|x| x * x).sum::<f64>();
        }
    }
    let m = draws.max(1) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let mean_norm = crate::linalg::norm(&mean);
    let mean_sq_norm = sum_sq / m;
    let std = (mean_sq_norm / dim.max(1) as f64).sqrt();
    let limit = 5.0 * std * (dim as f64).sqrt() / m.sqrt();
    let variance_ok = noise.variance_bound.is_none_or(|nu| mean_sq_norm <= nu * 1.05 + 1e-12);
    NoiseCheck {
        draws,
        mean_norm,
        limit,
        mean_sq_norm,
        passed: mean_norm <= limit && variance_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Debug)]
    struct Biased;

    impl StateNoise for Biased {
        fn sample(&self, _agent: usize, y: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
            y.iter()
                .map(|_| 0.5 + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect()
        }
    }

    #[derive(Debug)]
    struct Scaled;

    impl StateNoise for Scaled {
        fn sample(&self, _agent: usize, y: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
            let s = 1.0 + crate::linalg::norm(y);
            y.iter()
                .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect()
        }
    }

    #[test]
    fn gaussian_passes_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = check_zero_mean(&NoiseModel::gaussian(0.3), 0, &[1.0, 2.0], 100_000, &mut rng);
        assert!(c.passed, "{c:?}");
        assert!((c.mean_sq_norm - 2.0 * 0.09).abs() < 0.01);
    }

    #[test]
    fn state_dependent_zero_mean_and_biased_failure() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ok = NoiseModel {
            kind: NoiseKind::StateDependent(Arc::new(Scaled)),
            variance_bound: None,
        };
        assert!(check_zero_mean(&ok, 0, &[3.0], 100_000, &mut rng).passed);
        let bad = NoiseModel {
            kind: NoiseKind::StateDependent(Arc::new(Biased)),
            variance_bound: None,
        };
        assert!(!check_zero_mean(&bad, 0, &[3.0], 100_000, &mut rng).passed);
    }

    #[test]
    fn variance_bound_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut n = NoiseModel::gaussian(1.0);
        n.variance_bound = Some(0.5);
        assert!(!check_zero_mean(&n, 0, &[0.0], 20_000, &mut rng).passed);
        n.variance_bound = Some(1.0);
        assert!(check_zero_mean(&n, 0, &[0.0], 20_000, &mut rng).passed);
    }

    #[test]
    fn none_draws_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(NoiseModel::none().sample(0, &[1.0], &mut rng).is_none());
        assert!(NoiseModel::gaussian(0.0).is_none());
    }
}
