//! Random approximate projection onto the soft constraints: a handful of
//! sampled Polyak corrections instead of an exact projection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, norm_sq};
use crate::problem::{AgentSpec, ProblemInstance};

/// Per-agent sample count `s_i` and relaxation `beta_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentProjection {
    pub samples: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPolicy {
    agents: Vec<AgentProjection>,
}

impl ProjectionPolicy {
    /// `s_i = min(1, |K_i|)`, `beta_i = 1 / s_i`.
    pub fn default_for(problem: &ProblemInstance) -> Self {
        Self::uniform(problem, 1, None)
    }

    /// The same `s` for every agent (clamped to each agent's constraint count),
    /// with `beta = 1/s_i` unless given.
    pub fn uniform(problem: &ProblemInstance, samples: usize, beta: Option<f64>) -> Self {
        let agents = problem
            .agents()
            .iter()
            .map(|a| {
                let s = samples.min(a.soft_set().len());
                AgentProjection {
                    samples: s,
                    beta: beta.unwrap_or(1.0 / s.max(1) as f64),
                }
            })
            .collect();
        Self { agents }
    }

    /// Every agent samples its full constraint set.
    pub fn full(problem: &ProblemInstance) -> Self {
        let agents = problem
            .agents()
            .iter()
            .map(|a| {
                let s = a.soft_set().len();
                AgentProjection {
                    samples: s,
                    beta: 1.0 / s.max(1) as f64,
                }
            })
            .collect();
        Self { agents }
    }

    pub fn new(agents: Vec<AgentProjection>) -> Self {
        Self { agents }
    }

    pub fn agent(&self, i: usize) -> AgentProjection {
        self.agents[i]
    }

    pub fn agents(&self) -> &[AgentProjection] {
        &self.agents
    }

    /// `1 <= s_i <= |K_i|` for agents with soft constraints, and `0 < beta_i s_i < 2`.
    pub fn validate(&self, problem: &ProblemInstance) -> Result<()> {
        if self.agents.len() != problem.n_agents() {
            return Err(Error::dim("projection policy", problem.n_agents(), self.agents.len()));
        }
        let mut problems = Vec::new();
        for (i, (p, a)) in self.agents.iter().zip(problem.agents()).enumerate() {
            let m = a.soft_set().len();
            if m == 0 {
                continue;
            }
            if p.samples == 0 || p.samples > m {
                problems.push(format!(
                    "agent {i}: sample count s = {} must be in [1, {m}]",
                    p.samples
                ));
                continue;
            }
            if !(p.beta > 0.0 && p.beta * (p.samples as f64) < 2.0) {
                problems.push(format!(
                    "agent {i}: beta = {} must lie in (0, 2/s) = (0, {})",
                    p.beta,
                    2.0 / p.samples as f64
                ));
            }
        }
        match problems.len() {
            0 => Ok(()),
            _ => Err(Error::ConfigList(problems)),
        }
    }
}

/// A uniformly random `count`-subset of `0..universe`, in increasing order.
pub fn sample_constraints<R: Rng + ?Sized>(
    count: usize,
    universe: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if count > universe {
        return Err(Error::Config(format!(
            "cannot sample {count} constraints out of {universe}"
        )));
    }
    let mut idx = rand::seq::index::sample(rng, universe, count).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// `P_hard(z - beta * sum_{k in sampled} c_k^+(z) / |d_k|^2 * d_k)`.
pub fn approx_projection_step(
    agent: &AgentSpec,
    z: &[f64],
    sampled: &[usize],
    beta: f64,
) -> Result<Vec<f64>> {
    let mut out = z.to_vec();
    for &k in sampled {
        let c = agent.soft_set().get(k);
        let v = c.value(z);
        if v > 0.0 {
            let d = c.subgradient(z);
            let dn = norm_sq(&d);
            if dn == 0.0 {
                return Err(Error::Model(format!(
                    "soft constraint {k} is violated ({v:e}) with a zero subgradient; its sublevel set is empty"
                )));
            }
            axpy(-beta * v / dn, &d, &mut out);
        }
    }
    agent.hard_set().project_in_place(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;
    use crate::problem::{Affine, FnOracle, Quadratic, SimpleSet, SoftConstraintSet};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn agent(hard: SimpleSet, soft: Vec<Affine>) -> AgentSpec {
        AgentSpec::new(
            Arc::new(Quadratic::squared_distance(&[0.0], 1.0)),
            vec![Arc::new(Affine::new(vec![1.0], 0.0))],
            hard,
            SoftConstraintSet::new(soft.into_iter().map(|c| Arc::new(c) as _).collect()),
        )
        .unwrap()
    }

    #[test]
    fn single_correction() {
        let a = agent(SimpleSet::whole(1), vec![Affine::new(vec![1.0], -1.0)]);
        assert_eq!(approx_projection_step(&a, &[2.0], &[0], 1.0).unwrap(), vec![1.0]);
        assert_eq!(approx_projection_step(&a, &[0.5], &[0], 1.0).unwrap(), vec![0.5]);
    }

    #[test]
    fn two_corrections_sum() {
        let a = agent(
            SimpleSet::whole(1),
            vec![Affine::new(vec![1.0], -1.0), Affine::new(vec![1.0], -1.5)],
        );
        assert_eq!(approx_projection_step(&a, &[3.0], &[0, 1], 0.5).unwrap(), vec![1.25]);
    }

    #[test]
    fn result_is_projected_onto_hard_set() {
        let a = agent(SimpleSet::cube(1, 2.0, 4.0).unwrap(), vec![Affine::new(vec![1.0], -1.0)]);
        assert_eq!(approx_projection_step(&a, &[3.0], &[0], 1.0).unwrap(), vec![2.0]);
    }

    #[test]
    fn zero_subgradient_on_violation_is_fatal() {
        let c = FnOracle::new(1, |_| 1.0, |_| vec![0.0]);
        let a = AgentSpec::new(
            Arc::new(Quadratic::squared_distance(&[0.0], 1.0)),
            vec![],
            SimpleSet::whole(1),
            SoftConstraintSet::new(vec![Arc::new(c)]),
        )
        .unwrap();
        assert!(matches!(
            approx_projection_step(&a, &[0.0], &[0], 1.0),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(sample_constraints(4, 4, &mut rng).unwrap(), vec![0, 1, 2, 3]);
        assert!(sample_constraints(5, 4, &mut rng).is_err());
        let a = sample_constraints(2, 10, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_constraints(2, 10, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_index_frequencies_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[sample_constraints(1, 4, &mut rng).unwrap()[0]] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|c| (*c as f64 - expected).powi(2) / expected)
            .sum();
        // 3 degrees of freedom, 0.999 quantile.
        assert!(chi2 < 16.27, "chi2 = {chi2}");
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn pair_subsets_uniform() {
        // All C(4,2) = 6 subsets should appear equally often.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let draws = 60_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sample_constraints(2, 4, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = draws as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|c| (*c as f64 - expected).powi(2) / expected)
            .sum();
        // 5 degrees of freedom, 0.999 quantile.
        assert!(chi2 < 20.52, "chi2 = {chi2}");
    }

    #[test]
    fn policy_validation() {
        let a = agent(
            SimpleSet::whole(1),
            vec![Affine::new(vec![1.0], -1.0), Affine::new(vec![1.0], -2.0)],
        );
        let p = ProblemInstance::new(vec![a], 1, 1.0).unwrap();
        assert!(ProjectionPolicy::default_for(&p).validate(&p).is_ok());
        assert_eq!(ProjectionPolicy::default_for(&p).agent(0), AgentProjection { samples: 1, beta: 1.0 });
        let boundary = ProjectionPolicy::new(vec![AgentProjection { samples: 2, beta: 1.0 }]);
        assert!(boundary.validate(&p).is_err());
        let too_many = ProjectionPolicy::new(vec![AgentProjection { samples: 3, beta: 0.1 }]);
        assert!(too_many.validate(&p).is_err());
        let full = ProjectionPolicy::full(&p);
        assert_eq!(full.agent(0), AgentProjection { samples: 2, beta: 0.5 });
    }

    proptest! {
        /// One violated constraint and beta in (0, 2): the step never moves away
        /// from any point feasible for that constraint and the hard set.
        #[test]
        fn projection_step_is_fejer(
            slope in prop_oneof![0.2..3.0f64, -3.0..-0.2f64],
            cap in -2.0..2.0f64,
            z in -10.0..10.0f64,
            beta in 0.01..1.99f64,
            w_frac in 0.0..1.0f64,
        ) {
            let c = Affine::new(vec![slope], -cap);
            let a = agent(SimpleSet::cube(1, -5.0, 5.0).unwrap(), vec![c.clone()]);
            // Feasible w: slope * w <= cap within [-5, 5].
            let bound = cap / slope;
            let (lo, hi) = if slope > 0.0 { (-5.0, bound.min(5.0)) } else { (bound.max(-5.0), 5.0) };
            prop_assume!(lo <= hi);
            let w = lo + w_frac * (hi - lo);
            let next = approx_projection_step(&a, &[z], &[0], beta).unwrap();
            prop_assert!(dist(&next, &[w]) <= dist(&[z], &[w]) + 1e-12);
        }
    }
}
