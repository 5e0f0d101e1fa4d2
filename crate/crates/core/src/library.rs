//! Parameterized test instances with compact hard sets.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitCircle};

use crate::error::{Error, Result};
use crate::problem::{Affine, AgentSpec, Oracle, ProblemInstance, Quadratic, SimpleSet, SoftConstraintSet};

pub const DEFAULT_MU: f64 = 10.0;

/// Scalar agents: `phi_i = (y - target_i)^2` on `[lo, hi]`, soft cap `y <= cap_i`,
/// one global budget `sum_i y_i <= budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledQuadratic {
    pub targets: Vec<f64>,
    pub caps: Vec<f64>,
    pub budget: f64,
    pub mu: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CoupledQuadratic {
    /// Targets in `[1, 10]`, caps in `[3, 8]`, and a budget of half the capped
    /// unconstrained total, so the budget binds.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("coupled_quadratic needs at least one agent".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=10.0)).collect();
        let caps: Vec<f64> = (0..n).map(|_| rng.random_range(3.0..=8.0)).collect();
        let budget = 0.5 * targets.iter().zip(&caps).map(|(a, u)| a.min(*u)).sum::<f64>();
        Ok(Self {
            targets,
            caps,
            budget,
            mu: DEFAULT_MU,
            lo: 0.0,
            hi: 10.0,
        })
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let n = self.targets.len();
        if n == 0 || self.caps.len() != n {
            return Err(Error::dim("coupled_quadratic caps", n, self.caps.len()));
        }
        let agents = self
            .targets
            .iter()
            .zip(&self.caps)
            .map(|(a, u)| {
                let l = 2.0 * (a - self.lo).abs().max((self.hi - a).abs());
                AgentSpec::new(
                    Arc::new(Quadratic::squared_distance(&[*a], 1.0).with_lipschitz(l)),
                    vec![Arc::new(Affine::new(vec![1.0], -self.budget / n as f64))],
                    SimpleSet::cube(1, self.lo, self.hi)?,
                    SoftConstraintSet::new(vec![Arc::new(Affine::new(vec![1.0], -u))]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        ProblemInstance::new(agents, 1, self.mu)
    }
}

pub fn make_coupled_quadratic(n: usize, seed: u64) -> Result<ProblemInstance> {
    CoupledQuadratic::random(n, seed)?.build()
}

/// Two-rate agents on `[0, 5]^2` with weighted quadratic costs around a demand,
/// `K` affine capacity couplings and two affine mix limits per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceAllocation {
    /// Per agent: cost weights and demands for both rates.
    pub weights: Vec<[f64; 2]>,
    pub demands: Vec<[f64; 2]>,
    /// `usage[i][k]`: load of agent `i`'s rates on capacity `k`.
    pub usage: Vec<Vec<[f64; 2]>>,
    pub capacity: Vec<f64>,
    /// Mix limit `y_0 <= ratio * y_1 + 1`.
    pub mix_ratio: Vec<f64>,
    /// Total-rate limit `y_0 + y_1 <= rate_cap`.
    pub rate_cap: Vec<f64>,
    pub mu: f64,
}

pub const RATE_MAX: f64 = 5.0;

impl ResourceAllocation {
    /// Capacities are set to 60% of the load at the demands, so they bind.
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("resource_allocation needs at least one agent".into()));
        }
        if k == 0 {
            return Err(Error::Config(
                "resource_allocation needs at least one global constraint (K >= 1)".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pair = |lo: f64, hi: f64| [rng.random_range(lo..=hi), rng.random_range(lo..=hi)];
        let weights: Vec<[f64; 2]> = (0..n).map(|_| pair(0.5, 2.0)).collect();
        let demands: Vec<[f64; 2]> = (0..n).map(|_| pair(1.0, 4.0)).collect();
        let usage: Vec<Vec<[f64; 2]>> = (0..n).map(|_| (0..k).map(|_| pair(0.5, 1.5)).collect()).collect();
        let capacity = (0..k)
            .map(|kk| {
                0.6 * (0..n)
                    .map(|i| usage[i][kk][0] * demands[i][0] + usage[i][kk][1] * demands[i][1])
                    .sum::<f64>()
            })
            .collect();
        let mix_ratio = (0..n).map(|_| rng.random_range(1.0..=3.0)).collect();
        let rate_cap = (0..n).map(|_| rng.random_range(4.0..=8.0)).collect();
        Ok(Self {
            weights,
            demands,
            usage,
            capacity,
            mix_ratio,
            rate_cap,
            mu: DEFAULT_MU,
        })
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let n = self.weights.len();
        let k = self.capacity.len();
        for (what, len) in [
            ("demands", self.demands.len()),
            ("usage", self.usage.len()),
            ("mix_ratio", self.mix_ratio.len()),
            ("rate_cap", self.rate_cap.len()),
        ] {
            if len != n {
                return Err(Error::dim(what, n, len));
            }
        }
        if k == 0 {
            return Err(Error::Config(
                "resource_allocation needs at least one global constraint (K >= 1)".into(),
            ));
        }
        let (lo, hi) = (vec![0.0; 2], vec![RATE_MAX; 2]);
        let mut agents = Vec::with_capacity(n);
        for i in 0..n {
            let [w0, w1] = self.weights[i];
            let [d0, d1] = self.demands[i];
            let cost = Quadratic::separable(&[w0, w1], vec![-2.0 * w0 * d0, -2.0 * w1 * d1], w0 * d0 * d0 + w1 * d1 * d1)?;
            let l = cost.gradient_bound_on_box(&lo, &hi);
            if self.usage[i].len() != k {
                return Err(Error::dim("usage row", k, self.usage[i].len()));
            }
            let coupling: Vec<Oracle> = self.usage[i]
                .iter()
                .zip(&self.capacity)
                .map(|(a, b)| Arc::new(Affine::new(a.to_vec(), -b / n as f64)) as Oracle)
                .collect();
            let soft: Vec<Oracle> = vec![
                Arc::new(Affine::new(vec![1.0, -self.mix_ratio[i]], -1.0)),
                Arc::new(Affine::new(vec![1.0, 1.0], -self.rate_cap[i])),
            ];
            agents.push(AgentSpec::new(
                Arc::new(cost.with_lipschitz(l)),
                coupling,
                SimpleSet::boxed(lo.clone(), hi.clone())?,
                SoftConstraintSet::new(soft),
            )?);
        }
        ProblemInstance::new(agents, k, self.mu)
    }
}

pub fn make_resource_allocation(n: usize, k: usize, seed: u64) -> Result<ProblemInstance> {
    ResourceAllocation::random(n, k, seed)?.build()
}

pub const MIN_MANY_SOFT: usize = 10;
pub const MANY_SOFT_BOX: f64 = 5.0;

/// Planar agents on `[-5, 5]^2` with `m` random unit-normal halfspaces
/// `n_k . (y - x0_i) <= -slack_k`, `slack_k in [0.1, 1.5]`, all strictly
/// satisfied at the agent's interior point `x0_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManySoft {
    pub interior: Vec<[f64; 2]>,
    pub targets: Vec<[f64; 2]>,
    /// Per agent: `(normal, slack)` pairs.
    pub halfspaces: Vec<Vec<([f64; 2], f64)>>,
    pub budget: f64,
    pub mu: f64,
}

impl ManySoft {
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("many_soft needs at least one agent".into()));
        }
        if m < MIN_MANY_SOFT {
            return Err(Error::Config(format!(
                "many_soft needs at least {MIN_MANY_SOFT} soft constraints per agent, got {m}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let interior: Vec<[f64; 2]> =
            (0..n).map(|_| [rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0)]).collect();
        let targets: Vec<[f64; 2]> =
            (0..n).map(|_| [rng.random_range(-4.0..=4.0), rng.random_range(-4.0..=4.0)]).collect();
        let halfspaces = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        let normal: [f64; 2] = UnitCircle.sample(&mut rng);
                        (normal, rng.random_range(0.1..=1.5))
                    })
                    .collect()
            })
            .collect();
        let budget = interior.iter().map(|x| x[0] + x[1]).sum::<f64>() + 1.0;
        Ok(Self {
            interior,
            targets,
            halfspaces,
            budget,
            mu: DEFAULT_MU,
        })
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let n = self.interior.len();
        let (lo, hi) = (vec![-MANY_SOFT_BOX; 2], vec![MANY_SOFT_BOX; 2]);
        let mut agents = Vec::with_capacity(n);
        for i in 0..n {
            let cost = Quadratic::squared_distance(&self.targets[i], 1.0);
            let l = cost.gradient_bound_on_box(&lo, &hi);
            let x0 = self.interior[i];
            let soft: Vec<Oracle> = self.halfspaces[i]
                .iter()
                .map(|(nrm, slack)| {
                    let offset = -(nrm[0] * x0[0] + nrm[1] * x0[1]) - slack;
                    Arc::new(Affine::new(nrm.to_vec(), offset)) as Oracle
                })
                .collect();
            agents.push(AgentSpec::new(
                Arc::new(cost.with_lipschitz(l)),
                vec![Arc::new(Affine::new(vec![1.0, 1.0], -self.budget / n as f64))],
                SimpleSet::boxed(lo.clone(), hi.clone())?,
                SoftConstraintSet::new(soft),
            )?);
        }
        ProblemInstance::new(agents, 1, self.mu)
    }
}

pub fn make_many_soft_constraints(n: usize, m: usize, seed: u64) -> Result<ProblemInstance> {
    ManySoft::random(n, m, seed)?.build()
}
