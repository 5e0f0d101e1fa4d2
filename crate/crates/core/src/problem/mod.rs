//! Problem model: agents with local objectives, coupling contributions to the
//! global constraints, projection-friendly hard sets and soft constraints, plus
//! the squared-hinge penalty surrogate that the distributed iteration minimizes.

mod functions;
mod sets;

pub use functions::{Affine, ConvexFn, FnOracle, MaxAffine, Oracle, Quadratic, WeightedL1};
pub use sets::SimpleSet;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, pos};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-6;

/// Local soft constraints `c_k(y) <= 0`. May be empty.
#[derive(Debug, Clone, Default)]
pub struct SoftConstraintSet(Vec<Oracle>);

impl SoftConstraintSet {
    pub fn new(constraints: Vec<Oracle>) -> Self {
        Self(constraints)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Oracle> {
        self.0.iter()
    }

    pub fn get(&self, k: usize) -> &Oracle {
        &self.0[k]
    }

    /// Largest positive part over all constraints.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        self.0.iter().map(|c| pos(c.value(y))).fold(0.0, f64::max)
    }

    pub fn all_affine(&self) -> bool {
        self.0.iter().all(|c| c.is_affine())
    }
}

#[derive(Debug, Clone)]
pub struct AgentSpec {
    dim: usize,
    objective: Oracle,
    coupling: Vec<Oracle>,
    hard_set: SimpleSet,
    soft_set: SoftConstraintSet,
}

impl AgentSpec {
    pub fn new(
        objective: Oracle,
        coupling: Vec<Oracle>,
        hard_set: SimpleSet,
        soft_set: SoftConstraintSet,
    ) -> Result<Self> {
        hard_set.validate()?;
        let dim = hard_set.dim();
        if objective.dim() != dim {
            return Err(Error::dim("agent objective", dim, objective.dim()));
        }
        for g in &coupling {
            if g.dim() != dim {
                return Err(Error::dim("agent coupling function", dim, g.dim()));
            }
        }
        for c in soft_set.iter() {
            if c.dim() != dim {
                return Err(Error::dim("agent soft constraint", dim, c.dim()));
            }
        }
        Ok(Self {
            dim,
            objective,
            coupling,
            hard_set,
            soft_set,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self) -> &Oracle {
        &self.objective
    }

    pub fn coupling(&self) -> &[Oracle] {
        &self.coupling
    }

    pub fn hard_set(&self) -> &SimpleSet {
        &self.hard_set
    }

    pub fn soft_set(&self) -> &SoftConstraintSet {
        &self.soft_set
    }

    /// This agent's contribution `g_i(y_i)` to the global constraints.
    pub fn coupling_values(&self, y: &[f64]) -> Vec<f64> {
        self.coupling.iter().map(|g| g.value(y)).collect()
    }

    /// Replaces the soft constraints, keeping everything else.
    pub fn with_soft_set(&self, soft_set: SoftConstraintSet) -> Result<Self> {
        Self::new(
            Arc::clone(&self.objective),
            self.coupling.clone(),
            self.hard_set.clone(),
            soft_set,
        )
    }

    /// Replaces the objective, keeping everything else.
    pub fn with_objective(&self, objective: Oracle) -> Result<Self> {
        Self::new(
            objective,
            self.coupling.clone(),
            self.hard_set.clone(),
            self.soft_set.clone(),
        )
    }
}

/// `min sum_i phi_i(y_i) + mu/(2N) sum_k max(0, g_k(y))^2` over the product of local sets.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    agents: Vec<AgentSpec>,
    num_global: usize,
    penalty_mu: f64,
    offsets: Vec<usize>,
}

impl ProblemInstance {
    /// `penalty_mu = 0` is accepted and decouples the agents; runs from a
    /// config file require a positive value.
    pub fn new(agents: Vec<AgentSpec>, num_global: usize, penalty_mu: f64) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Config("a problem needs at least one agent".into()));
        }
        if num_global == 0 {
            return Err(Error::Config(
                "a problem needs at least one global constraint (K >= 1)".into(),
            ));
        }
        if !(penalty_mu >= 0.0) || !penalty_mu.is_finite() {
            return Err(Error::Config(format!(
                "penalty parameter mu = {penalty_mu} must be a finite nonnegative number"
            )));
        }
        for a in &agents {
            if a.coupling.len() != num_global {
                return Err(Error::dim("coupling list length", num_global, a.coupling.len()));
            }
        }
        let mut offsets = Vec::with_capacity(agents.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for a in &agents {
            acc += a.dim;
            offsets.push(acc);
        }
        Ok(Self {
            agents,
            num_global,
            penalty_mu,
            offsets,
        })
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &AgentSpec {
        &self.agents[i]
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_global(&self) -> usize {
        self.num_global
    }

    pub fn mu(&self) -> f64 {
        self.penalty_mu
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Same instance with a different penalty parameter.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.agents.clone(), self.num_global, mu)
    }

    /// Same instance with every soft constraint removed.
    pub fn without_soft_constraints(&self) -> Result<Self> {
        let agents = self
            .agents
            .iter()
            .map(|a| a.with_soft_set(SoftConstraintSet::empty()))
            .collect::<Result<_>>()?;
        Self::new(agents, self.num_global, self.penalty_mu)
    }

    /// Splits a stacked point into per-agent blocks.
    pub fn split<'a>(&self, y: &'a [f64]) -> Result<Vec<&'a [f64]>> {
        if y.len() != self.total_dim() {
            return Err(Error::dim("stacked point", self.total_dim(), y.len()));
        }
        Ok(self.offsets.windows(2).map(|w| &y[w[0]..w[1]]).collect())
    }

    pub fn stack<B: AsRef<[f64]>>(&self, blocks: &[B]) -> Vec<f64> {
        blocks.iter().flat_map(|b| b.as_ref().iter().copied()).collect()
    }

    fn check_blocks<B: AsRef<[f64]>>(&self, blocks: &[B]) -> Result<()> {
        if blocks.len() != self.n_agents() {
            return Err(Error::dim("agent blocks", self.n_agents(), blocks.len()));
        }
        for (a, b) in self.agents.iter().zip(blocks) {
            if b.as_ref().len() != a.dim {
                return Err(Error::dim("agent block", a.dim, b.as_ref().len()));
            }
        }
        Ok(())
    }

    /// `g(y) = sum_i g_i(y_i)`, one entry per global constraint.
    pub fn global_constraint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.global_constraint_blocks(&self.split(y)?)
    }

    pub fn global_constraint_blocks<B: AsRef<[f64]>>(&self, blocks: &[B]) -> Result<Vec<f64>> {
        self.check_blocks(blocks)?;
        let mut g = vec![0.0; self.num_global];
        for (a, b) in self.agents.iter().zip(blocks) {
            for (gk, f) in g.iter_mut().zip(&a.coupling) {
                *gk += f.value(b.as_ref());
            }
        }
        Ok(g)
    }

    /// The penalty surrogate `Phi(y)`.
    pub fn penalty_objective(&self, y: &[f64]) -> Result<f64> {
        self.penalty_objective_blocks(&self.split(y)?)
    }

    pub fn penalty_objective_blocks<B: AsRef<[f64]>>(&self, blocks: &[B]) -> Result<f64> {
        let g = self.global_constraint_blocks(blocks)?;
        let local: f64 = self
            .agents
            .iter()
            .zip(blocks)
            .map(|(a, b)| a.objective.value(b.as_ref()))
            .sum();
        Ok(local + self.penalty_term(&g))
    }

    /// `mu/(2N) sum_k max(0, g_k)^2`
    pub fn penalty_term(&self, g: &[f64]) -> f64 {
        let hinge_sq: f64 = g.iter().map(|v| pos(*v).powi(2)).sum();
        self.penalty_mu / (2.0 * self.n_agents() as f64) * hinge_sq
    }

    /// A subgradient of `Phi` at the stacked point.
    pub fn penalty_subgradient_blocks<B: AsRef<[f64]>>(&self, blocks: &[B]) -> Result<Vec<Vec<f64>>> {
        let g = self.global_constraint_blocks(blocks)?;
        let scale = self.penalty_mu / self.n_agents() as f64;
        Ok(self
            .agents
            .iter()
            .zip(blocks)
            .map(|(a, b)| {
                let y = b.as_ref();
                let mut d = a.objective.subgradient(y);
                for (gk, f) in g.iter().zip(&a.coupling) {
                    if *gk > 0.0 {
                        crate::linalg::axpy(scale * gk, &f.subgradient(y), &mut d);
                    }
                }
                d
            })
            .collect())
    }

    pub fn feasibility_report(&self, y: &[f64], tol: f64) -> Result<FeasibilityReport> {
        self.feasibility_report_blocks(&self.split(y)?, tol)
    }

    pub fn feasibility_report_blocks<B: AsRef<[f64]>>(
        &self,
        blocks: &[B],
        tol: f64,
    ) -> Result<FeasibilityReport> {
        let g = self.global_constraint_blocks(blocks)?;
        let global_violation = g.iter().map(|v| pos(*v)).fold(0.0, f64::max);
        let mut soft_violation = Vec::with_capacity(self.n_agents());
        let mut hard_distance = Vec::with_capacity(self.n_agents());
        for (a, b) in self.agents.iter().zip(blocks) {
            let y = b.as_ref();
            soft_violation.push(a.soft_set.max_violation(y));
            let p = a.hard_set.project(y)?;
            hard_distance.push(dist_sq(&p, y).sqrt());
        }
        let worst = soft_violation
            .iter()
            .chain(&hard_distance)
            .fold(global_violation, |m, v| m.max(*v));
        Ok(FeasibilityReport {
            global_violation,
            soft_violation,
            hard_distance,
            feasible: worst <= tol,
        })
    }

    /// A constant `L` bounding, on the hard sets, the declared Lipschitz
    /// constants of every oracle and the per-agent subgradient norm of `Phi`.
    ///
    /// `None` unless every oracle declares a bound and every hard set is bounded.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        let n = self.n_agents() as f64;
        let mut l = 0.0_f64;
        // Upper bound on each |g_ik| over the hard set via center value + L * radius.
        let mut g_sup = vec![0.0; self.num_global];
        let mut balls = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            let (c, r) = a.hard_set.bounding_ball()?;
            l = l.max(a.objective.lipschitz_bound()?);
            for (k, g) in a.coupling.iter().enumerate() {
                let lg = g.lipschitz_bound()?;
                l = l.max(lg);
                g_sup[k] += pos(g.value(&c)) + lg * r;
            }
            for c in a.soft_set.iter() {
                l = l.max(c.lipschitz_bound()?);
            }
            balls.push((c, r));
        }
        for a in &self.agents {
            let mut bound = a.objective.lipschitz_bound()?;
            for (k, g) in a.coupling.iter().enumerate() {
                bound += self.penalty_mu / n * g_sup[k] * g.lipschitz_bound()?;
            }
            l = l.max(bound);
        }
        Some(l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `max_k max(0, g_k(y))`
    pub global_violation: f64,
    /// Per agent, `max_k max(0, c_ik(y_i))`.
    pub soft_violation: Vec<f64>,
    /// Per agent, distance to the hard set.
    pub hard_distance: Vec<f64>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn max_soft_violation(&self) -> f64 {
        self.soft_violation.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_hard_distance(&self) -> f64 {
        self.hard_distance.iter().copied().fold(0.0, f64::max)
    }
}
