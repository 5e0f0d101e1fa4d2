//! The synchronous distributed iteration.
//!
//! Each round every agent, reading only time-`t` values,
//! 1. forms `q_i = d phi_i(y_i) + mu sum_k d g_ik(y_i) max(0, e_ik)` and adds noise,
//! 2. takes a projected step onto its hard set,
//! 3. applies sampled Polyak corrections for its soft constraints,
//! 4. mixes its constraint estimate with its neighbours' and adds its own innovation
//!    `g_i(y_i(t+1)) - g_i(y_i(t))`.
//!
//! All writes land together at the end of the round.

mod noise;
mod projection;
mod run;
mod steps;

pub use noise::{check_zero_mean, NoiseCheck, NoiseKind, NoiseModel, StateNoise};
pub use projection::{
    approx_projection_step, sample_constraints, AgentProjection, ProjectionPolicy,
};
pub use run::{run, run_with, ErgodicReport, RunOutput, RunSummary};
pub use steps::StepSizeSchedule;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{axpy, norm_inf, pos};
use crate::network::{check_doubly_stochastic, mix_row, WeightSchedule, DOUBLY_STOCHASTIC_TOL};
use crate::problem::{AgentSpec, ProblemInstance};

pub const DEFAULT_DIVERGENCE_LIMIT: f64 = 1e8;

const STREAM_INIT: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_SAMPLING: u64 = 2;
const STREAMS_PER_AGENT: u64 = 3;

/// Algorithm-level settings for one run.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub steps: StepSizeSchedule,
    pub noise: NoiseModel,
    pub projection: ProjectionPolicy,
    pub schedule: WeightSchedule,
    pub horizon: usize,
    pub metric_stride: usize,
    /// The ergodic averages sample every `ergodic_stride`-th iterate.
    pub ergodic_stride: usize,
    pub master_seed: u64,
    pub init_scale: f64,
    pub divergence_limit: f64,
    /// Extra times `t` at which the half-window average over `[t/2, t]` is reported.
    /// The horizon is always reported.
    pub ergodic_checkpoints: Vec<usize>,
    /// Tolerance of the exact feasible-set projection used by the metrics.
    pub projection_tol: f64,
    /// Optimal value of the surrogate, when known, for gap reporting.
    pub phi_star: Option<f64>,
    /// Skip the step-size assumption gate.
    pub allow_nonstandard_steps: bool,
}

impl EngineConfig {
    /// Defaults: `gamma_t = 0.5 (t+1)^-0.6`, no noise, `s_i = min(1, |K_i|)`, `beta_i = 1/s_i`.
    pub fn new(problem: &ProblemInstance, schedule: WeightSchedule) -> Self {
        Self {
            steps: StepSizeSchedule::default(),
            noise: NoiseModel::none(),
            projection: ProjectionPolicy::default_for(problem),
            schedule,
            horizon: 1000,
            metric_stride: 100,
            ergodic_stride: 1,
            master_seed: 0,
            init_scale: 1.0,
            divergence_limit: DEFAULT_DIVERGENCE_LIMIT,
            ergodic_checkpoints: Vec::new(),
            projection_tol: 1e-10,
            phi_star: None,
            allow_nonstandard_steps: false,
        }
    }

    pub fn validate(&self, problem: &ProblemInstance) -> Result<()> {
        self.steps.validate()?;
        if !self.allow_nonstandard_steps {
            self.steps.check_assumption()?;
        }
        self.projection.validate(problem)?;
        if self.schedule.n_agents() != problem.n_agents() {
            return Err(Error::dim(
                "weight schedule size",
                problem.n_agents(),
                self.schedule.n_agents(),
            ));
        }
        if self.metric_stride == 0 || self.ergodic_stride == 0 {
            return Err(Error::Config("metric_stride and ergodic_stride must be >= 1".into()));
        }
        if !(self.init_scale >= 0.0) || !self.init_scale.is_finite() {
            return Err(Error::Config(format!("init_scale = {} must be >= 0", self.init_scale)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// `y_i(t)`, always inside the hard set.
    pub y: Vec<f64>,
    /// `e_i(t)`, the local estimate of the average global constraint values.
    pub e: Vec<f64>,
    /// `g_i(y_i(t))`
    pub g_cached: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub t: usize,
    pub agents: Vec<AgentState>,
    noise_rngs: Vec<ChaCha8Rng>,
    sampling_rngs: Vec<ChaCha8Rng>,
}

impl EngineState {
    pub fn y_blocks(&self) -> Vec<&[f64]> {
        self.agents.iter().map(|a| a.y.as_slice()).collect()
    }

    pub fn estimates(&self) -> Vec<Vec<f64>> {
        self.agents.iter().map(|a| a.e.clone()).collect()
    }

    pub fn max_abs_y(&self) -> f64 {
        self.agents.iter().map(|a| norm_inf(&a.y)).fold(0.0, f64::max)
    }
}

fn agent_stream(seed: u64, agent: usize, kind: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent as u64 * STREAMS_PER_AGENT + kind);
    rng
}

/// `y_i(0) = P_hard(init_scale * xi)` with standard normal `xi`, and `e_i(0) = g_i(y_i(0))`.
pub fn init_state(problem: &ProblemInstance, cfg: &EngineConfig) -> EngineState {
    let n = problem.n_agents();
    let mut agents = Vec::with_capacity(n);
    for (i, a) in problem.agents().iter().enumerate() {
        let mut rng = agent_stream(cfg.master_seed, i, STREAM_INIT);
        let mut y: Vec<f64> = (0..a.dim())
            .map(|_| cfg.init_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        a.hard_set().project_in_place(&mut y);
        let g = a.coupling_values(&y);
        agents.push(AgentState {
            y,
            e: g.clone(),
            g_cached: g,
        });
    }
    EngineState {
        t: 0,
        agents,
        noise_rngs: (0..n).map(|i| agent_stream(cfg.master_seed, i, STREAM_NOISE)).collect(),
        sampling_rngs: (0..n)
            .map(|i| agent_stream(cfg.master_seed, i, STREAM_SAMPLING))
            .collect(),
    }
}

/// `d phi(y) + mu sum_k d g_k(y) max(0, e_k)`
pub fn compute_q(agent: &AgentSpec, y: &[f64], e: &[f64], mu: f64) -> Vec<f64> {
    let mut q = agent.objective().subgradient(y);
    for (g, ek) in agent.coupling().iter().zip(e) {
        let w = mu * pos(*ek);
        if w != 0.0 {
            axpy(w, &g.subgradient(y), &mut q);
        }
    }
    q
}

/// `P_hard(y - gamma (q + v))`
pub fn primal_step(agent: &AgentSpec, y: &[f64], q: &[f64], v: Option<&[f64]>, gamma: f64) -> Vec<f64> {
    let mut z = y.to_vec();
    axpy(-gamma, q, &mut z);
    if let Some(v) = v {
        axpy(-gamma, v, &mut z);
    }
    agent.hard_set().project_in_place(&mut z);
    z
}

/// `sum_j w_ij e_j + g_new - g_old`
pub fn tracking_update(
    w_row: &[f64],
    all_e: &[Vec<f64>],
    g_new: &[f64],
    g_old: &[f64],
) -> Result<Vec<f64>> {
    if w_row.len() != all_e.len() {
        return Err(Error::dim("tracking weights", all_e.len(), w_row.len()));
    }
    let k = g_new.len();
    if g_old.len() != k {
        return Err(Error::dim("tracking innovation", k, g_old.len()));
    }
    if let Some(e) = all_e.iter().find(|e| e.len() != k) {
        return Err(Error::dim("tracking estimate", k, e.len()));
    }
    let mut out = mix_row(w_row, all_e, k);
    for ((o, gn), go) in out.iter_mut().zip(g_new).zip(g_old) {
        *o += gn - go;
    }
    Ok(out)
}

/// A run in progress: one problem, one config, one mutable state.
#[derive(Debug)]
pub struct Engine<'a> {
    problem: &'a ProblemInstance,
    config: &'a EngineConfig,
    state: EngineState,
}

impl<'a> Engine<'a> {
    pub fn new(problem: &'a ProblemInstance, config: &'a EngineConfig) -> Result<Self> {
        config.validate(problem)?;
        Ok(Self {
            problem,
            config,
            state: init_state(problem, config),
        })
    }

    /// Resumes from an existing state.
    pub fn from_state(
        problem: &'a ProblemInstance,
        config: &'a EngineConfig,
        state: EngineState,
    ) -> Result<Self> {
        config.validate(problem)?;
        Ok(Self {
            problem,
            config,
            state,
        })
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn into_state(self) -> EngineState {
        self.state
    }

    pub fn problem(&self) -> &ProblemInstance {
        self.problem
    }

    pub fn config(&self) -> &EngineConfig {
        self.config
    }

    /// One synchronous round `t -> t + 1`.
    pub fn step(&mut self) -> Result<()> {
        let problem = self.problem;
        let cfg = self.config;
        let st = &mut self.state;
        let t = st.t;
        let gamma = cfg.steps.gamma(t);
        let mu = problem.mu();
        let w = cfg.schedule.weights_at(t);
        let report = check_doubly_stochastic(&w, DOUBLY_STOCHASTIC_TOL);
        if !report.passed {
            return Err(Error::Assumption {
                assumption: "Assumption 3",
                detail: format!(
                    "W({t}) is not doubly stochastic (row dev {:e}, column dev {:e})",
                    report.max_row_deviation, report.max_col_deviation
                ),
            });
        }

        let n = problem.n_agents();
        let mut next_y = Vec::with_capacity(n);
        let mut next_g = Vec::with_capacity(n);
        for (i, agent) in problem.agents().iter().enumerate() {
            let cur = &st.agents[i];
            let q = compute_q(agent, &cur.y, &cur.e, mu);
            let v = cfg.noise.sample(i, &cur.y, &mut st.noise_rngs[i]);
            let z = primal_step(agent, &cur.y, &q, v.as_deref(), gamma);
            let policy = cfg.projection.agent(i);
            let y = if policy.samples > 0 {
                let ks = sample_constraints(
                    policy.samples,
                    agent.soft_set().len(),
                    &mut st.sampling_rngs[i],
                )?;
                approx_projection_step(agent, &z, &ks, policy.beta)?
            } else {
                z
            };
            next_g.push(agent.coupling_values(&y));
            next_y.push(y);
        }

        let old_e = st.estimates();
        for (i, (y, g)) in next_y.into_iter().zip(next_g).enumerate() {
            let e = tracking_update(w.row(i), &old_e, &g, &st.agents[i].g_cached)?;
            st.agents[i] = AgentState { y, e, g_cached: g };
        }
        st.t += 1;

        let max_abs = st.max_abs_y();
        if !(max_abs <= cfg.divergence_limit) {
            return Err(Error::Divergence { t: st.t, max_abs });
        }
        Ok(())
    }
}

/// One round applied to a copy of `state`.
pub fn iterate(
    state: &EngineState,
    problem: &ProblemInstance,
    cfg: &EngineConfig,
) -> Result<EngineState> {
    let mut engine = Engine::from_state(problem, cfg, state.clone())?;
    engine.step()?;
    Ok(engine.into_state())
}
