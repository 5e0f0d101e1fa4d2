//! Flat TOML run configuration.
//!
//! Every key has a default. Unknown keys, type mismatches and range violations
//! are all collected before reporting.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use toml::{Table, Value};

use crate::engine::{AgentProjection, EngineConfig, NoiseModel, ProjectionPolicy, StepSizeSchedule};
use crate::error::{Error, Result};
use crate::library::{CoupledQuadratic, ManySoft, ResourceAllocation};
use crate::network::{Graph, WeightMatrix, WeightSchedule};
use crate::problem::{Affine, AgentSpec, Oracle, ProblemInstance, Quadratic, SimpleSet, SoftConstraintSet};

pub const PROBLEMS: [&str; 4] = ["coupled_quadratic", "resource_allocation", "many_soft", "scalar_quadratic"];
pub const TOPOLOGIES: [&str; 5] = ["ring_cycle", "metropolis", "gossip", "identity", "matrix"];
pub const GRAPHS: [&str; 5] = ["ring", "path", "star", "complete", "edges"];
pub const STEP_FORMS: [&str; 3] = ["polynomial", "constant", "frozen"];
pub const NOISE_KINDS: [&str; 2] = ["none", "gaussian"];

#[derive(Debug, Clone, PartialEq)]
pub enum Beta {
    /// `1 / s_i`
    Auto,
    Uniform(f64),
    PerAgent(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub n_agents: usize,
    pub n_global: usize,
    pub n_soft: usize,
    pub problem_seed: u64,
    /// Explicit coupled-quadratic data; random when `targets` is empty.
    pub targets: Vec<f64>,
    pub caps: Vec<f64>,
    pub budget: Option<f64>,
    /// Inline scalar problem: `phi_i = curvature_i y^2 + slope_i y`,
    /// coupling `coupling_i y - budget / N`.
    pub curvature: Vec<f64>,
    pub slope: Vec<f64>,
    pub coupling: Vec<f64>,
    pub box_lo: f64,
    pub box_hi: f64,
    pub mu: f64,

    pub topology: String,
    pub graph: String,
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<Vec<f64>>,
    /// Connectivity window; 0 means the schedule's own period.
    pub q_period: usize,
    pub schedule_seed: u64,

    pub step_form: String,
    pub gamma0: f64,
    pub alpha: f64,
    pub allow_nonstandard_steps: bool,

    pub noise: String,
    pub noise_std: f64,
    pub noise_variance_bound: Option<f64>,

    pub samples_per_agent: usize,
    pub beta: Beta,

    pub horizon: usize,
    pub metric_stride: usize,
    pub ergodic_stride: usize,
    pub ergodic_checkpoints: Vec<usize>,
    pub master_seed: u64,
    pub init_scale: f64,

    pub output: PathBuf,
    pub oracle_file: PathBuf,
    pub validate_horizon: usize,
    pub validate_samples: usize,
    pub noise_check_draws: usize,
    pub oracle_tol: f64,
    pub oracle_restarts: usize,
    pub grid_resolution: usize,
    pub grid_refinements: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "coupled_quadratic".into(),
            n_agents: 3,
            n_global: 1,
            n_soft: 10,
            problem_seed: 0,
            targets: Vec::new(),
            caps: Vec::new(),
            budget: None,
            curvature: Vec::new(),
            slope: Vec::new(),
            coupling: Vec::new(),
            box_lo: 0.0,
            box_hi: 10.0,
            mu: 10.0,
            topology: "ring_cycle".into(),
            graph: "ring".into(),
            edges: Vec::new(),
            weights: Vec::new(),
            q_period: 0,
            schedule_seed: 0,
            step_form: "polynomial".into(),
            gamma0: 0.5,
            alpha: 0.6,
            allow_nonstandard_steps: false,
            noise: "none".into(),
            noise_std: 0.0,
            noise_variance_bound: None,
            samples_per_agent: 1,
            beta: Beta::Auto,
            horizon: 1000,
            metric_stride: 100,
            ergodic_stride: 1,
            ergodic_checkpoints: Vec::new(),
            master_seed: 0,
            init_scale: 1.0,
            output: PathBuf::from("metrics.csv"),
            oracle_file: PathBuf::from("oracle.toml"),
            validate_horizon: 1000,
            validate_samples: 1000,
            noise_check_draws: 100_000,
            oracle_tol: 1e-8,
            oracle_restarts: 3,
            grid_resolution: 60,
            grid_refinements: 10,
        }
    }
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub allow_nonstandard_steps: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        if self.allow_nonstandard_steps {
            cfg.allow_nonstandard_steps = true;
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    parse_config_with(path, &Overrides::default())
}

pub fn parse_config_with(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::parse_with(&text, overrides)
}

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn fail(&mut self, key: &str, want: &str, v: &Value) {
        self.errors.push(format!("key `{key}`: expected {want}, got {v}"));
    }

    fn float(&mut self, key: &str, v: &Value) -> Option<f64> {
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.fail(key, "a number", v);
                None
            }
        }
    }

    fn uint(&mut self, key: &str, v: &Value) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.fail(key, "a nonnegative integer", v);
                None
            }
        }
    }

    fn usize(&mut self, key: &str, v: &Value) -> Option<usize> {
        self.uint(key, v).map(|u| u as usize)
    }

    fn string(&mut self, key: &str, v: &Value, allowed: &[&str]) -> Option<String> {
        match v {
            Value::String(s) if allowed.is_empty() || allowed.contains(&s.as_str()) => Some(s.clone()),
            Value::String(s) => {
                self.errors.push(format!(
                    "key `{key}`: unknown value {s:?}, expected one of {}",
                    allowed.join(", ")
                ));
                None
            }
            _ => {
                self.fail(key, "a string", v);
                None
            }
        }
    }

    fn bool(&mut self, key: &str, v: &Value) -> Option<bool> {
        match v {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.fail(key, "true or false", v);
                None
            }
        }
    }

    fn floats(&mut self, key: &str, v: &Value) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.fail(key, "an array of numbers", v);
            return None;
        };
        let out: Vec<f64> = items.iter().filter_map(|x| self.float(key, x)).collect();
        (out.len() == items.len()).then_some(out)
    }

    fn usizes(&mut self, key: &str, v: &Value) -> Option<Vec<usize>> {
        let Value::Array(items) = v else {
            self.fail(key, "an array of integers", v);
            return None;
        };
        let out: Vec<usize> = items.iter().filter_map(|x| self.usize(key, x)).collect();
        (out.len() == items.len()).then_some(out)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &Overrides::default())
    }

    pub fn parse_with(text: &str, overrides: &Overrides) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("malformed config: {e}")))?;
        let mut cfg = RunConfig::default();
        let mut r = Reader { errors: Vec::new() };
        for (key, v) in &table {
            let k = key.as_str();
            macro_rules! set {
                ($field:ident, $read:expr) => {
                    if let Some(x) = $read {
                        cfg.$field = x;
                    }
                };
            }
            match k {
                "problem" => set!(problem, r.string(k, v, &PROBLEMS)),
                "n_agents" => set!(n_agents, r.usize(k, v)),
                "n_global" => set!(n_global, r.usize(k, v)),
                "n_soft" => set!(n_soft, r.usize(k, v)),
                "problem_seed" => set!(problem_seed, r.uint(k, v)),
                "targets" => set!(targets, r.floats(k, v)),
                "caps" => set!(caps, r.floats(k, v)),
                "budget" => set!(budget, r.float(k, v).map(Some)),
                "curvature" => set!(curvature, r.floats(k, v)),
                "slope" => set!(slope, r.floats(k, v)),
                "coupling" => set!(coupling, r.floats(k, v)),
                "box_lo" => set!(box_lo, r.float(k, v)),
                "box_hi" => set!(box_hi, r.float(k, v)),
                "mu" => set!(mu, r.float(k, v)),
                "topology" => set!(topology, r.string(k, v, &TOPOLOGIES)),
                "graph" => set!(graph, r.string(k, v, &GRAPHS)),
                "edges" => set!(edges, read_edges(&mut r, k, v)),
                "weights" => set!(weights, read_matrix(&mut r, k, v)),
                "q_period" => set!(q_period, r.usize(k, v)),
                "schedule_seed" => set!(schedule_seed, r.uint(k, v)),
                "step_form" => set!(step_form, r.string(k, v, &STEP_FORMS)),
                "gamma0" => set!(gamma0, r.float(k, v)),
                "alpha" => set!(alpha, r.float(k, v)),
                "allow_nonstandard_steps" => set!(allow_nonstandard_steps, r.bool(k, v)),
                "noise" => set!(noise, r.string(k, v, &NOISE_KINDS)),
                "noise_std" => set!(noise_std, r.float(k, v)),
                "noise_variance_bound" => set!(noise_variance_bound, r.float(k, v).map(Some)),
                "samples_per_agent" => set!(samples_per_agent, r.usize(k, v)),
                "beta" => set!(beta, read_beta(&mut r, k, v)),
                "horizon" => set!(horizon, r.usize(k, v)),
                "metric_stride" => set!(metric_stride, r.usize(k, v)),
                "ergodic_stride" => set!(ergodic_stride, r.usize(k, v)),
                "ergodic_checkpoints" => set!(ergodic_checkpoints, r.usizes(k, v)),
                "master_seed" => set!(master_seed, r.uint(k, v)),
                "init_scale" => set!(init_scale, r.float(k, v)),
                "output" => set!(output, r.string(k, v, &[]).map(PathBuf::from)),
                "oracle_file" => set!(oracle_file, r.string(k, v, &[]).map(PathBuf::from)),
                "validate_horizon" => set!(validate_horizon, r.usize(k, v)),
                "validate_samples" => set!(validate_samples, r.usize(k, v)),
                "noise_check_draws" => set!(noise_check_draws, r.usize(k, v)),
                "oracle_tol" => set!(oracle_tol, r.float(k, v)),
                "oracle_restarts" => set!(oracle_restarts, r.usize(k, v)),
                "grid_resolution" => set!(grid_resolution, r.usize(k, v)),
                "grid_refinements" => set!(grid_refinements, r.usize(k, v)),
                _ => r.errors.push(format!("unknown key `{k}`")),
            }
        }
        overrides.apply(&mut cfg);
        let mut errors = r.errors;
        errors.extend(cfg.range_errors());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::ConfigList(errors))
        }
    }

    /// Re-checks every range constraint, e.g. after a sweep edits a field.
    pub fn validate(&self) -> Result<()> {
        let errors = self.range_errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errors))
        }
    }

    fn range_errors(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.n_agents == 0 {
            e.push("n_agents must be >= 1".into());
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            e.push(format!("mu must be > 0, got {}", self.mu));
        }
        match self.problem.as_str() {
            "resource_allocation" if self.n_global == 0 => {
                e.push("n_global must be >= 1 (at least one global constraint)".into())
            }
            "many_soft" if self.n_soft < crate::library::MIN_MANY_SOFT => e.push(format!(
                "n_soft must be >= {}, got {}",
                crate::library::MIN_MANY_SOFT,
                self.n_soft
            )),
            "coupled_quadratic" if !self.targets.is_empty() => {
                if self.caps.len() != self.targets.len() {
                    e.push(format!(
                        "caps has {} entries but targets has {}",
                        self.caps.len(),
                        self.targets.len()
                    ));
                }
                if self.budget.is_none() {
                    e.push("explicit targets need a budget".into());
                }
                if self.targets.len() != self.n_agents {
                    e.push(format!(
                        "targets has {} entries but n_agents = {}",
                        self.targets.len(),
                        self.n_agents
                    ));
                }
            }
            "scalar_quadratic" => {
                let n = self.n_agents;
                for (name, v) in [("curvature", &self.curvature), ("slope", &self.slope), ("coupling", &self.coupling)] {
                    if v.len() != n {
                        e.push(format!("{name} needs {n} entries (one per agent), got {}", v.len()));
                    }
                }
                if !self.caps.is_empty() && self.caps.len() != n {
                    e.push(format!("caps needs 0 or {n} entries, got {}", self.caps.len()));
                }
            }
            _ => {}
        }
        if !(self.box_lo < self.box_hi) {
            e.push(format!("box_lo = {} must be < box_hi = {}", self.box_lo, self.box_hi));
        }
        if self.topology == "metropolis" && self.graph == "edges" && self.edges.is_empty() {
            e.push("graph = \"edges\" needs a nonempty edges list".into());
        }
        if self.topology == "matrix" && self.weights.len() != self.n_agents {
            e.push(format!(
                "weights must be an {n}x{n} matrix for n_agents = {n}",
                n = self.n_agents
            ));
        }

        if !(self.gamma0 > 0.0) || !self.gamma0.is_finite() {
            e.push(format!("gamma0 must be > 0, got {}", self.gamma0));
        }
        if !self.allow_nonstandard_steps {
            match self.step_form.as_str() {
                "polynomial" if !(self.alpha > 0.5 && self.alpha <= 1.0) => e.push(format!(
                    "Assumption 4: alpha must be in (0.5, 1], got {} (--allow-nonstandard-steps overrides)",
                    self.alpha
                )),
                "constant" | "frozen" => e.push(format!(
                    "Assumption 4: {} step sizes are not square summable and divergent \
                     (--allow-nonstandard-steps overrides)",
                    self.step_form
                )),
                _ => {}
            }
        } else if self.step_form == "polynomial" && !(self.alpha > 0.0) {
            e.push(format!("alpha must be > 0, got {}", self.alpha));
        }

        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            e.push(format!("Assumption 2: noise_std must be >= 0, got {}", self.noise_std));
        }
        if let Some(nu) = self.noise_variance_bound {
            if !(nu >= 0.0) {
                e.push(format!("Assumption 2: noise_variance_bound must be >= 0, got {nu}"));
            }
        }

        if self.samples_per_agent == 0 {
            e.push("samples_per_agent must be >= 1".into());
        }
        let s = self.samples_per_agent.max(1) as f64;
        let bad_beta = |b: f64| !(b > 0.0 && b * s < 2.0);
        match &self.beta {
            Beta::Auto => {}
            Beta::Uniform(b) if bad_beta(*b) => e.push(format!(
                "beta = {b} must lie in the open interval (0, 2/s) = (0, {})",
                2.0 / s
            )),
            Beta::PerAgent(bs) => {
                if bs.len() != self.n_agents {
                    e.push(format!("beta list needs {} entries, got {}", self.n_agents, bs.len()));
                }
                for (i, b) in bs.iter().enumerate() {
                    if bad_beta(*b) {
                        e.push(format!(
                            "beta[{i}] = {b} must lie in the open interval (0, 2/s) = (0, {})",
                            2.0 / s
                        ));
                    }
                }
            }
            _ => {}
        }

        for (name, v) in [
            ("metric_stride", self.metric_stride),
            ("ergodic_stride", self.ergodic_stride),
            ("validate_horizon", self.validate_horizon),
            ("oracle_restarts", self.oracle_restarts),
            ("grid_resolution", self.grid_resolution),
        ] {
            if v == 0 {
                e.push(format!("{name} must be >= 1"));
            }
        }
        if !(self.init_scale >= 0.0) || !self.init_scale.is_finite() {
            e.push(format!("init_scale must be >= 0, got {}", self.init_scale));
        }
        if !(self.oracle_tol > 0.0) {
            e.push(format!("oracle_tol must be > 0, got {}", self.oracle_tol));
        }
        e
    }

    pub fn steps(&self) -> StepSizeSchedule {
        match self.step_form.as_str() {
            "constant" => StepSizeSchedule::Constant { gamma0: self.gamma0 },
            "frozen" => StepSizeSchedule::Frozen,
            _ => StepSizeSchedule::Polynomial {
                gamma0: self.gamma0,
                alpha: self.alpha,
            },
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        let mut m = if self.noise == "gaussian" && self.noise_std > 0.0 {
            NoiseModel::gaussian(self.noise_std)
        } else {
            NoiseModel::none()
        };
        m.variance_bound = self.noise_variance_bound;
        m
    }

    pub fn build_problem(&self) -> Result<ProblemInstance> {
        let n = self.n_agents;
        let mut p = match self.problem.as_str() {
            "coupled_quadratic" if self.targets.is_empty() => {
                let mut c = CoupledQuadratic::random(n, self.problem_seed)?;
                c.lo = self.box_lo;
                c.hi = self.box_hi;
                if let Some(b) = self.budget {
                    c.budget = b;
                }
                c.build()?
            }
            "coupled_quadratic" => CoupledQuadratic {
                targets: self.targets.clone(),
                caps: self.caps.clone(),
                budget: self.budget.unwrap_or_default(),
                mu: self.mu,
                lo: self.box_lo,
                hi: self.box_hi,
            }
            .build()?,
            "resource_allocation" => ResourceAllocation::random(n, self.n_global, self.problem_seed)?.build()?,
            "many_soft" => ManySoft::random(n, self.n_soft, self.problem_seed)?.build()?,
            "scalar_quadratic" => self.scalar_problem()?,
            other => return Err(Error::Config(format!("unknown problem {other:?}"))),
        };
        if p.mu() != self.mu {
            p = p.with_mu(self.mu)?;
        }
        Ok(p)
    }

    fn scalar_problem(&self) -> Result<ProblemInstance> {
        let n = self.n_agents;
        let budget = self.budget.unwrap_or(0.0);
        let reach = self.box_lo.abs().max(self.box_hi.abs());
        let agents = (0..n)
            .map(|i| {
                let (c, s, a) = (self.curvature[i], self.slope[i], self.coupling[i]);
                let objective = Quadratic::new(vec![2.0 * c], vec![s], 0.0)?
                    .with_lipschitz(2.0 * c.abs() * reach + s.abs());
                let soft: Vec<Oracle> = match self.caps.get(i) {
                    Some(u) => vec![Arc::new(Affine::new(vec![1.0], -u))],
                    None => Vec::new(),
                };
                AgentSpec::new(
                    Arc::new(objective),
                    vec![Arc::new(Affine::new(vec![a], -budget / n as f64))],
                    SimpleSet::cube(1, self.box_lo, self.box_hi)?,
                    SoftConstraintSet::new(soft),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        ProblemInstance::new(agents, 1, self.mu)
    }

    pub fn build_schedule(&self) -> Result<WeightSchedule> {
        let n = self.n_agents;
        Ok(match self.topology.as_str() {
            "ring_cycle" => WeightSchedule::RingCycle { n },
            "gossip" => WeightSchedule::PairwiseGossip {
                n,
                seed: self.schedule_seed,
            },
            "identity" => WeightSchedule::Identity { n },
            "matrix" => WeightSchedule::Static {
                matrix: WeightMatrix::new(self.weights.clone())?,
            },
            "metropolis" => {
                let g = match self.graph.as_str() {
                    "ring" => Graph::ring(n)?,
                    "path" => Graph::path(n)?,
                    "star" => Graph::star(n)?,
                    "complete" => Graph::complete(n)?,
                    _ => Graph::from_edges(n, self.edges.clone())?,
                };
                WeightSchedule::metropolis(&g)
            }
            other => return Err(Error::Config(format!("unknown topology {other:?}"))),
        })
    }

    /// Window `Q` used by the connectivity check.
    pub fn q_window(&self, schedule: &WeightSchedule) -> usize {
        if self.q_period > 0 {
            self.q_period
        } else {
            schedule.natural_q().unwrap_or(self.n_agents.max(1))
        }
    }

    pub fn projection_policy(&self, p: &ProblemInstance) -> Result<ProjectionPolicy> {
        let mut errors = Vec::new();
        let agents = p
            .agents()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let m = a.soft_set().len();
                let s = if m == 0 { 0 } else { self.samples_per_agent };
                if s > m {
                    errors.push(format!(
                        "samples_per_agent = {s} exceeds agent {i}'s {m} soft constraints"
                    ));
                }
                let beta = match &self.beta {
                    Beta::Auto => 1.0 / s.max(1) as f64,
                    Beta::Uniform(b) => *b,
                    Beta::PerAgent(bs) => bs.get(i).copied().unwrap_or(f64::NAN),
                };
                AgentProjection { samples: s, beta }
            })
            .collect();
        if !errors.is_empty() {
            return Err(Error::ConfigList(errors));
        }
        let policy = ProjectionPolicy::new(agents);
        policy.validate(p)?;
        Ok(policy)
    }

    pub fn engine_config(&self, p: &ProblemInstance) -> Result<EngineConfig> {
        let schedule = self.build_schedule()?;
        let mut cfg = EngineConfig::new(p, schedule);
        cfg.steps = self.steps();
        cfg.noise = self.noise_model();
        cfg.projection = self.projection_policy(p)?;
        cfg.horizon = self.horizon;
        cfg.metric_stride = self.metric_stride;
        cfg.ergodic_stride = self.ergodic_stride;
        cfg.ergodic_checkpoints = self.ergodic_checkpoints.clone();
        cfg.master_seed = self.master_seed;
        cfg.init_scale = self.init_scale;
        cfg.allow_nonstandard_steps = self.allow_nonstandard_steps;
        cfg.validate(p)?;
        Ok(cfg)
    }

    /// Keys that determine the problem instance, used to match oracle sidecars.
    pub fn instance_key(&self) -> String {
        let t = self.to_table();
        let keys = [
            "problem", "n_agents", "n_global", "n_soft", "problem_seed", "targets", "caps", "budget",
            "curvature", "slope", "coupling", "box_lo", "box_hi", "mu",
        ];
        keys.iter()
            .filter_map(|k| t.get(*k).map(|v| format!("{k}={v}")))
            .collect::<Vec<_>>()
            .join(";")
    }

    fn to_table(&self) -> Table {
        let mut t = Table::new();
        let floats = |v: &[f64]| Value::Array(v.iter().map(|x| Value::Float(*x)).collect());
        let int = |v: u64| Value::Integer(v as i64);
        t.insert("problem".into(), Value::String(self.problem.clone()));
        t.insert("n_agents".into(), int(self.n_agents as u64));
        t.insert("n_global".into(), int(self.n_global as u64));
        t.insert("n_soft".into(), int(self.n_soft as u64));
        t.insert("problem_seed".into(), int(self.problem_seed));
        t.insert("targets".into(), floats(&self.targets));
        t.insert("caps".into(), floats(&self.caps));
        if let Some(b) = self.budget {
            t.insert("budget".into(), Value::Float(b));
        }
        t.insert("curvature".into(), floats(&self.curvature));
        t.insert("slope".into(), floats(&self.slope));
        t.insert("coupling".into(), floats(&self.coupling));
        t.insert("box_lo".into(), Value::Float(self.box_lo));
        t.insert("box_hi".into(), Value::Float(self.box_hi));
        t.insert("mu".into(), Value::Float(self.mu));
        t.insert("topology".into(), Value::String(self.topology.clone()));
        t.insert("graph".into(), Value::String(self.graph.clone()));
        t.insert(
            "edges".into(),
            Value::Array(
                self.edges
                    .iter()
                    .map(|(a, b)| Value::Array(vec![int(*a as u64), int(*b as u64)]))
                    .collect(),
            ),
        );
        t.insert("weights".into(), Value::Array(self.weights.iter().map(|r| floats(r)).collect()));
        t.insert("q_period".into(), int(self.q_period as u64));
        t.insert("schedule_seed".into(), int(self.schedule_seed));
        t.insert("step_form".into(), Value::String(self.step_form.clone()));
        t.insert("gamma0".into(), Value::Float(self.gamma0));
        t.insert("alpha".into(), Value::Float(self.alpha));
        t.insert("allow_nonstandard_steps".into(), Value::Boolean(self.allow_nonstandard_steps));
        t.insert("noise".into(), Value::String(self.noise.clone()));
        t.insert("noise_std".into(), Value::Float(self.noise_std));
        if let Some(nu) = self.noise_variance_bound {
            t.insert("noise_variance_bound".into(), Value::Float(nu));
        }
        t.insert("samples_per_agent".into(), int(self.samples_per_agent as u64));
        t.insert(
            "beta".into(),
            match &self.beta {
                Beta::Auto => Value::String("auto".into()),
                Beta::Uniform(b) => Value::Float(*b),
                Beta::PerAgent(bs) => floats(bs),
            },
        );
        t.insert("horizon".into(), int(self.horizon as u64));
        t.insert("metric_stride".into(), int(self.metric_stride as u64));
        t.insert("ergodic_stride".into(), int(self.ergodic_stride as u64));
        t.insert(
            "ergodic_checkpoints".into(),
            Value::Array(self.ergodic_checkpoints.iter().map(|c| int(*c as u64)).collect()),
        );
        t.insert("master_seed".into(), int(self.master_seed));
        t.insert("init_scale".into(), Value::Float(self.init_scale));
        t.insert("output".into(), Value::String(self.output.display().to_string()));
        t.insert("oracle_file".into(), Value::String(self.oracle_file.display().to_string()));
        t.insert("validate_horizon".into(), int(self.validate_horizon as u64));
        t.insert("validate_samples".into(), int(self.validate_samples as u64));
        t.insert("noise_check_draws".into(), int(self.noise_check_draws as u64));
        t.insert("oracle_tol".into(), Value::Float(self.oracle_tol));
        t.insert("oracle_restarts".into(), int(self.oracle_restarts as u64));
        t.insert("grid_resolution".into(), int(self.grid_resolution as u64));
        t.insert("grid_refinements".into(), int(self.grid_refinements as u64));
        t
    }

    /// Every key with its effective value.
    pub fn normalized(&self) -> String {
        self.to_table().to_string()
    }
}

fn read_beta(r: &mut Reader, k: &str, v: &Value) -> Option<Beta> {
    match v {
        Value::String(s) if s == "auto" => Some(Beta::Auto),
        Value::Array(_) => r.floats(k, v).map(Beta::PerAgent),
        _ => r.float(k, v).map(Beta::Uniform),
    }
}

fn read_edges(r: &mut Reader, k: &str, v: &Value) -> Option<Vec<(usize, usize)>> {
    let Value::Array(items) = v else {
        r.fail(k, "an array of [i, j] pairs", v);
        return None;
    };
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        match r.usizes(k, item).as_deref() {
            Some([a, b]) => out.push((*a, *b)),
            _ => {
                r.fail(k, "an [i, j] pair", item);
                return None;
            }
        }
    }
    Some(out)
}

fn read_matrix(r: &mut Reader, k: &str, v: &Value) -> Option<Vec<Vec<f64>>> {
    let Value::Array(rows) = v else {
        r.fail(k, "an array of rows", v);
        return None;
    };
    let out: Vec<Vec<f64>> = rows.iter().filter_map(|row| r.floats(k, row)).collect();
    (out.len() == rows.len()).then_some(out)
}
