//! Distributed minimization of a penalized sum of local convex costs, where
//! agents track the network-average value of coupling constraints by dynamic
//! consensus and handle local constraints by random approximate projections.

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod library;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod problem;

pub use diagnostics::{decay_fit, disagreement, ergodic_gap, ergodic_points, ErgodicAccumulator, MetricsRecord};
pub use engine::{
    compute_q, init_state, iterate, primal_step, run, run_with, tracking_update, Engine, EngineConfig,
    EngineState, NoiseModel, ProjectionPolicy, RunOutput, StepSizeSchedule,
};
pub use error::{Error, Result};
pub use network::{Graph, WeightMatrix, WeightSchedule};
pub use oracle::{exact_project_feasible, grid_oracle, solve_central, validate_oracles, OracleSettings, OracleSolution};
pub use problem::{AgentSpec, ConvexFn, Oracle, ProblemInstance, SimpleSet, SoftConstraintSet};
