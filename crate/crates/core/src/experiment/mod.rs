//! Configuration, run orchestration, assumption checks and CSV output.

mod commands;
mod config;

pub use commands::{
    cmd_oracle, cmd_run, cmd_sweep, cmd_validate, read_csv, read_sidecar, write_csv, AssumptionCheck,
    CheckStatus, OracleReport, RunReport, Sidecar, SweepAxis, SweepReport, ValidationReport,
    SWEEP_HEADER_PREFIX,
};
pub use config::{parse_config, parse_config_with, Beta, Overrides, RunConfig};
