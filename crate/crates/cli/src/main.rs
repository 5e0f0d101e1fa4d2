use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pentrack::experiment::{
    cmd_oracle, cmd_run, cmd_sweep, cmd_validate, parse_config_with, Overrides, SweepAxis,
};

#[derive(Parser)]
#[command(name = "pentrack", version, about = "Distributed penalty method with constraint tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept step sizes outside alpha in (0.5, 1].
    #[arg(long)]
    allow_nonstandard_steps: bool,
    /// Print the normalized configuration before running.
    #[arg(long)]
    echo_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the iteration and write the metrics CSV.
    Run(Common),
    /// Check the standing assumptions and print one line per check.
    Validate(Common),
    /// Solve the centralized surrogate and write the oracle file.
    Oracle(Common),
    /// One run per value of a parameter, combined into a single CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// mu, gamma0, alpha, noise_std, s_i, N or seed.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
}

fn load(c: &Common, keep_out: bool) -> pentrack::Result<pentrack::experiment::RunConfig> {
    let overrides = Overrides {
        seed: c.seed,
        output: if keep_out { c.out.clone() } else { None },
        allow_nonstandard_steps: c.allow_nonstandard_steps,
    };
    let cfg = parse_config_with(&c.config, &overrides)?;
    if c.echo_config {
        println!("{}", cfg.normalized());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => load(c, true).and_then(|cfg| cmd_run(&cfg)).map(|r| {
            print!("{r}");
            true
        }),
        Command::Validate(c) => load(c, true).and_then(|cfg| cmd_validate(&cfg)).map(|r| {
            println!("{r}");
            r.passed()
        }),
        Command::Oracle(c) => load(c, true)
            .map(|mut cfg| {
                if let Some(o) = &c.out {
                    cfg.oracle_file = o.clone();
                }
                cfg
            })
            .and_then(|cfg| cmd_oracle(&cfg))
            .map(|r| {
                println!("{r}");
                true
            }),
        Command::Sweep { common, axis, values } => (|| {
            let cfg = load(common, false)?;
            let axis: SweepAxis = axis.parse()?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
            let rep = cmd_sweep(&cfg, axis, values, &out)?;
            for (v, o) in &rep.runs {
                let s = &o.summary;
                let viol = s.half_window(cfg.horizon).or(s.full_window()).map(|w| w.global_violation_y_tilde);
                println!(
                    "value {v}: final phi(y) = {:.10e}, a_t = {:.3e}, averaged global violation {:.3e}",
                    s.final_record.phi_y,
                    s.final_record.a_t,
                    viol.unwrap_or(f64::NAN)
                );
            }
            println!("wrote {}", rep.csv_path.display());
            Ok(true)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
