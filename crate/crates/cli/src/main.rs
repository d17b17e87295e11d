//! `mfmdp`: batch front-end for the mean-field MDP solvers.
//!
//! `mfmdp validate --config FILE` checks a configuration; `mfmdp run` also
//! executes its task and writes CSV files plus a `manifest.json` into `--out`.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use config::{ConfigError, TaskKind};

#[derive(Parser, Debug)]
#[command(name = "mfmdp", version, about = "Finite-state mean-field MDP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a configuration without running it.
    Validate(Common),
    /// Run the configured task.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "mfmdp-out")]
        out: PathBuf,
        /// Worker thread cap.
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `parameters.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

/// A failure reported as one `error code=… exit=… message=…` line.
struct Failure {
    code: String,
    exit: u8,
    message: String,
}

impl Failure {
    fn from_config(e: ConfigError) -> Self {
        let (code, exit) = match &e {
            ConfigError::Syntax(_) => ("config.syntax", 2),
            ConfigError::Field { .. } => ("config.field", 2),
            ConfigError::Infeasible { .. } => ("config.infeasible", 4),
            ConfigError::Capacity { .. } => ("config.capacity", 3),
        };
        Self { code: code.into(), exit, message: e.to_string() }
    }

    fn from_library(task: TaskKind, e: mfmdp::Error) -> Self {
        use mfmdp::Error::*;
        let (kind, exit) = match &e {
            Input(_) => ("input", 2),
            Consistency(_) => ("consistency", 2),
            Parameter(_) => ("parameter", 2),
            Capacity { .. } => ("capacity", 3),
            Infeasible(_) => ("infeasible", 4),
            IterationLimit { .. } => ("iteration-limit", 5),
            Numerical(_) => ("numerical", 5),
        };
        Self { code: format!("{}.{kind}", task.module()), exit, message: e.to_string() }
    }

    fn report(&self) -> ExitCode {
        let msg = serde_json::to_string(&self.message).unwrap_or_else(|_| "\"?\"".into());
        eprintln!("error code={} exit={} message={msg}", self.code, self.exit);
        ExitCode::from(self.exit)
    }
}

fn validate(common: &Common) -> Result<config::LoadedConfig, Failure> {
    let mut lc = config::load(&common.config).map_err(Failure::from_config)?;
    if common.seed.is_some() {
        lc.config.parameters.seed = common.seed;
    }
    config::validate(&lc).map_err(Failure::from_config)?;
    Ok(lc)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(common) => validate(&common).map(|_| ()),
        Command::Run { common, out, threads } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
                    log::warn!("thread pool already set up: {e}");
                }
            }
            validate(&common).and_then(|lc| {
                let task = lc.config.task.kind;
                let seed = lc.config.parameters.seed;
                info!("running {} from {}", task.name(), common.config.display());
                let artifacts = run::execute(&lc, seed).map_err(|e| Failure::from_library(task, e))?;
                let prefix = lc.config.outputs.prefix.clone().unwrap_or_default();
                let written = artifacts.write(&out, &prefix, task.name(), seed, &lc.inputs).map_err(|e| Failure {
                    code: "io.write".into(),
                    exit: 1,
                    message: format!("{}: {e}", out.display()),
                })?;
                for p in written {
                    info!("wrote {}", p.display());
                }
                Ok(())
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
