//! `sln`: command-line front end for coloured-noise synthesis and
//! stochastic Liouville-von Neumann ensembles.
//!
//! Exit status: 0 on success, 1 on usage or configuration errors, 2 on
//! runtime errors. The worker pool honours `RAYON_NUM_THREADS`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Config, ConfigError};

#[derive(Parser, Debug)]
#[command(name = "sln", version, about = "Coloured noise and stochastic Liouville-von Neumann ensembles")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel table on the frequency grid (or filter magnitudes with --filters).
    Kernels {
        #[command(flatten)]
        common: Common,
        /// Emit |f1|, |f2|, |g1|, |g2| for the configured scheme instead.
        #[arg(long)]
        filters: bool,
    },
    /// Noise realizations over the physical window.
    GenNoise {
        #[command(flatten)]
        common: Common,
        /// Number of realizations to write.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Empirical correlations against the target kernels.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Largest lag (time units) to estimate.
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        max_lag: f64,
    },
    /// Ensemble trace statistics.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Stochastic solution of the pure-dephasing model against its exact solution.
    QndVerify {
        #[command(flatten)]
        common: Common,
    },
    /// Standard error of the final mean trace over a range of lambda.
    ScanLambda {
        #[command(flatten)]
        common: Common,
    },
}

/// Options shared by all subcommands. Each flag overrides the config key of
/// the same name.
#[derive(Args, Debug, Default)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<String>,
    #[arg(long = "omega-c", allow_negative_numbers = true)]
    omega_c: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<String>,
    #[arg(long = "t-max", allow_negative_numbers = true)]
    t_max: Option<String>,
    /// Number of realizations.
    #[arg(long = "n", allow_negative_numbers = true)]
    n: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    seed: Option<String>,
    /// Output CSV path (default: standard output).
    #[arg(long, short = 'o')]
    output: Option<String>,
    /// Any other config key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<Config, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        let flags = [
            ("scheme", &self.scheme),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("beta", &self.beta),
            ("omega_c", &self.omega_c),
            ("alpha", &self.alpha),
            ("delta", &self.delta),
            ("epsilon", &self.epsilon),
            ("kappa", &self.kappa),
            ("dt", &self.dt),
            ("t_max", &self.t_max),
            ("n_realizations", &self.n),
            ("seed", &self.seed),
            ("output", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v.clone())?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError {
                source: None,
                line: None,
                message: format!("--set expects KEY=VALUE, got '{kv}'"),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<sln_core::SlnError> for CliError {
    fn from(e: sln_core::SlnError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Kernels { common, filters } => commands::kernels(&common.resolve()?, filters),
        Command::GenNoise { common, count } => commands::gen_noise(&common.resolve()?, count),
        Command::Validate { common, max_lag } => commands::validate(&common.resolve()?, max_lag),
        Command::Simulate { common } => commands::simulate(&common.resolve()?),
        Command::QndVerify { common } => commands::qnd_verify(&common.resolve()?),
        Command::ScanLambda { common } => commands::scan_lambda(&common.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("sln: config error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("sln: error: {e}");
            ExitCode::from(2)
        }
    }
}
