//! The `chebdqn` command line.
//!
//! Exit codes: 0 success, 1 failed check, 2 usage or configuration error,
//! 3 I/O error. Settings resolve as flags > `CHEBDQN_OUT` (output directory
//! only) > config file > built-in defaults.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::check::{run_checks, CheckOptions};
use crate::config::{ConfigLayer, ExperimentConfig, OUT_DIR_ENV};
use crate::env::EnvId;
use crate::error::Error;
use crate::harness;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chebdqn", version, about = "Chebyshev-feature DQN experiments on classic-control tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model on one environment for every seed.
    Train(TrainArgs),
    /// Train every (env, arch, degree) cell of a grid config for every seed.
    Sweep(SweepArgs),
    /// Print the trainable-parameter table of an environment.
    Params(ParamsArgs),
    /// Rebuild summary.md from the run files in an output directory.
    Report(ReportArgs),
    /// Run the fast verification suite.
    Check(CheckArgs),
}

/// Settings shared by `train` and `sweep`.
#[derive(Debug, Args, Default)]
pub struct RunFlags {
    /// Comma-separated seeds [default: 0,1,2]
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output directory [default: runs]
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Training episodes per run [default: 500 cartpole, 2000 mountaincar, 1000 acrobot]
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Adam learning rate [default: 1e-3 cartpole/mountaincar, 5e-4 acrobot]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Trailing window for final scores and thresholds [default: 100]
    #[arg(long)]
    pub window: Option<usize>,
    /// Solve threshold on the trailing mean [default: 195 cartpole, -110 mountaincar, -100 acrobot]
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// Warm-up transitions before the first update [default: 1000]
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Maximum concurrent runs [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl RunFlags {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            seeds: self.seeds.clone(),
            out: self.out.clone(),
            episodes: self.episodes,
            learning_rate: self.learning_rate,
            window: self.window,
            threshold: self.threshold,
            warmup: self.warmup,
            jobs: self.jobs,
            ..ConfigLayer::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML config file; flags override its values [default: none]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Environment: cartpole-v1, mountaincar-v0 or acrobot-v1 [default: from config]
    #[arg(long)]
    pub env: Option<String>,
    /// Network input: mlp (normalized state) or cheb (Chebyshev features) [default: cheb]
    #[arg(long)]
    pub arch: Option<String>,
    /// Chebyshev degree N, cheb only [default: 4]
    #[arg(long)]
    pub degree: Option<usize>,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML config file with one [[cells]] entry per (env, arch, degree)
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Environment: cartpole-v1, mountaincar-v0 or acrobot-v1
    #[arg(long)]
    pub env: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding *.csv and *.run.toml run files [default: runs]
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Fault injection: scale analytic gradients by (1 + value) [default: 0]
    #[arg(long, default_value_t = 0.0)]
    pub perturb_gradient: f64,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> crate::Result<i32> {
    match command {
        Command::Train(args) => train(args),
        Command::Sweep(args) => sweep(args),
        Command::Params(args) => params(args),
        Command::Report(args) => report(args),
        Command::Check(args) => check(args),
    }
}

fn base_layer(config: Option<&PathBuf>) -> crate::Result<ConfigLayer> {
    config.map_or_else(|| Ok(ConfigLayer::default()), ConfigLayer::load)
}

fn train(args: TrainArgs) -> crate::Result<i32> {
    let flags = ConfigLayer {
        env: args.env.clone(),
        arch: args.arch.clone(),
        degree: args.degree,
        ..args.run.layer()
    };
    let layer = base_layer(args.config.as_ref())?.overlay(flags);
    let config = layer.resolve()?;
    execute_cells(&[config])
}

fn sweep(args: SweepArgs) -> crate::Result<i32> {
    let layer = base_layer(Some(&args.config))?.overlay(args.run.layer());
    let configs = layer.resolve_cells()?;
    execute_cells(&configs)
}

fn execute_cells(configs: &[ExperimentConfig]) -> crate::Result<i32> {
    let jobs = configs.iter().map(|c| c.jobs).max().unwrap_or(1);
    let tasks: Vec<(ExperimentConfig, u64)> = configs
        .iter()
        .flat_map(|c| c.seeds.iter().map(move |&s| (c.clone(), s)))
        .collect();
    harness::run_all(&tasks, jobs)?;
    let mut out_dirs: Vec<&PathBuf> = configs.iter().map(|c| &c.out_dir).collect();
    out_dirs.sort();
    out_dirs.dedup();
    // Summaries cover every run in the directory, including earlier invocations.
    for dir in out_dirs {
        let runs = harness::load_runs(dir)?;
        let path = harness::write_summary(dir, &runs)?;
        println!("wrote {} ({} runs)", path.display(), runs.len());
    }
    Ok(EXIT_OK)
}

fn params(args: ParamsArgs) -> crate::Result<i32> {
    let env: EnvId = args.env.parse()?;
    print!("{}", harness::parameter_table(env));
    Ok(EXIT_OK)
}

fn report(args: ReportArgs) -> crate::Result<i32> {
    let dir = args.out.unwrap_or_else(|| PathBuf::from(crate::config::DEFAULT_OUT_DIR));
    let runs = harness::load_runs(&dir)?;
    if runs.is_empty() {
        return Err(Error::usage(format!("no run files found in {}", dir.display())));
    }
    let path = harness::write_summary(&dir, &runs)?;
    print!("{}", harness::render_summary(&runs)?);
    eprintln!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn check(args: CheckArgs) -> crate::Result<i32> {
    let outcomes = run_checks(&CheckOptions {
        perturb_gradient: args.perturb_gradient,
    });
    let mut stdout = std::io::stdout().lock();
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        writeln!(stdout, "{tag} {:<22} {}", o.name, o.detail)?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(stdout, "{} checks, {failed} failed", outcomes.len())?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}
