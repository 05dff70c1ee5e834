//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::german::write_universe_csv;
use crate::harness::toy::producer_label;
use crate::harness::{
    prepare, sweep, toy_demo, write_results_csv, BetaRule, Experiment, PolicyFamily, RunConfig,
    RunKey, SweepPlan,
};
use crate::{Error, RankingPolicy, Result};

#[derive(Parser)]
#[command(
    name = "exposim",
    version,
    about = "Producer exposure under stochastic re-ranking of candidate sets"
)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected impressions in the ten-producer toy instance.
    Toy {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one policy on a configured universe.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Train the credit scorer, build its universe and sweep it.
    German {
        /// German credit file (20 attributes and a label per line).
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Sweep plan (TOML); defaults to every policy over the default grid.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Also write the generated universe as CSV.
        #[arg(long)]
        universe_out: Option<PathBuf>,
    },
    /// Sweep policies and hyperparameters over one universe.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Sweep plan (TOML); defaults to every policy over the default grid.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (flat TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the runtime_ms column. Timings make the output non-reproducible.
    #[arg(long)]
    record_runtime: bool,
}

#[derive(Args)]
struct PolicyArgs {
    /// deterministic, randomized, inverse_weighted, scaled_pl or pl_icfw.
    #[arg(long)]
    policy: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// "eq" (beta = alpha) or a factor such as 0.35.
    #[arg(long, default_value = "eq")]
    beta_rule: String,
    #[arg(long)]
    c: Option<f64>,
}

impl PolicyArgs {
    fn policy(&self) -> Result<RankingPolicy> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Error::Config(format!("--policy {} needs {flag}", self.policy)))
        };
        let policy = match PolicyFamily::parse(&self.policy)? {
            PolicyFamily::Deterministic => RankingPolicy::Deterministic,
            PolicyFamily::Randomized => RankingPolicy::Randomized,
            PolicyFamily::InverseWeighted => RankingPolicy::InverseWeighted,
            PolicyFamily::ScaledPl => RankingPolicy::ScaledPl {
                c: need(self.c, "--c")?,
            },
            PolicyFamily::PlIcfw => {
                let alpha = need(self.alpha, "--alpha")?;
                RankingPolicy::PlIcfw {
                    alpha,
                    beta: BetaRule::parse(&self.beta_rule)?.beta(alpha),
                }
            }
        };
        policy
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(policy)
    }
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if self.seed.is_some() {
            config.seed = self.seed;
        }
        if self.trials.is_some() {
            config.trials = self.trials;
        }
        Ok(config)
    }
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Error::File {
                path: p.clone(),
                source: e,
            }
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_sweep(config: &RunConfig, spec: Option<&PathBuf>, run: &RunArgs) -> Result<()> {
    let dataset = config.dataset()?;
    let plan = match spec {
        Some(path) => SweepPlan::from_file(path, dataset, config.trials(), config.seed())?,
        None => SweepPlan::default_for(dataset, config.trials(), config.seed()),
    };
    let prepared = prepare(config)?;
    if let Some(g) = &prepared.german {
        eprintln!("training accuracy {:.4}", g.training_accuracy);
    }
    let experiment = Experiment::new(&prepared.universe, config.frequency_scale()?)?;
    let rows = sweep(&experiment, &plan)?;
    write_results_csv(&rows, output(run.out.as_ref())?, run.record_runtime)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Toy { trials, seed, out } => {
            let rows = toy_demo(trials, seed)?;
            let mut w = csv::Writer::from_writer(output(out.as_ref())?);
            w.write_record([
                "producer",
                "deterministic",
                "randomized_mc",
                "randomized_exact",
            ])?;
            for r in rows {
                w.write_record([
                    producer_label(r.producer).to_string(),
                    r.deterministic.to_string(),
                    r.randomized_mc.to_string(),
                    r.randomized_exact.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Simulate { run, policy } => {
            let config = run.config()?;
            let policy = policy.policy()?;
            let prepared = prepare(&config)?;
            let experiment = Experiment::new(&prepared.universe, config.frequency_scale()?)?;
            let row = experiment.run(
                &policy,
                config.trials(),
                RunKey {
                    seed: config.seed(),
                    point: 0,
                },
            )?;
            write_results_csv(&[row], output(run.out.as_ref())?, run.record_runtime)
        }
        Command::German {
            data,
            run,
            spec,
            universe_out,
        } => {
            let mut config = run.config()?;
            config.dataset = Some("german".into());
            config.data = Some(data);
            if let Some(path) = universe_out {
                let prepared = prepare(&config)?;
                let german = prepared.german.expect("german dataset yields a pipeline");
                let file = File::create(&path).map_err(|e| Error::File {
                    path: path.clone(),
                    source: e,
                })?;
                write_universe_csv(&german, BufWriter::new(file))?;
            }
            run_sweep(&config, spec.as_ref(), &run)
        }
        Command::Sweep { run, spec } => {
            let config = run.config()?;
            run_sweep(&config, spec.as_ref(), &run)
        }
    }
}

/// Parse `args` (program name first), run the command and return the process
/// exit code: 0 success, 1 configuration error, 2 data error, 3 capacity.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
            .and_then(|pool| pool.install(|| execute(cli.command))),
        None => execute(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
