use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use momgmm_bench::config::{parse_count, parse_list, parse_seeds};
use momgmm_bench::{commands, run, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "momgmm", version, about = "Method-of-moments learning of smoothed Gaussian mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate smoothed instances (and their pre-smoothing versions).
    Gen {
        #[command(flatten)]
        common: Common,
        /// Also write exact moments in the binary container.
        #[arg(long)]
        write_moments: bool,
    },
    /// Learn from exact, sampled or stored moments and score against the truth.
    Learn {
        #[command(flatten)]
        common: Common,
        /// Learn this instance instead of generating one per seed.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Record the singular-value probes of the span and unfolding steps.
    Diagnose {
        #[command(flatten)]
        common: Common,
    },
    /// Built-in verification fixtures.
    Fixture {
        #[command(subcommand)]
        which: Fixture,
    },
    /// Learn over the rho x samples x seeds grid.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum Fixture {
    /// Two mixtures with equal fourth moments and different unfolded moments.
    Counterexample {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct Common {
    /// JSON or TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// zero-mean or general.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, conflicts_with_all = ["mode", "general"])]
    zero_mean: bool,
    #[arg(long, conflicts_with = "mode")]
    general: bool,
    #[arg(short = 'n')]
    n: Option<usize>,
    #[arg(short = 'k')]
    k: Option<usize>,
    /// Comma-separated list.
    #[arg(long)]
    rho: Option<String>,
    /// exact, empirical:N or file:PATH.
    #[arg(long)]
    moments: Option<String>,
    /// Sample sizes, comma-separated (sweep).
    #[arg(long)]
    samples: Option<String>,
    /// `7`, `1,2,3` or `0..20`.
    #[arg(long, alias = "seed")]
    seeds: Option<String>,
    /// Index-set size.
    #[arg(long = "H")]
    h: Option<usize>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    omega_floor: Option<f64>,
    #[arg(long)]
    diag_margin: Option<f64>,
    /// all-triples or partitioned.
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    rank_tol: Option<f64>,
    /// auto, qr or gram.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Abort on the first failed numerical check.
    #[arg(long)]
    strict: bool,
    /// Reject rho >= 1/n.
    #[arg(long)]
    strict_rho: bool,
    #[arg(long)]
    psd_repair: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to MOMGMM_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(m) = &self.mode {
            c.mode = m.parse()?;
        }
        if self.zero_mean {
            c.mode = momgmm_core::gmm::MeanMode::ZeroMean;
        }
        if self.general {
            c.mode = momgmm_core::gmm::MeanMode::General;
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = &self.rho {
            c.rho = parse_list(v, "rho")?;
        }
        if let Some(v) = &self.moments {
            c.moments = v.clone();
        }
        if let Some(v) = &self.samples {
            c.samples = v
                .split(',')
                .map(|s| parse_count(s.trim()).ok_or_else(|| CliError::Config(format!("bad sample size '{s}'"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.seeds {
            c.seeds = parse_seeds(v)?;
        }
        if self.h.is_some() {
            c.h = self.h;
        }
        if let Some(v) = &self.preset {
            c.preset = v.clone();
        }
        if self.omega_floor.is_some() {
            c.omega_floor = self.omega_floor;
        }
        if let Some(v) = self.diag_margin {
            c.diag_margin = v;
        }
        if let Some(v) = &self.selection {
            c.selection = v.parse()?;
        }
        if self.rank_tol.is_some() {
            c.rank_tol = self.rank_tol;
        }
        if let Some(v) = &self.solver {
            c.solver = v.clone();
        }
        if self.restarts.is_some() {
            c.restarts = self.restarts;
        }
        c.strict |= self.strict;
        c.strict_rho |= self.strict_rho;
        c.psd_repair |= self.psd_repair;
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        run::init_workers(c.workers)?;
        Ok(c)
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { common, write_moments } => commands::gen(&common.resolve()?, write_moments),
        Command::Learn { common, instance } => commands::learn(&common.resolve()?, instance.as_deref()),
        Command::Diagnose { common } => commands::diagnose(&common.resolve()?).map(|_| ()),
        Command::Sweep { common } => commands::sweep(&common.resolve()?),
        Command::Fixture { which: Fixture::Counterexample { out } } => {
            let mut cfg = ExperimentConfig::default();
            if let Some(o) = out {
                cfg.out = o;
            }
            commands::fixture_counterexample(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
