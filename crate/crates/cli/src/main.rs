use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use rydmirror::output::config_hash;
use rydmirror::scenario::{execute, execute_with, oracle_comparison, trajectory_ensemble};
use rydmirror::validation::{write_trajectories, McwfSettings};
use rydmirror::{Error, Result, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "sim", version, about = "Rydberg-EIT atomic mirror simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunOptions {
    /// TOML scenario configuration; scenario defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a figure pipeline: fig1e, fig2a, fig2b, fig3a, fig3b, fig4 or custom.
    Run {
        scenario: String,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Parse and validate a configuration file.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Print the configuration with defaults filled in.
        #[arg(long)]
        dump: bool,
    },
    /// Compare the truncated solver with the dense master equation for 1 to 3 atoms.
    Oracle {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        n: u8,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Quantum-jump ensemble of the two-level array.
    Mcwf {
        /// Overrides run.trajectories.
        #[arg(long)]
        trajectories: Option<usize>,
        #[command(flatten)]
        opts: RunOptions,
    },
}

fn load(
    path: Option<&PathBuf>,
    fallback: ScenarioConfig,
    opts: &RunOptions,
) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => fallback,
    };
    if let Some(seed) = opts.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.run.output_dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(k) = workers {
        if k == 0 {
            return Err(Error::ConfigValue {
                key: "workers".into(),
                message: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Backend {
                context: "thread pool",
                detail: e.to_string(),
            })?;
    }
    Ok(())
}

fn report(csv: &Path, sidecar: &Path, summary: Option<&serde_json::Value>) {
    println!("wrote {}", csv.display());
    println!("wrote {}", sidecar.display());
    if let Some(s) = summary {
        println!("{}", serde_json::to_string_pretty(s).unwrap_or_default());
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, opts } => {
            let s: Scenario = scenario.parse()?;
            let cfg = load(opts.config.as_ref(), s.default_config(), &opts)?;
            init_workers(opts.workers)?;
            info!("running {} into {}", s.name(), cfg.run.output_dir);
            let (out, w) = execute(s, &cfg, Path::new(&cfg.run.output_dir))?;
            report(&w.csv, &w.sidecar, out.summary.as_ref());
        }
        Command::Validate { config, dump } => {
            let cfg = ScenarioConfig::load(&config)?;
            cfg.validate()?;
            if dump {
                print!("{}", cfg.to_toml());
            } else {
                println!("{}: ok (sha256 {})", config.display(), config_hash(&cfg));
            }
        }
        Command::Oracle { n, opts } => {
            let cfg = load(opts.config.as_ref(), ScenarioConfig::default(), &opts)?;
            init_workers(opts.workers)?;
            let label = format!("oracle_n{n}");
            let (out, w) = execute_with(&label, &cfg, Path::new(&cfg.run.output_dir), || {
                oracle_comparison(&cfg, n as usize)
            })?;
            report(&w.csv, &w.sidecar, out.summary.as_ref());
        }
        Command::Mcwf { trajectories, opts } => {
            let mut cfg = load(opts.config.as_ref(), ScenarioConfig::default(), &opts)?;
            if let Some(t) = trajectories {
                cfg.run.trajectories = t;
            }
            cfg.validate()?;
            init_workers(opts.workers)?;
            let mut records = Vec::new();
            let (out, w) = execute_with("mcwf", &cfg, Path::new(&cfg.run.output_dir), || {
                let (out, recs) = trajectory_ensemble(&cfg, McwfSettings::default())?;
                records = recs;
                Ok(out)
            })?;
            let log_path = Path::new(&cfg.run.output_dir).join("trajectories.jsonl");
            write_trajectories(&log_path, &records)?;
            report(&w.csv, &w.sidecar, out.summary.as_ref());
            println!("wrote {}", log_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
