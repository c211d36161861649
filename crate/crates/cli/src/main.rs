use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use terasim::config::{parse_config, SimulationConfig};
use terasim::io::OutputSet;
use terasim::sim::{self, RunSummary};
use terasim::Error;

#[derive(Parser)]
#[command(name = "terasim", version, about = "Wideband THz UM-MIMO channel simulator")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress the stdout summary.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Absorption coefficient K(f) of all models over the [absorb] grid.
    Absorb,
    /// Time-invariant channel tensors and statistics.
    Channel,
    /// Time-variant channel tensors and the fading ACF.
    Tv,
    /// Ergodic capacity samples and the analytical bound.
    Capacity,
    /// Recompute delay statistics from a tensor file.
    Stats {
        /// Tensor written by `channel` or `tv`.
        tensor: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Absorb => "absorb",
            Command::Channel => "channel",
            Command::Tv => "tv",
            Command::Capacity => "capacity",
            Command::Stats { .. } => "stats",
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

fn load(cli: &Cli) -> terasim::Result<SimulationConfig> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => terasim::config::parse_config_str("", std::path::Path::new("<defaults>"), std::path::Path::new("."))?,
    };
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.run.out_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> terasim::Result<RunSummary> {
    let cfg = load(cli)?;
    let seed = cfg.run.seed;
    let mut out = OutputSet::new();
    let mut inputs = Vec::new();
    let mut summary = match &cli.command {
        Command::Absorb => sim::run_absorb(&cfg, &mut out)?,
        Command::Channel => sim::run_channel(&cfg, seed, &mut out)?,
        Command::Tv => sim::run_tv(&cfg, seed, &mut out)?,
        Command::Capacity => sim::run_capacity(&cfg, seed, &mut out)?,
        Command::Stats { tensor } => {
            inputs.push(tensor.clone());
            sim::run_stats(tensor, &cfg.run.out_dir, &mut out)?
        }
    };
    let prov = sim::write_provenance(
        &cfg.run.out_dir,
        cli.command.name(),
        seed,
        &cfg.source,
        &inputs,
        &summary.outputs,
        &mut out,
    )?;
    summary.outputs.push(prov);
    out.commit();
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(s) => {
            if !cli.quiet {
                for (k, v) in &s.report {
                    println!("{k} = {v}");
                }
                for p in &s.outputs {
                    println!("wrote {}", p.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
