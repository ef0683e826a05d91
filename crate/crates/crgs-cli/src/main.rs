//! `crgs` — batch front-end for gate-set design and verification: optimize a
//! pulse library, sweep bound grids or coupling scales, simulate circuits,
//! run benchmark protocols, and calibrate amplitudes against the simulator.

mod cmds;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmds::EXIT_USAGE;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "crgs", about = "Crosstalk-robust gate-set design and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output` dir or `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = library default).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve (or roll out) a gate set and write the pulse library.
    Optimize,
    /// Pareto bound grid or coupling co-design table.
    Sweep,
    /// Simulate a circuit file against a library.
    Simulate,
    /// Run a benchmark protocol: xy4, rc, rb, or tfim.
    Benchmark,
    /// Rough + fine amplitude calibration of every library envelope.
    Calibrate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(EXIT_USAGE as u8);
    };
    let mut cfg = match RunConfig::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if cfg.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
        {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from("."));

    let code = match cli.command {
        Command::Optimize => cmds::cmd_optimize(&cfg, &out),
        Command::Sweep => cmds::cmd_sweep(&cfg, &out),
        Command::Simulate => cmds::cmd_simulate(&cfg, &out),
        Command::Benchmark => cmds::cmd_benchmark(&cfg, &out),
        Command::Calibrate => cmds::cmd_calibrate(&cfg, &out),
    };
    ExitCode::from(code as u8)
}
