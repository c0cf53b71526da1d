//! `weaksync`: analyze communication graphs, design the adaptive
//! synchronization protocol, simulate the closed loop, and verify the
//! spectral certificates.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure, 3 property
//! violation.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

mod commands;
mod failure;
mod manifest;
mod scenario;
mod svg;

use failure::Failure;

#[derive(Parser)]
#[command(name = "weaksync", version, about = "Adaptive synchronization protocols on directed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report bicomponents, basic flags, spanning-tree verdict, and the
    /// mixing-coefficient matrix of an edge-list graph.
    Analyze {
        /// Edge-list file: first line N, then `source target weight`.
        graph: PathBuf,
    },
    /// Solve the Riccati design equation and print P, K, M.
    Gain {
        /// State map A (matrix text file).
        #[arg(long = "A")]
        a: PathBuf,
        /// Input map B (matrix text file).
        #[arg(long = "B")]
        b: PathBuf,
        /// Also save P.mat, K.mat, M.mat into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a scenario file, or every *.toml scenario in a directory
    /// (bounded by WEAKSYNC_THREADS).
    Simulate {
        /// Scenario file or batch directory.
        scenario: PathBuf,
        /// Output directory for CSV and manifest files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Additionally emit minimal SVG line plots per run.
        #[arg(long)]
        svg: bool,
    },
    /// Run the certificate suites on a graph file or on random strongly
    /// connected graphs.
    Verify {
        /// Edge-list file; non-strongly-connected graphs are condensed
        /// and each basic bicomponent is checked.
        graph: Option<PathBuf>,
        /// Random mode: max size N, graph count, RNG seed.
        #[arg(long, num_args = 3, value_names = ["N", "COUNT", "SEED"], conflicts_with = "graph")]
        random: Option<Vec<u64>>,
        /// Monotonicity trials per component.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// RNG seed for the trials in file mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { graph } => commands::analyze::run(&graph),
        Command::Gain { a, b, out } => commands::gain::run(&a, &b, out.as_deref()),
        Command::Simulate { scenario, out, svg } => commands::simulate::run(&scenario, &out, svg),
        Command::Verify {
            graph,
            random,
            trials,
            seed,
        } => match (graph, random) {
            (Some(path), None) => commands::verify::run_file(&path, trials, seed),
            (None, Some(params)) => commands::verify::run_random(
                params[0] as usize,
                params[1] as usize,
                params[2],
                trials,
            ),
            _ => Err(Failure::Input(
                "verify needs either a graph file or --random N COUNT SEED".into(),
            )),
        },
    }
}

fn main() {
    // Die quietly when stdout is a closed pipe (`weaksync analyze | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(failure) = dispatch(cli) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.code());
    }
}
