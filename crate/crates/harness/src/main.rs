use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chemcomp_harness::{replay, run, ExperimentConfig, HarnessError, Kind, Result};
use clap::{Args, Parser, Subcommand};

/// Run chemical-computer experiments and write their outputs.
#[derive(Parser)]
#[command(name = "chemcomp", version)]
struct Cli {
    /// Print nothing but errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count input and chemical states of a square machine.
    Count(Common),
    /// One-dimensional chemical automaton raster.
    Cca1d(Common),
    /// Chemit population dynamics on a torus.
    Cca2d(Common),
    /// Hybrid QUBO solver runs.
    Solve(Common),
    /// Exact success probabilities of the Type-2 solver.
    Markov(Common),
    /// Decode synthetic colour traces through the chemical clock.
    ClockDemo(Common),
    /// Run any config; the kind comes from the file.
    Run(Common),
    /// Re-run a manifest and compare every output.
    Replay {
        manifest: PathBuf,
        /// Directory for the fresh outputs; defaults to `<manifest dir>/replay`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independent replicas.
    #[arg(long)]
    replicas: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "error"
    } else {
        "warn"
    }))
    .init();
    match execute(cli.command, cli.quiet) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command, quiet: bool) -> Result<()> {
    let (kind, common) = match command {
        Command::Count(c) => (Some(Kind::Count), c),
        Command::Cca1d(c) => (Some(Kind::Cca1d), c),
        Command::Cca2d(c) => (Some(Kind::Cca2d), c),
        Command::Solve(c) => (Some(Kind::Solve), c),
        Command::Markov(c) => (Some(Kind::Markov), c),
        Command::ClockDemo(c) => (Some(Kind::ClockDemo), c),
        Command::Run(c) => (None, c),
        Command::Replay { manifest, out } => {
            let out =
                out.unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).join("replay"));
            let report = replay(&manifest, &out)?;
            if !report.is_identical() {
                return Err(HarnessError::Mismatch(report.mismatches.join("; ")));
            }
            if !quiet {
                println!("{} outputs identical", report.checked);
            }
            return Ok(());
        }
    };
    let mut cfg = match (&common.config, kind) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(k)) => ExperimentConfig::new(k),
        (None, None) => {
            return Err(HarnessError::Config {
                path: "--config".into(),
                message: "`run` needs a config file".into(),
            })
        }
    };
    if let Some(k) = kind {
        if cfg.kind != k {
            return Err(HarnessError::Config {
                path: "kind".into(),
                message: format!("config is `{}`, command is `{}`", cfg.kind.name(), k.name()),
            });
        }
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.replicas {
        cfg.replicas = r;
    }
    let out = common
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}", cfg.kind.name(), cfg.seed)));
    let outcome = run(&cfg, &out)?;
    if !quiet {
        print!("{}", outcome.report);
        println!(
            "{} files written to {}",
            outcome.manifest.outputs.len(),
            out.display()
        );
    }
    Ok(())
}
