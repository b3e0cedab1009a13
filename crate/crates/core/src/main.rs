use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use d2d_csma::cli::{self, load_config, parse_pa_grid, parse_policies, ConfigError, ExperimentConfig};
use d2d_csma::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// Bidding-aided Matérn CSMA scheduling simulator for D2D caching networks.
///
/// Without a subcommand, runs the configured policy × MAP sweep and writes a
/// CSV report.
#[derive(Debug, Parser)]
#[command(name = "d2d-csma", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML experiment config; missing keys take the reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Report CSV path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Also dump realization 0 of every policy next to the report.
    #[arg(long)]
    snapshot: bool,

    /// Comma-separated policies: random, matern, bidding_matern, bid_ordering.
    #[arg(long)]
    policies: Option<String>,

    /// MAP grid as start:stop:step (inclusive).
    #[arg(long = "pa-grid")]
    pa_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a report into one (p_A, mean_rate, stderr) series per policy.
    Plotdata {
        /// Report CSV written by a sweep.
        report: PathBuf,
        /// Directory for the `<policy>.csv` series.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn configure(args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(list) = &args.policies {
        config.policies = parse_policies(list)?;
    }
    if let Some(grid) = &args.pa_grid {
        config.pa_grid = parse_pa_grid(grid)?;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: RunArgs) -> ExitCode {
    let config = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let Some(out) = args.out else {
        eprintln!("error: --out <path> is required");
        return ExitCode::from(EXIT_CONFIG);
    };
    match cli::run(&config, &out, args.snapshot) {
        Ok(rows) => {
            eprintln!(
                "{:<15} {:>5} {:>12} {:>10} {:>8} {:>12}",
                "policy", "p_A", "mean_rate", "stderr", "served", "served_rate"
            );
            for r in &rows {
                eprintln!(
                    "{:<15} {:>5.2} {:>12.6} {:>10.2e} {:>8.4} {:>12.6}",
                    r.policy, r.p_a, r.mean_rate, r.stderr, r.served_fraction, r.served_mean_rate
                );
            }
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(Error::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Some(Command::Plotdata { report, out_dir }) => match cli::emit_plotdata(&report, &out_dir) {
            Ok(files) if files.is_empty() => {
                eprintln!("warning: {} contains no rows; nothing written", report.display());
                ExitCode::SUCCESS
            }
            Ok(files) => {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_RUNTIME)
            }
        },
        None => run(cli.run),
    }
}
