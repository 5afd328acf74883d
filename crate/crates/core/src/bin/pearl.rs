use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pearl::cli::{cmd_analyze, cmd_report, cmd_simulate, load_config, report_out_dir, CliError};

#[derive(Parser)]
#[command(name = "pearl", version, about = "Simulate and analyze adaptive nudging trials")]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a synthetic trial and export its logs.
    Simulate {
        /// TOML trial config; defaults apply to anything it leaves out.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute period summaries, difference-in-differences and GEE tables from a log directory.
    Analyze {
        log_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write plot-ready daily means and a text summary from analysis results.
    Report {
        results_dir: PathBuf,
        /// Defaults to the results directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let config = load_config(config.as_deref(), seed)?;
            cmd_simulate(&config, &out, cli.quiet).map(|_| ())
        }
        Command::Analyze { log_dir, out } => cmd_analyze(&log_dir, &out, cli.quiet).map(|_| ()),
        Command::Report { results_dir, out } => {
            let out = report_out_dir(&results_dir, out);
            cmd_report(&results_dir, &out, cli.quiet).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("PEARL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
