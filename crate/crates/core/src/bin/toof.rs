use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use toof::bench::{aggregate, export_summary_csv, export_trace_csv, run_all, run_checks, RunConfig};
use toof::policy::Algorithm;
use toof::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "toof", about = "Task offloading with one-bit feedback: simulator and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm on every seed and write trace.csv and summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the configured seed list with this single seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Comma-separated subset of toof,greedy,round_robin,optimal.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the determinant identities, confidence coverage and regret bound.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the version.
    Version,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io { .. } => EXIT_CONFIG,
        Error::Numerics(_) | Error::InvalidArgument(_) => EXIT_NUMERIC,
    }
}

fn run(
    config: PathBuf,
    seed_override: Option<u64>,
    algorithms: Option<Vec<String>>,
    output: Option<PathBuf>,
) -> Result<(), Error> {
    let mut cfg = RunConfig::load(&config)?;
    if let Some(seed) = seed_override {
        cfg.seeds = vec![seed];
    }
    if let Some(names) = algorithms {
        cfg.algorithms = names
            .iter()
            .map(|n| n.trim().parse::<Algorithm>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(dir) = output {
        cfg.output_dir = dir;
    }
    cfg.validate()?;

    let episodes = run_all(&cfg)?;
    let summary = aggregate(&episodes)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::Io {
        path: cfg.output_dir.clone(),
        source: e,
    })?;
    let trace_path = cfg.output_dir.join("trace.csv");
    let summary_path = cfg.output_dir.join("summary.csv");
    export_trace_csv(&episodes, &trace_path)?;
    export_summary_csv(&summary, &summary_path)?;

    let t = summary.horizon as usize;
    println!("{:<12} {:>12} {:>12} {:>12}", "algorithm", "R(T)", "sd", "reward(T)");
    for s in &summary.algorithms {
        println!(
            "{:<12} {:>12.6} {:>12.6} {:>12.6}",
            s.algorithm.as_str(),
            s.mean_avg_regret[t - 1],
            s.std_avg_regret[t - 1],
            s.mean_avg_reward[t - 1]
        );
    }
    println!("wrote {} and {}", trace_path.display(), summary_path.display());
    Ok(())
}

fn check(config: PathBuf) -> Result<bool, Error> {
    let cfg = RunConfig::load(&config)?;
    let report = run_checks(&cfg)?;
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };

    let worst_rel = report
        .appendix
        .iter()
        .map(|(_, _, r)| r.worst_relative_error)
        .fold(0.0, f64::max);
    let worst_margin = report
        .appendix
        .iter()
        .map(|(_, _, r)| r.worst_sum_min_margin)
        .fold(f64::INFINITY, f64::min);
    println!(
        "{} appendix identities over {} episodes (worst telescoping rel. error {:.3e}, worst sum-min margin {:.6})",
        mark(report.appendix_ok()),
        report.appendix.len(),
        worst_rel,
        worst_margin
    );
    println!(
        "{} confidence coverage {:.4} (required {:.4})",
        mark(report.coverage_ok()),
        report.coverage_frac,
        report.required_frac
    );
    println!(
        "{} regret bound satisfied {:.4} (required {:.4})",
        mark(report.bound_ok()),
        report.bound_frac,
        report.required_frac
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.command {
        Command::Run {
            config,
            seed_override,
            algorithms,
            output,
        } => run(config, seed_override, algorithms, output).map(|_| true),
        Command::Check { config } => check(config),
        Command::Version => {
            println!("toof {}", env!("CARGO_PKG_VERSION"));
            Ok(true)
        }
    };

    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
