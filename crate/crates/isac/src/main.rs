use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isac::{AppError, Command, ExperimentConfig, Overrides};

/// Default output directory when neither --out nor run.out_dir is given.
const OUT_DIR_ENV: &str = "ISAC_OUT_DIR";

#[derive(Parser)]
#[command(name = "isac", version, about = "Interference-resilient OFDM waveform design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design one waveform and flatten its envelope
    Design(Args),
    /// BER of the proposed and HSAPA designs over an SNR or ISR sweep
    BerSweep(Args),
    /// PAPR and CVE CCDFs of optimized versus random reserved phases
    Ccdf(Args),
    /// Residual traces for adaptive and fixed penalty policies
    Convergence(Args),
    /// Initial-selection cases and the HSAPA baseline side by side
    Compare(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment config (TOML); omitted means the reference scenario
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: run.out_dir, then $ISAC_OUT_DIR, then ./out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of Monte Carlo trials
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Design(a) => (Command::Design, a),
        Cmd::BerSweep(a) => (Command::BerSweep, a),
        Cmd::Ccdf(a) => (Command::Ccdf, a),
        Cmd::Convergence(a) => (Command::Convergence, a),
        Cmd::Compare(a) => (Command::Compare, a),
    };
    match execute(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command, args: Args) -> Result<(), AppError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: args.seed,
        trials: args.trials,
        threads: args.threads,
        out_dir: args.out,
    });
    let out = cfg
        .run
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = isac::run(cmd, &cfg, &out)?;
    for line in &report.lines {
        println!("{line}");
    }
    println!("wrote {}", report.manifest.display());
    Ok(())
}
