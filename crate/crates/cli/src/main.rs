use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latcrc::sim::{run, Engine, ExperimentKind, SimConfig};
use latcrc::Error;

#[derive(Parser)]
#[command(name = "latcrc", version, about = "Lattice code retry decoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-user one-shot or retry simulation.
    SimulateSu(Common),
    /// Search receive scalings for retry decoding.
    SearchAlpha(Common),
    /// Compute-and-forward relay with one-shot and retry decoding.
    SimulateCf(Common),
    /// Analytic error bound against the simulated genie decoder.
    Bound(Common),
    /// Undetected error probability of searched CRC polynomials.
    Pud(Common),
    /// Choose the CRC length that maximizes the SNR gain.
    OptimizeCrc(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Directory for the CSV and manifest; the CSV goes to stdout if omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores. Results do not depend on it.
    #[arg(short, long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated SNR list in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
}

impl Command {
    fn parts(&self) -> (&Common, &'static [ExperimentKind]) {
        use ExperimentKind::*;
        match self {
            Command::SimulateSu(c) => (c, &[SuOneshot, SuRetry]),
            Command::SearchAlpha(c) => (c, &[AlphaSearch]),
            Command::SimulateCf(c) => (c, &[Cf]),
            Command::Bound(c) => (c, &[Bound]),
            Command::Pud(c) => (c, &[Pud]),
            Command::OptimizeCrc(c) => (c, &[OptimizeCrc]),
        }
    }
}

fn load(common: &Common, allowed: &[ExperimentKind]) -> Result<SimConfig, Error> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(snr) = &common.snr {
        cfg.snr_db = snr.clone();
    }
    if !allowed.contains(&cfg.kind) {
        let names: Vec<&str> = allowed.iter().map(|k| k.name()).collect();
        return Err(Error::Config(format!("kind {} does not belong here; expected {}", cfg.kind.name(), names.join(" or "))));
    }
    cfg.validate()?;
    // Resolving the code up front reports unknown lattices as config errors.
    let base = common.config.parent().unwrap_or(Path::new("."));
    cfg.code.build(base)?;
    cfg.crc()?;
    Ok(cfg)
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::UnknownLattice(_) | Error::Parse(_) | Error::OddNesting | Error::InvalidCode(_))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, allowed) = cli.command.parts();
    let cfg = match load(common, allowed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let base = common.config.parent().unwrap_or(Path::new("."));
    let engine = Engine::new(common.workers);
    let result = match run(&cfg, base, &engine) {
        Ok(r) => r,
        Err(e) if is_config_error(&e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match &common.out {
        Some(dir) => match result.write(&cfg, engine.workers(), dir) {
            Ok((csv, manifest)) => {
                println!("{}", csv.display());
                println!("{}", manifest.display());
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        None => print!("{}", result.csv),
    }
    ExitCode::SUCCESS
}
