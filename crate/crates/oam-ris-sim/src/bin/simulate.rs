//! Command-line sweep driver.
//!
//! Loads a scenario config, runs a seeded Monte Carlo sweep of the selected
//! schemes over one variable, and writes the results as a flat CSV (plus
//! optional per-run convergence traces). All randomness derives from the
//! master seed, so identical invocations write identical files.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use oam_ris_sim::config::load_config;
use oam_ris_sim::runner::{run_sweep, write_csv, write_traces};
use oam_ris_sim::schemes::SchemeKind;
use oam_ris_sim::{Error, Result, SweepSpec, SweepVariable};

/// Environment variable that overrides the config file's master seed; the
/// `--seed` flag overrides both.
const SEED_ENV: &str = "OAM_SIM_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    version,
    about = "Monte Carlo sum-rate sweeps for reflector-aided vortex-beam downlinks"
)]
struct Args {
    /// Scenario config file (flat `key = value` lines, `#` comments).
    #[arg(long)]
    config: PathBuf,

    /// Swept variable: p_t_db, m_elements, n_tx, or k_users.
    #[arg(long)]
    sweep: String,

    /// Comma-separated, strictly increasing sweep values.
    #[arg(long)]
    values: String,

    /// Comma-separated schemes, e.g. proposed,uca-mimo-mmse,random-phase-oam.
    #[arg(long)]
    schemes: String,

    /// Independent scenario draws per sweep value.
    #[arg(long)]
    trials: usize,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,

    /// Directory for per-run convergence trace files (created if missing).
    #[arg(long)]
    trace_dir: Option<PathBuf>,

    /// Master seed; overrides both the config file and OAM_SIM_SEED.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|token| {
            let token = token.trim();
            token
                .parse::<f64>()
                .map_err(|_| Error::config("values", format!("not a number: '{token}'")))
        })
        .collect()
}

fn parse_schemes(text: &str) -> Result<Vec<SchemeKind>> {
    text.split(',')
        .map(|token| SchemeKind::from_name(token.trim()))
        .collect()
}

fn run(args: &Args) -> Result<()> {
    let (mut cfg, _) = load_config(&args.config)?;
    if let Ok(text) = std::env::var(SEED_ENV) {
        cfg.seed = text.trim().parse().map_err(|_| {
            Error::config(SEED_ENV, format!("not a valid 64-bit seed: '{text}'"))
        })?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let spec = SweepSpec {
        variable: SweepVariable::from_name(&args.sweep)?,
        values: parse_values(&args.values)?,
        schemes: parse_schemes(&args.schemes)?,
        trials: args.trials,
    };

    let started = Instant::now();
    let records = run_sweep(&cfg, &spec)?;
    let elapsed = started.elapsed().as_secs_f64();

    write_csv(&records, &args.out)?;
    if let Some(dir) = &args.trace_dir {
        write_traces(&records, dir)?;
    }
    eprintln!(
        "wrote {} records to {} in {elapsed:.1} s (seed {})",
        records.len(),
        args.out.display(),
        cfg.seed
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
