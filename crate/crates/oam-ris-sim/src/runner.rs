//! Seeded Monte Carlo sweep driver and CSV output.
//!
//! - every (sweep value, trial) cell derives its own seed from the master
//!   seed, so a cell's scenario does not depend on execution order, on the
//!   scheme list, or on how many other cells run,
//! - all schemes inside a cell share one drawn scenario (same user poses,
//!   same initial reflection pattern), which keeps scheme comparisons
//!   paired,
//! - a scenario draw that hits a numerical degeneracy is redrawn with a
//!   derived seed for the whole cell at once, preserving that pairing; a
//!   cell that stays degenerate past the redraw cap is reported with NaN
//!   rates instead of aborting the sweep,
//! - cells run in parallel; results serialize to one flat CSV plus optional
//!   per-run convergence trace files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{apply_sweep_value, SweepSpec, SweepVariable, SystemConfig};
use crate::error::{Error, Result};
use crate::schemes::{draw_scenario, run_scheme, SchemeKind};

/// Scenario redraws a cell may consume (beyond the first draw) before its
/// schemes are reported as failed.
pub const MAX_REDRAWS: usize = 10;

/// One scheme evaluated on one drawn scenario at one sweep point.
#[derive(Debug, Clone)]
pub struct ResultRecord {
    /// Scheme that produced the row.
    pub scheme: SchemeKind,
    /// Seed the scenario was drawn from (a derived seed, not the master).
    pub seed: u64,
    /// Swept parameter.
    pub variable: SweepVariable,
    /// Value of the swept parameter for this row.
    pub value: f64,
    /// Trial index within the sweep point, starting at 0.
    pub trial: usize,
    /// Final sum rate in bits/s/Hz; NaN when the cell stayed degenerate.
    pub sum_rate: f64,
    /// Final per-user rates in bits/s/Hz.
    pub per_user_rates: Vec<f64>,
    /// Completed outer iterations of the alternating loop.
    pub iterations: usize,
    /// True when the loop stopped on the rate threshold, not the cap.
    pub converged: bool,
    /// Reserved wall-clock column; always written as zero so repeated runs
    /// serialize to identical bytes.
    pub wall_ms: f64,
    /// Per-iteration sum rates (kept out of the flat CSV; see
    /// [`write_traces`]).
    pub trace: Vec<f64>,
}

/// Avalanche step of the split-mix generator; scrambles one 64-bit word.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a salt.
fn mix(state: u64, salt: u64) -> u64 {
    splitmix64(state ^ splitmix64(salt))
}

/// Seed of one (sweep value, trial) cell.
fn cell_seed(master: u64, value_idx: usize, trial: usize) -> u64 {
    mix(mix(master, value_idx as u64 + 1), trial as u64 + 1)
}

/// Runs every scheme of one cell on one drawn scenario.
fn try_cell(
    cfg: &SystemConfig,
    schemes: &[SchemeKind],
    variable: SweepVariable,
    value: f64,
    trial: usize,
    seed: u64,
) -> Result<Vec<ResultRecord>> {
    let (channels, initial) = draw_scenario(cfg, seed)?;
    let mut records = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let out = run_scheme(scheme, cfg, &channels, &initial)?;
        records.push(ResultRecord {
            scheme,
            seed,
            variable,
            value,
            trial,
            sum_rate: out.report.sum_rate,
            per_user_rates: out.report.per_user_rate,
            iterations: out.trace.iterations(),
            converged: out.trace.converged(),
            wall_ms: 0.0,
            trace: out.trace.rates,
        });
    }
    Ok(records)
}

/// Placeholder rows for a cell whose scenario stayed degenerate.
fn failed_records(
    cfg: &SystemConfig,
    schemes: &[SchemeKind],
    variable: SweepVariable,
    value: f64,
    trial: usize,
    seed: u64,
) -> Vec<ResultRecord> {
    schemes
        .iter()
        .map(|&scheme| ResultRecord {
            scheme,
            seed,
            variable,
            value,
            trial,
            sum_rate: f64::NAN,
            per_user_rates: vec![f64::NAN; cfg.n_users],
            iterations: 0,
            converged: false,
            wall_ms: 0.0,
            trace: Vec::new(),
        })
        .collect()
}

/// Runs one cell, redrawing the scenario on degeneracies.
///
/// Degenerate draws affect the whole cell: every scheme is rerun on the
/// redrawn scenario so the records stay paired. Non-degenerate errors
/// propagate, since they indicate a bug or a bad configuration rather than
/// an unlucky draw.
fn run_cell(
    cfg: &SystemConfig,
    schemes: &[SchemeKind],
    variable: SweepVariable,
    value: f64,
    trial: usize,
    cell: u64,
) -> Result<Vec<ResultRecord>> {
    for attempt in 0..=MAX_REDRAWS {
        let seed = if attempt == 0 {
            cell
        } else {
            mix(cell, attempt as u64)
        };
        match try_cell(cfg, schemes, variable, value, trial, seed) {
            Ok(records) => return Ok(records),
            Err(err) if err.is_degenerate() => {
                log::warn!(
                    "{} = {value}, trial {trial}: degenerate scenario under seed {seed} ({err}); redrawing",
                    variable.name(),
                );
            }
            Err(err) => return Err(err),
        }
    }
    log::warn!(
        "{} = {value}, trial {trial}: still degenerate after {MAX_REDRAWS} redraws; recording NaN",
        variable.name(),
    );
    Ok(failed_records(cfg, schemes, variable, value, trial, cell))
}

/// Runs the full sweep: every scheme at every value, `trials` scenarios per
/// value, cells in parallel.
///
/// Records come back grouped by (value, trial) cell in sweep order, with the
/// schemes of a cell in [`SweepSpec::schemes`] order. Output depends only
/// on the configuration and the master seed, never on thread scheduling.
pub fn run_sweep(base: &SystemConfig, spec: &SweepSpec) -> Result<Vec<ResultRecord>> {
    base.validate()?;
    spec.validate()?;
    let mut derived = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        derived.push(apply_sweep_value(base, spec.variable, value)?);
    }

    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.trials).map(move |t| (v, t)))
        .collect();
    let nested = cells
        .par_iter()
        .map(|&(value_idx, trial)| {
            run_cell(
                &derived[value_idx],
                &spec.schemes,
                spec.variable,
                spec.values[value_idx],
                trial,
                cell_seed(base.seed, value_idx, trial),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Serializes a float with enough digits to round-trip to the same value at
/// CSV precision; NaN serializes as `NaN`.
fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// Renders the flat CSV: one row per record, sorted by (value, scheme name,
/// seed); per-user rate columns are padded to the widest record so sweeps
/// over the user count stay rectangular.
fn csv_text(records: &[ResultRecord]) -> String {
    let mut order: Vec<&ResultRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.scheme.name().cmp(b.scheme.name()))
            .then_with(|| a.seed.cmp(&b.seed))
    });
    let user_cols = records
        .iter()
        .map(|r| r.per_user_rates.len())
        .max()
        .unwrap_or(0);

    let mut out = String::from("scheme,seed,variable,value,sum_rate");
    for k in 1..=user_cols {
        let _ = write!(out, ",rate_user_{k}");
    }
    out.push_str(",iterations,converged,wall_ms\n");

    for r in order {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.scheme.name(),
            r.seed,
            r.variable.name(),
            format_float(r.value),
            format_float(r.sum_rate),
        );
        for k in 0..user_cols {
            out.push(',');
            if let Some(&rate) = r.per_user_rates.get(k) {
                out.push_str(&format_float(rate));
            }
        }
        let _ = writeln!(out, ",{},{},{}", r.iterations, r.converged, format_float(r.wall_ms));
    }
    out
}

/// Writes the flat results CSV.
pub fn write_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    fs::write(path, csv_text(records)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one convergence trace file per record into `dir` (created if
/// missing), named `{scheme}_{variable}_{value}_{trial}.csv`, with the
/// 1-based iteration number and the sum rate measured at that iteration.
pub fn write_traces(records: &[ResultRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for r in records {
        let name = format!(
            "{}_{}_{}_{}.csv",
            r.scheme.name(),
            r.variable.name(),
            r.value,
            r.trial
        );
        let mut text = String::from("iteration,sum_rate\n");
        for (i, &rate) in r.trace.iter().enumerate() {
            let _ = writeln!(text, "{},{}", i + 1, format_float(rate));
        }
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}
