//! Named end-to-end transmission schemes for side-by-side comparison.
//!
//! Every scheme starts from the same drawn scenario (user poses, channels,
//! initial reflection pattern) and produces one [`SchemeOutcome`]:
//!
//! - `proposed`:the three-layer mode-domain precoder alternating with
//!   closed-form reflector phase updates,
//! - `uca-mimo-mrt` / `uca-mimo-zf` / `uca-mimo-mmse`:classic linear
//!   precoders on the antenna-domain composite channel, alternating with the
//!   same reflector update,
//! - `random-phase-oam`:the three-layer precoder applied once under the
//!   initial (random) reflection pattern, with no phase optimization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    assemble_links, effective_channel, stacked_channel, ChannelSet, ReflectionPattern,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{ris_upa_positions, sample_user_poses, transmit_uca_positions};
use crate::metrics::{evaluate, RateReport};
use crate::numerics::CMat;
use crate::precoder::{baseline_precoder, design_precoder, BaselineKind};
use crate::ris_opt::{alternate, sweep, ConvergenceTrace, RisWorkspace, StopReason};

/// One selectable transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Three-layer mode-domain precoder plus reflector phase optimization.
    Proposed,
    /// Matched-filter precoding on the composite antenna channel.
    UcaMimoMrt,
    /// Zero-forcing precoding on the composite antenna channel.
    UcaMimoZf,
    /// Regularized zero-forcing precoding on the composite antenna channel.
    UcaMimoMmse,
    /// Three-layer precoder under the unoptimized random reflection pattern.
    RandomPhaseOam,
}

impl SchemeKind {
    /// Every scheme, in canonical presentation order.
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Proposed,
        SchemeKind::UcaMimoMrt,
        SchemeKind::UcaMimoZf,
        SchemeKind::UcaMimoMmse,
        SchemeKind::RandomPhaseOam,
    ];

    /// Stable identifier used in config files, CLI arguments, and CSV rows.
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Proposed => "proposed",
            SchemeKind::UcaMimoMrt => "uca-mimo-mrt",
            SchemeKind::UcaMimoZf => "uca-mimo-zf",
            SchemeKind::UcaMimoMmse => "uca-mimo-mmse",
            SchemeKind::RandomPhaseOam => "random-phase-oam",
        }
    }

    /// Parses the identifier produced by [`SchemeKind::name`].
    pub fn from_name(name: &str) -> Result<SchemeKind> {
        SchemeKind::ALL
            .into_iter()
            .find(|kind| kind.name() == name)
            .ok_or_else(|| {
                Error::config(
                    "scheme",
                    format!(
                        "unknown scheme '{name}' (expected one of: {})",
                        SchemeKind::ALL.map(SchemeKind::name).join(", ")
                    ),
                )
            })
    }
}

/// Everything a finished scheme run reports back.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    /// Rates and SINRs under the final channel/precoder pair.
    pub report: RateReport,
    /// Sum-rate history of the alternating loop.
    pub trace: ConvergenceTrace,
    /// Final reflection pattern.
    pub pattern: ReflectionPattern,
    /// Channel the final precoder was designed on (mode-domain for the
    /// vortex-beam schemes, antenna-domain for the classic baselines).
    pub channel: CMat,
    /// Final precoding matrix, one column per stream.
    pub weights: CMat,
}

/// Draws the randomized part of one trial: user poses and the initial
/// reflection pattern, in that fixed order, from a dedicated generator.
pub fn draw_scenario(cfg: &SystemConfig, seed: u64) -> Result<(ChannelSet, ReflectionPattern)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses = sample_user_poses(
        &mut rng,
        cfg.n_users,
        cfg.user_region_center,
        cfg.user_region_radius,
    );
    let tx = transmit_uca_positions(cfg.n_tx, cfg.r_t);
    let ris = ris_upa_positions(cfg.ris_center, cfg.m_y, cfg.m_z, cfg.d_y, cfg.d_z);
    let channels = assemble_links(cfg, &tx, &ris, &poses)?;
    let pattern = ReflectionPattern::random(&mut rng, channels.elements());
    Ok((channels, pattern))
}

/// Runs one scheme on a drawn scenario and reports the final state.
///
/// All schemes reuse the caller's `initial` pattern so that every scheme in
/// a comparison starts from the same reflector state. Runs that hit the
/// iteration cap rebuild the precoder under the last swept pattern, so the
/// report always describes a consistent channel/precoder pair (the trace
/// still ends at the rate measured on the final completed iteration).
pub fn run_scheme(
    kind: SchemeKind,
    cfg: &SystemConfig,
    channels: &ChannelSet,
    initial: &ReflectionPattern,
) -> Result<SchemeOutcome> {
    match kind {
        SchemeKind::Proposed => run_proposed(cfg, channels, initial),
        SchemeKind::UcaMimoMrt => run_baseline(BaselineKind::Mrt, cfg, channels, initial),
        SchemeKind::UcaMimoZf => run_baseline(BaselineKind::Zf, cfg, channels, initial),
        SchemeKind::UcaMimoMmse => run_baseline(BaselineKind::Mmse, cfg, channels, initial),
        SchemeKind::RandomPhaseOam => run_random_phase(cfg, channels, initial),
    }
}

fn run_proposed(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    initial: &ReflectionPattern,
) -> Result<SchemeOutcome> {
    let (stack, pattern, trace) = alternate(cfg, channels, initial)?;
    let channel = effective_channel(channels, &pattern);
    let weights = match trace.stop {
        StopReason::Converged => stack.weights,
        StopReason::MaxIterations => {
            design_precoder(&channel, cfg.n_users, cfg.sigma2, cfg.p_t)?.weights
        }
    };
    let report = evaluate(&channel, &weights, cfg.sigma2, cfg.n_users)?;
    Ok(SchemeOutcome {
        report,
        trace,
        pattern,
        channel,
        weights,
    })
}

fn run_random_phase(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    initial: &ReflectionPattern,
) -> Result<SchemeOutcome> {
    let channel = effective_channel(channels, initial);
    let stack = design_precoder(&channel, cfg.n_users, cfg.sigma2, cfg.p_t)?;
    let report = evaluate(&channel, &stack.weights, cfg.sigma2, cfg.n_users)?;
    let trace = ConvergenceTrace {
        rates: vec![report.sum_rate],
        stop: StopReason::Converged,
    };
    Ok(SchemeOutcome {
        report,
        trace,
        pattern: initial.clone(),
        channel,
        weights: stack.weights,
    })
}

fn run_baseline(
    kind: BaselineKind,
    cfg: &SystemConfig,
    channels: &ChannelSet,
    initial: &ReflectionPattern,
) -> Result<SchemeOutcome> {
    assert!(cfg.max_iters >= 1, "at least one iteration required");
    let mut pattern = initial.clone();
    let mut rates: Vec<f64> = Vec::new();
    for _ in 0..cfg.max_iters {
        let channel = stacked_channel(channels, &pattern);
        let weights = baseline_precoder(kind, &channel, cfg.p_t, cfg.sigma2)?;
        let report = evaluate(&channel, &weights, cfg.sigma2, cfg.n_users)?;
        rates.push(report.sum_rate);
        let n = rates.len();
        if n >= 2 && rates[n - 1] - rates[n - 2] <= cfg.eps {
            let trace = ConvergenceTrace {
                rates,
                stop: StopReason::Converged,
            };
            return Ok(SchemeOutcome {
                report,
                trace,
                pattern,
                channel,
                weights,
            });
        }
        let mut workspace = RisWorkspace::new(
            &channels.receive_factors,
            &channels.tx_to_ris,
            &weights,
            &pattern,
            cfg.sigma2,
        )?;
        sweep(&mut workspace, &mut pattern)?;
    }
    let channel = stacked_channel(channels, &pattern);
    let weights = baseline_precoder(kind, &channel, cfg.p_t, cfg.sigma2)?;
    let report = evaluate(&channel, &weights, cfg.sigma2, cfg.n_users)?;
    let trace = ConvergenceTrace {
        rates,
        stop: StopReason::MaxIterations,
    };
    Ok(SchemeOutcome {
        report,
        trace,
        pattern,
        channel,
        weights,
    })
}
