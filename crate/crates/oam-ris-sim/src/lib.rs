//! Sum-rate simulator for multi-user vortex-beam downlinks steered by a
//! reconfigurable reflecting surface.
//!
//! A transmit ring array launches several orbital-angular-momentum modes per
//! user, a reflecting panel with tunable per-element phases relays them past
//! the dominant blockage, and each user recovers its modes with a small
//! receive ring. The crate covers the full loop:
//!
//! - [`geometry`]:ring/panel element placement and random user poses,
//! - [`channel`]:free-space line-of-sight links and the mode-domain
//!   effective channel,
//! - [`precoder`]:the three-layer transmit design (inter-user nulling,
//!   per-user mode equalization, water-filling power loading) plus classic
//!   linear baselines,
//! - [`ris_opt`]:closed-form per-element reflector phase updates and the
//!   alternating optimization driver,
//! - [`metrics`]:per-stream SINR, sum rate, and log-det capacity,
//! - [`schemes`]:named end-to-end transmission schemes for comparison,
//! - [`config`] / [`runner`]:config parsing, seeded Monte Carlo sweeps,
//!   and CSV output for the `simulate` binary.

pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod numerics;
pub mod precoder;
pub mod ris_opt;
pub mod runner;
pub mod schemes;

pub use channel::{
    assemble_links, effective_channel, stacked_channel, ChannelSet, ReflectionPattern,
};
pub use config::{apply_sweep_value, load_config, SweepSpec, SweepVariable, SystemConfig};
pub use error::{Error, Result};
pub use geometry::UserPose;
pub use metrics::{evaluate, RateReport};
pub use numerics::{CMat, CVec};
pub use precoder::PrecoderStack;
pub use ris_opt::{alternate, ConvergenceTrace, StopReason};
pub use runner::{run_sweep, write_csv, write_traces, ResultRecord};
pub use schemes::{draw_scenario, run_scheme, SchemeKind, SchemeOutcome};
