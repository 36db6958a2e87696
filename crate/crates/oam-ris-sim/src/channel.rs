//! Free-space line-of-sight links and the mode-domain effective channel.
//!
//! Every individual path is a pure line-of-sight ray: amplitude
//! `gain * wavelength / (4 pi d)` and phase `-2 pi d / wavelength`. The
//! transmit side spreads each user's streams over vortex modes with a
//! partial inverse-DFT matrix; the receive side despirals with its adjoint.
//! Collapsing both sides leaves one square effective channel per reflector
//! phase pattern, which is what the precoder and reflector stages work on.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, UserPose};
use crate::numerics::{ensure_finite, CMat, CVec};
use crate::config::SystemConfig;

/// Per-element reflection coefficients of the panel, all unit modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionPattern {
    /// One coefficient per panel element, `|phases[m]| = 1`.
    pub phases: CVec,
}

impl ReflectionPattern {
    /// Neutral pattern: every element reflects with zero phase shift.
    pub fn uniform(len: usize) -> Self {
        ReflectionPattern {
            phases: CVec::from_element(len, Complex64::new(1.0, 0.0)),
        }
    }

    /// Random pattern with phases uniform on `[0, 2 pi)`.
    pub fn random(rng: &mut impl Rng, len: usize) -> Self {
        ReflectionPattern {
            phases: CVec::from_fn(len, |_, _| {
                Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
            }),
        }
    }

    /// Number of panel elements.
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    /// True when the pattern covers zero elements.
    pub fn is_empty(&self) -> bool {
        self.phases.len() == 0
    }

    /// Returns `m` with column `j` multiplied by phase `j`, i.e.
    /// `m * diag(phases)` without materializing the diagonal.
    pub fn scale_columns(&self, m: &CMat) -> CMat {
        let mut scaled = m.clone();
        for (j, phi) in self.phases.iter().enumerate() {
            for x in scaled.column_mut(j).iter_mut() {
                *x *= phi;
            }
        }
        scaled
    }
}

/// Every link matrix of one scenario, plus the two cached products the
/// optimizer consumes.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// Transmit ring to panel, panel elements on the rows.
    pub tx_to_ris: CMat,
    /// Panel to each user's receive ring, one matrix per user.
    pub ris_to_user: Vec<CMat>,
    /// Receive-side mode matrix of one ring (columns are modes).
    pub mode_matrix: CMat,
    /// Block-diagonal lift of `mode_matrix` across all users.
    pub mode_stack: CMat,
    /// Mode-combined receive side: user blocks of `mode_matrix^H * ris_to_user`
    /// stacked vertically. Column `m` is the receive response of element `m`.
    pub receive_factors: CMat,
    /// Mode-expanded transmit side: `tx_to_ris * mode_stack`. Row `m` is the
    /// transmit response seen by element `m`.
    pub transmit_factors: CMat,
}

impl ChannelSet {
    /// Number of panel elements.
    pub fn elements(&self) -> usize {
        self.tx_to_ris.nrows()
    }

    /// Total stream count across users.
    pub fn streams_total(&self) -> usize {
        self.receive_factors.nrows()
    }
}

/// Free-space line-of-sight matrix from `sources` to `destinations`:
/// entry `(i, j)` covers the path from source `j` to destination `i`.
///
/// Coincident points are rejected; the free-space law diverges there.
pub fn los_channel(
    sources: &[Vector3<f64>],
    destinations: &[Vector3<f64>],
    wavelength: f64,
    gain: f64,
) -> Result<CMat> {
    let mut h = CMat::zeros(destinations.len(), sources.len());
    for (j, src) in sources.iter().enumerate() {
        for (i, dst) in destinations.iter().enumerate() {
            let distance = (dst - src).norm();
            if distance <= 0.0 {
                return Err(Error::ZeroDistance {
                    source_index: j,
                    destination_index: i,
                });
            }
            let amplitude = gain * wavelength / (4.0 * PI * distance);
            h[(i, j)] = Complex64::from_polar(amplitude, -TAU * distance / wavelength);
        }
    }
    Ok(h)
}

/// Receive-side mode matrix: `antennas x streams`, column `k` (1-based mode
/// index) has entries `exp(i 2 pi k l / antennas)` over antenna index `l`.
///
/// The columns are orthogonal with squared norm `antennas` as long as
/// `streams <= antennas`; beyond that the modes alias and the request is
/// rejected.
pub fn oam_mode_matrix(antennas: usize, streams: usize) -> Result<CMat> {
    if streams > antennas {
        return Err(Error::ModesNotSeparable { streams, antennas });
    }
    Ok(CMat::from_fn(antennas, streams, |l, k| {
        Complex64::from_polar(1.0, TAU * (k + 1) as f64 * l as f64 / antennas as f64)
    }))
}

/// Builds every link of one scenario from the element positions and user
/// poses, along with the cached mode-domain factors.
pub fn assemble_links(
    cfg: &SystemConfig,
    tx_positions: &[Vector3<f64>],
    ris_positions: &[Vector3<f64>],
    poses: &[UserPose],
) -> Result<ChannelSet> {
    let tx_to_ris = los_channel(tx_positions, ris_positions, cfg.wavelength, cfg.beta)?;
    let mode_matrix = oam_mode_matrix(cfg.n_rx, cfg.streams_per_user)?;
    let mut ris_to_user = Vec::with_capacity(poses.len());
    for pose in poses {
        let rx = geometry::receiver_uca_positions(pose, cfg.n_rx, cfg.r_r)?;
        ris_to_user.push(los_channel(ris_positions, &rx, cfg.wavelength, cfg.beta)?);
    }

    let users = poses.len();
    let streams = cfg.streams_per_user;
    let elements = ris_positions.len();
    let mut receive_factors = CMat::zeros(users * streams, elements);
    let despiral = mode_matrix.adjoint();
    for (k, link) in ris_to_user.iter().enumerate() {
        receive_factors
            .rows_mut(k * streams, streams)
            .copy_from(&(&despiral * link));
    }

    let identity = CMat::identity(users, users);
    let mode_stack = identity.kronecker(&mode_matrix);
    let transmit_factors = &tx_to_ris * &mode_stack;

    ensure_finite("assembled links", &receive_factors)?;
    ensure_finite("assembled links", &transmit_factors)?;
    Ok(ChannelSet {
        tx_to_ris,
        ris_to_user,
        mode_matrix,
        mode_stack,
        receive_factors,
        transmit_factors,
    })
}

/// Mode-domain effective channel for one reflection pattern: the sum over
/// panel elements of `phases[m] * receive_column(m) * transmit_row(m)`,
/// evaluated as a phase-scaled matrix product.
pub fn effective_channel(channels: &ChannelSet, pattern: &ReflectionPattern) -> CMat {
    debug_assert_eq!(pattern.len(), channels.elements());
    pattern.scale_columns(&channels.receive_factors) * &channels.transmit_factors
}

/// Antenna-domain composite channel for one reflection pattern: receive-side
/// mode projection applied, but transmit antennas left raw so precoders that
/// bypass the transmit mode stack can act on individual elements.
pub fn stacked_channel(channels: &ChannelSet, pattern: &ReflectionPattern) -> CMat {
    debug_assert_eq!(pattern.len(), channels.elements());
    pattern.scale_columns(&channels.receive_factors) * &channels.tx_to_ris
}
