//! Closed-form per-element reflector phase updates and the alternating
//! optimization loop that couples them with the precoder.
//!
//! The reflector objective is the joint-decoding capacity
//! `log2 det(I + A A^H / sigma2)` where `A` sums one rank-one term per panel
//! element. Freezing the precoder and all but one phase turns the objective
//! into `log2` of an affine function of that phase, whose unit-modulus
//! maximizer has a closed form: the conjugate direction of a rank-one
//! eigenvalue. A sweep applies the update element by element; the outer loop
//! alternates sweeps with precoder rebuilds until the sum rate stops
//! improving.

use nalgebra::RowDVector;
use num_complex::Complex64;

use crate::channel::{effective_channel, ChannelSet, ReflectionPattern};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::metrics::evaluate;
use crate::numerics::{
    ensure_finite, log2_det_identity_plus_gram, rank_one_eigenvalue, CMat, CVec,
};
use crate::precoder::{design_precoder, PrecoderStack};

/// Cached factors for one run of phase updates under a frozen precoder.
///
/// The fields are exposed for inspection and oracle tests; treat them as
/// read-only, since [`RisWorkspace::element_update`] keeps `aggregate` in
/// sync with the pattern incrementally.
#[derive(Debug, Clone)]
pub struct RisWorkspace {
    /// Per-element receive columns (streams x elements).
    pub receive_factors: CMat,
    /// Transmit factors folded with the precoder covariance root
    /// (elements x precoder rows).
    pub weighted_factors: CMat,
    /// Running phase-weighted sum of the per-element rank-one terms.
    pub aggregate: CMat,
    /// Noise power per stream.
    pub sigma2: f64,
}

/// Ingredients of one element's closed-form update.
#[derive(Debug, Clone)]
pub struct ElementTerms {
    /// Identity plus the noise-scaled interference of all other elements
    /// plus this element's own transmit energy; Hermitian positive definite.
    pub kernel: CMat,
    /// The element's receive column divided by the noise power.
    pub element_gain: CVec,
    /// Response of the other elements' aggregate along this element's
    /// transmit row.
    pub coupling: CVec,
    /// Scalar whose argument the optimal phase cancels; zero means the
    /// element cannot affect the objective.
    pub rotation: Complex64,
}

/// Hermitian square root factor of the precoder covariance.
///
/// Returns `U sqrt(L)` from the eigendecomposition `W W^H = U L U^H`, with
/// round-off negatives in `L` clamped to zero, so the factor times its own
/// adjoint reproduces the covariance.
pub fn covariance_root(weights: &CMat) -> Result<CMat> {
    ensure_finite("precoder for covariance root", weights)?;
    let covariance = weights * weights.adjoint();
    let eigen = covariance.symmetric_eigen();
    let mut root = eigen.eigenvectors;
    for (j, &value) in eigen.eigenvalues.iter().enumerate() {
        let scale = Complex64::from(value.max(0.0).sqrt());
        let mut column = root.column_mut(j);
        column *= scale;
    }
    Ok(root)
}

impl RisWorkspace {
    /// Builds the workspace for a frozen precoder and the current pattern.
    ///
    /// `receive_factors` has one column per panel element; `transmit_factors`
    /// one row per element. The precoder enters only through its covariance
    /// root, folded into the transmit side.
    pub fn new(
        receive_factors: &CMat,
        transmit_factors: &CMat,
        weights: &CMat,
        pattern: &ReflectionPattern,
        sigma2: f64,
    ) -> Result<Self> {
        assert_eq!(
            receive_factors.ncols(),
            transmit_factors.nrows(),
            "element counts must match"
        );
        assert_eq!(
            transmit_factors.ncols(),
            weights.nrows(),
            "precoder rows must match the transmit factors"
        );
        assert_eq!(pattern.len(), receive_factors.ncols());
        assert!(sigma2 > 0.0, "noise power must be positive");
        let root = covariance_root(weights)?;
        let weighted_factors = transmit_factors * root;
        let aggregate = pattern.scale_columns(receive_factors) * &weighted_factors;
        Ok(RisWorkspace {
            receive_factors: receive_factors.clone(),
            weighted_factors,
            aggregate,
            sigma2,
        })
    }

    /// The capacity objective under the current aggregate.
    pub fn objective(&self) -> Result<f64> {
        log2_det_identity_plus_gram(&self.aggregate, self.sigma2)
    }

    /// Rebuilds the aggregate from scratch; the incremental bookkeeping of
    /// [`RisWorkspace::element_update`] must agree with this.
    pub fn aggregate_for(&self, pattern: &ReflectionPattern) -> CMat {
        pattern.scale_columns(&self.receive_factors) * &self.weighted_factors
    }

    /// Update ingredients for element `m` without changing any state.
    pub fn element_terms(&self, pattern: &ReflectionPattern, m: usize) -> Result<ElementTerms> {
        let column = self.receive_factors.column(m).into_owned();
        let row = self.weighted_factors.row(m).into_owned();
        let without = &self.aggregate - (&column * &row) * pattern.phases[m];
        terms_from(&without, &column, &row, self.sigma2)
    }

    /// Applies the closed-form update to element `m`, keeping the aggregate
    /// consistent by a rank-one subtract and add.
    ///
    /// A zero rotation scalar (for instance a dead element) leaves the phase
    /// untouched; every returned phase has unit modulus.
    pub fn element_update(
        &mut self,
        pattern: &mut ReflectionPattern,
        m: usize,
    ) -> Result<()> {
        let column = self.receive_factors.column(m).into_owned();
        let row = self.weighted_factors.row(m).into_owned();
        let contribution = &column * &row;
        let previous = pattern.phases[m];
        self.aggregate -= &contribution * previous;
        let terms = terms_from(&self.aggregate, &column, &row, self.sigma2)?;
        let next = if terms.rotation.norm() == 0.0 {
            previous
        } else {
            Complex64::from_polar(1.0, -terms.rotation.arg())
        };
        self.aggregate += &contribution * next;
        pattern.phases[m] = next;
        Ok(())
    }
}

/// Builds one element's kernel, coupling vectors, and rotation scalar from
/// the aggregate of all other elements.
fn terms_from(
    without: &CMat,
    column: &CVec,
    row: &RowDVector<Complex64>,
    sigma2: f64,
) -> Result<ElementTerms> {
    let dim = column.len();
    let mut kernel = (without * without.adjoint()).unscale(sigma2);
    let self_energy = Complex64::from(row.norm_squared() / sigma2);
    kernel += (column * column.adjoint()) * self_energy;
    for i in 0..dim {
        kernel[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let element_gain = column.unscale(sigma2);
    let coupling = without * row.adjoint();
    let rotation = rank_one_eigenvalue(&kernel, &element_gain, &coupling)?;
    Ok(ElementTerms {
        kernel,
        element_gain,
        coupling,
        rotation,
    })
}

/// One full pass of element updates in ascending index order.
pub fn sweep(workspace: &mut RisWorkspace, pattern: &mut ReflectionPattern) -> Result<()> {
    for m in 0..pattern.len() {
        workspace.element_update(pattern, m)?;
    }
    Ok(())
}

/// Why the alternating loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The sum-rate gain between consecutive iterations fell to the
    /// configured threshold or below.
    Converged,
    /// The iteration cap was reached first.
    MaxIterations,
}

/// Sum-rate history of one alternating run.
#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    /// Sum rate measured after each precoder rebuild, in bits/s/Hz.
    pub rates: Vec<f64>,
    /// Terminal status.
    pub stop: StopReason,
}

impl ConvergenceTrace {
    /// Number of completed outer iterations.
    pub fn iterations(&self) -> usize {
        self.rates.len()
    }

    /// True when the run stopped on the sum-rate threshold.
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

/// Alternating optimization of the precoder and the reflection pattern.
///
/// Each iteration rebuilds the three-layer precoder for the current pattern,
/// measures the sum rate, and then (unless the rate gain since the previous
/// iteration has dropped to `eps` or below) runs one full phase sweep under
/// the frozen precoder. On convergence the returned stack and pattern are
/// the consistent pair the rate was measured on; when the iteration cap
/// stops the loop instead, the pattern has received one sweep more than the
/// returned stack has seen, so callers that need a consistent pair should
/// rebuild the precoder once.
pub fn alternate(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    initial: &ReflectionPattern,
) -> Result<(PrecoderStack, ReflectionPattern, ConvergenceTrace)> {
    assert!(cfg.max_iters >= 1, "at least one iteration required");
    let mut pattern = initial.clone();
    let mut rates: Vec<f64> = Vec::new();
    let mut current: Option<PrecoderStack> = None;
    for _ in 0..cfg.max_iters {
        let effective = effective_channel(channels, &pattern);
        let stack = design_precoder(&effective, cfg.n_users, cfg.sigma2, cfg.p_t)?;
        let report = evaluate(&effective, &stack.weights, cfg.sigma2, cfg.n_users)?;
        rates.push(report.sum_rate);
        let n = rates.len();
        if n >= 2 && rates[n - 1] - rates[n - 2] <= cfg.eps {
            let trace = ConvergenceTrace {
                rates,
                stop: StopReason::Converged,
            };
            return Ok((stack, pattern, trace));
        }
        let mut workspace = RisWorkspace::new(
            &channels.receive_factors,
            &channels.transmit_factors,
            &stack.weights,
            &pattern,
            cfg.sigma2,
        )?;
        sweep(&mut workspace, &mut pattern)?;
        current = Some(stack);
    }
    let trace = ConvergenceTrace {
        rates,
        stop: StopReason::MaxIterations,
    };
    Ok((current.expect("at least one iteration ran"), pattern, trace))
}
