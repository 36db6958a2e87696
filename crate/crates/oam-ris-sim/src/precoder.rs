//! Three-layer downlink precoder and the classical comparison precoders.
//!
//! The proposed precoder works in the stacked stream space and composes
//! three stages, each undoing one kind of interference:
//!
//! - a per-user null-space projection that removes inter-user interference,
//! - a per-user equalizer that diagonalizes the remaining self-channel,
//! - water-filling power allocation across all eigenstreams jointly.
//!
//! The comparison precoders (matched filter, zero forcing, regularized zero
//! forcing) act on a stacked channel matrix and share the same total power
//! budget convention.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, solve_hermitian, svd_full, CMat, RANK_TOLERANCE};

/// Equalizer targets whose condition number reaches this limit are treated
/// as degenerate geometry draws and rejected.
pub const EQUALIZER_CONDITION_LIMIT: f64 = 1e8;

/// Entries at or below this modulus are skipped when picking the pivot that
/// fixes each basis column's global phase.
const PHASE_PIVOT_TOLERANCE: f64 = 1e-12;

/// Output of the three-layer design for one scenario.
#[derive(Debug, Clone)]
pub struct PrecoderStack {
    /// Per-user orthonormal null-space bases, each (streams total) x streams.
    pub null_bases: Vec<CMat>,
    /// Per-user equalizers, each streams x streams.
    pub equalizers: Vec<CMat>,
    /// Per-user effective channel gains after equalization (amplitudes).
    pub mode_gains: Vec<DVector<f64>>,
    /// Per-stream transmit powers in watts, user-major order.
    pub stream_powers: DVector<f64>,
    /// Composed precoder, already rescaled to the power budget.
    pub weights: CMat,
    /// Factor applied to meet the budget; 1.0 when the budget was not hit.
    pub budget_scale: f64,
}

/// Rotates each column so its first non-negligible entry is real positive.
///
/// Singular vectors are unique only up to a unit phase; pinning the phase
/// makes repeated runs reproduce the same basis bit for bit.
fn fix_column_phases(basis: &mut CMat) {
    for mut col in basis.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .find(|x| x.norm() > PHASE_PIVOT_TOLERANCE);
        if let Some(p) = pivot {
            col *= Complex64::from_polar(1.0, -p.arg());
        }
    }
}

/// Orthonormal basis of the joint null space of every other user's rows.
///
/// The returned matrix has `streams` columns (where `streams` is the per-user
/// row-block height of `effective`), drawn from the trailing right singular
/// vectors of the stacked other-user blocks, so the product of any other
/// user's block with the basis vanishes.
pub fn interuser_nullspace(effective: &CMat, user: usize, n_users: usize) -> Result<CMat> {
    let rows = effective.nrows();
    let cols = effective.ncols();
    assert!(user < n_users, "user index out of range");
    assert_eq!(rows % n_users, 0, "row count must split evenly across users");
    let streams = rows / n_users;

    if n_users == 1 {
        // no interference to cancel: the trailing coordinates serve as the
        // canonical basis
        let mut basis = CMat::zeros(cols, streams);
        for i in 0..streams {
            basis[(cols - streams + i, i)] = Complex64::new(1.0, 0.0);
        }
        return Ok(basis);
    }

    let mut others = CMat::zeros(rows - streams, cols);
    let mut filled = 0;
    for k in 0..n_users {
        if k == user {
            continue;
        }
        others
            .view_mut((filled, 0), (streams, cols))
            .copy_from(&effective.view((k * streams, 0), (streams, cols)));
        filled += streams;
    }

    let svd = svd_full(&others)?;
    let rank = svd.rank();
    if rank + streams > cols {
        return Err(Error::NullSpaceDeficient {
            user,
            rank,
            needed: streams,
        });
    }
    let mut basis = svd.v.columns(cols - streams, streams).into_owned();
    fix_column_phases(&mut basis);
    Ok(basis)
}

/// Equalizer that turns the user's projected channel into a non-negative
/// diagonal, plus that diagonal's entries.
///
/// With `T = user_block * null_basis = U S V^H`, the equalizer is
/// `V S^{-1} U^H S`, so `T` times the equalizer equals `diag(S)` and the
/// returned gains are the singular values of `T`.
pub fn intermode_equalizer(
    user_block: &CMat,
    null_basis: &CMat,
    user: usize,
) -> Result<(CMat, DVector<f64>)> {
    let target = user_block * null_basis;
    let svd = svd_full(&target)?;
    let gains = svd.singular_values.clone();
    let largest = gains.max();
    let smallest = gains.min();
    let condition = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    if !condition.is_finite() || condition >= EQUALIZER_CONDITION_LIMIT {
        return Err(Error::DegenerateGeometry {
            user,
            condition,
            limit: EQUALIZER_CONDITION_LIMIT,
        });
    }
    // V * S^{-1} * U^H * S, with the diagonal factors folded into the rows
    // and columns of U^H
    let mut core = svd.u.adjoint();
    for i in 0..gains.len() {
        let mut row = core.row_mut(i);
        row *= Complex64::from(1.0 / gains[i]);
    }
    for j in 0..gains.len() {
        let mut column = core.column_mut(j);
        column *= Complex64::from(gains[j]);
    }
    Ok((&svd.v * core, gains))
}

/// Water-filling power allocation over parallel channels.
///
/// Each stream with amplitude gain `g` costs `sigma2 / g^2` to activate;
/// powers are `max(0, level - cost)` with the common water level chosen by
/// bisection so the powers sum to `p_t`. The active set found by bisection
/// is then used to place the level in closed form, making the budget and
/// the shared-level condition exact up to round-off.
pub fn waterfill(gains: &DVector<f64>, sigma2: f64, p_t: f64) -> Result<DVector<f64>> {
    assert!(p_t > 0.0 && sigma2 > 0.0, "power and noise must be positive");
    let costs: Vec<f64> = gains
        .iter()
        .map(|&g| if g > 0.0 { sigma2 / (g * g) } else { f64::INFINITY })
        .collect();
    let finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::NoUsableChannel);
    }
    let mut lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = p_t + finite.iter().cloned().fold(0.0, f64::max);
    let allocated = |level: f64| -> f64 {
        costs
            .iter()
            .map(|&c| if c < level { level - c } else { 0.0 })
            .sum()
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if allocated(mid) > p_t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let level = 0.5 * (lo + hi);
    // close the budget exactly over the active set found by bisection
    let active: Vec<usize> = (0..costs.len()).filter(|&i| costs[i] < level).collect();
    let exact = if active.is_empty() {
        // degenerate: budget too small to resolve in 200 halvings; fall back
        // to funding the single cheapest stream
        let best = (0..costs.len())
            .min_by(|&a, &b| costs[a].total_cmp(&costs[b]))
            .expect("at least one finite cost");
        let mut powers = DVector::zeros(gains.len());
        powers[best] = p_t;
        return Ok(powers);
    } else {
        let cost_sum: f64 = active.iter().map(|&i| costs[i]).sum();
        (p_t + cost_sum) / active.len() as f64
    };
    let mut powers = DVector::zeros(gains.len());
    for &i in &active {
        powers[i] = (exact - costs[i]).max(0.0);
    }
    Ok(powers)
}

/// Assembles the composed precoder from its three layers.
///
/// Column `(k, i)` is the user-`k` basis times equalizer, scaled by the
/// square root of the stream power. If the resulting total Frobenius power
/// exceeds `p_t`, the whole matrix is shrunk onto the budget and the factor
/// recorded; it is never inflated.
pub fn compose_precoder(
    null_bases: Vec<CMat>,
    equalizers: Vec<CMat>,
    mode_gains: Vec<DVector<f64>>,
    stream_powers: DVector<f64>,
    p_t: f64,
) -> PrecoderStack {
    let n_users = null_bases.len();
    let dim = null_bases[0].nrows();
    let streams = null_bases[0].ncols();
    let mut weights = CMat::zeros(dim, n_users * streams);
    for k in 0..n_users {
        let shaped = &null_bases[k] * &equalizers[k];
        for i in 0..streams {
            let amplitude = Complex64::from(stream_powers[k * streams + i].sqrt());
            weights
                .column_mut(k * streams + i)
                .copy_from(&(shaped.column(i) * amplitude));
        }
    }
    let total = weights.norm_squared();
    let budget_scale = if total > p_t {
        (p_t / total).sqrt()
    } else {
        1.0
    };
    if budget_scale < 1.0 {
        weights *= Complex64::from(budget_scale);
    }
    PrecoderStack {
        null_bases,
        equalizers,
        mode_gains,
        stream_powers,
        weights,
        budget_scale,
    }
}

/// Runs the full three-layer design for one effective channel.
///
/// `effective` must be square with `n_users` equal row blocks; the power
/// allocation runs jointly over all users' eigenstreams.
pub fn design_precoder(
    effective: &CMat,
    n_users: usize,
    sigma2: f64,
    p_t: f64,
) -> Result<PrecoderStack> {
    assert_eq!(
        effective.nrows(),
        effective.ncols(),
        "effective channel must be square in the stream space"
    );
    let streams = effective.nrows() / n_users;
    let mut null_bases = Vec::with_capacity(n_users);
    let mut equalizers = Vec::with_capacity(n_users);
    let mut mode_gains = Vec::with_capacity(n_users);
    for user in 0..n_users {
        let basis = interuser_nullspace(effective, user, n_users)?;
        let block = effective
            .view((user * streams, 0), (streams, effective.ncols()))
            .into_owned();
        let (equalizer, gains) = intermode_equalizer(&block, &basis, user)?;
        null_bases.push(basis);
        equalizers.push(equalizer);
        mode_gains.push(gains);
    }
    let mut all_gains = DVector::zeros(n_users * streams);
    for (user, gains) in mode_gains.iter().enumerate() {
        for i in 0..streams {
            all_gains[user * streams + i] = gains[i];
        }
    }
    let stream_powers = waterfill(&all_gains, sigma2, p_t)?;
    let stack = compose_precoder(null_bases, equalizers, mode_gains, stream_powers, p_t);
    ensure_finite("composed precoder", &stack.weights)?;
    Ok(stack)
}

/// Which classical comparison precoder to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Matched filter (maximum ratio transmission).
    Mrt,
    /// Zero forcing via a thresholded pseudo-inverse.
    Zf,
    /// Regularized zero forcing (minimum mean-squared error).
    Mmse,
}

/// Builds a classical precoder for the stacked channel and scales it so the
/// total Frobenius power equals `p_t`.
///
/// `channel` has one row per stream and one column per transmit element.
/// The regularizer of the MMSE variant is `sigma2 * streams / p_t`.
pub fn baseline_precoder(
    kind: BaselineKind,
    channel: &CMat,
    p_t: f64,
    sigma2: f64,
) -> Result<CMat> {
    ensure_finite("baseline channel", channel)?;
    let raw = match kind {
        BaselineKind::Mrt => channel.adjoint(),
        BaselineKind::Zf => pseudo_inverse(channel)?,
        BaselineKind::Mmse => {
            let rows = channel.nrows();
            let loading = Complex64::from(sigma2 * rows as f64 / p_t);
            let gram = channel * channel.adjoint() + CMat::identity(rows, rows) * loading;
            solve_hermitian(&gram, channel)?.adjoint()
        }
    };
    let norm = raw.norm();
    if norm == 0.0 {
        return Err(Error::NoUsableChannel);
    }
    Ok(raw * Complex64::from(p_t.sqrt() / norm))
}

/// Right pseudo-inverse through the SVD, zeroing directions below the rank
/// cutoff; logs a warning when the channel does not have full row rank.
fn pseudo_inverse(channel: &CMat) -> Result<CMat> {
    let svd = svd_full(channel)?;
    let rank = svd.rank();
    if rank < channel.nrows() {
        log::warn!(
            "zero-forcing channel is rank deficient ({rank} of {} streams); using a thresholded pseudo-inverse",
            channel.nrows()
        );
    }
    let cutoff = svd.singular_values.max() * RANK_TOLERANCE;
    let count = svd.singular_values.len();
    let mut core = svd.u.adjoint().rows(0, count).into_owned();
    for i in 0..count {
        let s = svd.singular_values[i];
        let inverse = if s > cutoff { 1.0 / s } else { 0.0 };
        let mut row = core.row_mut(i);
        row *= Complex64::from(inverse);
    }
    Ok(svd.v.columns(0, count) * core)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        random_matrix(rng, n, n).qr().q()
    }

    #[test]
    fn nullspace_of_identity_block_is_the_trailing_coordinates() {
        // user 1 occupies rows 2..4 with [I | 0], so user 0 must transmit in
        // the span of the last two coordinates
        let mut effective = CMat::zeros(4, 4);
        effective[(2, 0)] = Complex64::new(1.0, 0.0);
        effective[(3, 1)] = Complex64::new(1.0, 0.0);
        let basis = interuser_nullspace(&effective, 0, 2).unwrap();
        assert_eq!(basis.shape(), (4, 2));
        for col in basis.column_iter() {
            assert!(col[0].norm() < 1e-12 && col[1].norm() < 1e-12);
            let weight: f64 = col.iter().skip(2).map(|x| x.norm_sqr()).sum();
            assert!((weight - 1.0).abs() < 1e-12);
        }
        // phase convention: each pivot entry real positive
        for col in basis.column_iter() {
            let pivot = col.iter().find(|x| x.norm() > 1e-9).unwrap();
            assert!(pivot.im.abs() < 1e-12 && pivot.re > 0.0);
        }
    }

    #[test]
    fn nullspace_annihilates_other_users_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let effective = random_matrix(&mut rng, 16, 16);
        let scale = effective.norm();
        for user in 0..4 {
            let basis = interuser_nullspace(&effective, user, 4).unwrap();
            let gram = basis.adjoint() * &basis;
            assert!((gram - CMat::identity(4, 4)).norm() < 1e-10);
            for other in 0..4 {
                if other == user {
                    continue;
                }
                let block = effective.view((other * 4, 0), (4, 16));
                let leak = (block * &basis).norm();
                assert!(leak <= 1e-9 * scale, "user {user} leaks {leak:.3e}");
            }
        }
    }

    #[test]
    fn nullspace_is_deterministic_for_a_fixed_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let effective = random_matrix(&mut rng, 8, 8);
        let a = interuser_nullspace(&effective, 1, 2).unwrap();
        let b = interuser_nullspace(&effective, 1, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nullspace_with_single_user_spans_trailing_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let effective = random_matrix(&mut rng, 3, 3);
        let basis = interuser_nullspace(&effective, 0, 1).unwrap();
        assert_eq!(basis, CMat::identity(3, 3));
    }

    #[test]
    fn nullspace_reports_deficiency_when_the_channel_is_too_wide() {
        // two users of three streams each but only four transmit coordinates:
        // the other user's block generically has rank 3 > 4 - 3
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let effective = random_matrix(&mut rng, 6, 4);
        match interuser_nullspace(&effective, 0, 2) {
            Err(Error::NullSpaceDeficient { user: 0, rank: 3, needed: 3 }) => {}
            other => panic!("expected a deficiency error, got {other:?}"),
        }
    }

    #[test]
    fn equalizer_is_identity_for_a_sorted_positive_diagonal() {
        let mut target = CMat::zeros(2, 2);
        target[(0, 0)] = Complex64::new(3.0, 0.0);
        target[(1, 1)] = Complex64::new(2.0, 0.0);
        let (eq, gains) = intermode_equalizer(&target, &CMat::identity(2, 2), 0).unwrap();
        assert!((eq - CMat::identity(2, 2)).norm() < 1e-12);
        assert!((gains[0] - 3.0).abs() < 1e-12 && (gains[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equalizer_of_a_unitary_target_is_its_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let target = random_unitary(&mut rng, 3);
        let (eq, gains) = intermode_equalizer(&target, &CMat::identity(3, 3), 0).unwrap();
        assert!((&eq - target.adjoint()).norm() < 1e-9);
        for g in gains.iter() {
            assert!((g - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn equalizer_reconstruction_matches_the_gain_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let block = random_matrix(&mut rng, 4, 6);
            let basis = random_matrix(&mut rng, 6, 4).qr().q();
            let (eq, gains) = intermode_equalizer(&block, &basis, 2).unwrap();
            let mut expected = CMat::zeros(4, 4);
            for i in 0..4 {
                expected[(i, i)] = Complex64::from(gains[i]);
            }
            let product = &block * &basis * eq;
            let err = (product - &expected).norm();
            assert!(err <= 1e-9 * expected.norm(), "residual {err:.3e}");
        }
    }

    #[test]
    fn equalizer_rejects_an_ill_conditioned_target() {
        let mut target = CMat::identity(2, 2);
        target[(1, 1)] = Complex64::new(1e-9, 0.0);
        match intermode_equalizer(&target, &CMat::identity(2, 2), 3) {
            Err(Error::DegenerateGeometry { user: 3, condition, .. }) => {
                assert!(condition > 1e8);
            }
            other => panic!("expected degenerate geometry, got {other:?}"),
        }
    }

    #[test]
    fn waterfill_splits_evenly_across_equal_gains() {
        let gains = DVector::from_vec(vec![1.0, 1.0]);
        let powers = waterfill(&gains, 0.5, 2.0).unwrap();
        assert!((powers[0] - 1.0).abs() < 1e-10);
        assert!((powers[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn waterfill_clamps_an_expensive_stream() {
        // costs sigma2/g^2 = (0.1, 100) with a 0.2 budget: the cheap stream
        // takes everything
        let gains = DVector::from_vec(vec![(1.0f64 / 0.1).sqrt(), (1.0f64 / 100.0).sqrt()]);
        let powers = waterfill(&gains, 1.0, 0.2).unwrap();
        assert!((powers[0] - 0.2).abs() < 1e-10, "got {}", powers[0]);
        assert!(powers[1] == 0.0, "got {}", powers[1]);
    }

    #[test]
    fn waterfill_gives_a_single_stream_the_whole_budget() {
        let gains = DVector::from_vec(vec![0.3]);
        let powers = waterfill(&gains, 2.0, 5.0).unwrap();
        assert!((powers[0] - 5.0).abs() < 1e-10);
    }

    #[test]
    fn waterfill_rejects_all_zero_gains() {
        let gains = DVector::from_vec(vec![0.0, 0.0]);
        assert!(matches!(
            waterfill(&gains, 1.0, 1.0),
            Err(Error::NoUsableChannel)
        ));
    }

    #[test]
    fn waterfill_satisfies_the_optimality_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let sigma2 = 1e-3;
        let p_t = 2.0;
        for _ in 0..20 {
            let gains = DVector::from_fn(8, |_, _| rng.random::<f64>() * 0.2);
            let powers = match waterfill(&gains, sigma2, p_t) {
                Ok(p) => p,
                Err(Error::NoUsableChannel) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!((powers.sum() - p_t).abs() < 1e-10 * p_t);
            let levels: Vec<f64> = (0..8)
                .filter(|&i| powers[i] > 0.0)
                .map(|i| powers[i] + sigma2 / (gains[i] * gains[i]))
                .collect();
            let level = levels[0];
            for l in &levels {
                assert!((l - level).abs() < 1e-8 * level);
            }
            for i in 0..8 {
                if powers[i] == 0.0 && gains[i] > 0.0 {
                    let cost = sigma2 / (gains[i] * gains[i]);
                    assert!(cost >= level * (1.0 - 1e-8));
                }
            }
        }
    }

    #[test]
    fn waterfill_never_loses_to_uniform_allocation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let sigma2 = 1e-2;
        let p_t = 1.0;
        for _ in 0..20 {
            let gains = DVector::from_fn(6, |_, _| rng.random::<f64>());
            let powers = waterfill(&gains, sigma2, p_t).unwrap();
            let rate = |p: &DVector<f64>| -> f64 {
                (0..6)
                    .map(|i| (1.0 + gains[i] * gains[i] * p[i] / sigma2).log2())
                    .sum()
            };
            let uniform = DVector::from_element(6, p_t / 6.0);
            assert!(rate(&powers) >= rate(&uniform) - 1e-12);
        }
    }

    #[test]
    fn compose_keeps_a_single_active_stream_in_one_column() {
        let bases = vec![CMat::identity(4, 2), {
            let mut m = CMat::zeros(4, 2);
            m[(2, 0)] = Complex64::new(1.0, 0.0);
            m[(3, 1)] = Complex64::new(1.0, 0.0);
            m
        }];
        let eqs = vec![CMat::identity(2, 2), CMat::identity(2, 2)];
        let gains = vec![DVector::from_element(2, 1.0), DVector::from_element(2, 1.0)];
        let powers = DVector::from_vec(vec![0.0, 0.0, 4.0, 0.0]);
        let stack = compose_precoder(bases, eqs, gains, powers, 10.0);
        assert_eq!(stack.budget_scale, 1.0);
        for col in [0, 1, 3] {
            assert!(stack.weights.column(col).norm() == 0.0);
        }
        assert!((stack.weights.column(2).norm_squared() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn compose_shrinks_onto_the_budget_but_never_inflates() {
        let bases = vec![CMat::identity(2, 2)];
        // an equalizer with column norms 2 doubles every stream power
        let eqs = vec![CMat::identity(2, 2) * Complex64::from(2.0)];
        let gains = vec![DVector::from_element(2, 1.0)];
        let powers = DVector::from_vec(vec![1.0, 1.0]);
        let clipped = compose_precoder(bases.clone(), eqs.clone(), gains.clone(), powers.clone(), 4.0);
        assert!((clipped.weights.norm_squared() - 4.0).abs() < 1e-12);
        assert!((clipped.budget_scale - (0.5f64).sqrt()).abs() < 1e-12);
        let unclipped = compose_precoder(bases, eqs, gains, powers, 100.0);
        assert_eq!(unclipped.budget_scale, 1.0);
        assert!((unclipped.weights.norm_squared() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn design_diagonalizes_a_random_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let effective = random_matrix(&mut rng, 8, 8);
        let sigma2 = 1e-3;
        let p_t = 10.0;
        let stack = design_precoder(&effective, 2, sigma2, p_t).unwrap();
        let received = &effective * &stack.weights;
        let scale = received.norm();
        for r in 0..8 {
            for c in 0..8 {
                if r == c {
                    continue;
                }
                assert!(
                    received[(r, c)].norm() <= 1e-8 * scale,
                    "off-diagonal leak at ({r}, {c})"
                );
            }
        }
        // each diagonal entry is the mode gain times the power amplitude,
        // shrunk by the budget factor
        for user in 0..2 {
            for i in 0..4 {
                let idx = user * 4 + i;
                let expected =
                    stack.mode_gains[user][i] * stack.stream_powers[idx].sqrt() * stack.budget_scale;
                let actual = received[(idx, idx)];
                assert!(actual.im.abs() <= 1e-9 * expected.max(1e-30));
                assert!(
                    (actual.re - expected).abs() <= 1e-8 * expected.max(1e-30),
                    "stream {idx}: {} vs {expected}",
                    actual.re
                );
            }
        }
        assert!(stack.weights.norm_squared() <= p_t * (1.0 + 1e-9));
    }

    #[test]
    fn baselines_collapse_on_a_scaled_unitary_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let channel = random_unitary(&mut rng, 5) * Complex64::from(3.0);
        let p_t = 2.0;
        let mrt = baseline_precoder(BaselineKind::Mrt, &channel, p_t, 1e-2).unwrap();
        let zf = baseline_precoder(BaselineKind::Zf, &channel, p_t, 1e-2).unwrap();
        let mmse = baseline_precoder(BaselineKind::Mmse, &channel, p_t, 1e-2).unwrap();
        assert!((&mrt - &zf).norm() < 1e-10);
        assert!((&mrt - &mmse).norm() < 1e-10);
        assert!((mrt.norm_squared() - p_t).abs() < 1e-10);
    }

    #[test]
    fn zero_forcing_diagonalizes_the_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let channel = random_matrix(&mut rng, 4, 8);
        let w = baseline_precoder(BaselineKind::Zf, &channel, 1.0, 1e-3).unwrap();
        let product = &channel * &w;
        let diagonal_norm = product.diagonal().norm();
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert!(product[(r, c)].norm() <= 1e-9 * diagonal_norm);
                }
            }
        }
    }

    #[test]
    fn mmse_approaches_zero_forcing_as_noise_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let channel = random_matrix(&mut rng, 4, 8);
        let p_t = 3.0;
        let zf = baseline_precoder(BaselineKind::Zf, &channel, p_t, 1e-3).unwrap();
        let mmse = baseline_precoder(BaselineKind::Mmse, &channel, p_t, 1e-12 * p_t).unwrap();
        let rel = (&mmse - &zf).norm() / zf.norm();
        assert!(rel <= 1e-6, "relative gap {rel:.3e}");
    }

    #[test]
    fn zero_forcing_survives_a_rank_deficient_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        // rank-one stacked channel: outer product of two vectors
        let left = random_matrix(&mut rng, 4, 1);
        let right = random_matrix(&mut rng, 1, 6);
        let channel = left * right;
        let w = baseline_precoder(BaselineKind::Zf, &channel, 2.0, 1e-3).unwrap();
        ensure_finite("rank-deficient zero forcing", &w).unwrap();
        assert!((w.norm_squared() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn mrt_is_the_scaled_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let channel = random_matrix(&mut rng, 3, 5);
        let w = baseline_precoder(BaselineKind::Mrt, &channel, 4.0, 1e-3).unwrap();
        let expected = channel.adjoint() * Complex64::from(2.0 / channel.norm());
        assert!((w - expected).norm() < 1e-12);
    }
}
