//! Dense complex linear algebra shared by the precoder and reflector stages.
//!
//! Everything operates on dynamically sized `Complex64` matrices. Three
//! entry points cover the crate's needs:
//!
//! - [`svd_full`]:singular value decomposition with square `U` and `V`, so
//!   the trailing columns of `V` always span the null space,
//! - [`solve_hermitian`]:Cholesky solve for Hermitian positive definite
//!   systems, with a residual check,
//! - [`rank_one_eigenvalue`]:the single non-zero eigenvalue of
//!   `J^{-1} (u v^H)`, the scalar behind the per-element reflector update.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dynamically sized complex matrix used throughout the crate.
pub type CMat = DMatrix<Complex64>;
/// Dynamically sized complex column vector.
pub type CVec = DVector<Complex64>;

/// Singular values below this fraction of the largest count as zero when
/// determining numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Largest relative asymmetry accepted by [`solve_hermitian`].
const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Largest relative residual accepted from a Cholesky solve.
const SOLVE_TOLERANCE: f64 = 1e-8;

/// Largest imaginary part, relative to the real part, a Cholesky pivot may
/// carry before the matrix is declared indefinite.
const PIVOT_REALITY_TOLERANCE: f64 = 1e-8;

/// Cholesky factorization that actually certifies positive definiteness.
///
/// The library factorization takes complex square roots of negative pivots
/// instead of failing, so indefinite Hermitian inputs "succeed" with
/// non-real factor diagonals; this wrapper rejects those.
fn positive_definite_cholesky(m: &CMat) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    for d in chol.l_dirty().diagonal().iter() {
        if !(d.re > 0.0 && d.im.abs() <= d.re * PIVOT_REALITY_TOLERANCE) {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(chol)
}

/// Full singular value decomposition `a = U Σ V^H`.
///
/// Unlike a thin decomposition, `u` is `m x m` and `v` is `n x n`; for a wide
/// or rank-deficient input the columns of `v` past [`SvdResult::rank`] form
/// an orthonormal basis of the null space.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, square.
    pub u: CMat,
    /// Singular values in descending order, `min(m, n)` of them.
    pub singular_values: DVector<f64>,
    /// Right singular vectors, square.
    pub v: CMat,
}

impl SvdResult {
    /// Numerical rank at [`RANK_TOLERANCE`] relative to the largest singular
    /// value.
    pub fn rank(&self) -> usize {
        let cutoff = self.singular_values.max() * RANK_TOLERANCE;
        self.singular_values.iter().filter(|&&s| s > cutoff).count()
    }

    /// Reassembles `U Σ V^H`.
    pub fn reconstruct(&self) -> CMat {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut scaled = CMat::zeros(m, n);
        for (j, &s) in self.singular_values.iter().enumerate() {
            scaled
                .column_mut(j)
                .copy_from(&(self.u.column(j) * Complex64::new(s, 0.0)));
        }
        scaled * self.v.adjoint()
    }
}

/// Rejects matrices containing NaN or infinite entries, naming the first
/// offending index in the error.
pub fn ensure_finite(context: &'static str, m: &CMat) -> Result<()> {
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let x = m[(row, col)];
            if !x.re.is_finite() || !x.im.is_finite() {
                return Err(Error::NonFinite { context, row, col });
            }
        }
    }
    Ok(())
}

/// Full SVD of `a`; see [`SvdResult`].
///
/// nalgebra's Golub-Kahan kernel produces the thin factors with singular
/// values already sorted descending; the missing columns of `U` and `V` are
/// filled in with an orthonormal complement so both factors are unitary.
pub fn svd_full(a: &CMat) -> Result<SvdResult> {
    ensure_finite("svd input", a)?;
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or(Error::SvdDidNotConverge)?;
    let u_thin = svd.u.expect("u requested");
    let v_thin = svd.v_t.expect("v requested").adjoint();
    Ok(SvdResult {
        u: complete_basis(&u_thin),
        singular_values: svd.singular_values,
        v: complete_basis(&v_thin),
    })
}

/// Extends a matrix with orthonormal columns to a square unitary matrix.
///
/// Householder QR of `[thin | I]` keeps the leading columns aligned with
/// `thin` (up to phase), so the trailing columns of its `Q` are an
/// orthonormal complement; the original columns are kept verbatim.
fn complete_basis(thin: &CMat) -> CMat {
    let dim = thin.nrows();
    let have = thin.ncols();
    if have == dim {
        return thin.clone();
    }
    let mut seeded = CMat::zeros(dim, have + dim);
    seeded.view_mut((0, 0), (dim, have)).copy_from(thin);
    for i in 0..dim {
        seeded[(i, have + i)] = Complex64::new(1.0, 0.0);
    }
    let q = seeded.qr().q();
    let mut full = CMat::zeros(dim, dim);
    full.view_mut((0, 0), (dim, have)).copy_from(thin);
    full.view_mut((0, have), (dim, dim - have))
        .copy_from(&q.view((0, have), (dim, dim - have)));
    full
}

/// Solves `J x = b` for Hermitian positive definite `J` via Cholesky.
///
/// `b` may have several columns. The factorization rejects non-Hermitian or
/// indefinite systems, and the solution is verified to a relative residual
/// of 1e-8 before it is returned.
pub fn solve_hermitian(j: &CMat, b: &CMat) -> Result<CMat> {
    ensure_finite("hermitian system", j)?;
    ensure_finite("right-hand side", b)?;
    let scale = j.norm();
    if scale > 0.0 {
        let asymmetry = (j - j.adjoint()).norm() / scale;
        if asymmetry > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { asymmetry });
        }
    }
    let chol = positive_definite_cholesky(j)?;
    let x = chol.solve(b);
    let reference = b.norm().max(f64::MIN_POSITIVE);
    let residual = (j * &x - b).norm() / reference;
    if residual > SOLVE_TOLERANCE {
        return Err(Error::SolveResidual {
            residual,
            tolerance: SOLVE_TOLERANCE,
        });
    }
    Ok(x)
}

/// The only non-zero eigenvalue of `J^{-1} (u v^H)`.
///
/// A rank-one matrix `M = x y^H` has a single non-zero eigenvalue `y^H x`;
/// with `M = (J^{-1} u) v^H` that eigenvalue is `v^H J^{-1} u`. Zero `u` or
/// `v` short-circuits to zero without touching the solver.
pub fn rank_one_eigenvalue(j: &CMat, u: &CVec, v: &CVec) -> Result<Complex64> {
    if u.norm() == 0.0 || v.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let x = solve_hermitian(j, &CMat::from_column_slice(u.len(), 1, u.as_slice()))?;
    Ok(v.dotc(&x.column(0)))
}

/// `log2 det(I + T T^H / sigma2)` evaluated through a Cholesky factorization.
///
/// The Gram form keeps the argument Hermitian positive definite, so the
/// log-determinant is twice the log-sum of the Cholesky diagonal.
pub fn log2_det_identity_plus_gram(t: &CMat, sigma2: f64) -> Result<f64> {
    let n = t.nrows();
    let m = CMat::identity(n, n) + (t * t.adjoint()).unscale(sigma2);
    log2_det_hermitian(&m)
}

/// `log2 det(M)` for Hermitian positive definite `M`.
pub fn log2_det_hermitian(m: &CMat) -> Result<f64> {
    let chol = positive_definite_cholesky(m)?;
    let log_sum: f64 = chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum();
    Ok(2.0 * log_sum / std::f64::consts::LN_2)
}
