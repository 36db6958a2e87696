//! Rate and SINR evaluation for any (channel, precoder) pair.
//!
//! Two rate figures are reported side by side:
//!
//! - the per-stream sum rate, which treats residual inter-stream leakage as
//!   noise and is the common yardstick across all schemes,
//! - the log-det capacity, which assumes joint decoding and upper-bounds the
//!   sum rate, matching it when the received matrix is diagonal.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::numerics::{log2_det_identity_plus_gram, CMat};

/// Rates and SINRs of one scheme evaluation.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Linear SINR per stream, one row per user.
    pub per_stream_sinr: DMatrix<f64>,
    /// Rate of each user in bits/s/Hz.
    pub per_user_rate: Vec<f64>,
    /// Total rate in bits/s/Hz; the sum of the per-user rates.
    pub sum_rate: f64,
    /// Joint-decoding upper bound in bits/s/Hz.
    pub logdet_capacity: f64,
}

/// Linear SINR of every stream under its own matched receive index.
///
/// With `T = channel * weights`, stream `r` sees signal `|T[r,r]|^2` and
/// interference from every other column on its row; the result is reshaped
/// to one row per user.
pub fn per_stream_sinr(
    channel: &CMat,
    weights: &CMat,
    sigma2: f64,
    n_users: usize,
) -> DMatrix<f64> {
    let received = channel * weights;
    sinr_of_received(&received, sigma2, n_users)
}

fn sinr_of_received(received: &CMat, sigma2: f64, n_users: usize) -> DMatrix<f64> {
    let rows = received.nrows();
    assert_eq!(rows, received.ncols(), "received matrix must be square");
    assert_eq!(rows % n_users, 0, "streams must split evenly across users");
    assert!(sigma2 > 0.0, "noise power must be positive");
    let streams = rows / n_users;
    DMatrix::from_fn(n_users, streams, |user, i| {
        let r = user * streams + i;
        let signal = received[(r, r)].norm_sqr();
        let interference: f64 = (0..rows)
            .filter(|&c| c != r)
            .map(|c| received[(r, c)].norm_sqr())
            .sum();
        signal / (interference + sigma2)
    })
}

/// Shannon rate of one stream; `ln_1p` keeps full relative precision even
/// when heavy path loss pushes the SINR below the 2^-52 rounding step of
/// `1 + SINR`.
fn stream_rate(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Total rate over a matrix of linear SINRs.
pub fn sum_rate(sinr: &DMatrix<f64>) -> f64 {
    sinr.iter().copied().map(stream_rate).sum()
}

/// Joint-decoding capacity `log2 det(I + channel W W^H channel^H / sigma2)`.
pub fn logdet_capacity(channel: &CMat, weights: &CMat, sigma2: f64) -> Result<f64> {
    log2_det_identity_plus_gram(&(channel * weights), sigma2)
}

/// Computes the full [`RateReport`] for one (channel, precoder) pair.
pub fn evaluate(
    channel: &CMat,
    weights: &CMat,
    sigma2: f64,
    n_users: usize,
) -> Result<RateReport> {
    let received = channel * weights;
    let per_stream_sinr = sinr_of_received(&received, sigma2, n_users);
    let per_user_rate: Vec<f64> = (0..n_users)
        .map(|k| per_stream_sinr.row(k).iter().copied().map(stream_rate).sum())
        .collect();
    let sum_rate = per_user_rate.iter().sum();
    let logdet_capacity = log2_det_identity_plus_gram(&received, sigma2)?;
    Ok(RateReport {
        per_stream_sinr,
        per_user_rate,
        sum_rate,
        logdet_capacity,
    })
}
