//! Closed-form minimum-distance results for random MBM constellations.
//!
//! For `h_i ~ CN(0, 1)` each difference `h_i - h_j` is `CN(0, 2)`, so a
//! pairwise distance is Rayleigh with pdf `d exp(-d^2/2)`. Taking the minimum
//! over the `2^(k-1)` disjoint pairs `(1,2), (3,4), ...` gives the surrogate
//! statistic `d_o >= d_min` whose law is again Rayleigh:
//!
//! ```text
//! F_o(d) = 1 - exp(-2^(k-2) d^2)
//! f_o(d) = 2^(k-1) d exp(-2^(k-2) d^2)
//! E[d_o] = sqrt(pi) 2^(-k/2)
//! ```

use std::f64::consts::PI;

use crate::error::{MbmError, Result};

fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > 1023 {
        return Err(MbmError::param(format!(
            "k must be a positive integer, got {k}"
        )));
    }
    Ok(())
}

/// Upper bound on the mean open-loop minimum distance, `sqrt(pi) 2^(-k/2)`.
/// Equal to the exact mean of the paired statistic `d_o`.
pub fn analytic_mean_dmin_bound(k: u32) -> Result<f64> {
    check_k(k)?;
    Ok(PI.sqrt() * 2f64.powf(-(k as f64) / 2.0))
}

/// Minimum distance of unit-energy M-QAM after Rayleigh fading,
/// `E|h| sqrt(6/(M-1)) = (1/2) sqrt(6 pi / (2^k - 1))`.
pub fn analytic_qam_rayleigh_dmin(k: u32) -> Result<f64> {
    check_k(k)?;
    Ok(0.5 * (6.0 * PI / (2f64.powi(k as i32) - 1.0)).sqrt())
}

/// Bound on the MBM-to-QAM distance ratio, `sqrt(2/3) sqrt(1 - 2^(-k))`.
pub fn analytic_eta_bound(k: u32) -> Result<f64> {
    check_k(k)?;
    Ok((2.0 / 3.0f64).sqrt() * (1.0 - 2f64.powf(-(k as f64))).sqrt())
}

/// Limit of [`analytic_eta_bound`] as `k -> infinity`.
pub fn eta_limit() -> f64 {
    (2.0 / 3.0f64).sqrt()
}

/// Rayleigh CDF of a single pairwise distance, `1 - exp(-d^2/2)`.
pub fn pairwise_distance_cdf(d: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else {
        -(-d * d / 2.0).exp_m1()
    }
}

/// Density of the paired statistic `d_o`.
pub fn analytic_do_pdf(k: u32, d: f64) -> Result<f64> {
    check_k(k)?;
    if d.is_nan() || d < 0.0 {
        return Err(MbmError::param(format!(
            "distance must be nonnegative, got {d}"
        )));
    }
    let rate = 2f64.powi(k as i32 - 2);
    Ok(2.0 * rate * d * (-rate * d * d).exp())
}

/// CDF of the paired statistic `d_o`.
pub fn analytic_do_cdf(k: u32, d: f64) -> Result<f64> {
    check_k(k)?;
    if d <= 0.0 {
        return Ok(0.0);
    }
    let rate = 2f64.powi(k as i32 - 2);
    Ok(-(-rate * d * d).exp_m1())
}
