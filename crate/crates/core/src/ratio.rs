//! The approximation-ratio curve `f(r) = ((r - 1) / ln r) (2 + (r^2 + 1) / (r^2 - 1))`.

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("ratio curve is defined only for r > 1 (got {0})")]
pub struct RatioError(pub f64);

fn check(r: f64) -> Result<(), RatioError> {
    if r.is_finite() && r > 1.0 {
        Ok(())
    } else {
        Err(RatioError(r))
    }
}

/// `(r^2 + 1) / (r^2 - 1)`: the cross-class stretch factor.
pub fn class_gap_factor(r: f64) -> Result<f64, RatioError> {
    check(r)?;
    let r2 = r * r;
    Ok((r2 + 1.0) / (r2 - 1.0))
}

/// `(r - 1) / ln r`, the mean of `r^lambda` for `lambda ~ U[0, 1)`.
pub fn expected_u_scale(r: f64) -> Result<f64, RatioError> {
    check(r)?;
    Ok((r - 1.0) / libm::log(r))
}

/// Composite Simpson estimate of `int_0^1 r^lambda d lambda`.
/// `intervals` is rounded up to an even number.
pub fn expected_u_scale_quadrature(r: f64, intervals: usize) -> Result<f64, RatioError> {
    check(r)?;
    let m = (intervals.max(2) + 1) & !1;
    let step = 1.0 / m as f64;
    let f = |k: usize| libm::pow(r, k as f64 * step);
    let mut acc = f(0) + f(m);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    Ok(acc * step / 3.0)
}

/// `f(r)`.
pub fn ratio_bound(r: f64) -> Result<f64, RatioError> {
    Ok(expected_u_scale(r)? * (2.0 + class_gap_factor(r)?))
}

/// `(r, f(r))` for every grid point.
pub fn ratio_curve(grid: &[f64]) -> Result<Vec<(f64, f64)>, RatioError> {
    grid.iter().map(|&r| Ok((r, ratio_bound(r)?))).collect()
}

/// Golden-section search for the minimizer of `f` on `[lo, hi]`.
pub fn minimize_ratio_in(lo: f64, hi: f64, tol: f64) -> Result<(f64, f64), RatioError> {
    check(lo)?;
    check(hi)?;
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (ratio_bound(c)?, ratio_bound(d)?);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ratio_bound(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ratio_bound(d)?;
        }
    }
    let r = 0.5 * (a + b);
    Ok((r, ratio_bound(r)?))
}

/// Minimizer of `f` over `(1 + 1e-6, 10]`, to `1e-6` in `r`.
pub fn minimize_ratio() -> (f64, f64) {
    minimize_ratio_in(1.0 + 1e-6, 10.0, 1e-6).expect("search interval lies above 1")
}
