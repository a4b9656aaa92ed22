//! Privacy amplification by shuffling ε₀-LDP reports.

use super::RdpCurve;
use crate::{Error, Result};

/// Hidden constant of the shuffle RDP bound. Conservative; treat the result
/// as an upper bound, not a tight value.
pub const RDP_SHUFFLE_CONSTANT: f64 = 8.0;

/// Largest admissible ε₀ for `amplify_shuffle`: `ln(n/(16·ln(2/δ)))`.
pub fn shuffle_eps0_bound(n: usize, delta: f64) -> f64 {
    (n as f64 / (16.0 * (2.0 / delta).ln())).ln()
}

/// Central ε after shuffling `n` ε₀-LDP reports:
/// `ln(1 + (e^{ε₀}−1)·(4√(2 ln(4/δ))/√((e^{ε₀}+1)n) + 4/n))`.
///
/// Requires `ε₀ ≤ 1` and `ε₀ ≤ ln(n/(16 ln(2/δ)))`.
pub fn amplify_shuffle(eps0: f64, n: usize, delta: f64) -> Result<f64> {
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::Range(format!("eps0 must be positive, got {eps0}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if n == 0 {
        return Err(Error::Range("shuffling needs at least one client".into()));
    }
    let bound = shuffle_eps0_bound(n, delta);
    if eps0 > bound {
        return Err(Error::Infeasible(format!(
            "eps0 = {eps0} exceeds ln(n/(16 ln(2/delta))) = {bound}"
        )));
    }
    if eps0 > 1.0 {
        return Err(Error::Infeasible(format!("eps0 = {eps0} exceeds 1")));
    }
    let nf = n as f64;
    let e = eps0.exp();
    let inner = 4.0 * (2.0 * (4.0 / delta).ln()).sqrt() / ((e + 1.0) * nf).sqrt() + 4.0 / nf;
    Ok((eps0.exp_m1() * inner).ln_1p())
}

/// Largest order at which [`rdp_shuffle`] applies: `n/(16·ε₀·e^{ε₀})` (exclusive).
pub fn rdp_shuffle_max_order(eps0: f64, n: usize) -> f64 {
    n as f64 / (16.0 * eps0 * eps0.exp())
}

/// Shuffle RDP at order `α`: `8·α·(1−e^{−ε₀})²·e^{ε₀}/n`.
pub fn rdp_shuffle(eps0: f64, n: usize, alpha: f64) -> Result<f64> {
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::Range(format!("eps0 must be positive, got {eps0}")));
    }
    if n == 0 {
        return Err(Error::Range("shuffling needs at least one client".into()));
    }
    let max = rdp_shuffle_max_order(eps0, n);
    if !(alpha > 1.0 && alpha < max) {
        return Err(Error::Range(format!(
            "order {alpha} outside the valid range (1, {max})"
        )));
    }
    let s = -(-eps0).exp_m1();
    Ok(RDP_SHUFFLE_CONSTANT * alpha * s * s * eps0.exp() / n as f64)
}

/// Shuffle RDP curve on `orders`; orders outside the valid range carry `+∞`.
pub fn shuffle_rdp_curve(eps0: f64, n: usize, orders: &[f64]) -> Result<RdpCurve> {
    RdpCurve::from_fn(orders.to_vec(), |a| {
        rdp_shuffle(eps0, n, a).unwrap_or(f64::INFINITY)
    })
}
