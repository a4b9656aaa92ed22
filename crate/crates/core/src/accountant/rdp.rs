//! Rényi-DP accounting for subsampled Gaussian releases.

use serde::{Deserialize, Serialize};

use super::{CalibrationMethod, NoiseCalibration, PrivacyBudget};
use crate::{Error, Result};

/// A Rényi-DP curve `ε(α)` sampled on an ascending grid of orders `α > 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdpCurve {
    orders: Vec<f64>,
    eps_at: Vec<f64>,
}

/// `{1.5, 2, 3, …, 64, 96, 128, 256}`.
pub fn default_orders() -> Vec<f64> {
    let mut orders = vec![1.5];
    orders.extend((2..=64).map(f64::from));
    orders.extend([96.0, 128.0, 256.0]);
    orders
}

impl RdpCurve {
    /// Validates: same lengths, orders ascending and `> 1`, values `≥ 0`
    /// (`+∞` allowed for "unbounded at this order") and non-decreasing in `α`.
    pub fn new(orders: Vec<f64>, eps_at: Vec<f64>) -> Result<Self> {
        if orders.len() != eps_at.len() {
            return Err(Error::Dimension(format!(
                "{} orders but {} values",
                orders.len(),
                eps_at.len()
            )));
        }
        if orders.iter().any(|&a| !(a > 1.0 && a.is_finite())) {
            return Err(Error::Range("rdp orders must be finite and > 1".into()));
        }
        if orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Range("rdp orders must be strictly ascending".into()));
        }
        if eps_at.iter().any(|&e| e.is_nan() || e < 0.0) {
            return Err(Error::Range("rdp values must be non-negative".into()));
        }
        if eps_at.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-9)) {
            return Err(Error::Range(
                "rdp curve must be non-decreasing in the order".into(),
            ));
        }
        Ok(Self { orders, eps_at })
    }

    /// Evaluate `f` at every order of `orders`.
    pub fn from_fn(orders: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eps_at = orders.iter().map(|&a| f(a)).collect();
        Self::new(orders, eps_at)
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn values(&self) -> &[f64] {
        &self.eps_at
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// `k`-fold self-composition.
    pub fn scaled(&self, k: usize) -> Self {
        Self {
            orders: self.orders.clone(),
            eps_at: self.eps_at.iter().map(|e| e * k as f64).collect(),
        }
    }
}

/// Gaussian mechanism: `ε(α) = α·Δ²/(2σ²)`.
pub fn rdp_gaussian(sensitivity: f64, sigma: f64, alpha: f64) -> f64 {
    alpha * sensitivity * sensitivity / (2.0 * sigma * sigma)
}

fn ln_binomials(alpha: u32) -> Vec<f64> {
    // ln C(α, k) for k = 0..=α through the running product.
    let mut out = Vec::with_capacity(alpha as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=alpha {
        acc += ((alpha - k + 1) as f64).ln() - (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Poisson-subsampled Gaussian at integer order `α ≥ 2`:
/// `(1/(α−1))·ln Σ_k C(α,k)(1−γ)^{α−k}γ^k·exp(k(k−1)/(2z²))` with `z = σ/Δ`,
/// evaluated in log space. Returns `+∞` if the sum overflows.
pub fn rdp_subsampled_gaussian(gamma: f64, noise_multiplier: f64, alpha: u32) -> Result<f64> {
    if alpha < 2 {
        return Err(Error::Range(format!(
            "integer order must be >= 2, got {alpha}"
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Range(format!(
            "sampling rate must lie in [0, 1], got {gamma}"
        )));
    }
    if !(noise_multiplier > 0.0) {
        return Err(Error::Range(format!(
            "noise multiplier must be positive, got {noise_multiplier}"
        )));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let inv_two_z2 = 1.0 / (2.0 * noise_multiplier * noise_multiplier);
    if gamma == 1.0 {
        return Ok(rdp_gaussian(1.0, noise_multiplier, alpha as f64));
    }
    let (ln_g, ln_1mg) = (gamma.ln(), (-gamma).ln_1p());
    let binom = ln_binomials(alpha);
    let terms: Vec<f64> = (0..=alpha)
        .map(|k| {
            let kf = k as f64;
            binom[k as usize]
                + (alpha - k) as f64 * ln_1mg
                + kf * ln_g
                + kf * (kf - 1.0) * inv_two_z2
        })
        .collect();
    let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Ok(f64::INFINITY);
    }
    let log_sum = peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
    if !log_sum.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok((log_sum / (alpha - 1) as f64).max(0.0))
}

/// Subsampled-Gaussian curve on `orders`. Non-integer orders use the value
/// at `⌈α⌉`, a valid upper bound since RDP is non-decreasing in the order;
/// at `γ = 1` the exact Gaussian value is used at every order.
pub fn subsampled_gaussian_curve(
    gamma: f64,
    noise_multiplier: f64,
    orders: &[f64],
) -> Result<RdpCurve> {
    let eps_at = orders
        .iter()
        .map(|&a| {
            if gamma == 1.0 {
                Ok(rdp_gaussian(1.0, noise_multiplier, a))
            } else {
                rdp_subsampled_gaussian(gamma, noise_multiplier, (a.ceil() as u32).max(2))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    RdpCurve::new(orders.to_vec(), eps_at)
}

/// Conversion to `(ε, δ)`-DP: `min_α ε(α) + ln(1/δ)/(α−1)`.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Range("cannot convert an empty rdp curve".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let log_inv = (1.0 / delta).ln();
    Ok(curve
        .orders
        .iter()
        .zip(&curve.eps_at)
        .map(|(a, e)| e + log_inv / (a - 1.0))
        .fold(f64::INFINITY, f64::min))
}

/// Order-wise sum of curves sharing one grid.
pub fn rdp_compose(curves: &[RdpCurve]) -> Result<RdpCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Range("nothing to compose".into()))?;
    let mut eps_at = vec![0.0; first.orders.len()];
    for c in curves {
        if c.orders != first.orders {
            return Err(Error::Dimension(
                "rdp curves use different order grids".into(),
            ));
        }
        eps_at.iter_mut().zip(&c.eps_at).for_each(|(a, b)| *a += b);
    }
    Ok(RdpCurve {
        orders: first.orders.clone(),
        eps_at,
    })
}

/// `(ε, δ)` of `coords` composed subsampled-Gaussian releases with noise
/// multiplier `σ/Δ`.
pub fn rdp_subsampled_gaussian_epsilon(
    gamma: f64,
    noise_multiplier: f64,
    coords: usize,
    delta: f64,
    orders: &[f64],
) -> Result<f64> {
    let curve = subsampled_gaussian_curve(gamma, noise_multiplier, orders)?;
    rdp_to_dp(&curve.scaled(coords), delta)
}

/// Smallest noise (to 1e-10 relative) whose RDP-accounted budget over
/// `coords` subsampled-Gaussian releases is within `target`.
///
/// For this method `eps1 = eps2` hold the achieved overall ε and
/// `delta1 = delta2` the target δ.
pub fn calibrate_subsampled_gaussian_rdp(
    target: PrivacyBudget,
    gamma: f64,
    coords: usize,
    sensitivity: f64,
    orders: &[f64],
) -> Result<NoiseCalibration> {
    let target = PrivacyBudget::new(target.eps, target.delta)?;
    if coords == 0 {
        return Err(Error::Range(
            "calibration needs at least one coordinate".into(),
        ));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Range(format!(
            "sampling rate must lie in (0, 1], got {gamma}"
        )));
    }
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(Error::Range(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    let eps_of = |z: f64| rdp_subsampled_gaussian_epsilon(gamma, z, coords, target.delta, orders);
    let mut hi = 1.0;
    while eps_of(hi)? > target.eps {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Infeasible(
                "no noise level meets the rdp target".into(),
            ));
        }
    }
    let mut lo = hi / 2.0;
    while eps_of(lo)? <= target.eps {
        lo /= 2.0;
        if lo < 1e-12 {
            break;
        }
    }
    while hi / lo - 1.0 > 1e-10 {
        let mid = (lo * hi).sqrt();
        if eps_of(mid)? <= target.eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let achieved = eps_of(hi)?;
    let sigma = hi * sensitivity;
    Ok(NoiseCalibration {
        sigma2_mean: sigma * sigma,
        sigma2_sum: sigma * sigma,
        eps1: achieved,
        delta1: target.delta,
        eps2: achieved,
        delta2: target.delta,
        gamma,
        coords,
        sensitivity,
        clients: None,
        method: CalibrationMethod::Rdp,
        target: Some(target),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accountant::gaussian_sigma;

    #[test]
    fn gaussian_closed_form() {
        assert_eq!(rdp_gaussian(3.0, 3.0, 2.0), 1.0);
        assert!((rdp_gaussian(1.0, 4.0, 32.0) - 1.0).abs() < 1e-15);
        let a = rdp_gaussian(1.0, 1.5, 7.0);
        assert!((rdp_gaussian(1.0, 3.0, 7.0) - a / 4.0).abs() < 1e-15);
    }

    #[test]
    fn full_sampling_matches_gaussian() {
        for alpha in [2u32, 3, 10, 64, 256] {
            for z in [0.5, 1.0, 4.0] {
                let s = rdp_subsampled_gaussian(1.0, z, alpha).unwrap();
                let g = rdp_gaussian(1.0, z, alpha as f64);
                assert!((s - g).abs() <= 1e-9 * g);
            }
        }
    }

    #[test]
    fn binomial_sum_with_gamma_just_below_one_matches_gaussian() {
        // Exercises the log-space path rather than the γ = 1 shortcut.
        let s = rdp_subsampled_gaussian(1.0 - 1e-13, 2.0, 12).unwrap();
        let g = rdp_gaussian(1.0, 2.0, 12.0);
        assert!((s - g).abs() <= 1e-9 * g, "{s} vs {g}");
    }

    #[test]
    fn zero_sampling_is_free() {
        assert_eq!(rdp_subsampled_gaussian(0.0, 1.0, 8).unwrap(), 0.0);
    }

    #[test]
    fn direct_summation_at_order_two() {
        let g: f64 = 0.01;
        let direct = ((1.0 - g).powi(2) + 2.0 * g * (1.0 - g) + g * g * 1f64.exp()).ln();
        let logspace = rdp_subsampled_gaussian(g, 1.0, 2).unwrap();
        assert!((direct - logspace).abs() < 1e-12);
    }

    #[test]
    fn subsampling_strictly_helps() {
        for alpha in [2u32, 5, 32] {
            let full = rdp_subsampled_gaussian(1.0, 2.0, alpha).unwrap();
            let sub = rdp_subsampled_gaussian(0.3, 2.0, alpha).unwrap();
            assert!(sub < full);
        }
    }

    #[test]
    fn overflow_returns_infinity() {
        let big = rdp_subsampled_gaussian(0.5, 1e-3, 256).unwrap();
        assert!(big.is_finite() && big > 1e6);
        let v = rdp_subsampled_gaussian(0.5, 1e-200, 256).unwrap();
        assert!(v.is_infinite());
    }

    #[test]
    fn conversion_single_order() {
        let c = RdpCurve::new(vec![2.0], vec![1.0]).unwrap();
        assert!((rdp_to_dp(&c, (-1f64).exp()).unwrap() - 2.0).abs() < 1e-15);
        let wider = RdpCurve::new(vec![2.0, 3.0], vec![1.0, 1.1]).unwrap();
        assert!(rdp_to_dp(&wider, 0.1).unwrap() <= rdp_to_dp(&c, 0.1).unwrap());
        let empty = RdpCurve::new(vec![], vec![]).unwrap();
        assert!(rdp_to_dp(&empty, 0.1).is_err());
    }

    #[test]
    fn conversion_close_to_classic_inversion() {
        // σ/Δ = 2: classic eps solves σ² = 2 ln(1.25/δ)/ε².
        let curve = subsampled_gaussian_curve(1.0, 2.0, &default_orders()).unwrap();
        let rdp = rdp_to_dp(&curve, 1e-5).unwrap();
        let classic = (2.0 * (1.25e5f64).ln()).sqrt() / 2.0;
        assert!((rdp / classic - 1.0).abs() < 0.05, "{rdp} vs {classic}");
        let _ = gaussian_sigma;
    }

    #[test]
    fn composition_rules() {
        let c = subsampled_gaussian_curve(0.1, 2.0, &default_orders()).unwrap();
        assert_eq!(rdp_compose(std::slice::from_ref(&c)).unwrap(), c);
        let four = rdp_compose(&vec![c.clone(); 4]).unwrap();
        for (a, b) in four.values().iter().zip(c.values()) {
            assert!((a - 4.0 * b).abs() <= 1e-12 * a.max(1.0));
        }
        // Hand-composed: evaluate the order-wise formula directly.
        let eps = rdp_to_dp(&four, 1e-6).unwrap();
        let mut best = f64::INFINITY;
        for &a in default_orders().iter() {
            let k = (a.ceil() as u32).max(2);
            let v = 4.0 * rdp_subsampled_gaussian(0.1, 2.0, k).unwrap() + (1e6f64).ln() / (a - 1.0);
            best = best.min(v);
        }
        assert!((eps - best).abs() < 1e-12);
        let other = RdpCurve::new(vec![2.0], vec![0.1]).unwrap();
        assert!(rdp_compose(&[c, other]).is_err());
    }

    #[test]
    fn composed_then_converted_is_monotone_in_rounds() {
        let c = subsampled_gaussian_curve(0.05, 1.5, &default_orders()).unwrap();
        let mut last = 0.0;
        for t in 1..20 {
            let e = rdp_to_dp(&c.scaled(t), 1e-6).unwrap();
            assert!(e.is_finite() && e > last);
            last = e;
        }
    }

    #[test]
    fn curves_are_non_decreasing() {
        for g in [0.01, 0.1, 0.5, 1.0] {
            for z in [0.7, 1.0, 3.0, 20.0] {
                let c = subsampled_gaussian_curve(g, z, &default_orders()).unwrap();
                assert!(c.values().windows(2).all(|w| w[1] >= w[0]));
            }
        }
    }

    #[test]
    fn rdp_calibration_hits_target() {
        let target = PrivacyBudget::new(0.5, 1e-5).unwrap();
        let cal =
            calibrate_subsampled_gaussian_rdp(target, 0.1, 500, 0.2, &default_orders()).unwrap();
        let z = cal.sigma2_sum.sqrt() / 0.2;
        let eps = rdp_subsampled_gaussian_epsilon(0.1, z, 500, 1e-5, &default_orders()).unwrap();
        assert!(eps <= 0.5 && eps > 0.5 * (1.0 - 1e-6));
    }
}
