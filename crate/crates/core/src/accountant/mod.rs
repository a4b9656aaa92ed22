//! Privacy-budget mathematics.
//!
//! Two independent routes are provided:
//!
//! - the closed-form chain ([`calibrate_subsampled_gaussian`]): Gaussian
//!   mechanism at `(ε₁, δ₁)` per coordinate, Poisson-subsampling
//!   amplification to `(ε₂, δ₂)`, then advanced composition over the
//!   coordinates;
//! - Rényi-DP accounting ([`rdp`]): subsampled-Gaussian RDP curves composed
//!   additively and converted to `(ε, δ)`.
//!
//! Shuffle amplification bounds live in [`shuffle`]. All logarithms in the
//! privacy formulas are natural logarithms.
//!
//! The theorem-level noise expression for the mean estimator is
//! `σ² = O(c²log(1/δ)/(n²γ²) + c²d(log(d/δ)+ε)log(d/δ)/(n²ε²))`, while the
//! derivation behind it yields
//! `σ² = O(max(c²log(d/δ)/(n²γ²), c²d(log(1/δ)+ε)log(d/δ)/(n²ε²)))`.
//! The calibration here follows the derivation step by step, so neither
//! asymptotic form is evaluated directly.

mod classic;
pub mod rdp;
pub mod shuffle;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use classic::{
    amplify_poisson, calibrate_subsampled_gaussian, calibrate_subsampled_gaussian_with,
    closed_form_epsilon, compose_advanced, gaussian_sigma, Eps2Solver,
};
pub use rdp::{
    calibrate_subsampled_gaussian_rdp, default_orders, rdp_compose, rdp_gaussian,
    rdp_subsampled_gaussian, rdp_subsampled_gaussian_epsilon, rdp_to_dp, subsampled_gaussian_curve,
    RdpCurve,
};
pub use shuffle::{
    amplify_shuffle, rdp_shuffle, rdp_shuffle_max_order, shuffle_eps0_bound, shuffle_rdp_curve,
    RDP_SHUFFLE_CONSTANT,
};

/// An `(ε, δ)` differential-privacy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub eps: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Range(format!(
                "eps must be positive and finite, got {eps}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Range(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { eps, delta })
    }

    /// Component-wise `self ≤ other`, allowing `rel_tol` relative slack on ε.
    pub fn within(&self, other: &PrivacyBudget, rel_tol: f64) -> bool {
        self.eps <= other.eps * (1.0 + rel_tol) && self.delta <= other.delta * (1.0 + rel_tol)
    }
}

/// How a noise level was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMethod {
    ClosedForm,
    Rdp,
    /// No noise (privacy switched off, for testing the estimators).
    Disabled,
}

/// A resolved Gaussian noise level plus the intermediate budgets of the
/// calibration chain, retained for audit.
///
/// `sigma2_sum` is the variance at sum scale (sensitivity `sensitivity`);
/// `sigma2_mean` is the variance after the estimator's `1/(nγ)` normalization
/// once the client count is known (see [`NoiseCalibration::for_clients`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub sigma2_mean: f64,
    pub sigma2_sum: f64,
    pub eps1: f64,
    pub delta1: f64,
    pub eps2: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub coords: usize,
    pub sensitivity: f64,
    pub clients: Option<usize>,
    pub method: CalibrationMethod,
    /// Budget the noise was calibrated for; `None` when disabled.
    pub target: Option<PrivacyBudget>,
}

impl NoiseCalibration {
    /// A zero-noise calibration for estimator tests.
    pub fn disabled(gamma: f64, coords: usize) -> Self {
        Self {
            sigma2_mean: 0.0,
            sigma2_sum: 0.0,
            eps1: f64::INFINITY,
            delta1: 0.0,
            eps2: f64::INFINITY,
            delta2: 0.0,
            gamma,
            coords,
            sensitivity: 0.0,
            clients: None,
            method: CalibrationMethod::Disabled,
            target: None,
        }
    }

    /// Record the client count and set `sigma2_mean = sigma2_sum / (n·γ)²`.
    pub fn for_clients(mut self, n: usize) -> Self {
        let scale = n as f64 * self.gamma;
        self.sigma2_mean = self.sigma2_sum / (scale * scale);
        self.clients = Some(n);
        self
    }

    /// Resolve the noise for `coords` subsampled releases at rate `gamma`
    /// with the chosen method. `Rdp` uses the default order grid.
    pub fn resolve(
        method: CalibrationMethod,
        target: PrivacyBudget,
        gamma: f64,
        coords: usize,
        sensitivity: f64,
    ) -> Result<Self> {
        match method {
            CalibrationMethod::ClosedForm => {
                calibrate_subsampled_gaussian(target, gamma, coords, sensitivity)
            }
            CalibrationMethod::Rdp => calibrate_subsampled_gaussian_rdp(
                target,
                gamma,
                coords,
                sensitivity,
                &default_orders(),
            ),
            CalibrationMethod::Disabled => Ok(Self::disabled(gamma, coords)),
        }
    }

    pub fn is_disabled(&self) -> bool {
        self.method == CalibrationMethod::Disabled
    }
}
