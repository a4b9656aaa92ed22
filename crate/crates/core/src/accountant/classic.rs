use super::{CalibrationMethod, NoiseCalibration, PrivacyBudget};
use crate::{Error, Result};

/// Largest per-coordinate pre-amplification ε handed to [`gaussian_sigma`],
/// whose validity range is `ε < 1`.
const EPS1_CAP: f64 = 1.0 - 1e-9;

/// Gaussian-mechanism variance `Δ²·2·ln(1.25/δ)/ε²` for `(ε, δ)`-DP, `ε < 1`.
pub fn gaussian_sigma(sensitivity: f64, budget: PrivacyBudget) -> Result<f64> {
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(Error::Range(format!(
            "sensitivity must be positive, got {sensitivity}"
        )));
    }
    if budget.eps >= 1.0 {
        return Err(Error::Range(format!(
            "gaussian calibration is only valid for eps < 1 (got {}); cap the per-coordinate eps at 1",
            budget.eps
        )));
    }
    Ok(sensitivity * sensitivity * 2.0 * (1.25 / budget.delta).ln() / (budget.eps * budget.eps))
}

/// Poisson-subsampling amplification: `(ln(1+γ(e^ε−1)), γδ)`.
pub fn amplify_poisson(eps: f64, delta: f64, gamma: f64) -> Result<PrivacyBudget> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Range(format!(
            "sampling rate must lie in (0, 1], got {gamma}"
        )));
    }
    Ok(PrivacyBudget {
        eps: (gamma * eps.exp_m1()).ln_1p(),
        delta: gamma * delta,
    })
}

/// Advanced composition of `k` `(ε, δ)`-DP mechanisms:
/// `(kε(e^ε−1) + ε√(2k·ln(1/δ̃)), kδ + δ̃)`.
pub fn compose_advanced(eps: f64, delta: f64, k: usize, delta_tilde: f64) -> Result<PrivacyBudget> {
    if k == 0 {
        return Err(Error::Range("composition needs k >= 1".into()));
    }
    if !(delta_tilde > 0.0 && delta_tilde <= 1.0) {
        return Err(Error::Range(format!(
            "delta_tilde must lie in (0, 1], got {delta_tilde}"
        )));
    }
    let k_f = k as f64;
    Ok(PrivacyBudget {
        eps: k_f * eps * eps.exp_m1() + eps * (2.0 * k_f * (1.0 / delta_tilde).ln()).sqrt(),
        delta: k_f * delta + delta_tilde,
    })
}

/// How the per-coordinate post-amplification budget `ε₂` is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Eps2Solver {
    /// Closed-form root of the quadratic relaxation `2Bε₂² + ε₂√(2B ln(2/δ)) = ε`.
    #[default]
    Quadratic,
    /// Bisection on the exact composition bound `Bε₂(e^{ε₂}−1) + ε₂√(2B ln(2/δ)) = ε`.
    Exact,
}

/// Noise calibration for `B` Poisson-subsampled Gaussian releases composed
/// to meet `target` overall.
///
/// Budget split: `δ̃ = δ/2` for composition, `δ₂ = δ/(2B)` per coordinate
/// after amplification, `δ₁ = δ₂/γ` before it. `ε₂` solves the composition
/// bound; `ε₁ = ln(1 + (e^{ε₂}−1)/γ)` inverts the amplification exactly and
/// is capped just below 1.
pub fn calibrate_subsampled_gaussian(
    target: PrivacyBudget,
    gamma: f64,
    coords: usize,
    sensitivity: f64,
) -> Result<NoiseCalibration> {
    calibrate_subsampled_gaussian_with(target, gamma, coords, sensitivity, Eps2Solver::Quadratic)
}

pub fn calibrate_subsampled_gaussian_with(
    target: PrivacyBudget,
    gamma: f64,
    coords: usize,
    sensitivity: f64,
    solver: Eps2Solver,
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
    let b = coords as f64;
    let delta2 = target.delta / (2.0 * b);
    let delta1 = delta2 / gamma;
    if delta1 >= 1.0 {
        return Err(Error::Infeasible(format!(
            "per-coordinate delta {delta1} >= 1: sampling rate {gamma} too small for delta {}",
            target.delta
        )));
    }
    let a = (2.0 * b * (2.0 / target.delta).ln()).sqrt();
    let quadratic = ((-a + (a * a + 8.0 * target.eps * b).sqrt()) / (4.0 * b)).min(1.0);
    let eps2 = match solver {
        Eps2Solver::Quadratic => quadratic,
        Eps2Solver::Exact => {
            let bound = |e: f64| b * e * e.exp_m1() + e * a;
            if bound(1.0) <= target.eps {
                1.0
            } else {
                // The quadratic root is always feasible, so it brackets from below.
                let (mut lo, mut hi) = (quadratic, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if bound(mid) <= target.eps {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    };
    let eps1 = (eps2.exp_m1() / gamma).ln_1p().min(EPS1_CAP);
    let sigma2_sum = gaussian_sigma(
        sensitivity,
        PrivacyBudget {
            eps: eps1,
            delta: delta1,
        },
    )?;
    Ok(NoiseCalibration {
        sigma2_mean: sigma2_sum,
        sigma2_sum,
        eps1,
        delta1,
        eps2,
        delta2,
        gamma,
        coords,
        sensitivity,
        clients: None,
        method: CalibrationMethod::ClosedForm,
        target: Some(target),
    })
}

/// Forward closed-form accounting for a given sum-scale noise level: the ε
/// certified at total `delta` by the Gaussian → Poisson → composition chain
/// with the calibration's δ split. Composition takes the better of basic
/// (`Bε'`) and advanced composition. Returns `+∞` when the Gaussian lemma
/// does not apply (implied per-coordinate ε ≥ 1).
pub fn closed_form_epsilon(
    sigma2_sum: f64,
    sensitivity: f64,
    gamma: f64,
    coords: usize,
    delta: f64,
) -> Result<f64> {
    if coords == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(
            "closed-form accounting needs coords >= 1 and delta in (0,1)".into(),
        ));
    }
    if sigma2_sum <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let b = coords as f64;
    let delta1 = delta / (2.0 * b * gamma);
    if delta1 >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let eps1 = sensitivity * (2.0 * (1.25 / delta1).ln() / sigma2_sum).sqrt();
    if eps1 >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let amplified = amplify_poisson(eps1, delta1, gamma)?;
    let advanced = compose_advanced(amplified.eps, amplified.delta, coords, delta / 2.0)?;
    Ok(advanced.eps.min(b * amplified.eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(eps: f64, delta: f64) -> PrivacyBudget {
        PrivacyBudget::new(eps, delta).unwrap()
    }

    #[test]
    fn gaussian_sigma_values() {
        let s = gaussian_sigma(1.0, budget(0.5, 1e-5)).unwrap();
        // 2·ln(1.25e5)/0.25 evaluated with mpmath at 30 digits.
        assert!((s - 93.888_552_130_275_5).abs() < 1e-10, "{s}");
        let s2 = gaussian_sigma(2.0, budget(0.5, 1e-5)).unwrap();
        assert_eq!(s2, 4.0 * s);
        let s3 = gaussian_sigma(1.0, budget(0.999, 0.5)).unwrap();
        assert!((s3 - 2.0 * 2.5f64.ln() / (0.999 * 0.999)).abs() < 1e-12);
        assert!((s3 - 1.836_252_131_759_698).abs() < 1e-12);
        assert!(matches!(
            gaussian_sigma(1.0, budget(1.0, 0.1)),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn poisson_amplification() {
        let id = amplify_poisson(0.7, 1e-6, 1.0).unwrap();
        assert!((id.eps - 0.7).abs() < 1e-12 && id.delta == 1e-6);
        let a = amplify_poisson(1.0, 1e-6, 0.1).unwrap();
        assert!((a.eps - (1.0 + 0.1 * (1f64.exp() - 1.0)).ln()).abs() < 1e-15);
        assert!((a.eps - 0.1586).abs() < 1e-4);
        let g = 1e-6;
        let tiny = amplify_poisson(1.0, 0.0, g).unwrap();
        assert!((tiny.eps / g / (1f64.exp() - 1.0) - 1.0).abs() < 1e-3);
        assert!(amplify_poisson(1.0, 0.0, 0.0).is_err());
        assert!(amplify_poisson(1.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn advanced_composition() {
        let c = compose_advanced(0.1, 0.0, 1, 1e-6).unwrap();
        let want = 0.1 * 0.1f64.exp_m1() + 0.1 * (2.0 * 1e6f64.ln()).sqrt();
        assert!((c.eps - want).abs() < 1e-15);
        assert!((c.eps - 0.536).abs() < 1e-3);
        assert!(compose_advanced(1e-12, 0.0, 10, 1e-6).unwrap().eps < 1e-10);
        let e = 1e-7;
        let root = |k: usize| e * (2.0 * k as f64 * (1e6f64).ln()).sqrt();
        assert!((root(8) / root(4) - 2f64.sqrt()).abs() < 1e-12);
        assert!(compose_advanced(0.1, 0.0, 0, 0.1).is_err());
    }

    #[test]
    fn calibration_example_eps2() {
        let cal = calibrate_subsampled_gaussian(budget(1.0, 1e-5), 0.5, 100, 1.0).unwrap();
        let a = (200.0 * 2e5f64.ln()).sqrt();
        let want = (-a + (a * a + 800.0).sqrt()) / 400.0;
        assert!((cal.eps2 - want).abs() < 1e-15);
        assert!((cal.eps2 - 0.0188).abs() < 1e-4);
        assert_eq!(cal.delta2, 1e-5 / 200.0);
        assert_eq!(cal.delta1, cal.delta2 / 0.5);
    }

    #[test]
    fn full_sampling_single_fold_has_no_amplification() {
        let cal = calibrate_subsampled_gaussian(budget(0.5, 1e-5), 1.0, 1, 1.0).unwrap();
        assert!(cal.eps2 < 1.0);
        assert!((cal.eps1 - cal.eps2).abs() < 1e-15);
    }

    #[test]
    fn forward_audit_example() {
        let target = budget(2.0, 1e-6);
        let cal = calibrate_subsampled_gaussian(target, 0.25, 16, 1.0).unwrap();
        let amp = amplify_poisson(cal.eps1, cal.delta1, 0.25).unwrap();
        let total = compose_advanced(amp.eps, amp.delta, 16, 1e-6 / 2.0).unwrap();
        assert!(total.within(&target, 1e-12), "{total:?}");
    }

    #[test]
    fn exact_solver_is_tighter_and_still_valid() {
        let target = budget(1.0, 1e-5);
        let q = calibrate_subsampled_gaussian(target, 0.1, 50, 1.0).unwrap();
        let x =
            calibrate_subsampled_gaussian_with(target, 0.1, 50, 1.0, Eps2Solver::Exact).unwrap();
        assert!(x.eps2 >= q.eps2);
        assert!(x.sigma2_sum <= q.sigma2_sum);
        let amp = amplify_poisson(x.eps1, x.delta1, 0.1).unwrap();
        let total = compose_advanced(amp.eps, amp.delta, 50, 0.5e-5).unwrap();
        assert!(total.within(&target, 1e-12));
    }

    #[test]
    fn tiny_gamma_is_infeasible() {
        let r = calibrate_subsampled_gaussian(budget(1.0, 0.5), 1e-3, 1, 1.0);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn closed_form_epsilon_inverts_calibration() {
        let target = budget(1.0, 1e-5);
        let cal = calibrate_subsampled_gaussian(target, 0.2, 40, 0.3).unwrap();
        let eps = closed_form_epsilon(cal.sigma2_sum, 0.3, 0.2, 40, 1e-5).unwrap();
        assert!(eps <= 1.0 + 1e-12);
        assert!(eps > 0.3);
        assert!(closed_form_epsilon(1e-6, 1.0, 0.5, 4, 1e-5)
            .unwrap()
            .is_infinite());
    }
}
