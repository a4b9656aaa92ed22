//! Coordinate-subsampled Gaussian mean estimation on unit-norm sign data.
//!
//! `cargo run --example csgm_mean`

use commdp::harness::{as_sign_vectors, empirical_mean, gen_synthetic_mean};
use commdp::mean_est::{csgm_run, CsgmConfig};
use commdp::PrivacyBudget;

fn main() -> commdp::Result<()> {
    let (n, d, b) = (500, 500, 50);
    let xs = gen_synthetic_mean(n, d, 7);
    let truth = empirical_mean(&xs);
    let signs = as_sign_vectors(&xs)?;

    for eps in [0.1, 0.5, 2.0] {
        let budget = PrivacyBudget::new(eps, 1e-5)?;
        let config = CsgmConfig::from_bits(n, d, b, budget, 1.0 / (d as f64).sqrt(), 42)?;
        let cal = config.calibrate()?;
        let est = csgm_run(&signs, &config, &cal)?;
        let err: f64 = est
            .estimate
            .iter()
            .zip(&truth)
            .map(|(a, t)| (a - t).powi(2))
            .sum();
        println!(
            "eps={eps:<4} gamma={:.2} sigma2_mean={:.3e} sq_err={err:.4} bits/client={:.1}",
            config.gamma, cal.sigma2_mean, est.stats.bits_per_client_mean
        );
    }
    Ok(())
}
