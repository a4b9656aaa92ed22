//! CSGM restricted to a shared random subset of coordinates, for budgets
//! where the full dimension would cost too much.
//!
//! `cargo run --example preselect`

use commdp::harness::{as_sign_vectors, empirical_mean, gen_synthetic_mean};
use commdp::mean_est::{csgm_preselect_run, select_dprime, MeanParams};
use commdp::PrivacyBudget;

fn main() -> commdp::Result<()> {
    let (n, d, b) = (500, 2000, 20);
    let xs = gen_synthetic_mean(n, d, 3);
    let truth = empirical_mean(&xs);
    let signs = as_sign_vectors(&xs)?;
    let budget = PrivacyBudget::new(1.0, 1e-5)?;

    println!(
        "d' chosen for (n={n}, d={d}, b={b}): {}",
        select_dprime(n, b, d, budget)
    );
    let est = csgm_preselect_run(&signs, &MeanParams::new(b, budget, 11))?;
    let err: f64 = est
        .estimate
        .iter()
        .zip(&truth)
        .map(|(a, t)| (a - t).powi(2))
        .sum();
    println!(
        "gamma={:.4} sq_err={err:.4} bits/client={:.2}",
        est.calibration.gamma, est.stats.bits_per_client_mean
    );
    Ok(())
}
