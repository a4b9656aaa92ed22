//! Multi-round SQKR behind a trusted shuffler, planned to fill a bit budget.
//!
//! `cargo run --example shuffled_sqkr`

use commdp::harness::{empirical_mean, encode_with_frame, gen_synthetic_mean};
use commdp::shuffle::{plan_shuffled_sqkr, shuffled_sqkr_from_coeffs};
use commdp::PrivacyBudget;

fn main() -> commdp::Result<()> {
    let (n, d, b) = (20_000, 64, 40);
    let xs = gen_synthetic_mean(n, d, 2);
    let truth = empirical_mean(&xs);
    let (frame, coeffs) = encode_with_frame(&xs, d, 1)?;

    let plan = plan_shuffled_sqkr(PrivacyBudget::new(1.0, 1e-6)?, b, frame.frame_dim(), n)?;
    println!(
        "rounds={} eps0={:.4} bits/client={} accounted=({:.4}, {:.1e})",
        plan.rounds,
        plan.eps0,
        plan.bits_per_client(),
        plan.accounted.eps,
        plan.accounted.delta
    );
    let est = shuffled_sqkr_from_coeffs(&coeffs, 1.0, &plan, &frame, 8)?;
    let err: f64 = est
        .estimate
        .iter()
        .zip(&truth)
        .map(|(a, t)| (a - t).powi(2))
        .sum();
    println!("sq_err={err:.4} total bits={}", est.stats.bits_total);
    Ok(())
}
