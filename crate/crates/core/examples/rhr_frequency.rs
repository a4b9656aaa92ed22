//! Histogram estimation with subsampled recursive Hadamard response.
//!
//! `cargo run --example rhr_frequency`

use commdp::accountant::CalibrationMethod;
use commdp::freq_est::rhr_run;
use commdp::harness::{gen_synthetic_freq, Distribution};
use commdp::PrivacyBudget;

fn main() -> commdp::Result<()> {
    let (n, d) = (5000, 32);
    let (items, hist) = gen_synthetic_freq(n, d, Distribution::Zipf(1.1), 4)?;
    let truth: Vec<f64> = hist.iter().map(|&h| h as f64 / n as f64).collect();
    let budget = PrivacyBudget::new(2.0, 1e-5)?;

    for b in [2u32, 4, 6] {
        let est = rhr_run(&items, b, budget, CalibrationMethod::Rdp, 17)?;
        let l1: f64 = est
            .estimate
            .iter()
            .zip(&truth)
            .map(|(a, t)| (a - t).abs())
            .sum();
        let l2: f64 = est
            .estimate
            .iter()
            .zip(&truth)
            .map(|(a, t)| (a - t).powi(2))
            .sum();
        println!(
            "b={b} l1={l1:.4} l2sq={l2:.5} bits/client={}",
            est.stats.bits_per_client_mean
        );
    }
    println!("top-4 true frequencies: {:?}", &truth[..4]);
    Ok(())
}
