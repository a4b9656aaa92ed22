//! Mean of arbitrary vectors in the unit ℓ₂ ball: Kashin encoding,
//! randomized rounding to signs, then pre-selected CSGM.
//!
//! `cargo run --example l2_pipeline`

use commdp::mean_est::{l2_mean_pipeline, MeanParams};
use commdp::seeds;
use commdp::{KashinFrame, PrivacyBudget};
use rand_distr::{Distribution, Normal};

fn main() -> commdp::Result<()> {
    let (n, d) = (1000, 100);
    let normal = Normal::new(0.3, 1.0).expect("valid normal");
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = seeds::stream(5, i as u64, "example");
            let v: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let mut truth = vec![0.0; d];
    for x in &xs {
        truth
            .iter_mut()
            .zip(x)
            .for_each(|(t, v)| *t += v / n as f64);
    }

    let frame = KashinFrame::new(d, 1)?;
    println!(
        "d={d} frame dimension D={} level={}",
        frame.frame_dim(),
        frame.level()
    );
    for eps in [0.5, 2.0, 8.0] {
        let params = MeanParams::new(64, PrivacyBudget::new(eps, 1e-5)?, 9);
        let est = l2_mean_pipeline(&xs, 1.0, &frame, &params)?;
        let err: f64 = est
            .estimate
            .iter()
            .zip(&truth)
            .map(|(a, t)| (a - t).powi(2))
            .sum();
        println!(
            "eps={eps:<4} sq_err={err:.4} bits/client={:.1}",
            est.stats.bits_per_client_mean
        );
    }
    Ok(())
}
