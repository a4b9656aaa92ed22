use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SignVector};

/// One client's message in one round: `b₀` sampled coordinates and the
/// randomized signs reported for them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SqkrReport {
    pub coords: Vec<u32>,
    pub signs: Vec<bool>,
}

/// Probability of reporting the true `b₀`-bit string:
/// `e^{ε₀}/(e^{ε₀} + 2^{b₀} − 1)`.
pub fn keep_probability(eps0: f64, b0: usize) -> f64 {
    let others = 2f64.powi(b0 as i32) - 1.0;
    1.0 / (1.0 + others * (-eps0).exp())
}

/// Debiasing factor `(e^{ε₀} + 2^{b₀} − 1)/(e^{ε₀} − 1)`.
pub fn debias_factor(eps0: f64, b0: usize) -> f64 {
    let others = 2f64.powi(b0 as i32) - 1.0;
    (1.0 + others * (-eps0).exp()) / -(-eps0).exp_m1()
}

/// Sample `b0` coordinates uniformly with replacement, then apply
/// `2^{b₀}`-ary randomized response to their sign string: keep it with
/// [`keep_probability`], otherwise report a uniformly random different
/// string. This is exactly `ε₀`-LDP.
pub fn sqkr_randomize<R: Rng + ?Sized>(
    x: &SignVector,
    eps0: f64,
    b0: usize,
    rng: &mut R,
) -> Result<SqkrReport> {
    if !(eps0 > 0.0) {
        return Err(Error::Range(format!("eps0 must be positive, got {eps0}")));
    }
    if b0 == 0 {
        return Err(Error::Range("b0 must be at least 1".into()));
    }
    let d = x.dim();
    let coords: Vec<u32> = (0..b0).map(|_| rng.random_range(0..d as u32)).collect();
    let truth: Vec<bool> = coords.iter().map(|&j| x.bit(j as usize)).collect();
    if rng.random::<f64>() < keep_probability(eps0, b0) {
        return Ok(SqkrReport {
            coords,
            signs: truth,
        });
    }
    // Uniform over the 2^b0 − 1 strings that differ from the truth.
    let signs = loop {
        let s: Vec<bool> = (0..b0).map(|_| rng.random()).collect();
        if s != truth {
            break s;
        }
    };
    Ok(SqkrReport { coords, signs })
}

/// Reorder reports by one uniform permutation (Fisher-Yates).
pub fn shuffle_round<R: Rng + ?Sized>(
    mut reports: Vec<SqkrReport>,
    rng: &mut R,
) -> Vec<SqkrReport> {
    reports.shuffle(rng);
    reports
}

/// `(d/(n·b₀))·factor·Σ_i Σ_j Y(i,j)·e_{s(i,j)}` with `Y = ±c`.
pub fn sqkr_estimate(
    reports: &[SqkrReport],
    eps0: f64,
    b0: usize,
    d: usize,
    c: f64,
) -> Result<Vec<f64>> {
    let n = reports.len();
    if n == 0 {
        return Err(Error::Protocol("no reports".into()));
    }
    let mut acc = vec![0i64; d];
    for r in reports {
        if r.coords.len() != b0 || r.signs.len() != b0 {
            return Err(Error::Protocol(format!(
                "report carries {} slots, expected {b0}",
                r.coords.len()
            )));
        }
        for (&j, &s) in r.coords.iter().zip(&r.signs) {
            let slot = acc
                .get_mut(j as usize)
                .ok_or_else(|| Error::Protocol(format!("coordinate {j} outside [0, {d})")))?;
            *slot += if s { 1 } else { -1 };
        }
    }
    let scale = d as f64 / (n * b0) as f64 * debias_factor(eps0, b0) * c;
    Ok(acc.iter().map(|&k| k as f64 * scale).collect())
}
