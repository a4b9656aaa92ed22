//! Multi-round shuffled SQKR for an untrusted server.
//!
//! Each round, every client samples `b₀` coordinates of its rounded Kashin
//! coefficients and randomizes their signs with `ε₀`-LDP randomized
//! response. A trusted shuffler permutes the reports, and the server only
//! ever sees the shuffled batch. Round estimates are averaged and decoded.

mod plan;
mod sqkr;
pub mod wire;

use crate::mean_est::{l2_encode_clients, MeanEstimate};
use crate::seeds;
use crate::transforms::{kashin_decode, randomized_round};
use crate::{Error, KashinFrame, NoiseCalibration, Result, SignVector, TranscriptStats};

pub use plan::{
    plan_shuffled_sqkr, plan_shuffled_sqkr_rdp, plan_shuffled_sqkr_with, PlanOptions, ShufflePlan,
    MIN_CLIENTS,
};
pub use sqkr::{
    debias_factor, keep_probability, shuffle_round, sqkr_estimate, sqkr_randomize, SqkrReport,
};
pub use wire::{decode_round, encode_round};

/// Run the rounds of `plan` on already-rounded client vectors and return
/// the averaged estimate in their dimension.
///
/// Round `k` uses the streams `(seed_k, i, "rr")` for client `i` and
/// `(seed, k, "perm")` for the shuffler, with `seed_k` derived from
/// `(seed, k, "round")`, so rounds are independent of execution order.
pub fn shuffled_sqkr_rounds(
    signs: &[SignVector],
    plan: &ShufflePlan,
    seed: u64,
) -> Result<(Vec<f64>, TranscriptStats)> {
    let first = signs
        .first()
        .ok_or_else(|| Error::Config("no clients".into()))?;
    let (dim, c) = (first.dim(), first.magnitude());
    if dim != plan.dim {
        return Err(Error::Dimension(format!(
            "plan was made for dimension {}, clients hold {dim}",
            plan.dim
        )));
    }
    let u16_rounds =
        u16::try_from(plan.rounds).map_err(|_| Error::Config("too many rounds".into()))?;
    let mut stats = TranscriptStats::new(signs.len());
    let mut mean = vec![0.0; dim];
    for k in 0..u16_rounds {
        let round_seed = seeds::derive_seed(seed, k.into(), "round");
        let reports = signs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                sqkr_randomize(
                    x,
                    plan.eps0,
                    plan.b0,
                    &mut seeds::stream(round_seed, i as u64, "rr"),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let shuffled = shuffle_round(reports, &mut seeds::stream(seed, k.into(), "perm"));
        for _ in &shuffled {
            stats.record(wire::report_bits(dim, plan.b0));
        }
        let est = sqkr_estimate(&shuffled, plan.eps0, plan.b0, dim, c)?;
        mean.iter_mut().zip(&est).for_each(|(m, e)| *m += e);
    }
    let t = plan.rounds as f64;
    mean.iter_mut().for_each(|m| *m /= t);
    Ok((
        mean,
        stats.with_budget(plan.accounted.eps, plan.accounted.delta),
    ))
}

/// Shuffled SQKR from precomputed Kashin coefficients: round once per
/// client on its `"round"` stream, run the rounds, decode.
pub fn shuffled_sqkr_from_coeffs(
    coeffs: &[Vec<f64>],
    c_bound: f64,
    plan: &ShufflePlan,
    frame: &KashinFrame,
    seed: u64,
) -> Result<MeanEstimate> {
    if plan.dim != frame.frame_dim() {
        return Err(Error::Dimension(format!(
            "plan dimension {} differs from the frame dimension {}",
            plan.dim,
            frame.frame_dim()
        )));
    }
    let c = frame.coefficient_bound(c_bound);
    let signs = coeffs
        .iter()
        .enumerate()
        .map(|(i, xt)| randomized_round(xt, c, &mut seeds::stream(seed, i as u64, "round")))
        .collect::<Result<Vec<_>>>()?;
    let (mean, stats) = shuffled_sqkr_rounds(&signs, plan, seed)?;
    Ok(MeanEstimate {
        estimate: kashin_decode(&mean, frame)?,
        calibration: plan_calibration(plan),
        stats,
    })
}

/// Mean of vectors with `‖x_i‖₂ ≤ c_bound` via shuffled SQKR in the
/// frame domain. `plan.dim` must equal the frame dimension.
pub fn shuffled_sqkr_run(
    xs: &[Vec<f64>],
    c_bound: f64,
    plan: &ShufflePlan,
    frame: &KashinFrame,
    seed: u64,
) -> Result<MeanEstimate> {
    let coeffs = l2_encode_clients(xs, c_bound, frame)?;
    shuffled_sqkr_from_coeffs(&coeffs, c_bound, plan, frame, seed)
}

/// No central noise is added. `eps1` records `ε₀`, `eps2`/`delta2` the
/// overall accounted budget, `coords` the number of rounds.
fn plan_calibration(plan: &ShufflePlan) -> NoiseCalibration {
    NoiseCalibration {
        sigma2_mean: 0.0,
        sigma2_sum: 0.0,
        eps1: plan.eps0,
        delta1: plan.delta1,
        eps2: plan.accounted.eps,
        delta2: plan.accounted.delta,
        gamma: plan.b0 as f64 / plan.dim as f64,
        coords: plan.rounds,
        sensitivity: 0.0,
        clients: Some(plan.clients),
        method: plan.method,
        target: Some(plan.accounted),
    }
}
