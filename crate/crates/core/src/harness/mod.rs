//! Seeded Monte-Carlo sweeps over ε grids, privacy accounting per row and
//! CSV/JSON result tables.
//!
//! Trial `t` of a sweep runs with the seed derived from
//! `(protocol_seed, t, "trial")`, whatever the thread count; the protocol
//! name never enters the derivation, so the Gaussian baseline and CSGM at
//! `γ = 1` see the same randomness. The same trial seeds are reused at every
//! grid point.

mod config;
mod data;
mod output;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accountant::{
    amplify_shuffle, closed_form_epsilon, compose_advanced, default_orders,
    rdp_subsampled_gaussian_epsilon, rdp_to_dp, shuffle_rdp_curve, CalibrationMethod,
    PrivacyBudget,
};
use crate::freq_est::{rhr_calibrate_with, rhr_run_calibrated, OneHotItem, RhrLayout};
use crate::mean_est::{
    csgm_preselect_run, csgm_run, l2_encode_clients, l2_mean_from_coeffs, preselect_calibration,
    CsgmConfig, MeanParams,
};
use crate::seeds;
use crate::shuffle::{
    plan_shuffled_sqkr_with, shuffled_sqkr_from_coeffs, wire, PlanOptions, ShufflePlan,
};
use crate::{Error, KashinFrame, NoiseCalibration, Result, SignVector, TranscriptStats};

pub use config::{Accounting, Distribution, ExperimentConfig, Protocol};
pub use data::{
    as_sign_vectors, empirical_mean, gen_synthetic_freq, gen_synthetic_mean, MEAN_BIAS,
};
pub use output::{
    fmt_g12, json_row, to_csv, to_json, write_csv_header, write_csv_row, CSV_COLUMNS,
};

/// Number of frame sign seeds tried before a Kashin failure is reported.
pub const FRAME_ATTEMPTS: u64 = 8;

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub protocol: Protocol,
    pub n: usize,
    pub d: usize,
    /// Bit budget per client (`γ·d` for CSGM given a rate).
    pub b: f64,
    pub gamma: f64,
    pub eps_target: f64,
    pub delta: f64,
    pub eps_accounted_closed: f64,
    pub eps_accounted_rdp: f64,
    /// Mean over trials of `‖estimate − truth‖₂²`.
    pub mse_mean: f64,
    /// Standard error of `mse_mean` from the per-trial squared errors.
    pub mse_stderr: f64,
    /// Mean ℓ₁ error; frequency runs only (`NaN` otherwise).
    pub l1_mean: f64,
    /// Exact bits sent over all trials.
    pub bits_total: u64,
    /// Mean bits per client per run.
    pub bits_per_client: f64,
    pub trials: usize,
    pub seed: u64,
    pub infeasible: bool,
    pub stats: TranscriptStats,
}

/// Seed of trial `t`.
pub fn trial_seed(protocol_seed: u64, t: usize) -> u64 {
    seeds::derive_seed(protocol_seed, t as u64, "trial")
}

enum Data {
    Signs {
        xs: Vec<SignVector>,
        truth: Vec<f64>,
    },
    Frame {
        coeffs: Vec<Vec<f64>>,
        frame: KashinFrame,
        truth: Vec<f64>,
    },
    Items {
        items: Vec<OneHotItem>,
        truth: Vec<f64>,
        layout: RhrLayout,
    },
}

impl Data {
    fn truth(&self) -> &[f64] {
        match self {
            Data::Signs { truth, .. } | Data::Frame { truth, .. } | Data::Items { truth, .. } => {
                truth
            }
        }
    }
}

enum Mechanism {
    Csgm(CsgmConfig, NoiseCalibration),
    Preselect(MeanParams),
    L2(MeanParams),
    Rhr(NoiseCalibration),
    Shuffle(ShufflePlan),
}

/// Kashin frame for `d` and the coefficients of `xs`, trying successive
/// sign seeds if an encoding misses the level.
pub fn encode_with_frame(
    xs: &[Vec<f64>],
    d: usize,
    seed: u64,
) -> Result<(KashinFrame, Vec<Vec<f64>>)> {
    let mut last = None;
    for k in 0..FRAME_ATTEMPTS {
        let frame = KashinFrame::new(d, seeds::derive_seed(seed, k, "frame"))?;
        match l2_encode_clients(xs, 1.0, &frame) {
            Ok(coeffs) => return Ok((frame, coeffs)),
            Err(e @ (Error::LevelExceeded { .. } | Error::NonConvergence { .. })) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn prepare(config: &ExperimentConfig) -> Result<Data> {
    let (n, d) = (config.n, config.d);
    Ok(match config.protocol {
        Protocol::Csgm | Protocol::GaussianBaseline | Protocol::CsgmPreselect => {
            let xs = gen_synthetic_mean(n, d, config.data_seed);
            Data::Signs {
                truth: empirical_mean(&xs),
                xs: as_sign_vectors(&xs)?,
            }
        }
        Protocol::L2Pipeline | Protocol::ShuffledSqkr | Protocol::SqkrLdpBaseline => {
            let xs = gen_synthetic_mean(n, d, config.data_seed);
            let (frame, coeffs) = encode_with_frame(&xs, d, config.protocol_seed)?;
            Data::Frame {
                truth: empirical_mean(&xs),
                coeffs,
                frame,
            }
        }
        Protocol::Rhr => {
            let (items, hist) = gen_synthetic_freq(n, d, config.distribution, config.data_seed)?;
            let b = config.b.expect("validated") as u32;
            Data::Items {
                items,
                truth: hist.iter().map(|&h| h as f64 / n as f64).collect(),
                layout: RhrLayout::padded(d, b)?,
            }
        }
    })
}

fn resolve(config: &ExperimentConfig, data: &Data, eps: f64) -> Result<Mechanism> {
    let budget = PrivacyBudget::new(eps, config.delta)?;
    let method = config.accounting.method();
    let (n, d) = (config.n, config.d);
    let c = 1.0 / (d as f64).sqrt();
    let b = config.b.unwrap_or(d);
    Ok(match (config.protocol, data) {
        (Protocol::Csgm | Protocol::GaussianBaseline, _) => {
            let cfg =
                CsgmConfig::with_gamma(n, d, config.csgm_gamma(), budget, c, 0)?.method(method);
            let cal = cfg.calibrate()?;
            Mechanism::Csgm(cfg, cal)
        }
        (Protocol::CsgmPreselect, _) => {
            let params = MeanParams::new(b, budget, 0).with_method(method);
            let cal = preselect_calibration(n, d, c, &params)?;
            Mechanism::Preselect(params.with_calibration(cal))
        }
        (Protocol::L2Pipeline, Data::Frame { frame, .. }) => {
            let params = MeanParams::new(b, budget, 0).with_method(method);
            let cal =
                preselect_calibration(n, frame.frame_dim(), frame.coefficient_bound(1.0), &params)?;
            Mechanism::L2(params.with_calibration(cal))
        }
        (Protocol::Rhr, Data::Items { layout, .. }) => {
            Mechanism::Rhr(rhr_calibrate_with(method, budget, n, layout)?)
        }
        (Protocol::ShuffledSqkr, Data::Frame { frame, .. }) => {
            let opts = PlanOptions {
                b0: config.b0.unwrap_or(1),
                rounds: config.rounds,
                method,
            };
            Mechanism::Shuffle(plan_shuffled_sqkr_with(
                budget,
                b,
                frame.frame_dim(),
                n,
                &opts,
            )?)
        }
        (Protocol::SqkrLdpBaseline, Data::Frame { frame, .. }) => {
            let b0 = config.b0.unwrap_or(1);
            let rounds = config.rounds.unwrap_or(1);
            let plan = ShufflePlan::local(eps, b0, rounds, frame.frame_dim(), n)?;
            if plan.bits_per_client() > b as u64 {
                return Err(Error::Infeasible(format!(
                    "{} bits per client exceed the budget of {b}",
                    plan.bits_per_client()
                )));
            }
            Mechanism::Shuffle(plan)
        }
        _ => unreachable!("data prepared for the protocol"),
    })
}

fn run_trial(mech: &Mechanism, data: &Data, seed: u64) -> Result<(Vec<f64>, TranscriptStats)> {
    let est = match (mech, data) {
        (Mechanism::Csgm(cfg, cal), Data::Signs { xs, .. }) => {
            let cfg = CsgmConfig {
                shared_seed: seed,
                ..*cfg
            };
            csgm_run(xs, &cfg, cal)?
        }
        (Mechanism::Preselect(p), Data::Signs { xs, .. }) => {
            csgm_preselect_run(xs, &p.with_seed(seed))?
        }
        (Mechanism::L2(p), Data::Frame { coeffs, frame, .. }) => {
            l2_mean_from_coeffs(coeffs, 1.0, frame, &p.with_seed(seed))?
        }
        (Mechanism::Shuffle(plan), Data::Frame { coeffs, frame, .. }) => {
            shuffled_sqkr_from_coeffs(coeffs, 1.0, plan, frame, seed)?
        }
        (Mechanism::Rhr(cal), Data::Items { items, layout, .. }) => {
            let f = rhr_run_calibrated(items, layout, cal, seed)?;
            return Ok((f.estimate, f.stats));
        }
        _ => unreachable!("mechanism resolved for the data"),
    };
    Ok((est.estimate, est.stats))
}

/// Closed-form and RDP `ε` at `config.delta` for the Gaussian noise in
/// `calibration` (`B = coords` releases at rate `gamma`). `+∞` when the
/// noise is disabled or the closed-form lemmas do not apply.
pub fn account_run(
    config: &ExperimentConfig,
    calibration: &NoiseCalibration,
) -> Result<(f64, f64)> {
    if calibration.is_disabled() || calibration.sigma2_sum <= 0.0 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let cal = calibration;
    let closed = closed_form_epsilon(
        cal.sigma2_sum,
        cal.sensitivity,
        cal.gamma,
        cal.coords,
        config.delta,
    )?;
    let z = cal.sigma2_sum.sqrt() / cal.sensitivity;
    let rdp =
        rdp_subsampled_gaussian_epsilon(cal.gamma, z, cal.coords, config.delta, &default_orders())?;
    Ok((closed, rdp))
}

/// Both accountings of a shuffle plan at total `delta`: advanced
/// composition of the per-round amplification bound (`δ/(2T)` per round),
/// and the composed shuffle RDP curve. A local plan reports its pure
/// budget for both.
pub fn account_shuffle(plan: &ShufflePlan, delta: f64) -> Result<(f64, f64)> {
    if plan.method == CalibrationMethod::Disabled {
        return Ok((plan.accounted.eps, plan.accounted.eps));
    }
    let delta1 = delta / (2.0 * plan.rounds as f64);
    let closed = amplify_shuffle(plan.eps0, plan.clients, delta1)
        .and_then(|a| compose_advanced(a, delta1, plan.rounds, delta / 2.0))
        .map_or(f64::INFINITY, |b| b.eps);
    let rdp = rdp_to_dp(
        &shuffle_rdp_curve(plan.eps0, plan.clients, &default_orders())?.scaled(plan.rounds),
        delta,
    )?;
    Ok((closed, rdp))
}

fn row_shape(config: &ExperimentConfig, mech: Option<&Mechanism>) -> (f64, f64) {
    let b = config
        .b
        .map_or(config.csgm_gamma() * config.d as f64, |b| b as f64);
    match mech {
        Some(Mechanism::Csgm(cfg, _)) => (cfg.gamma * config.d as f64, cfg.gamma),
        Some(Mechanism::Preselect(p) | Mechanism::L2(p)) => {
            (b, p.calibration.map_or(f64::NAN, |c| c.gamma))
        }
        Some(Mechanism::Rhr(cal)) => (b, cal.gamma),
        Some(Mechanism::Shuffle(plan)) => (b, plan.b0 as f64 / plan.dim as f64),
        None => (b, f64::NAN),
    }
}

fn infeasible_row(config: &ExperimentConfig, eps: f64) -> TrialResult {
    let (b, gamma) = row_shape(config, None);
    TrialResult {
        protocol: config.protocol,
        n: config.n,
        d: config.d,
        b,
        gamma,
        eps_target: eps,
        delta: config.delta,
        eps_accounted_closed: f64::NAN,
        eps_accounted_rdp: f64::NAN,
        mse_mean: f64::NAN,
        mse_stderr: f64::NAN,
        l1_mean: f64::NAN,
        bits_total: 0,
        bits_per_client: 0.0,
        trials: config.trials,
        seed: config.protocol_seed,
        infeasible: true,
        stats: TranscriptStats::new(0),
    }
}

fn run_point(
    config: &ExperimentConfig,
    data: &Data,
    eps: f64,
    mech: &Mechanism,
) -> Result<TrialResult> {
    let truth = data.truth();
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let (est, stats) = run_trial(mech, data, trial_seed(config.protocol_seed, t))?;
            let sq: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum();
            let l1: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum();
            Ok((sq, l1, stats))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = outcomes.len() as f64;
    let mse = outcomes.iter().map(|o| o.0).sum::<f64>() / t;
    let stderr = if outcomes.len() > 1 {
        let var = outcomes.iter().map(|o| (o.0 - mse).powi(2)).sum::<f64>() / (t - 1.0);
        (var / t).sqrt()
    } else {
        0.0
    };
    let l1 = if config.protocol.is_frequency() {
        outcomes.iter().map(|o| o.1).sum::<f64>() / t
    } else {
        f64::NAN
    };
    let mut stats = TranscriptStats::new(0);
    for o in &outcomes {
        stats.absorb(&o.2);
    }
    let stats = stats.with_budget(outcomes[0].2.accounted_eps, outcomes[0].2.accounted_delta);
    let (closed, rdp) = match mech {
        Mechanism::Csgm(_, cal) | Mechanism::Rhr(cal) => account_run(config, cal)?,
        Mechanism::Preselect(p) | Mechanism::L2(p) => {
            account_run(config, &p.calibration.expect("resolved"))?
        }
        Mechanism::Shuffle(plan) => account_shuffle(plan, config.delta)?,
    };
    let (b, gamma) = row_shape(config, Some(mech));
    Ok(TrialResult {
        protocol: config.protocol,
        n: config.n,
        d: config.d,
        b,
        gamma,
        eps_target: eps,
        delta: config.delta,
        eps_accounted_closed: closed,
        eps_accounted_rdp: rdp,
        mse_mean: mse,
        mse_stderr: stderr,
        l1_mean: l1,
        bits_total: stats.bits_total,
        bits_per_client: stats.bits_per_client_mean,
        trials: config.trials,
        seed: config.protocol_seed,
        infeasible: false,
        stats,
    })
}

/// Run the sweep, handing each row to `sink` as soon as it is complete.
/// Grid points whose calibration is infeasible produce a row flagged
/// `infeasible` instead of an error.
pub fn run_sweep_with<F>(config: &ExperimentConfig, mut sink: F) -> Result<Vec<TrialResult>>
where
    F: FnMut(&TrialResult) -> Result<()>,
{
    config.validate()?;
    let data = prepare(config)?;
    let mut rows = Vec::with_capacity(config.eps_grid.len());
    for &eps in &config.eps_grid {
        let row = match resolve(config, &data, eps) {
            Ok(mech) => run_point(config, &data, eps, &mech)?,
            Err(Error::Infeasible(_)) => infeasible_row(config, eps),
            Err(e) => return Err(e),
        };
        sink(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    run_sweep_with(config, |_| Ok(()))
}

/// Exact bits one client sends in one shuffled run under `plan`.
pub fn shuffle_bits_per_client(plan: &ShufflePlan) -> u64 {
    plan.rounds as u64 * wire::report_bits(plan.dim, plan.b0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(protocol: Protocol) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(protocol, 40, 16, vec![0.5, 2.0], 1e-5);
        c.trials = 20;
        c.b = Some(if protocol == Protocol::Rhr { 3 } else { 8 });
        c
    }

    #[test]
    fn baseline_matches_full_rate_csgm() {
        let mut a = small(Protocol::Csgm);
        a.b = None;
        a.gamma = Some(1.0);
        let mut g = small(Protocol::GaussianBaseline);
        g.b = None;
        let ra = run_sweep(&a).unwrap();
        let rg = run_sweep(&g).unwrap();
        for (x, y) in ra.iter().zip(&rg) {
            assert_eq!(x.mse_mean.to_bits(), y.mse_mean.to_bits());
            assert_eq!(x.bits_total, y.bits_total);
        }
    }

    #[test]
    fn every_protocol_runs() {
        for p in [
            Protocol::Csgm,
            Protocol::CsgmPreselect,
            Protocol::L2Pipeline,
            Protocol::Rhr,
            Protocol::GaussianBaseline,
            Protocol::SqkrLdpBaseline,
        ] {
            let rows = run_sweep(&small(p)).unwrap();
            assert_eq!(rows.len(), 2);
            for r in &rows {
                assert!(!r.infeasible, "{p:?}");
                assert!(r.mse_mean.is_finite() && r.bits_total > 0);
            }
        }
    }

    #[test]
    fn shuffled_needs_enough_clients() {
        let mut c = small(Protocol::ShuffledSqkr);
        c.b = Some(24);
        let rows = run_sweep(&c).unwrap();
        assert!(rows.iter().all(|r| r.infeasible));
        c.n = 2000;
        c.trials = 3;
        let rows = run_sweep(&c).unwrap();
        assert!(rows.iter().all(|r| !r.infeasible));
        assert_eq!(rows[0].bits_per_client, 24.0);
    }

    #[test]
    fn rows_are_incremental_and_deterministic() {
        let c = small(Protocol::Csgm);
        let mut seen = 0;
        let rows = run_sweep_with(&c, |_| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, rows.len());
        assert_eq!(to_csv(&rows), to_csv(&run_sweep(&c).unwrap()));
    }

    #[test]
    fn closed_form_rows_within_target() {
        for p in [Protocol::Csgm, Protocol::CsgmPreselect, Protocol::Rhr] {
            for r in run_sweep(&small(p)).unwrap() {
                assert!(
                    r.eps_accounted_closed <= r.eps_target * (1.0 + 1e-9),
                    "{p:?}"
                );
                assert!(r.eps_accounted_rdp <= r.eps_target, "{p:?}");
            }
        }
    }
}
