use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{accounted, MeanEstimate};
use crate::accountant::{CalibrationMethod, PrivacyBudget};
use crate::seeds::{self, Stream};
use crate::{Error, NoiseCalibration, Result, SignVector, TranscriptStats};

/// Parameters of one coordinate-subsampled Gaussian run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsgmConfig {
    pub n: usize,
    pub d: usize,
    pub gamma: f64,
    pub budget: PrivacyBudget,
    /// ℓ∞ magnitude of the client sign vectors.
    pub c: f64,
    /// Seed of the sampling masks, known to clients and server.
    pub shared_seed: u64,
    pub method: CalibrationMethod,
}

impl CsgmConfig {
    /// `γ = min(1, b/d)`.
    pub fn from_bits(
        n: usize,
        d: usize,
        b: usize,
        budget: PrivacyBudget,
        c: f64,
        shared_seed: u64,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Self::with_gamma(n, d, (b as f64 / d as f64).min(1.0), budget, c, shared_seed)
    }

    pub fn with_gamma(
        n: usize,
        d: usize,
        gamma: f64,
        budget: PrivacyBudget,
        c: f64,
        shared_seed: u64,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Config(
                "need at least one client and one coordinate".into(),
            ));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Config(format!(
                "sampling rate must lie in (0, 1], got {gamma}"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!(
                "magnitude must be positive, got {c}"
            )));
        }
        let budget = PrivacyBudget::new(budget.eps, budget.delta)?;
        Ok(Self {
            n,
            d,
            gamma,
            budget,
            c,
            shared_seed,
            method: CalibrationMethod::ClosedForm,
        })
    }

    pub fn method(mut self, method: CalibrationMethod) -> Self {
        self.method = method;
        self
    }

    /// Noise for `d` composed coordinates with sensitivity `c`, normalized
    /// to mean scale for `n` clients.
    pub fn calibrate(&self) -> Result<NoiseCalibration> {
        Ok(
            NoiseCalibration::resolve(self.method, self.budget, self.gamma, self.d, self.c)?
                .for_clients(self.n),
        )
    }
}

/// One client's message: the sampled coordinates and their sign bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsgmReport {
    pub coords: Vec<u32>,
    pub signs: Vec<bool>,
}

impl CsgmReport {
    /// Payload bits. Coordinates are implied by the shared mask seed, so
    /// only one bit per sampled coordinate travels.
    pub fn bits(&self) -> u64 {
        self.signs.len() as u64
    }
}

/// The coordinates client `client` reports: each independently with
/// probability `gamma`, drawn by geometric skipping. `gamma = 1` selects all
/// coordinates without consuming randomness.
pub fn csgm_mask(shared_seed: u64, client: usize, d: usize, gamma: f64) -> Vec<u32> {
    if gamma >= 1.0 {
        return (0..d as u32).collect();
    }
    seeds::bernoulli_indices(
        &mut seeds::stream(shared_seed, client as u64, "mask"),
        d,
        gamma,
    )
}

pub fn csgm_client_encode(
    x: &SignVector,
    client: usize,
    config: &CsgmConfig,
) -> Result<CsgmReport> {
    if x.dim() != config.d {
        return Err(Error::Dimension(format!(
            "client vector has dimension {}, config expects {}",
            x.dim(),
            config.d
        )));
    }
    if (x.magnitude() - config.c).abs() > 1e-12 * config.c {
        return Err(Error::Range(format!(
            "client magnitude {} differs from the configured {}",
            x.magnitude(),
            config.c
        )));
    }
    let coords = csgm_mask(config.shared_seed, client, config.d, config.gamma);
    let signs = coords.iter().map(|&j| x.bit(j as usize)).collect();
    Ok(CsgmReport { coords, signs })
}

/// `μ̂_j = (1/(nγ))·Σ_{i: Z_ij = 1} x_i(j) + N(0, σ²_mean)`.
///
/// Noise is drawn for every coordinate from `noise_rng` unless the
/// calibration is disabled.
pub fn csgm_aggregate<R: Rng + ?Sized>(
    reports: &[CsgmReport],
    config: &CsgmConfig,
    calibration: &NoiseCalibration,
    noise_rng: &mut R,
) -> Result<MeanEstimate> {
    if reports.len() != config.n {
        return Err(Error::Protocol(format!(
            "expected {} reports, received {}",
            config.n,
            reports.len()
        )));
    }
    let mut counts = vec![0i64; config.d];
    let mut stats = TranscriptStats::new(config.n);
    for r in reports {
        if r.coords.len() != r.signs.len() {
            return Err(Error::Protocol(
                "report coordinate and sign counts differ".into(),
            ));
        }
        for (&j, &s) in r.coords.iter().zip(&r.signs) {
            let slot = counts.get_mut(j as usize).ok_or_else(|| {
                Error::Protocol(format!("coordinate {j} outside [0, {})", config.d))
            })?;
            *slot += if s { 1 } else { -1 };
        }
        stats.record(r.bits());
    }
    let denom = config.n as f64 * config.gamma;
    let mut estimate: Vec<f64> = counts
        .iter()
        .map(|&k| k as f64 * config.c / denom)
        .collect();
    add_gaussian(&mut estimate, calibration.sigma2_mean, noise_rng)?;
    Ok(MeanEstimate {
        estimate,
        calibration: *calibration,
        stats: accounted(stats, calibration),
    })
}

pub(crate) fn add_gaussian<R: Rng + ?Sized>(
    v: &mut [f64],
    variance: f64,
    rng: &mut R,
) -> Result<()> {
    if variance > 0.0 {
        let normal = Normal::new(0.0, variance.sqrt())
            .map_err(|e| Error::Range(format!("noise variance {variance}: {e}")))?;
        v.iter_mut().for_each(|x| *x += normal.sample(rng));
    }
    Ok(())
}

/// Encode every client and aggregate; noise comes from the `"noise"`
/// stream of `config.shared_seed`.
pub fn csgm_run(
    xs: &[SignVector],
    config: &CsgmConfig,
    calibration: &NoiseCalibration,
) -> Result<MeanEstimate> {
    let reports = xs
        .iter()
        .enumerate()
        .map(|(i, x)| csgm_client_encode(x, i, config))
        .collect::<Result<Vec<_>>>()?;
    let mut noise: Stream = seeds::stream(config.shared_seed, 0, "noise");
    csgm_aggregate(&reports, config, calibration, &mut noise)
}
