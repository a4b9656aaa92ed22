//! Frequency estimation by subsampled recursive Hadamard response.
//!
//! The domain `[0, d)` is split into `K = 2^{b−1}` chunks of size
//! `B = d/K`. A client holding item `v` in chunk `ℓ` at offset `o` samples
//! each transform row `j < B` with probability `1/B` and, for every sampled
//! row, sends `ℓ` (`b − 1` bits) and the sign of `H_B[j, o]` (1 bit). The row
//! index is implied by the shared sampling seed. The server averages the
//! signed values per `(ℓ, j)` cell, adds Gaussian noise to every cell and
//! inverts the transform chunk by chunk.
//!
//! `H_B` is orthonormal throughout (entries `±1/√B`), so it is its own
//! inverse. The noise level `σ²` is calibrated on the unnormalized
//! (`±1`-valued) cells, with sensitivity `Δ_eff` (see [`rhr_sensitivity`]);
//! in the orthonormal domain that is variance `σ²/B` per cell.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::accountant::{CalibrationMethod, PrivacyBudget};
use crate::mean_est::add_gaussian;
use crate::seeds;
use crate::transforms::fwht_in_place;
use crate::{Error, NoiseCalibration, Result, TranscriptStats};

/// A client's item as a one-hot vector over `[0, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OneHotItem {
    index: usize,
    d: usize,
}

impl OneHotItem {
    pub fn new(index: usize, d: usize) -> Result<Self> {
        if index >= d {
            return Err(Error::Range(format!(
                "item {index} outside domain [0, {d})"
            )));
        }
        Ok(Self { index, d })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn domain(&self) -> usize {
        self.d
    }
}

/// One sampled transform row: `(j, ℓ, sign)`. Only `ℓ` and the sign travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhrReport {
    pub coordinate: u32,
    pub chunk: u32,
    pub positive: bool,
}

/// Chunk layout for a padded power-of-two domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhrLayout {
    /// Padded domain size.
    pub d: usize,
    pub b: u32,
    /// Number of chunks `2^{b−1}`.
    pub chunks: usize,
    /// Chunk size `B`.
    pub chunk_size: usize,
}

impl RhrLayout {
    pub fn new(d: usize, b: u32) -> Result<Self> {
        if !d.is_power_of_two() {
            return Err(Error::Config(format!(
                "domain size {d} is not a power of two"
            )));
        }
        if b == 0 {
            return Err(Error::Config("reports need at least one bit".into()));
        }
        let chunks = 1usize
            .checked_shl(b - 1)
            .filter(|&k| k <= d)
            .ok_or_else(|| {
                Error::Config(format!(
                    "{b} bits give more chunks than the domain size {d}"
                ))
            })?;
        Ok(Self {
            d,
            b,
            chunks,
            chunk_size: d / chunks,
        })
    }

    /// Layout for an arbitrary domain size, padded to the next power of two.
    pub fn padded(d: usize, b: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("empty domain".into()));
        }
        Self::new(d.next_power_of_two(), b)
    }

    /// Payload bits of one report.
    pub fn report_bits(&self) -> u64 {
        self.b as u64
    }
}

/// `H_B[j, o] > 0` for the orthonormal Sylvester-ordered transform.
fn hadamard_positive(j: usize, offset: usize) -> bool {
    (j & offset).count_ones().is_multiple_of(2)
}

/// Reports of client `client` holding `item`. Row sampling uses the
/// `"sample"` stream of `shared_seed`.
pub fn rhr_client_encode(
    item: OneHotItem,
    layout: &RhrLayout,
    shared_seed: u64,
    client: usize,
) -> Result<Vec<RhrReport>> {
    if item.index >= layout.d {
        return Err(Error::Range(format!(
            "item {} outside padded domain {}",
            item.index, layout.d
        )));
    }
    let (chunk, offset) = (
        item.index / layout.chunk_size,
        item.index % layout.chunk_size,
    );
    let mut rng = seeds::stream(shared_seed, client as u64, "sample");
    let rows =
        seeds::bernoulli_indices(&mut rng, layout.chunk_size, 1.0 / layout.chunk_size as f64);
    Ok(rows
        .into_iter()
        .map(|j| RhrReport {
            coordinate: j,
            chunk: chunk as u32,
            positive: hadamard_positive(j as usize, offset),
        })
        .collect())
}

/// Output of a frequency-estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqEstimate {
    pub estimate: Vec<f64>,
    pub calibration: NoiseCalibration,
    pub stats: TranscriptStats,
}

/// Server side: `ŷ^(ℓ)(j) = (B/n)·Σ y_i^(ℓ)(j)` with `y = ±1/√B`, plus
/// `N(0, σ²/B)` in every cell, then `H_B` per chunk. `reports[i]` holds
/// client `i`'s reports. The estimate has the padded dimension.
pub fn rhr_aggregate<R: Rng + ?Sized>(
    reports: &[Vec<RhrReport>],
    layout: &RhrLayout,
    calibration: &NoiseCalibration,
    noise_rng: &mut R,
) -> Result<FreqEstimate> {
    let n = reports.len();
    if n == 0 {
        return Err(Error::Config("no clients".into()));
    }
    let bsz = layout.chunk_size;
    let mut cells = vec![0i64; layout.d];
    let mut stats = TranscriptStats::new(n);
    for r in reports.iter().flatten() {
        if r.coordinate as usize >= bsz || r.chunk as usize >= layout.chunks {
            return Err(Error::Protocol(format!(
                "report (j = {}, chunk = {}) outside {} x {}",
                r.coordinate, r.chunk, bsz, layout.chunks
            )));
        }
        cells[r.chunk as usize * bsz + r.coordinate as usize] += if r.positive { 1 } else { -1 };
        stats.record(layout.report_bits());
    }
    let scale = (bsz as f64).sqrt() / n as f64;
    let mut estimate: Vec<f64> = cells.iter().map(|&k| k as f64 * scale).collect();
    add_gaussian(
        &mut estimate,
        calibration.sigma2_sum / bsz as f64,
        noise_rng,
    )?;
    for chunk in estimate.chunks_exact_mut(bsz) {
        fwht_in_place(chunk)?;
    }
    let stats = match calibration.target {
        Some(t) => stats.with_budget(t.eps, t.delta),
        None => stats.with_budget(f64::INFINITY, 0.0),
    };
    Ok(FreqEstimate {
        estimate,
        calibration: *calibration,
        stats,
    })
}

/// Largest unnormalized per-row change `‖y_j(v) − y_j(v')‖₂` over item
/// pairs `v, v'` on a layout with `chunks` chunks of size `chunk_size`,
/// in units of one `±1` entry.
pub fn rhr_neighbor_change(chunk_size: usize, chunks: usize) -> f64 {
    let d = chunk_size * chunks;
    let mut worst: f64 = 0.0;
    for v in 0..d {
        for w in 0..d {
            for j in 0..chunk_size {
                let entry = |u: usize| {
                    let s: f64 = if hadamard_positive(j, u % chunk_size) {
                        1.0
                    } else {
                        -1.0
                    };
                    (u / chunk_size, s)
                };
                let ((lv, sv), (lw, sw)) = (entry(v), entry(w));
                let change: f64 = if lv == lw {
                    (sv - sw).abs()
                } else {
                    2f64.sqrt()
                };
                worst = worst.max(change);
            }
        }
    }
    worst
}

/// Per-row sensitivity used for calibration:
/// `max(B/n, κ·B/n)` where `κ` is the worst replace-one change found by
/// exhaustive search on a reduced layout (chunk size `min(B, 8)`, at most
/// two chunks). `κ` depends only on whether `B = 1` and whether there is
/// more than one chunk, so the reduced search is exact.
pub fn rhr_sensitivity(n: usize, layout: &RhrLayout) -> f64 {
    let unit = layout.chunk_size as f64 / n as f64;
    let kappa = rhr_neighbor_change(layout.chunk_size.min(8), layout.chunks.min(2));
    unit * kappa.max(1.0)
}

/// Noise for the `B` sampled rows at rate `1/B` with sensitivity
/// [`rhr_sensitivity`]. `sigma2_sum` is in the unnormalized convention.
pub fn rhr_calibrate(
    budget: PrivacyBudget,
    n: usize,
    layout: &RhrLayout,
) -> Result<NoiseCalibration> {
    rhr_calibrate_with(CalibrationMethod::ClosedForm, budget, n, layout)
}

pub fn rhr_calibrate_with(
    method: CalibrationMethod,
    budget: PrivacyBudget,
    n: usize,
    layout: &RhrLayout,
) -> Result<NoiseCalibration> {
    if n == 0 {
        return Err(Error::Config("no clients".into()));
    }
    let bsz = layout.chunk_size;
    let mut cal = NoiseCalibration::resolve(
        method,
        budget,
        1.0 / bsz as f64,
        bsz,
        rhr_sensitivity(n, layout),
    )?;
    cal.clients = Some(n);
    Ok(cal)
}

/// Domain size shared by all items.
fn common_domain(items: &[OneHotItem]) -> Result<usize> {
    let d = items
        .first()
        .ok_or_else(|| Error::Config("no clients".into()))?
        .d;
    if items.iter().any(|it| it.d != d) {
        return Err(Error::Dimension("items use different domains".into()));
    }
    Ok(d)
}

/// End to end: pad the domain, encode every client, aggregate with noise
/// from the `"noise"` stream of `seed`, drop the padding.
pub fn rhr_run(
    items: &[OneHotItem],
    b: u32,
    budget: PrivacyBudget,
    method: CalibrationMethod,
    seed: u64,
) -> Result<FreqEstimate> {
    let layout = RhrLayout::padded(common_domain(items)?, b)?;
    let calibration = rhr_calibrate_with(method, budget, items.len(), &layout)?;
    rhr_run_calibrated(items, &layout, &calibration, seed)
}

/// [`rhr_run`] with the layout and noise already resolved.
pub fn rhr_run_calibrated(
    items: &[OneHotItem],
    layout: &RhrLayout,
    calibration: &NoiseCalibration,
    seed: u64,
) -> Result<FreqEstimate> {
    let d = common_domain(items)?;
    if layout.d != d.next_power_of_two() {
        return Err(Error::Dimension(format!(
            "layout covers {} symbols, items use {d}",
            layout.d
        )));
    }
    let reports = items
        .iter()
        .enumerate()
        .map(|(i, &it)| rhr_client_encode(it, layout, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let mut noise = seeds::stream(seed, 0, "noise");
    let mut out = rhr_aggregate(&reports, layout, calibration, &mut noise)?;
    out.estimate.truncate(d);
    Ok(out)
}
