//! Central-DP mean estimation under a per-client bit budget.
//!
//! [`csgm_aggregate`] is the coordinate-subsampled Gaussian mechanism on
//! sign vectors, [`csgm_preselect_run`] restricts it to a shared random
//! coordinate subset, and [`l2_mean_pipeline`] handles general ℓ₂-bounded
//! inputs through a Kashin representation and randomized rounding.

mod csgm;
mod pipeline;
mod preselect;

use serde::{Deserialize, Serialize};

use crate::accountant::{CalibrationMethod, PrivacyBudget};
use crate::{NoiseCalibration, TranscriptStats};

pub(crate) use csgm::add_gaussian;
pub use csgm::{csgm_aggregate, csgm_client_encode, csgm_mask, csgm_run, CsgmConfig, CsgmReport};
pub use pipeline::{l2_encode_clients, l2_mean_from_coeffs, l2_mean_pipeline};
pub use preselect::{csgm_preselect_run, preselect_calibration, select_coordinates, select_dprime};

/// Output of a mean-estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub estimate: Vec<f64>,
    pub calibration: NoiseCalibration,
    pub stats: TranscriptStats,
}

/// Shared knobs of the pre-selected and ℓ₂ protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanParams {
    /// Per-client bit budget.
    pub b: usize,
    pub budget: PrivacyBudget,
    pub method: CalibrationMethod,
    /// Master seed of the run; masks, selection, rounding and noise derive
    /// from it under separate labels.
    pub seed: u64,
    /// Overrides the number of pre-selected coordinates.
    pub dprime: Option<usize>,
    /// Pre-resolved noise, reused across trials instead of calibrating on
    /// every run. Must come from [`preselect_calibration`] for the same
    /// inputs.
    pub calibration: Option<NoiseCalibration>,
}

impl MeanParams {
    pub fn new(b: usize, budget: PrivacyBudget, seed: u64) -> Self {
        Self {
            b,
            budget,
            method: CalibrationMethod::ClosedForm,
            seed,
            dprime: None,
            calibration: None,
        }
    }

    pub fn with_method(mut self, method: CalibrationMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_dprime(mut self, dprime: usize) -> Self {
        self.dprime = Some(dprime);
        self
    }

    pub fn with_calibration(mut self, calibration: NoiseCalibration) -> Self {
        self.calibration = Some(calibration);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub(crate) fn accounted(stats: TranscriptStats, cal: &NoiseCalibration) -> TranscriptStats {
    match cal.target {
        Some(t) => stats.with_budget(t.eps, t.delta),
        None => stats.with_budget(f64::INFINITY, 0.0),
    }
}
