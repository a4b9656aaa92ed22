//! Communication-constrained differentially private estimation.
//!
//! Four protocols for federated mean and frequency estimation under joint
//! `b`-bit communication and `(ε, δ)`-DP constraints:
//!
//! - [`mean_est::csgm_aggregate`]: coordinate-subsampled Gaussian mechanism.
//!   Each client reports each coordinate with probability `γ = b/d`; the
//!   server adds Gaussian noise whose scale is reduced by the privacy
//!   amplification that the sampling provides.
//! - [`mean_est::csgm_preselect_run`]: the same mechanism restricted to a
//!   shared random subset of `d'` coordinates, removing the dimension from
//!   the communication cost.
//! - [`freq_est::rhr_run`]: subsampled recursive Hadamard response for
//!   histograms over a `d`-symbol domain with `b`-bit reports.
//! - [`shuffle::shuffled_sqkr_run`]: multi-round SQKR behind a trusted
//!   shuffler, for an untrusted server.
//!
//! [`accountant`] holds the privacy mathematics (closed-form calibration
//! chain and Rényi-DP accounting). [`harness`] drives seeded Monte-Carlo
//! sweeps and writes CSV/JSON result tables.
//!
//! Every randomized step takes an explicit [`seeds::Stream`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accountant;
pub mod error;
pub mod freq_est;
pub mod harness;
pub mod mean_est;
pub mod seeds;
pub mod shuffle;
pub mod stats;
pub mod transforms;

pub use accountant::{NoiseCalibration, PrivacyBudget, RdpCurve};
pub use error::{Error, Result};
pub use stats::TranscriptStats;
pub use transforms::{KashinFrame, SignVector};
