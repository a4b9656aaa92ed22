use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accountant::{CalibrationMethod, PrivacyBudget};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Csgm,
    CsgmPreselect,
    L2Pipeline,
    Rhr,
    ShuffledSqkr,
    /// Uncompressed central Gaussian mechanism: CSGM at `γ = 1`.
    GaussianBaseline,
    /// Single-round SQKR with `ε₀ = ε` and no shuffle credit.
    SqkrLdpBaseline,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Csgm => "csgm",
            Protocol::CsgmPreselect => "csgm-preselect",
            Protocol::L2Pipeline => "l2-pipeline",
            Protocol::Rhr => "rhr",
            Protocol::ShuffledSqkr => "shuffled-sqkr",
            Protocol::GaussianBaseline => "gaussian-baseline",
            Protocol::SqkrLdpBaseline => "sqkr-ldp-baseline",
        }
    }

    pub fn is_frequency(&self) -> bool {
        matches!(self, Protocol::Rhr)
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accounting {
    #[default]
    ClosedForm,
    Rdp,
}

impl Accounting {
    pub fn method(&self) -> CalibrationMethod {
        match self {
            Accounting::ClosedForm => CalibrationMethod::ClosedForm,
            Accounting::Rdp => CalibrationMethod::Rdp,
        }
    }
}

impl std::str::FromStr for Accounting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown accounting {s:?}")))
    }
}

/// Item distribution for frequency runs. JSON: `"uniform"` or `{"zipf": 1.1}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    #[default]
    Uniform,
    Zipf(f64),
}

/// One sweep over a grid of ε values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub n: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub eps_grid: Vec<f64>,
    pub delta: f64,
    pub trials: usize,
    pub data_seed: u64,
    pub protocol_seed: u64,
    #[serde(default)]
    pub accounting: Accounting,
    #[serde(default)]
    pub distribution: Distribution,
    /// Fixes the number of shuffle rounds instead of filling the bit budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Coordinates per SQKR report (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol, n: usize, d: usize, eps_grid: Vec<f64>, delta: f64) -> Self {
        Self {
            protocol,
            n,
            d,
            b: None,
            gamma: None,
            eps_grid,
            delta,
            trials: 100,
            data_seed: 0,
            protocol_seed: 1,
            accounting: Accounting::default(),
            distribution: Distribution::default(),
            rounds: None,
            b0: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.d == 0 {
            return bad("n and d must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.eps_grid.is_empty() {
            return bad("eps_grid is empty".into());
        }
        if self.eps_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return bad("eps_grid values must be positive and finite".into());
        }
        if self.eps_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("eps_grid must be strictly increasing".into());
        }
        PrivacyBudget::new(self.eps_grid[0], self.delta)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return bad(format!("gamma must lie in (0, 1], got {g}"));
            }
        }
        if self.b == Some(0) {
            return bad("b must be positive".into());
        }
        match self.protocol {
            Protocol::Csgm => {
                if self.b.is_some() == self.gamma.is_some() {
                    return bad("csgm needs exactly one of b and gamma".into());
                }
            }
            Protocol::GaussianBaseline => {
                if self.gamma.is_some_and(|g| g != 1.0) {
                    return bad("gaussian-baseline runs at gamma = 1".into());
                }
            }
            _ => {
                if self.b.is_none() || self.gamma.is_some() {
                    return bad(format!("{} needs b and no gamma", self.protocol.name()));
                }
            }
        }
        if let Distribution::Zipf(s) = self.distribution {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("zipf exponent must be positive, got {s}"));
            }
        }
        if self.rounds == Some(0) || self.b0 == Some(0) {
            return bad("rounds and b0 must be positive".into());
        }
        Ok(())
    }

    /// Sampling rate of the plain coordinate-subsampled protocols.
    pub fn csgm_gamma(&self) -> f64 {
        match (self.protocol, self.gamma, self.b) {
            (Protocol::GaussianBaseline, _, _) => 1.0,
            (_, Some(g), _) => g,
            (_, None, Some(b)) => (b as f64 / self.d as f64).min(1.0),
            _ => 1.0,
        }
    }
}
