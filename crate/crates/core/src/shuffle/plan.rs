use serde::{Deserialize, Serialize};

use super::wire::report_bits;
use crate::accountant::{
    amplify_shuffle, compose_advanced, default_orders, rdp_to_dp, shuffle_eps0_bound,
    shuffle_rdp_curve, CalibrationMethod, PrivacyBudget,
};
use crate::{Error, Result};

/// Smallest client count the planner accepts.
pub const MIN_CLIENTS: usize = 31;

/// Parameters of a multi-round shuffled run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShufflePlan {
    pub rounds: usize,
    /// Per-round local budget.
    pub eps0: f64,
    /// Coordinates per report.
    pub b0: usize,
    /// Per-round shuffle δ (0 under RDP accounting).
    pub delta1: f64,
    /// Composition δ.
    pub delta2: f64,
    pub accounted: PrivacyBudget,
    /// Working dimension the coordinates index into.
    pub dim: usize,
    pub clients: usize,
    pub method: CalibrationMethod,
}

impl ShufflePlan {
    /// Exact bits each client sends over all rounds.
    pub fn bits_per_client(&self) -> u64 {
        self.rounds as u64 * report_bits(self.dim, self.b0)
    }

    /// Pure local randomization with no shuffle credit: the accounted
    /// budget is the composed local one, `(rounds·ε₀, 0)`.
    pub fn local(eps0: f64, b0: usize, rounds: usize, dim: usize, clients: usize) -> Result<Self> {
        if !(eps0 > 0.0) || b0 == 0 || rounds == 0 || dim == 0 {
            return Err(Error::Config(
                "local plan needs eps0 > 0 and positive b0, rounds, dim".into(),
            ));
        }
        Ok(Self {
            rounds,
            eps0,
            b0,
            delta1: 0.0,
            delta2: 0.0,
            accounted: PrivacyBudget {
                eps: eps0 * rounds as f64,
                delta: 0.0,
            },
            dim,
            clients,
            method: CalibrationMethod::Disabled,
        })
    }
}

/// Planner knobs. Defaults: `b₀ = 1`, as many rounds as the bit budget
/// allows, advanced-composition accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub b0: usize,
    pub rounds: Option<usize>,
    pub method: CalibrationMethod,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            b0: 1,
            rounds: None,
            method: CalibrationMethod::ClosedForm,
        }
    }
}

/// `T = ⌊b/(b₀(⌈log₂ dim⌉+1))⌋`, `δ₁ = δ/(2T)`, `δ₂ = δ/2`, and the largest
/// `ε₀ ≤ min(1, ln(n/(16 ln(2/δ₁))))` whose `T`-fold advanced composition
/// of the shuffled per-round bound stays within `target.eps`.
pub fn plan_shuffled_sqkr(
    target: PrivacyBudget,
    b: usize,
    dim: usize,
    n: usize,
) -> Result<ShufflePlan> {
    plan_shuffled_sqkr_with(target, b, dim, n, &PlanOptions::default())
}

/// Same as [`plan_shuffled_sqkr`] with RDP accounting: the shuffle RDP
/// curve composed over `T` rounds and converted at `target.delta`.
pub fn plan_shuffled_sqkr_rdp(
    target: PrivacyBudget,
    b: usize,
    dim: usize,
    n: usize,
) -> Result<ShufflePlan> {
    let opts = PlanOptions {
        method: CalibrationMethod::Rdp,
        ..PlanOptions::default()
    };
    plan_shuffled_sqkr_with(target, b, dim, n, &opts)
}

pub fn plan_shuffled_sqkr_with(
    target: PrivacyBudget,
    b: usize,
    dim: usize,
    n: usize,
    opts: &PlanOptions,
) -> Result<ShufflePlan> {
    let target = PrivacyBudget::new(target.eps, target.delta)?;
    if n < MIN_CLIENTS {
        return Err(Error::Infeasible(format!("need n > 30 clients, got {n}")));
    }
    if opts.b0 == 0 || dim == 0 {
        return Err(Error::Config("b0 and dim must be positive".into()));
    }
    let per_round = report_bits(dim, opts.b0) as usize;
    let max_rounds = b / per_round;
    let rounds = opts.rounds.unwrap_or(max_rounds);
    if rounds == 0 || rounds > max_rounds {
        return Err(Error::Infeasible(format!(
            "{rounds} rounds of {per_round} bits do not fit a budget of {b} bits"
        )));
    }
    let (delta1, delta2, hi) = match opts.method {
        CalibrationMethod::ClosedForm => {
            let delta1 = target.delta / (2.0 * rounds as f64);
            let bound = shuffle_eps0_bound(n, delta1);
            if bound <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "ln(n/(16 ln(2/delta1))) = {bound} leaves no admissible eps0"
                )));
            }
            (delta1, target.delta / 2.0, bound.min(1.0))
        }
        CalibrationMethod::Rdp => (0.0, target.delta, 1.0),
        CalibrationMethod::Disabled => {
            return Err(Error::Config(
                "a shuffle plan needs an accounting method".into(),
            ))
        }
    };
    let orders = default_orders();
    let audit = |eps0: f64| -> Result<f64> {
        match opts.method {
            CalibrationMethod::Rdp => rdp_to_dp(
                &shuffle_rdp_curve(eps0, n, &orders)?.scaled(rounds),
                target.delta,
            ),
            _ => Ok(
                compose_advanced(amplify_shuffle(eps0, n, delta1)?, delta1, rounds, delta2)?.eps,
            ),
        }
    };
    let eps0 = if audit(hi)? <= target.eps {
        hi
    } else {
        let (mut lo, mut up) = (0.0, hi);
        while up - lo > 1e-9 {
            let mid = 0.5 * (lo + up);
            if audit(mid)? <= target.eps {
                lo = mid;
            } else {
                up = mid;
            }
        }
        lo
    };
    if eps0 <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no positive eps0 meets eps = {} over {rounds} rounds",
            target.eps
        )));
    }
    Ok(ShufflePlan {
        rounds,
        eps0,
        b0: opts.b0,
        delta1,
        delta2,
        accounted: PrivacyBudget {
            eps: audit(eps0)?,
            delta: rounds as f64 * delta1 + delta2,
        },
        dim,
        clients: n,
        method: opts.method,
    })
}
