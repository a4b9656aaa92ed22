use rayon::prelude::*;

use super::{csgm_preselect_run, MeanEstimate, MeanParams};
use crate::seeds;
use crate::transforms::{kashin_decode, kashin_encode, randomized_round};
use crate::{Error, KashinFrame, Result};

/// Kashin coefficients of every client vector. Deterministic, so callers
/// running many trials on fixed data can encode once.
pub fn l2_encode_clients(
    xs: &[Vec<f64>],
    c_bound: f64,
    frame: &KashinFrame,
) -> Result<Vec<Vec<f64>>> {
    xs.par_iter()
        .map(|x| kashin_encode(x, c_bound, frame))
        .collect()
}

/// Pipeline from precomputed Kashin coefficients: round each client to
/// `{±level·C/√D}` on its `"round"` stream, run the pre-selected
/// mechanism in the frame domain, decode.
pub fn l2_mean_from_coeffs(
    coeffs: &[Vec<f64>],
    c_bound: f64,
    frame: &KashinFrame,
    params: &MeanParams,
) -> Result<MeanEstimate> {
    if coeffs.is_empty() {
        return Err(Error::Config("no clients".into()));
    }
    let c = frame.coefficient_bound(c_bound);
    let signs = coeffs
        .iter()
        .enumerate()
        .map(|(i, xt)| randomized_round(xt, c, &mut seeds::stream(params.seed, i as u64, "round")))
        .collect::<Result<Vec<_>>>()?;
    let inner = csgm_preselect_run(&signs, params)?;
    let estimate = kashin_decode(&inner.estimate, frame)?;
    Ok(MeanEstimate { estimate, ..inner })
}

/// Mean of vectors with `‖x_i‖₂ ≤ c_bound` under the bit budget
/// `params.b`, in the dimension of `frame`.
pub fn l2_mean_pipeline(
    xs: &[Vec<f64>],
    c_bound: f64,
    frame: &KashinFrame,
    params: &MeanParams,
) -> Result<MeanEstimate> {
    let coeffs = l2_encode_clients(xs, c_bound, frame)?;
    l2_mean_from_coeffs(&coeffs, c_bound, frame, params)
}
