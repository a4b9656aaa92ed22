//! Numerical primitives shared by every protocol: the orthonormal fast
//! Walsh–Hadamard transform, Kashin representations over a randomized
//! Hadamard frame, and unbiased 1-bit randomized rounding.

mod hadamard;
mod kashin;
mod rounding;

pub use hadamard::{fwht, fwht_in_place};
pub use kashin::{kashin_decode, kashin_encode, KashinFrame, DEFAULT_ITERS, DEFAULT_LEVEL};
pub use rounding::{randomized_round, SignVector};

/// Euclidean norm.
pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximum absolute entry, 0 for an empty slice.
pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn check_finite(v: &[f64]) -> crate::Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(crate::Error::Range(format!("entry {i} is not finite"))),
        None => Ok(()),
    }
}
