use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A vector in `{−c, +c}^dim` stored as packed sign bits.
///
/// Bit `j` set means entry `j` is `+c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignVector {
    words: Vec<u64>,
    magnitude: f64,
    dim: usize,
}

impl SignVector {
    pub fn from_bits(bits: &[bool], magnitude: f64) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Dimension("sign vector needs dim >= 1".into()));
        }
        if !(magnitude.is_finite() && magnitude > 0.0) {
            return Err(Error::Range(format!(
                "magnitude must be positive, got {magnitude}"
            )));
        }
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (j, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            words[j / 64] |= 1 << (j % 64);
        }
        Ok(Self {
            words,
            magnitude,
            dim: bits.len(),
        })
    }

    /// Builds a sign vector from real entries that are all `±magnitude`
    /// (to within 1e-12 relative).
    pub fn from_values(values: &[f64], magnitude: f64) -> Result<Self> {
        let tol = 1e-12 * magnitude;
        let mut bits = Vec::with_capacity(values.len());
        for (j, &v) in values.iter().enumerate() {
            if (v.abs() - magnitude).abs() > tol {
                return Err(Error::OutOfRange {
                    index: j,
                    value: v,
                    bound: magnitude,
                });
            }
            bits.push(v > 0.0);
        }
        Self::from_bits(&bits, magnitude)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn bit(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn entry(&self, j: usize) -> f64 {
        if self.bit(j) {
            self.magnitude
        } else {
            -self.magnitude
        }
    }

    pub fn to_values(&self) -> Vec<f64> {
        (0..self.dim).map(|j| self.entry(j)).collect()
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.dim).map(|j| self.bit(j))
    }

    /// Same signs restricted to `coords`, in that order.
    pub fn restrict(&self, coords: &[usize]) -> Result<Self> {
        let bits: Vec<bool> = coords
            .iter()
            .map(|&j| {
                if j < self.dim {
                    Ok(self.bit(j))
                } else {
                    Err(Error::Dimension(format!(
                        "coordinate {j} outside dim {}",
                        self.dim
                    )))
                }
            })
            .collect::<Result<_>>()?;
        Self::from_bits(&bits, self.magnitude)
    }
}

/// Unbiased rounding of each coordinate to `{−c, +c}`.
///
/// Coordinate `j` becomes `+c` with probability `(xt[j] + c) / (2c)`. Values
/// outside `[−c, c]` are rejected: clipping would bias the output.
pub fn randomized_round<R: Rng + ?Sized>(xt: &[f64], c: f64, rng: &mut R) -> Result<SignVector> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Range(format!(
            "rounding magnitude must be positive, got {c}"
        )));
    }
    if let Some((index, &value)) = xt.iter().enumerate().find(|(_, v)| !(v.abs() <= c)) {
        return Err(Error::OutOfRange {
            index,
            value,
            bound: c,
        });
    }
    let bits: Vec<bool> = xt
        .iter()
        .map(|&v| rng.random::<f64>() < (v + c) / (2.0 * c))
        .collect();
    SignVector::from_bits(&bits, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    #[test]
    fn packing_round_trips() {
        let bits: Vec<bool> = (0..130).map(|i| i % 3 == 0 || i == 129).collect();
        let s = SignVector::from_bits(&bits, 0.5).unwrap();
        assert_eq!(s.bits().collect::<Vec<_>>(), bits);
        for j in 0..130 {
            assert_eq!(s.entry(j).abs(), 0.5);
        }
        let r = s.restrict(&[129, 0, 1]).unwrap();
        assert_eq!(r.to_values(), vec![0.5, 0.5, -0.5]);
    }

    #[test]
    fn endpoints_are_deterministic() {
        let mut rng = seeds::from_seed(0);
        for _ in 0..100 {
            let s = randomized_round(&[1.0, -1.0], 1.0, &mut rng).unwrap();
            assert_eq!(s.to_values(), vec![1.0, -1.0]);
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let mut rng = seeds::from_seed(0);
        assert!(matches!(
            randomized_round(&[0.0, 1.5], 1.0, &mut rng),
            Err(Error::OutOfRange { index: 1, .. })
        ));
        assert!(randomized_round(&[f64::NAN], 1.0, &mut rng).is_err());
    }

    fn mean_check(value: f64, c: f64, seed: u64) {
        let mut rng = seeds::from_seed(seed);
        let draws = 100_000;
        let total: f64 = (0..draws)
            .map(|_| randomized_round(&[value], c, &mut rng).unwrap().entry(0))
            .sum();
        let mean = total / draws as f64;
        // Var = c² − value².
        let se = ((c * c - value * value) / draws as f64).sqrt();
        assert!(
            (mean - value).abs() <= 3.0 * se,
            "mean {mean} vs {value} (se {se})"
        );
    }

    #[test]
    fn zero_rounds_symmetrically() {
        mean_check(0.0, 2.0, 17);
    }

    #[test]
    fn third_of_c_is_unbiased() {
        mean_check(2.0 / 3.0, 2.0, 18);
    }
}
