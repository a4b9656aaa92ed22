use crate::{Error, Result};

/// In-place orthonormal Walsh–Hadamard transform in Sylvester order.
///
/// Computes `H_B · v` where `H_1 = [1]` and
/// `H_2B = 1/√2 · [[H_B, H_B], [H_B, -H_B]]`. The matrix is symmetric and
/// orthonormal, so the transform is its own inverse. Runs in `O(B log B)`.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let len = v.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "walsh-hadamard transform needs a power-of-two length, got {len}"
        )));
    }
    let mut h = 1;
    while h < len {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (len as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
    Ok(())
}

/// Out-of-place variant of [`fwht_in_place`].
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(b: usize) -> Vec<Vec<f64>> {
        let s = 1.0 / (b as f64).sqrt();
        (0..b)
            .map(|i| {
                (0..b)
                    .map(|j| if (i & j).count_ones() % 2 == 0 { s } else { -s })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn base_cases() {
        assert_eq!(fwht(&[1.0]).unwrap(), vec![1.0]);
        let h = fwht(&[1.0, 0.0]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h[0] - r).abs() < 1e-15 && (h[1] - r).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(matches!(fwht(&[1.0, 2.0, 3.0]), Err(Error::Dimension(_))));
        assert!(matches!(fwht(&[]), Err(Error::Dimension(_))));
    }

    #[test]
    fn matches_dense_product_at_64() {
        use rand::Rng;
        let mut rng = crate::seeds::from_seed(64);
        let v: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = dense(64);
        let fast = fwht(&v).unwrap();
        for (i, row) in h.iter().enumerate() {
            let slow: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((fast[i] - slow).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn involution_and_isometry(log in 0u32..12, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seeds::from_seed(seed);
            let v: Vec<f64> = (0..1usize << log).map(|_| rng.random_range(-10.0..10.0)).collect();
            let h = fwht(&v).unwrap();
            let n0 = super::super::l2_norm(&v);
            prop_assert!((super::super::l2_norm(&h) - n0).abs() <= 1e-10 * n0.max(1.0));
            let back = fwht(&h).unwrap();
            for (a, b) in back.iter().zip(&v) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
