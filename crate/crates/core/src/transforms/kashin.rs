use rand::seq::index;
use rand::Rng;

use super::{check_finite, fwht_in_place, l2_norm};
use crate::{seeds, Error, Result};

/// Default ℓ∞ level multiplier: coefficients satisfy `‖x̃‖∞ ≤ level · C / √D`.
pub const DEFAULT_LEVEL: f64 = 8.0;
/// Default number of truncation rounds.
pub const DEFAULT_ITERS: usize = 30;

/// Residual (relative to the declared bound C) below which the truncation
/// loop stops early and above which encoding is reported as non-converged.
const CONVERGED: f64 = 1e-9;
const MAX_RESIDUAL: f64 = 1e-7;

/// A seeded Parseval frame `K ∈ R^{d×D}` with `D = 2 · next_pow2(d)`.
///
/// `K = S · H_D · diag(ξ)`: `ξ ∈ {±1}^D` are random signs and `S` keeps `d`
/// distinct rows of the orthonormal Hadamard matrix chosen at random. Rows of
/// an orthonormal matrix are orthonormal, so `K·Kᵀ = I_d`. Both `K` and `Kᵀ`
/// are applied through [`fwht_in_place`] without storing the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KashinFrame {
    dim: usize,
    frame_dim: usize,
    sign_seed: u64,
    level: f64,
    iters: usize,
    signs: Vec<f64>,
    rows: Vec<usize>,
}

impl KashinFrame {
    /// Frame for `dim`-dimensional signals with the default level and iteration count.
    pub fn new(dim: usize, sign_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("kashin frame needs dim >= 1".into()));
        }
        let frame_dim = 2 * dim.next_power_of_two();
        let mut rng = seeds::stream(sign_seed, 0, "kashin-frame");
        let signs = (0..frame_dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut rows = index::sample(&mut rng, frame_dim, dim).into_vec();
        rows.sort_unstable();
        Ok(Self {
            dim,
            frame_dim,
            sign_seed,
            level: DEFAULT_LEVEL,
            iters: DEFAULT_ITERS,
            signs,
            rows,
        })
    }

    pub fn with_level(mut self, level: f64) -> Result<Self> {
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::Range(format!(
                "kashin level must be positive, got {level}"
            )));
        }
        self.level = level;
        Ok(self)
    }

    pub fn with_iters(mut self, iters: usize) -> Result<Self> {
        if iters == 0 {
            return Err(Error::Range(
                "kashin iteration count must be positive".into(),
            ));
        }
        self.iters = iters;
        Ok(self)
    }

    /// Signal dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Frame dimension `D`.
    pub fn frame_dim(&self) -> usize {
        self.frame_dim
    }

    pub fn sign_seed(&self) -> u64 {
        self.sign_seed
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn iters(&self) -> usize {
        self.iters
    }

    /// ℓ∞ bound `level · C / √D` guaranteed for encodings of vectors with `‖x‖₂ ≤ C`.
    pub fn coefficient_bound(&self, c_bound: f64) -> f64 {
        self.level * c_bound / (self.frame_dim as f64).sqrt()
    }

    /// `K · coeffs`.
    pub fn apply(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.frame_dim {
            return Err(Error::Dimension(format!(
                "frame expects {} coefficients, got {}",
                self.frame_dim,
                coeffs.len()
            )));
        }
        let mut buf: Vec<f64> = coeffs.iter().zip(&self.signs).map(|(a, s)| a * s).collect();
        fwht_in_place(&mut buf)?;
        Ok(self.rows.iter().map(|&r| buf[r]).collect())
    }

    /// `Kᵀ · v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!(
                "frame expects a {}-dimensional signal, got {}",
                self.dim,
                v.len()
            )));
        }
        let mut buf = vec![0.0; self.frame_dim];
        for (&r, &x) in self.rows.iter().zip(v) {
            buf[r] = x;
        }
        fwht_in_place(&mut buf)?;
        buf.iter_mut().zip(&self.signs).for_each(|(a, s)| *a *= s);
        Ok(buf)
    }
}

/// Kashin representation of `x` (with declared bound `‖x‖₂ ≤ c_bound`).
///
/// Truncated frame projection: starting from `r = x`, each round expands the
/// residual with `Kᵀ`, clips the expansion at `(level/4)·‖r‖/√D`, adds the
/// clipped part to the coefficients and subtracts its image from the residual.
/// The clipped tail is small because a frame built from random Hadamard rows
/// spreads every vector, so the residual contracts geometrically and the sum
/// of the clip levels stays below `level · C / √D`. The final (tiny) residual
/// is absorbed exactly through `Kᵀ`.
///
/// Returns `x̃` with `K·x̃ = x` and `‖x̃‖∞ ≤ level · C / √D`.
pub fn kashin_encode(x: &[f64], c_bound: f64, frame: &KashinFrame) -> Result<Vec<f64>> {
    if x.len() != frame.dim {
        return Err(Error::Dimension(format!(
            "frame dimension {} does not match input dimension {}",
            frame.dim,
            x.len()
        )));
    }
    check_finite(x)?;
    if !(c_bound.is_finite() && c_bound > 0.0) {
        return Err(Error::Range(format!(
            "norm bound must be positive, got {c_bound}"
        )));
    }
    let norm = l2_norm(x);
    if norm > c_bound * (1.0 + 1e-12) {
        return Err(Error::Range(format!(
            "input norm {norm} exceeds the declared bound {c_bound}"
        )));
    }

    let mut coeffs = vec![0.0; frame.frame_dim];
    if norm == 0.0 {
        return Ok(coeffs);
    }

    let clip_factor = frame.level / 4.0 / (frame.frame_dim as f64).sqrt();
    let mut residual = x.to_vec();
    let mut res_norm = norm;
    for _ in 0..frame.iters {
        if res_norm <= CONVERGED * c_bound {
            break;
        }
        let clip = clip_factor * res_norm;
        let mut expansion = frame.apply_transpose(&residual)?;
        expansion.iter_mut().for_each(|b| *b = b.clamp(-clip, clip));
        let image = frame.apply(&expansion)?;
        for (c, b) in coeffs.iter_mut().zip(&expansion) {
            *c += b;
        }
        for (r, k) in residual.iter_mut().zip(&image) {
            *r -= k;
        }
        res_norm = l2_norm(&residual);
    }
    if res_norm > MAX_RESIDUAL * c_bound {
        return Err(Error::NonConvergence {
            residual: res_norm,
            iters: frame.iters,
        });
    }
    let tail = frame.apply_transpose(&residual)?;
    for (c, t) in coeffs.iter_mut().zip(&tail) {
        *c += t;
    }

    let bound = frame.coefficient_bound(c_bound);
    let peak = super::linf_norm(&coeffs);
    if peak > bound {
        return Err(Error::LevelExceeded {
            achieved: peak * (frame.frame_dim as f64).sqrt() / c_bound,
            level: frame.level,
        });
    }
    Ok(coeffs)
}

/// `K · coeffs`: the exact linear inverse of [`kashin_encode`].
pub fn kashin_decode(coeffs: &[f64], frame: &KashinFrame) -> Result<Vec<f64>> {
    frame.apply(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::linf_norm;

    fn dense_k(frame: &KashinFrame) -> Vec<Vec<f64>> {
        // Column j of K is K·e_j.
        let big = frame.frame_dim();
        let cols: Vec<Vec<f64>> = (0..big)
            .map(|j| {
                let mut e = vec![0.0; big];
                e[j] = 1.0;
                frame.apply(&e).unwrap()
            })
            .collect();
        (0..frame.dim())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect()
    }

    #[test]
    fn frame_is_parseval() {
        for (d, seed) in [(1, 3), (5, 4), (8, 9), (16, 1), (64, 2)] {
            let f = KashinFrame::new(d, seed).unwrap();
            let k = dense_k(&f);
            for i in 0..d {
                for j in 0..d {
                    let dot: f64 = k[i].iter().zip(&k[j]).map(|(a, b)| a * b).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10, "d={d} ({i},{j}) = {dot}");
                }
            }
        }
    }

    #[test]
    fn frame_dim_is_twice_padded_dim() {
        assert_eq!(KashinFrame::new(8, 0).unwrap().frame_dim(), 16);
        assert_eq!(KashinFrame::new(5, 0).unwrap().frame_dim(), 16);
        assert_eq!(KashinFrame::new(1, 0).unwrap().frame_dim(), 2);
    }

    #[test]
    fn zero_encodes_to_zero() {
        let f = KashinFrame::new(8, 1).unwrap();
        assert_eq!(kashin_encode(&[0.0; 8], 1.0, &f).unwrap(), vec![0.0; 16]);
        assert_eq!(kashin_decode(&[0.0; 16], &f).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn basis_vector_round_trip_via_dense_matrix() {
        let c = 3.0;
        let f = KashinFrame::new(8, 11).unwrap();
        let mut x = vec![0.0; 8];
        x[0] = c;
        let xt = kashin_encode(&x, c, &f).unwrap();
        assert!(linf_norm(&xt) <= f.level() * c / 4.0);
        let k = dense_k(&f);
        for (i, row) in k.iter().enumerate() {
            let y: f64 = row.iter().zip(&xt).map(|(a, b)| a * b).sum();
            assert!((y - x[i]).abs() < 1e-6 * c);
        }
    }

    #[test]
    fn frame_columns_and_walsh_vectors_stay_within_level() {
        // Frame columns and Hadamard-structured inputs are the hardest cases
        // for truncation; they must still converge under the default level.
        for d in [16usize, 128, 512] {
            let f = KashinFrame::new(d, 5).unwrap();
            let mut inputs = Vec::new();
            for j in [0, 1, f.frame_dim() / 2, f.frame_dim() - 1] {
                let mut e = vec![0.0; f.frame_dim()];
                e[j] = 1.0;
                inputs.push(f.apply(&e).unwrap());
            }
            let p = d.next_power_of_two();
            for k in [0, 1, p - 1] {
                let mut e = vec![0.0; p];
                e[k] = 1.0;
                let w = fwht(&e);
                inputs.push(w[..d].to_vec());
            }
            for x in inputs {
                let c = l2_norm(&x);
                let xt = kashin_encode(&x, c, &f).unwrap();
                let back = kashin_decode(&xt, &f).unwrap();
                let err: f64 =
                    l2_norm(&back.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
                assert!(err <= 1e-6 * c);
                assert!(linf_norm(&xt) <= f.coefficient_bound(c));
            }
        }
    }

    fn fwht(v: &[f64]) -> Vec<f64> {
        crate::transforms::fwht(v).unwrap()
    }

    #[test]
    fn rejects_inputs_outside_contract() {
        let f = KashinFrame::new(4, 0).unwrap();
        assert!(matches!(
            kashin_encode(&[1.0; 3], 2.0, &f),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            kashin_encode(&[1.0; 4], 1.0, &f),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            kashin_decode(&[0.0; 4], &f),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn one_iteration_cannot_absorb_a_spiky_input() {
        let f = KashinFrame::new(64, 5).unwrap().with_iters(1).unwrap();
        let mut e = vec![0.0; f.frame_dim()];
        e[3] = 1.0;
        let x = f.apply(&e).unwrap();
        match kashin_encode(&x, l2_norm(&x), &f) {
            Err(Error::NonConvergence { residual, iters }) => {
                assert_eq!(iters, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn decode_is_linear() {
        use rand::Rng;
        let f = KashinFrame::new(32, 8).unwrap();
        let mut rng = crate::seeds::from_seed(1);
        let u: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (0.7, -2.5);
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let lhs = kashin_decode(&mix, &f).unwrap();
        let du = kashin_decode(&u, &f).unwrap();
        let dv = kashin_decode(&v, &f).unwrap();
        for i in 0..32 {
            assert!((lhs[i] - (a * du[i] + b * dv[i])).abs() < 1e-10);
        }
    }
}
