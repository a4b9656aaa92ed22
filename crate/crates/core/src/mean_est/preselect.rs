use rand::seq::index;

use super::{CsgmConfig, MeanEstimate, MeanParams};
use crate::accountant::PrivacyBudget;
use crate::mean_est::csgm_run;
use crate::seeds;
use crate::{Error, NoiseCalibration, Result, SignVector};

/// `max(1, ⌊min(d, n·b, n²ε²/((ln(1/δ)+ε)·ln(d/δ)))⌋)`.
pub fn select_dprime(n: usize, b: usize, d: usize, budget: PrivacyBudget) -> usize {
    let (nf, eps, delta) = (n as f64, budget.eps, budget.delta);
    let privacy = nf * nf * eps * eps / (((1.0 / delta).ln() + eps) * (d as f64 / delta).ln());
    let m = (d as f64).min(nf * b as f64).min(privacy);
    (m.floor() as usize).max(1)
}

/// Sorted uniform `dprime`-subset of `[0, d)` from the `"select"` stream.
pub fn select_coordinates(seed: u64, d: usize, dprime: usize) -> Vec<usize> {
    let mut rng = seeds::stream(seed, 0, "select");
    let mut j = index::sample(&mut rng, d, dprime).into_vec();
    j.sort_unstable();
    j
}

fn resolve_dprime(n: usize, d: usize, params: &MeanParams) -> Result<usize> {
    if params.b == 0 {
        return Err(Error::Config("bit budget must be positive".into()));
    }
    let dprime = params
        .dprime
        .unwrap_or_else(|| select_dprime(n, params.b, d, params.budget));
    if dprime == 0 || dprime > d {
        return Err(Error::Config(format!("d' = {dprime} outside [1, {d}]")));
    }
    Ok(dprime)
}

fn inner_config(n: usize, d: usize, c: f64, params: &MeanParams) -> Result<CsgmConfig> {
    let dprime = resolve_dprime(n, d, params)?;
    let gamma = (params.b as f64 / dprime as f64).min(1.0);
    Ok(
        CsgmConfig::with_gamma(n, dprime, gamma, params.budget, c, params.seed)?
            .method(params.method),
    )
}

/// Noise of the pre-selected mechanism for `n` clients holding `{±c}^d`
/// vectors: `d'` composed coordinates at rate `min(1, b/d')`. Independent
/// of the seed.
pub fn preselect_calibration(
    n: usize,
    d: usize,
    c: f64,
    params: &MeanParams,
) -> Result<NoiseCalibration> {
    inner_config(n, d, c, params)?.calibrate()
}

/// Coordinate-subsampled Gaussian mean on a shared random subset `J` of
/// `d'` coordinates, with `γ = min(1, b/d')`. Selected coordinates are
/// rescaled by `d/d'`; the rest are zero.
pub fn csgm_preselect_run(xs: &[SignVector], params: &MeanParams) -> Result<MeanEstimate> {
    let first = xs
        .first()
        .ok_or_else(|| Error::Config("no clients".into()))?;
    let (n, d, c) = (xs.len(), first.dim(), first.magnitude());
    if xs.iter().any(|x| x.dim() != d) {
        return Err(Error::Dimension(
            "client vectors differ in dimension".into(),
        ));
    }
    let config = inner_config(n, d, c, params)?;
    let dprime = config.d;
    let calibration = match params.calibration {
        Some(cal) => cal,
        None => config.calibrate()?,
    };
    let coords = select_coordinates(params.seed, d, dprime);
    let restricted = xs
        .iter()
        .map(|x| x.restrict(&coords))
        .collect::<Result<Vec<_>>>()?;
    let inner = csgm_run(&restricted, &config, &calibration)?;
    let scale = d as f64 / dprime as f64;
    let mut estimate = vec![0.0; d];
    for (&j, v) in coords.iter().zip(&inner.estimate) {
        estimate[j] = v * scale;
    }
    Ok(MeanEstimate { estimate, ..inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accountant::CalibrationMethod;
    use rand::Rng;

    #[test]
    fn dprime_examples() {
        let b = PrivacyBudget::new(1.0, 1e-5).unwrap();
        assert_eq!(select_dprime(500, 50, 5000, b), 997);
        let loose = PrivacyBudget::new(1e6, 0.5).unwrap();
        assert_eq!(select_dprime(100, 3, 1000, loose), 300);
        assert_eq!(select_dprime(100, 30, 1000, loose), 1000);
        assert_eq!(select_dprime(1, 1, 1, b), 1);
        assert_eq!(select_dprime(1, 1, 1000, b), 1);
    }

    #[test]
    fn selection_is_a_sorted_subset() {
        let j = select_coordinates(4, 50, 10);
        assert_eq!(j.len(), 10);
        assert!(j.windows(2).all(|w| w[0] < w[1]) && j[9] < 50);
        assert_eq!(select_coordinates(4, 6, 6), (0..6).collect::<Vec<_>>());
    }

    fn data(n: usize, d: usize) -> Vec<SignVector> {
        let mut rng = seeds::stream(11, 0, "data");
        (0..n)
            .map(|_| {
                let bits: Vec<bool> = (0..d).map(|_| rng.random_bool(0.7)).collect();
                SignVector::from_bits(&bits, 1.0).unwrap()
            })
            .collect()
    }

    #[test]
    fn full_selection_matches_plain_csgm() {
        let xs = data(5, 8);
        let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();
        let p = MeanParams::new(4, budget, 21).with_dprime(8);
        let a = csgm_preselect_run(&xs, &p).unwrap();
        let cfg = CsgmConfig::from_bits(5, 8, 4, budget, 1.0, 21).unwrap();
        let b = csgm_run(&xs, &cfg, &cfg.calibrate().unwrap()).unwrap();
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn mse_matches_subset_enumeration() {
        let (n, d, k) = (4, 6, 3);
        let xs = data(n, d);
        let mu: Vec<f64> = (0..d)
            .map(|j| xs.iter().map(|x| x.entry(j)).sum::<f64>() / n as f64)
            .collect();
        // Average over all C(6,3) subsets of ‖μ − (d/d')·μ_J‖².
        let mut exact = 0.0;
        let mut subsets = 0;
        for mask in 0u32..(1 << d) {
            if mask.count_ones() as usize != k {
                continue;
            }
            subsets += 1;
            exact += (0..d)
                .map(|j| {
                    let v = if mask >> j & 1 == 1 { mu[j] * 2.0 } else { 0.0 };
                    (v - mu[j]).powi(2)
                })
                .sum::<f64>();
        }
        exact /= subsets as f64;
        let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();
        let trials = 20_000;
        let mut acc = 0.0;
        for t in 0..trials {
            let p = MeanParams::new(3, budget, t)
                .with_dprime(k)
                .with_method(CalibrationMethod::Disabled);
            let est = csgm_preselect_run(&xs, &p).unwrap();
            acc += est
                .estimate
                .iter()
                .zip(&mu)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
        assert!((acc / trials as f64 / exact - 1.0).abs() < 0.05);
    }
}
