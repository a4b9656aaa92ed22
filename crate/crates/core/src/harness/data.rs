use rand::Rng;
use rand_distr::{Distribution as _, Zipf};

use super::Distribution;
use crate::freq_est::OneHotItem;
use crate::seeds;
use crate::{Error, Result, SignVector};

/// Probability of a positive coordinate in the synthetic mean data.
pub const MEAN_BIAS: f64 = 0.8;

/// `n` vectors with coordinates `+1/√d` w.p. 0.8 and `−1/√d` otherwise,
/// so every vector has unit norm. Client `i` uses stream `(seed, i)`.
pub fn gen_synthetic_mean(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let c = 1.0 / (d as f64).sqrt();
    (0..n)
        .map(|i| {
            let mut rng = seeds::stream(seed, i as u64, "mean-data");
            (0..d)
                .map(|_| if rng.random_bool(MEAN_BIAS) { c } else { -c })
                .collect()
        })
        .collect()
}

/// The synthetic vectors as sign vectors of magnitude `1/√d`.
pub fn as_sign_vectors(xs: &[Vec<f64>]) -> Result<Vec<SignVector>> {
    let d = xs.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::Config("no data".into()));
    }
    let c = 1.0 / (d as f64).sqrt();
    xs.iter().map(|x| SignVector::from_values(x, c)).collect()
}

/// Coordinate-wise mean.
pub fn empirical_mean(xs: &[Vec<f64>]) -> Vec<f64> {
    let d = xs.first().map_or(0, Vec::len);
    let mut mu = vec![0.0; d];
    for x in xs {
        mu.iter_mut().zip(x).for_each(|(m, v)| *m += v);
    }
    mu.iter_mut().for_each(|m| *m /= xs.len() as f64);
    mu
}

/// `n` i.i.d. items over `[0, d)` and their histogram. Zipf ranks map to
/// indices, so index 0 is the most likely item.
pub fn gen_synthetic_freq(
    n: usize,
    d: usize,
    dist: Distribution,
    seed: u64,
) -> Result<(Vec<OneHotItem>, Vec<u64>)> {
    if d == 0 {
        return Err(Error::Config("empty domain".into()));
    }
    let zipf = match dist {
        Distribution::Zipf(s) => {
            Some(Zipf::new(d as f64, s).map_err(|e| Error::Config(format!("zipf({s}): {e}")))?)
        }
        Distribution::Uniform => None,
    };
    let mut hist = vec![0u64; d];
    let items = (0..n)
        .map(|i| {
            let mut rng = seeds::stream(seed, i as u64, "freq-data");
            let v = match &zipf {
                Some(z) => (z.sample(&mut rng) as usize).clamp(1, d) - 1,
                None => rng.random_range(0..d),
            };
            hist[v] += 1;
            OneHotItem::new(v, d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((items, hist))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_data_shape() {
        let xs = gen_synthetic_mean(50, 30, 4);
        for x in &xs {
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert_eq!(xs, gen_synthetic_mean(50, 30, 4));
        assert_ne!(xs, gen_synthetic_mean(50, 30, 5));
        assert_eq!(as_sign_vectors(&xs).unwrap()[3].to_values(), xs[3]);
    }

    #[test]
    fn mean_data_bias() {
        let (n, d) = (1000, 1000);
        let xs = gen_synthetic_mean(n, d, 9);
        let total: f64 = xs.iter().flatten().sum::<f64>() * (d as f64).sqrt();
        let m = total / (n * d) as f64;
        let se = (1.0 - 0.36f64).sqrt() / ((n * d) as f64).sqrt();
        assert!((m - 0.6).abs() < 3.0 * se, "{m}");
    }

    #[test]
    fn uniform_frequencies() {
        let (n, d) = (10_000, 16);
        let (items, hist) = gen_synthetic_freq(n, d, Distribution::Uniform, 1).unwrap();
        assert_eq!(items.len(), n);
        let p = 1.0 / d as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for h in &hist {
            assert!((*h as f64 / n as f64 - p).abs() < 3.0 * se);
        }
        assert_eq!(
            gen_synthetic_freq(n, d, Distribution::Uniform, 1)
                .unwrap()
                .0,
            items
        );
    }

    #[test]
    fn zipf_is_rank_ordered() {
        let (_, hist) = gen_synthetic_freq(200_000, 8, Distribution::Zipf(1.1), 2).unwrap();
        assert!(hist.windows(2).all(|w| w[0] >= w[1]), "{hist:?}");
    }
}
