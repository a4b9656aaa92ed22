use commdp::accountant::{closed_form_epsilon, PrivacyBudget};
use commdp::harness::{as_sign_vectors, gen_synthetic_mean};
use commdp::mean_est::{
    csgm_client_encode, csgm_preselect_run, csgm_run, l2_mean_pipeline, preselect_calibration,
    CsgmConfig, MeanParams,
};
use commdp::{Error, KashinFrame};

fn budget(eps: f64) -> PrivacyBudget {
    PrivacyBudget::new(eps, 1e-5).unwrap()
}

#[test]
fn report_length_matches_rate() {
    let (n, d) = (10_000, 1000);
    let xs = as_sign_vectors(&gen_synthetic_mean(n, d, 1)).unwrap();
    let cfg = CsgmConfig::with_gamma(n, d, 0.5, budget(1.0), 1.0 / (d as f64).sqrt(), 5).unwrap();
    let lens: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| csgm_client_encode(x, i, &cfg).unwrap().bits() as f64)
        .collect();
    let mean = lens.iter().sum::<f64>() / n as f64;
    let se = (d as f64 * 0.25 / n as f64).sqrt();
    assert!((mean - 500.0).abs() <= 3.0 * se, "{mean}");
    let again = csgm_client_encode(&xs[17], 17, &cfg).unwrap();
    assert_eq!(again, csgm_client_encode(&xs[17], 17, &cfg).unwrap());
}

#[test]
fn preselected_bits_match_rate_times_dprime() {
    let (n, d, b) = (2000, 400, 10);
    let xs = as_sign_vectors(&gen_synthetic_mean(n, d, 2)).unwrap();
    let params = MeanParams::new(b, budget(1.0), 3).with_dprime(100);
    let est = csgm_preselect_run(&xs, &params).unwrap();
    let want = n as f64 * 0.1 * 100.0;
    assert!((est.stats.bits_total as f64 / want - 1.0).abs() <= 0.01);
    assert!((est.calibration.gamma - 0.1).abs() < 1e-15);
    let zeros = est.estimate.iter().filter(|v| **v == 0.0).count();
    assert_eq!(zeros, d - 100);
}

#[test]
fn calibration_passes_closed_form_audit() {
    for (n, d, gamma) in [(500, 500, 0.1), (100, 32, 0.5), (1000, 64, 1.0)] {
        for eps in [0.2, 1.0, 3.0] {
            let cfg = CsgmConfig::with_gamma(n, d, gamma, budget(eps), 1.0, 0).unwrap();
            let cal = cfg.calibrate().unwrap();
            let got = closed_form_epsilon(cal.sigma2_sum, cal.sensitivity, gamma, d, 1e-5).unwrap();
            assert!(got <= eps * (1.0 + 1e-9), "{got} > {eps}");
            assert!(
                (cal.sigma2_mean * (n as f64 * gamma).powi(2) / cal.sigma2_sum - 1.0).abs() < 1e-12
            );
        }
    }
}

#[test]
fn full_rate_csgm_is_exact_without_noise() {
    let (n, d) = (30, 8);
    let raw = gen_synthetic_mean(n, d, 4);
    let xs = as_sign_vectors(&raw).unwrap();
    let cfg = CsgmConfig::with_gamma(n, d, 1.0, budget(1.0), 1.0 / (d as f64).sqrt(), 0).unwrap();
    let est = csgm_run(&xs, &cfg, &commdp::NoiseCalibration::disabled(1.0, d)).unwrap();
    let truth = commdp::harness::empirical_mean(&raw);
    for (e, t) in est.estimate.iter().zip(&truth) {
        assert!((e - t).abs() < 1e-15);
    }
    assert_eq!(est.stats.bits_total, (n * d) as u64);
}

#[test]
fn l2_pipeline_rejects_vectors_outside_the_ball() {
    let frame = KashinFrame::new(4, 1).unwrap();
    let xs = vec![vec![0.6, 0.6, 0.6, 0.0], vec![0.0; 4]];
    let err = l2_mean_pipeline(&xs, 1.0, &frame, &MeanParams::new(4, budget(1.0), 0)).unwrap_err();
    assert!(matches!(err, Error::Range(_)), "{err:?}");
}

#[test]
fn preselect_noise_is_seed_independent() {
    let p = MeanParams::new(5, budget(1.0), 1);
    let a = preselect_calibration(300, 200, 0.1, &p).unwrap();
    let b = preselect_calibration(300, 200, 0.1, &p.with_seed(99)).unwrap();
    assert_eq!(a, b);
}
