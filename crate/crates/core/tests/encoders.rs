use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use catfair::data::{concat_columns, group_stats, CategoryCount, Column, Dataset};
use catfair::encoders::{
    fit_one_hot, fit_target_encoder, smoothed_estimate, smoothing_weight, transform, FittedEncoder, FittedTargetEncoder, NoiseScope,
    TargetEncoderConfig,
};
use catfair::synth::{gen_intersectional, ETHNIC, MARITAL};

fn one_column(values: Vec<String>, target: Vec<u8>) -> Dataset {
    Dataset::new(vec![Column { name: "g".into(), values }], target).unwrap()
}

/// `n_pos` positives then negatives for each `(label, n, n_pos)`.
fn grouped(groups: &[(&str, usize, usize)]) -> Dataset {
    let mut values = Vec::new();
    let mut target = Vec::new();
    for &(label, n, n_pos) in groups {
        for i in 0..n {
            values.push(label.to_string());
            target.push((i < n_pos) as u8);
        }
    }
    one_column(values, target)
}

#[test]
fn smoothing_weight_examples() {
    assert_eq!(smoothing_weight(100, 0.0), 1.0);
    assert_eq!(smoothing_weight(100, 100.0), 0.5);
    assert_eq!(smoothing_weight(0, 0.0), 0.0);
    assert_eq!(smoothing_weight(0, 5.0), 0.0);
    let w = smoothing_weight(50, 10_000.0);
    assert_eq!(w, 50.0 / 10_050.0);
    assert!((w - 0.004975).abs() < 1e-6);
}

#[test]
fn estimator_examples() {
    let c = CategoryCount { n: 10, n_pos: 6 };
    assert_eq!(smoothed_estimate(c, 0.3, 0.0), 0.6);
    assert!((smoothed_estimate(c, 0.3, 1e12) - 0.3).abs() < 1e-6);

    let c = CategoryCount { n: 50, n_pos: 30 };
    let oracle = 50.0 / 1050.0 * 0.6 + 1000.0 / 1050.0 * 0.43;
    let got = smoothed_estimate(c, 0.43, 1000.0);
    assert!((got - oracle).abs() < 1e-15);
    assert!((got - 0.438095238).abs() < 1e-9);
}

#[test]
fn fitted_mapping_uses_training_counts() {
    let d = grouped(&[("a", 10, 6), ("b", 40, 6)]);
    let prior = 12.0 / 50.0;
    let enc = fit_target_encoder(&d, "g", 0.0, 0.0, 0).unwrap();
    assert_eq!(enc.prior(), prior);
    assert_eq!(enc.value("a"), Some(0.6));
    assert_eq!(enc.value("b"), Some(6.0 / 40.0));

    let enc = fit_target_encoder(&d, "g", 25.0, 0.0, 0).unwrap();
    let expect = 10.0 / 35.0 * 0.6 + 25.0 / 35.0 * prior;
    assert!((enc.value("a").unwrap() - expect).abs() < 1e-15);
    assert!(enc.mapping().values().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn unseen_categories_fall_back() {
    let train = grouped(&[("a", 4, 1), ("b", 4, 3)]);
    let test = one_column(vec!["a".into(), "z".into()], vec![0, 1]);
    let enc = fit_target_encoder(&train, "g", 0.0, 0.0, 0).unwrap();
    let m = enc.transform(&test).unwrap();
    assert_eq!(m.values(), &[0.25, 0.5]);

    let oh = fit_one_hot(&train, "g").unwrap();
    let m = oh.transform(&test).unwrap();
    assert_eq!(m.row(0), &[1.0, 0.0]);
    assert_eq!(m.row(1), &[0.0, 0.0]);
}

#[test]
fn transform_train_reproduces_means_and_is_idempotent() {
    let d = gen_intersectional(1);
    let stats = group_stats(&d, ETHNIC).unwrap();
    let enc = FittedEncoder::Target(fit_target_encoder(&d, ETHNIC, 0.0, 0.0, 0).unwrap());
    let a = transform(&enc, &d).unwrap();
    let b = transform(&enc, &d).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_rows(), d.n());
    for (row, cat) in d.column(ETHNIC).unwrap().iter().enumerate() {
        assert_eq!(a.get(row, 0), stats.get(cat).unwrap().p_hat());
    }
}

#[test]
fn one_hot_widths_and_row_sums() {
    let d = grouped(&[("x", 3, 1), ("y", 2, 1), ("z", 1, 0)]);
    let oh = fit_one_hot(&d, "g").unwrap();
    assert_eq!(oh.width(), 3);
    let mut idx: Vec<usize> = ["x", "y", "z"].iter().map(|c| oh.index_of(c).unwrap()).collect();
    idx.sort_unstable();
    assert_eq!(idx, vec![0, 1, 2]);

    let inter = gen_intersectional(2);
    let inter = concat_columns(&inter, ETHNIC, MARITAL, "em").unwrap();
    let oh = fit_one_hot(&inter, "em").unwrap();
    assert_eq!(oh.width(), 46);
    let m = oh.transform(&inter).unwrap();
    assert_eq!(m.n_cols(), 46);
    for r in 0..m.n_rows() {
        assert_eq!(m.row(r).iter().sum::<f64>(), 1.0);
    }
    assert!(m.provenance().iter().all(|p| p.source == "em"));
}

/// Many categories of random size, labelled `c0..`.
fn many_categories(k: usize, seed: u64) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::new();
    let mut target = Vec::new();
    for i in 0..k {
        let n = r.random_range(1..6);
        for _ in 0..n {
            values.push(format!("c{i}"));
            target.push(r.random_range(0..2));
        }
    }
    one_column(values, target)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn category_noise_layers_on_clean_mapping() {
    let d = many_categories(10_000, 3);
    let sigma = 0.2;
    let clean = fit_target_encoder(&d, "g", 5.0, 0.0, 11).unwrap();
    let stats = group_stats(&d, "g").unwrap();
    for (cat, &v) in clean.mapping() {
        assert_eq!(v.to_bits(), smoothed_estimate(stats.get(cat).unwrap(), stats.prior(), 5.0).to_bits());
    }
    let noisy = TargetEncoderConfig { m: 5.0, noise_sigma: sigma, noise_scope: NoiseScope::Category, seed: 11 }
        .fit(&d, "g")
        .unwrap();
    let residuals: Vec<f64> = noisy.mapping().iter().map(|(c, v)| v - clean.value(c).unwrap()).collect();
    assert_eq!(residuals.len(), 10_000);
    let (mean, var) = mean_var(&residuals);
    // 5% of sigma for the mean, 5% relative for the variance
    assert!(mean.abs() < 0.05 * sigma, "mean {mean}");
    assert!((var / (sigma * sigma) - 1.0).abs() < 0.05, "var {var}");
    // test-time transform stays deterministic
    assert_eq!(noisy.transform(&d).unwrap(), noisy.transform(&d).unwrap());
}

#[test]
fn row_noise_layers_on_training_rows_only() {
    let d = many_categories(4_000, 4);
    let sigma = 0.5;
    let enc = fit_target_encoder(&d, "g", 0.0, sigma, 12).unwrap();
    let clean = fit_target_encoder(&d, "g", 0.0, 0.0, 12).unwrap();
    assert_eq!(enc.mapping(), clean.mapping());
    assert_eq!(enc.transform(&d).unwrap(), clean.transform(&d).unwrap());

    let noisy = enc.transform_training(&d).unwrap();
    let base = clean.transform(&d).unwrap();
    let residuals: Vec<f64> = noisy.values().iter().zip(base.values()).map(|(a, b)| a - b).collect();
    assert!(residuals.len() >= 10_000);
    let (mean, var) = mean_var(&residuals);
    assert!(mean.abs() < 0.05 * sigma, "mean {mean}");
    assert!((var / (sigma * sigma) - 1.0).abs() < 0.05, "var {var}");
    assert_eq!(noisy, enc.transform_training(&d).unwrap());

    let zero = fit_target_encoder(&d, "g", 0.0, 0.0, 12).unwrap();
    assert_eq!(zero.transform_training(&d).unwrap(), base);
}

#[test]
fn audit_round_trip() {
    let d = many_categories(300, 5);
    for scope in [NoiseScope::Row, NoiseScope::Category] {
        let enc = TargetEncoderConfig { m: 3.5, noise_sigma: 0.1, noise_scope: scope, seed: 99 }
            .fit(&d, "g")
            .unwrap();
        let text = enc.to_audit_string();
        let back = FittedTargetEncoder::from_audit_str(&text).unwrap();
        assert_eq!(back, enc);
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            let (cat, v) = line.split_once('\t').unwrap();
            let parsed: f64 = v.parse().unwrap();
            assert_eq!(format!("{:.14e}", parsed), format!("{:.14e}", enc.value(cat).unwrap()));
        }
    }
}

#[test]
fn invalid_parameters_rejected() {
    let d = grouped(&[("a", 2, 1)]);
    assert!(fit_target_encoder(&d, "g", -1.0, 0.0, 0).is_err());
    assert!(fit_target_encoder(&d, "g", 0.0, -0.5, 0).is_err());
    assert!(fit_target_encoder(&d, "g", f64::NAN, 0.0, 0).is_err());
    assert!(fit_target_encoder(&d, "missing", 0.0, 0.0, 0).is_err());
}

proptest! {
    #[test]
    fn smoothing_is_monotone_in_m(n in 1u64..500, frac in 0.0f64..=1.0, prior in 0.0f64..=1.0, m1 in 0.0f64..1e4, dm in 0.0f64..1e4) {
        let n_pos = ((n as f64) * frac).floor() as u64;
        let c = CategoryCount { n, n_pos };
        let (a, b) = (smoothed_estimate(c, prior, m1), smoothed_estimate(c, prior, m1 + dm));
        let slack = 1e-12;
        if c.p_hat() > prior {
            prop_assert!(b <= a + slack);
        } else if c.p_hat() < prior {
            prop_assert!(b >= a - slack);
        }
        prop_assert!((prior.min(c.p_hat()) - slack..=prior.max(c.p_hat()) + slack).contains(&b));
    }

    #[test]
    fn weight_increases_with_n(n in 0u64..10_000, dn in 1u64..1000, m in 1e-3f64..1e5) {
        prop_assert!(smoothing_weight(n + dn, m) > smoothing_weight(n, m));
        let w = smoothing_weight(n, m);
        prop_assert!((0.0..=1.0).contains(&w));
    }

    #[test]
    fn clean_mapping_bounded(seed in 0u64..500, m in 0.0f64..100.0) {
        let d = many_categories(30, seed);
        let enc = fit_target_encoder(&d, "g", m, 0.0, seed).unwrap();
        prop_assert!(enc.mapping().values().all(|v| (0.0..=1.0).contains(v)));
        if m == 0.0 {
            let stats = group_stats(&d, "g").unwrap();
            for (cat, &v) in enc.mapping() {
                let c = stats.get(cat).unwrap();
                prop_assert_eq!(v, c.n_pos as f64 / c.n as f64);
            }
        }
    }
}
