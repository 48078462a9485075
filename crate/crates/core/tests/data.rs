use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use catfair::data::{concat_columns, group_stats, load_csv, parse_csv, stratified_split, Column, Dataset};
use catfair::synth::{gen_intersectional, ETHNIC, MARITAL};
use catfair::Error;

fn dataset(cols: &[(&str, Vec<String>)], target: Vec<u8>) -> Dataset {
    let columns = cols
        .iter()
        .map(|(name, values)| Column {
            name: name.to_string(),
            values: values.clone(),
        })
        .collect();
    Dataset::new(columns, target).unwrap()
}

fn labels(prefix: &str, counts: &[usize]) -> Vec<String> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat_n(format!("{prefix}{i}"), n))
        .collect()
}

#[test]
fn load_small_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "ethnic,target\na,recid\nb,no\na,no\nc,recid\n").unwrap();
    let d = load_csv(&path, "target", "recid").unwrap();
    assert_eq!(d.n(), 4);
    assert_eq!(d.target(), &[1, 0, 0, 1]);
    assert_eq!(d.column("ethnic").unwrap(), &["a", "b", "a", "c"]);
}

#[test]
fn load_errors_are_named() {
    assert!(matches!(parse_csv("g,t\na,1\nb,0\nc,2\n", "t", "1"), Err(Error::NonBinaryTarget(_))));
    assert!(matches!(parse_csv("g,t\na,1\n", "y", "1"), Err(Error::MissingColumn(c)) if c == "y"));
    assert!(matches!(parse_csv("", "t", "1"), Err(Error::EmptyFile)));
    assert!(matches!(parse_csv("g,t\n", "t", "1"), Err(Error::EmptyFile)));
    assert!(matches!(parse_csv("g,t\n\"a,b\",1\n", "t", "1"), Err(Error::QuotedField { .. })));
    assert!(matches!(parse_csv("g,t\na|b,1\n", "t", "1"), Err(Error::ReservedSeparator { .. })));
    assert!(matches!(parse_csv("g,t\na,1,x\n", "t", "1"), Err(Error::RaggedRow { .. })));
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_csv(dir.path().join("nope.csv"), "t", "1"), Err(Error::Io { .. })));
}

#[test]
fn ten_thousand_rows_round_trip() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let n = 10_000;
    let a: Vec<String> = (0..n).map(|_| format!("a{}", r.random_range(0..12))).collect();
    let b: Vec<String> = (0..n).map(|_| format!("b{}", r.random_range(0..40))).collect();
    let y: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
    let d = dataset(&[("a", a), ("b", b)], y);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.csv");
    d.write_csv(&path, "label", "yes", "no").unwrap();
    let back = load_csv(&path, "label", "yes").unwrap();
    for col in ["a", "b"] {
        assert_eq!(group_stats(&back, col).unwrap(), group_stats(&d, col).unwrap());
    }
    assert_eq!(back, d);
    // loading twice gives the same dataset
    assert_eq!(load_csv(&path, "label", "yes").unwrap(), back);
}

#[test]
fn split_examples() {
    let one = dataset(&[("g", labels("c", &[100]))], vec![0; 100]);
    let s = stratified_split(&one, "g", 0.5, 1).unwrap();
    assert_eq!((s.train.n(), s.test.n()), (50, 50));

    let ab = dataset(&[("g", labels("c", &[60, 40]))], (0..100).map(|i| (i % 2) as u8).collect());
    let s = stratified_split(&ab, "g", 0.5, 2).unwrap();
    let tr = group_stats(&s.train, "g").unwrap();
    let te = group_stats(&s.test, "g").unwrap();
    assert_eq!((tr.get("c0").unwrap().n, te.get("c0").unwrap().n), (30, 30));
    assert_eq!((tr.get("c1").unwrap().n, te.get("c1").unwrap().n), (20, 20));
}

#[test]
fn singleton_category_goes_to_train() {
    let d = dataset(&[("g", labels("c", &[1, 9]))], vec![1; 10]);
    let s = stratified_split(&d, "g", 0.5, 3).unwrap();
    assert_eq!(group_stats(&s.train, "g").unwrap().get("c0").unwrap().n, 1);
    assert!(group_stats(&s.test, "g").unwrap().get("c0").is_none());
}

#[test]
fn stratification_enumeration() {
    let mut r = ChaCha8Rng::seed_from_u64(50);
    for config in 0..50 {
        let k = r.random_range(1..=8);
        let counts: Vec<usize> = (0..k).map(|_| 2 * r.random_range(1..40) + 1).collect();
        let fraction = [0.5, 0.3, 0.7, 0.25][config % 4];
        let n: usize = counts.iter().sum();
        let d = dataset(&[("g", labels("c", &counts))], (0..n).map(|i| (i % 3 == 0) as u8).collect());
        let s = stratified_split(&d, "g", fraction, config as u64).unwrap();

        let mut seen = vec![0u8; n];
        for &i in s.train_rows.iter().chain(&s.test_rows) {
            seen[i] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1), "config {config}: not a partition");

        let mut train_counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in &s.train_rows {
            *train_counts.entry(d.column("g").unwrap()[i].as_str()).or_default() += 1;
        }
        for (i, &n_i) in counts.iter().enumerate() {
            let got = train_counts.get(format!("c{i}").as_str()).copied().unwrap_or(0) as f64;
            assert!((got - (fraction * n_i as f64).round()).abs() <= 1.0, "config {config}, category {i}");
        }
        let again = stratified_split(&d, "g", fraction, config as u64).unwrap();
        assert_eq!(again.train_rows, s.train_rows);
    }
}

#[test]
fn split_rejects_bad_fraction() {
    let d = dataset(&[("g", labels("c", &[4]))], vec![0; 4]);
    for f in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(matches!(stratified_split(&d, "g", f, 0), Err(Error::InvalidFraction(_))));
    }
}

#[test]
fn group_stats_examples() {
    let d = dataset(&[("g", vec!["a".into(), "a".into(), "b".into()])], vec![1, 0, 1]);
    let s = group_stats(&d, "g").unwrap();
    let a = s.get("a").unwrap();
    let b = s.get("b").unwrap();
    assert_eq!((a.n, a.n_pos, a.p_hat()), (2, 1, 0.5));
    assert_eq!((b.n, b.n_pos, b.p_hat()), (1, 1, 1.0));
    assert_eq!(s.prior(), 2.0 / 3.0);

    let zeros = dataset(&[("g", labels("c", &[3, 4]))], vec![0; 7]);
    let s = group_stats(&zeros, "g").unwrap();
    assert!(s.groups.values().all(|c| c.p_hat() == 0.0));
    assert_eq!(s.prior(), 0.0);
}

#[test]
fn concat_examples() {
    let d = dataset(
        &[
            ("a", ["x", "x", "y", "y"].map(String::from).to_vec()),
            ("b", ["1", "2", "1", "2"].map(String::from).to_vec()),
        ],
        vec![1, 0, 0, 1],
    );
    let c = concat_columns(&d, "a", "b", "ab").unwrap();
    assert_eq!(group_stats(&c, "ab").unwrap().cardinality(), 4);
    assert_eq!(c.column("ab").unwrap()[0], "x|1");
    assert!(matches!(concat_columns(&c, "a", "b", "ab"), Err(Error::ColumnExists(_))));
    assert!(matches!(concat_columns(&d, "a", "zz", "q"), Err(Error::MissingColumn(_))));
}

#[test]
fn intersectional_concat_matches_manual_labels() {
    let d = gen_intersectional(4);
    let c = concat_columns(&d, ETHNIC, MARITAL, "em").unwrap();
    let stats = group_stats(&c, "em").unwrap();
    assert_eq!(stats.cardinality(), 46);

    let mut manual: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let (e, m) = (d.column(ETHNIC).unwrap(), d.column(MARITAL).unwrap());
    for i in 0..d.n() {
        let entry = manual.entry(format!("{}|{}", e[i], m[i])).or_default();
        entry.0 += 1;
        entry.1 += d.target()[i] as u64;
    }
    let ours: BTreeMap<String, (u64, u64)> = stats.groups.iter().map(|(k, c)| (k.clone(), (c.n, c.n_pos))).collect();
    assert_eq!(ours, manual);
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    (1usize..200).prop_flat_map(|n| {
        (
            proptest::collection::vec(0u8..4, n),
            proptest::collection::vec(0u8..3, n),
            proptest::collection::vec(0u8..2, n),
        )
            .prop_map(|(a, b, y)| {
                dataset(
                    &[
                        ("a", a.iter().map(|v| format!("a{v}")).collect()),
                        ("b", b.iter().map(|v| format!("b{v}")).collect()),
                    ],
                    y,
                )
            })
    })
}

proptest! {
    #[test]
    fn group_stats_reconcile(d in arb_dataset()) {
        let s = group_stats(&d, "a").unwrap();
        prop_assert_eq!(s.groups.values().map(|c| c.n).sum::<u64>(), s.n);
        prop_assert_eq!(s.groups.values().map(|c| c.n_pos).sum::<u64>(), s.n_pos);
        for c in s.groups.values() {
            prop_assert!(c.n_pos <= c.n);
            prop_assert!((0.0..=1.0).contains(&c.p_hat()));
        }
    }

    #[test]
    fn concat_marginalizes(d in arb_dataset()) {
        let c = concat_columns(&d, "a", "b", "ab").unwrap();
        let joint = group_stats(&c, "ab").unwrap();
        let marginal = group_stats(&d, "a").unwrap();
        let mut summed: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        for (k, v) in &joint.groups {
            let a = k.split('|').next().unwrap().to_string();
            let e = summed.entry(a).or_default();
            e.0 += v.n;
            e.1 += v.n_pos;
        }
        let expect: BTreeMap<String, (u64, u64)> = marginal.groups.iter().map(|(k, v)| (k.clone(), (v.n, v.n_pos))).collect();
        prop_assert_eq!(summed, expect);
        prop_assert!(joint.cardinality() <= marginal.cardinality() * group_stats(&d, "b").unwrap().cardinality());
    }

    #[test]
    fn split_is_stratified_partition(d in arb_dataset(), seed in 0u64..1000, fraction in 0.05f64..0.95) {
        match stratified_split(&d, "a", fraction, seed) {
            Ok(s) => {
                prop_assert_eq!(s.train.n() + s.test.n(), d.n());
                let mut all: Vec<usize> = s.train_rows.iter().chain(&s.test_rows).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..d.n()).collect::<Vec<_>>());
                let full = group_stats(&d, "a").unwrap();
                let train = group_stats(&s.train, "a").unwrap();
                for (k, c) in &full.groups {
                    let got = train.get(k).map_or(0, |t| t.n) as f64;
                    prop_assert!((got - fraction * c.n as f64).abs() <= 1.0);
                }
            }
            // everything landed in train: only possible when every category is tiny
            Err(e) => prop_assert!(matches!(e, Error::EmptyDataset)),
        }
    }

    #[test]
    fn csv_round_trip(d in arb_dataset()) {
        let text = d.to_csv_string("y", "pos", "neg");
        prop_assert_eq!(parse_csv(&text, "y", "pos").unwrap(), d);
    }
}
