mod common;

use proptest::prelude::*;
use rand::Rng;
use traitleak::classify::{auc, epr, epr_detail, pr_curve, Crossing};

use common::{auc_pairwise, epr_sweep, random_labels, rng};

#[test]
fn auc_matches_pairwise_counting_with_ties() {
    let mut r = rng(4);
    for _ in 0..1000 {
        let n = r.random_range(2..120);
        let p = r.random_range(0.1..0.9);
        let y = random_labels(&mut r, n, p);
        // a small score alphabet forces plenty of ties
        let levels = r.random_range(1..12);
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64 * 0.25).collect();
        let got = auc(&scores, &y).unwrap();
        assert!((got - auc_pairwise(&scores, &y)).abs() <= 1e-12);
    }
}

#[test]
fn auc_reference_cases() {
    let y = [true, true, false, false];
    assert_eq!(auc(&[0.9, 0.4, 0.5, 0.1], &y).unwrap(), 0.75);
    assert_eq!(auc(&[1.0, 1.0, 1.0, 1.0], &y).unwrap(), 0.5);
    assert!(auc(&[1.0, 2.0], &[true, true]).unwrap_err().is_degenerate());
}

#[test]
fn epr_matches_dense_threshold_sweep() {
    let mut r = rng(5);
    for _ in 0..200 {
        let n = r.random_range(4..150);
        let p = r.random_range(0.15..0.85);
        let y = random_labels(&mut r, n, p);
        // integer scores keep every distinct level at least one sweep step apart
        let shift = r.random_range(0.0..3.0);
        let scores: Vec<f64> = y
            .iter()
            .map(|&l| (r.random_range(0..400) as f64 + if l { shift * 60.0 } else { 0.0 }).floor())
            .collect();
        let got = epr(&scores, &y).unwrap();
        let oracle = epr_sweep(&scores, &y, 10_000);
        assert!((got - oracle).abs() <= 1e-6, "{got} vs {oracle}");
    }
}

#[test]
fn perfect_classifier_epr_is_one() {
    let y = [true, false, true, false, false];
    let s = [0.9, 0.1, 0.8, 0.3, 0.2];
    let e = epr_detail(&s, &y).unwrap();
    assert_eq!(e.value, 1.0);
    assert_eq!(e.crossing, Crossing::Exact);
}

#[test]
fn random_scores_give_epr_near_prevalence() {
    // the crossing of a random ranking has a spread of about 0.02 at this
    // size, so the band is checked on the mean and on nearly every seed
    let y: Vec<bool> = (0..1000).map(|i| i < 500).collect();
    let values: Vec<f64> = (0..100)
        .map(|seed| {
            let mut r = rng(1000 + seed);
            let s: Vec<f64> = (0..1000).map(|_| r.random()).collect();
            epr(&s, &y).unwrap()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let inside = values.iter().filter(|v| (0.47..=0.53).contains(*v)).count();
    assert!((0.47..=0.53).contains(&mean), "mean {mean}");
    assert!(inside >= 95, "{inside} of 100 seeds inside the band");
}

#[test]
fn pr_curve_starts_at_anchor_and_ends_at_full_recall() {
    let y = [true, false, false, true, false];
    let pts = pr_curve(&[0.3, 0.9, 0.1, 0.5, 0.5], &y).unwrap();
    assert_eq!((pts[0].recall, pts[0].precision), (0.0, 1.0));
    let last = pts.last().unwrap();
    assert_eq!(last.recall, 1.0);
    assert_eq!(last.precision, 0.4);
}

proptest! {
    #[test]
    fn auc_invariant_under_increasing_transform(
        raw in prop::collection::vec((-50i32..50, any::<bool>()), 2..60)
    ) {
        let y: Vec<bool> = raw.iter().map(|p| p.1).collect();
        prop_assume!(y.iter().any(|&b| b) && y.iter().any(|&b| !b));
        let s: Vec<f64> = raw.iter().map(|p| p.0 as f64).collect();
        let t: Vec<f64> = s.iter().map(|v| (v / 7.0).exp() * 3.0 - 1.0).collect();
        prop_assert_eq!(auc(&s, &y).unwrap(), auc(&t, &y).unwrap());
    }

    #[test]
    fn auc_and_epr_are_in_unit_interval(
        raw in prop::collection::vec((-1e6f64..1e6, any::<bool>()), 2..80)
    ) {
        let y: Vec<bool> = raw.iter().map(|p| p.1).collect();
        prop_assume!(y.iter().any(|&b| b) && y.iter().any(|&b| !b));
        let s: Vec<f64> = raw.iter().map(|p| p.0).collect();
        let a = auc(&s, &y).unwrap();
        let e = epr(&s, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((0.0..=1.0).contains(&e));
        // reversing the ranking mirrors AUC
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((auc(&neg, &y).unwrap() - (1.0 - a)).abs() < 1e-12);
    }
}
