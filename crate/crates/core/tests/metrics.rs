use fusionforge_core::metrics::{confusion, report, waf_of};
use fusionforge_core::rng::Rng;
use fusionforge_core::Error;
use proptest::prelude::*;

/// Direct evaluation from the label lists, no confusion matrix.
fn brute_waf(t: &[usize], p: &[usize], k: usize) -> f64 {
    let n = t.len() as f64;
    (0..k)
        .map(|c| {
            let tp = t.iter().zip(p).filter(|(a, b)| **a == c && **b == c).count() as f64;
            let fp = t.iter().zip(p).filter(|(a, b)| **a != c && **b == c).count() as f64;
            let fn_ = t.iter().zip(p).filter(|(a, b)| **a == c && **b != c).count() as f64;
            let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
            (tp + fn_) / n * f1
        })
        .sum()
}

#[test]
fn matches_brute_force_on_random_instances() {
    let mut rng = Rng::seed(3);
    for _ in 0..1000 {
        let k = 2 + rng.below(7);
        let n = 1 + rng.below(200);
        let t: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let w = waf_of(&t, &p, k).unwrap();
        assert!((w - brute_waf(&t, &p, k)).abs() <= 1e-12);
    }
}

#[test]
fn worked_example() {
    // class 0: tp 2 fp 1 fn 0 -> f1 0.8 ; class 1: tp 1 fp 0 fn 1 -> f1 2/3
    let t = [0, 0, 1, 1];
    let p = [0, 0, 0, 1];
    let r = report(&confusion(&t, &p, 2).unwrap()).unwrap();
    assert!((r.waf - (0.5 * 0.8 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
    assert_eq!(r.accuracy, 0.75);
    assert_eq!(r.per_class[1].support, 2);
}

#[test]
fn metric_errors() {
    assert!(matches!(waf_of(&[], &[], 3), Err(Error::UndefinedMetric(_))));
    assert!(matches!(waf_of(&[0, 1], &[0], 3), Err(Error::LengthMismatch { .. })));
    assert!(matches!(waf_of(&[0], &[3], 3), Err(Error::ClassOutOfRange { .. })));
}

fn labels() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (2usize..7, 1usize..60).prop_flat_map(|(k, n)| {
        (Just(k), prop::collection::vec(0..k, n), prop::collection::vec(0..k, n))
    })
}

proptest! {
    #[test]
    fn bounded_and_one_only_on_the_diagonal((k, t, p) in labels()) {
        let w = waf_of(&t, &p, k).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&w));
        prop_assert_eq!(w == 1.0, t == p);
        prop_assert_eq!(waf_of(&t, &t, k).unwrap(), 1.0);
    }

    #[test]
    fn invariant_to_sample_order((k, t, p) in labels(), seed in 0u64..1000) {
        let perm = Rng::seed(seed).permutation(t.len());
        let t2: Vec<usize> = perm.iter().map(|&i| t[i]).collect();
        let p2: Vec<usize> = perm.iter().map(|&i| p[i]).collect();
        let (a, b) = (waf_of(&t, &p, k).unwrap(), waf_of(&t2, &p2, k).unwrap());
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn equal_supports_give_macro_f1(k in 2usize..6, per in 1usize..10, seed in 0u64..1000) {
        let mut rng = Rng::seed(seed);
        let t: Vec<usize> = (0..k * per).map(|i| i % k).collect();
        let p: Vec<usize> = t.iter().map(|_| rng.below(k)).collect();
        let r = report(&confusion(&t, &p, k).unwrap()).unwrap();
        let macro_f1 = r.per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64;
        prop_assert!((r.waf - macro_f1).abs() < 1e-12);
    }
}
