use fusionforge_core::codec::{decode_feature_file, encode_feature_file, FEATURE_HEADER_LEN};
use fusionforge_core::features::{pool_record, pool_sequence, FeatureRecord, Pooling};
use fusionforge_core::rng::Rng;
use fusionforge_core::Error;
use proptest::prelude::*;

fn random_records(rng: &mut Rng, n: usize, dim: usize) -> Vec<FeatureRecord> {
    (0..n)
        .map(|i| {
            let rows = 1 + rng.below(6);
            let data = (0..rows * dim).map(|_| rng.gaussian() as f32).collect();
            FeatureRecord::new(format!("rec_{i:04}"), dim, data).unwrap()
        })
        .collect()
}

#[test]
fn thousand_records_round_trip_bit_exactly() {
    let mut rng = Rng::seed(42);
    let mut records = random_records(&mut rng, 1000, 7);
    // special values survive as bit patterns
    records[0].data[0] = f32::MIN_POSITIVE / 2.0;
    records[0].data[1] = -0.0;
    records[0].data[2] = f32::MAX;
    let bytes = encode_feature_file(&records, 7).unwrap();
    let (dim, back) = decode_feature_file(&bytes).unwrap();
    assert_eq!(dim, 7);
    assert_eq!(back.len(), 1000);
    for (a, b) in records.iter().zip(&back) {
        assert!(a.bit_eq(b));
    }
    assert_eq!(encode_feature_file(&back, 7).unwrap(), bytes);
}

#[test]
fn header_and_record_sizes() {
    let bytes = encode_feature_file(&[], 3).unwrap();
    assert_eq!(bytes.len(), FEATURE_HEADER_LEN);
    let rec = FeatureRecord::new("ab", 3, vec![0.0; 6]).unwrap();
    let bytes = encode_feature_file(&[rec], 3).unwrap();
    assert_eq!(bytes.len(), FEATURE_HEADER_LEN + 2 + 2 + 4 + 6 * 4);
}

#[test]
fn every_strict_prefix_is_rejected() {
    let mut rng = Rng::seed(1);
    let bytes = encode_feature_file(&random_records(&mut rng, 3, 2), 2).unwrap();
    for cut in 0..bytes.len() {
        let err = decode_feature_file(&bytes[..cut]).unwrap_err();
        assert!(
            matches!(err, Error::Truncated { .. } | Error::BadMagic { .. } | Error::CountMismatch { .. }),
            "cut {cut}: {err:?}"
        );
    }
}

#[test]
fn writer_rejects_inconsistent_input() {
    let a = FeatureRecord::new("a", 2, vec![0.0; 2]).unwrap();
    let b = FeatureRecord::new("b", 3, vec![0.0; 3]).unwrap();
    assert!(matches!(encode_feature_file(&[a.clone(), b], 2), Err(Error::DimMismatch { .. })));
    assert!(matches!(encode_feature_file(&[a.clone(), a], 2), Err(Error::DuplicateId(_))));
    assert!(FeatureRecord::new("x", 2, vec![0.0; 3]).is_err());
    assert!(FeatureRecord::new("x", 2, vec![]).is_err());
}

#[test]
fn pooling_a_stored_record() {
    let rec = FeatureRecord::new("s", 2, vec![1.0, 2.0, 3.0, 6.0, 5.0, -2.0]).unwrap();
    assert_eq!(pool_record(&rec, Pooling::Mean).unwrap(), vec![3.0, 2.0]);
    assert_eq!(pool_record(&rec, Pooling::Max).unwrap(), vec![5.0, 6.0]);
    assert_eq!(pool_sequence::<Vec<f64>>(&[], Pooling::Mean), Err(Error::EmptySequence));
}

fn rows_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..6, 1usize..8).prop_flat_map(|(dim, n)| {
        let row = || prop::collection::vec(-100.0f64..100.0, dim);
        (prop::collection::vec(row(), n), prop::collection::vec(row(), n))
    })
}

proptest! {
    #[test]
    fn mean_pooling_is_linear((xs, ys) in rows_strategy(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let combo: Vec<Vec<f64>> = xs.iter().zip(&ys)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
            .collect();
        let lhs = pool_sequence(&combo, Pooling::Mean).unwrap();
        let px = pool_sequence(&xs, Pooling::Mean).unwrap();
        let py = pool_sequence(&ys, Pooling::Mean).unwrap();
        for i in 0..lhs.len() {
            let rhs = a * px[i] + b * py[i];
            prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn max_pooling_bounds_every_row((xs, _) in rows_strategy()) {
        let m = pool_sequence(&xs, Pooling::Max).unwrap();
        for row in &xs {
            prop_assert!(row.iter().zip(&m).all(|(v, mx)| v <= mx));
        }
        for (c, mx) in m.iter().enumerate() {
            prop_assert!(xs.iter().any(|r| r[c] == *mx));
        }
    }

    #[test]
    fn arbitrary_records_round_trip(dim in 1usize..5, seed in 0u64..500, n in 0usize..20) {
        let mut rng = Rng::seed(seed);
        let recs = random_records(&mut rng, n, dim);
        let bytes = encode_feature_file(&recs, dim).unwrap();
        let (d, back) = decode_feature_file(&bytes).unwrap();
        prop_assert_eq!(d, dim);
        prop_assert!(recs.iter().zip(&back).all(|(a, b)| a.bit_eq(b)));
    }
}
