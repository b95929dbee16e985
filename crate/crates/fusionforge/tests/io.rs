use std::fs;

use fusionforge::error::Error;
use fusionforge::io::*;
use fusionforge_core::fusion::{train, GroupSpec, TrainConfig};
use fusionforge_core::synth::{generate, SynthConfig};
use fusionforge_core::{FeatureRecord, ManifestEntry, ModalityId, ModalitySpec, Pooling, Split};

fn small_synth(seed: u64) -> fusionforge_core::synth::SynthOutput {
    generate(&SynthConfig {
        modalities: ModalityId::canonical().into_iter().map(|id| ModalitySpec { id, dim: 6 }).collect(),
        classes: 3,
        labeled: 20,
        unlabeled: 10,
        val: 10,
        test: 5,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn feature_file_round_trips_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_synth(1);
    let path = dir.path().join("nested/audio.mmf");
    write_feature_file(&out.records[0], 6, &path).unwrap();
    let (dim, back) = read_feature_file(&path).unwrap();
    assert_eq!(dim, 6);
    assert!(out.records[0].iter().zip(&back).all(|(a, b)| a.bit_eq(b)));
    let again = dir.path().join("again.mmf");
    write_feature_file(&back, dim, &again).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn truncated_and_foreign_files_are_typed_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.mmf");
    let rec = FeatureRecord::new("a", 2, vec![1.0; 4]).unwrap();
    write_feature_file(&[rec], 2, &path).unwrap();
    let bytes = fs::read(&path).unwrap();

    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    let err = read_feature_file(&path).unwrap_err();
    assert!(matches!(err, Error::Core(fusionforge_core::Error::Truncated { .. })), "{err}");
    assert_eq!(err.exit_code(), 1);

    fs::write(&path, b"PK\x03\x04rest-of-a-zip").unwrap();
    assert!(matches!(read_feature_file(&path), Err(Error::Core(fusionforge_core::Error::BadMagic { .. }))));

    let missing = read_feature_file(&dir.path().join("nope.mmf")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));
    assert_eq!(missing.exit_code(), 1);
}

#[test]
fn manifest_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let vocab: Vec<String> = ["neutral", "angry", "happy"].iter().map(|s| s.to_string()).collect();
    let entries = vec![
        ManifestEntry { sample_id: "a".into(), split: Split::Train, label: Some(2) },
        ManifestEntry { sample_id: "b".into(), split: Split::Unlabeled, label: None },
        ManifestEntry { sample_id: "c".into(), split: Split::Test, label: None },
    ];
    let path = dir.path().join("manifest.csv");
    write_manifest(&path, &entries, &vocab).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "sample_id,split,label\na,train,happy\nb,unlabeled,\nc,test,\n");
    assert_eq!(read_manifest(&path, &vocab).unwrap(), entries);

    for (body, what) in [
        ("sample_id,split,label\na,train,joyful\n", "unknown label"),
        ("sample_id,split,label\na,holdout,\n", "bad split"),
        ("sample_id,split,label\na,train,\n", "train without label"),
        ("sample_id,split,label\na,unlabeled,happy\n", "unlabeled with label"),
        ("id,split,label\na,train,happy\n", "bad header"),
    ] {
        fs::write(&path, body).unwrap();
        let err = read_manifest(&path, &vocab).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{what}: {err}");
    }
}

#[test]
fn dataset_is_independent_of_record_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_synth(2);
    let write_all = |sub: &str, reverse: bool| {
        let base = dir.path().join(sub);
        let mut files = Vec::new();
        for (spec, recs) in out.modalities.iter().zip(&out.records) {
            let mut recs = recs.clone();
            if reverse {
                recs.reverse();
            }
            let p = base.join(format!("{}.mmf", spec.id));
            write_feature_file(&recs, spec.dim, &p).unwrap();
            files.push((spec.clone(), p));
        }
        let mut manifest = out.manifest.clone();
        if reverse {
            manifest.reverse();
        }
        let m = base.join("manifest.csv");
        write_manifest(&m, &manifest, &out.label_vocab).unwrap();
        load_dataset(&m, &files, &out.label_vocab, Pooling::Mean).unwrap()
    };
    let a = write_all("fwd", false);
    let b = write_all("rev", true);
    assert_eq!(a.entries(), b.entries());
    for m in a.modalities() {
        for i in 0..a.len() {
            assert_eq!(a.vector(&m.id, i).unwrap(), b.vector(&m.id, i).unwrap());
        }
    }
}

#[test]
fn missing_records_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_synth(3);
    let spec = out.modalities[0].clone();
    let p = dir.path().join("audio.mmf");
    write_feature_file(&out.records[0][1..], spec.dim, &p).unwrap();
    let m = dir.path().join("manifest.csv");
    write_manifest(&m, &out.manifest, &out.label_vocab).unwrap();
    let err = load_dataset(&m, &[(spec.clone(), p.clone())], &out.label_vocab, Pooling::Mean).unwrap_err();
    let missing = out.records[0][0].sample_id.clone();
    match err {
        Error::Core(fusionforge_core::Error::Unresolved(list)) => assert_eq!(list, vec![("audio".to_string(), missing)]),
        other => panic!("{other}"),
    }
    let wrong_dim = ModalitySpec { dim: 7, ..spec };
    assert!(load_dataset(&m, &[(wrong_dim, p)], &out.label_vocab, Pooling::Mean).is_err());
}

#[test]
fn model_and_sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_synth(4).dataset(Pooling::Mean).unwrap();
    let cfg = TrainConfig { epochs: 2, d_model: 4, d_z: 4, ..TrainConfig::default() };
    let model = train(&ds, &GroupSpec::parse("audio,text").unwrap(), &cfg).unwrap();
    let path = dir.path().join("m.bin");
    save_model(&model, &path).unwrap();
    let side: ModelSidecar = read_json(&sidecar_path(&path)).unwrap();
    assert_eq!(side.group_spec, "audio+text");
    assert_eq!(side.fusion, "attention");
    assert_eq!(side.training.epoch_losses.len(), 3);
    let back = load_model(&path).unwrap();
    assert!(back.params.bit_eq(&model.params));
    assert_eq!(back.meta, model.meta);
    let again = dir.path().join("m2.bin");
    save_model(&back, &again).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    assert_eq!(fs::read(sidecar_path(&path)).unwrap(), fs::read(sidecar_path(&again)).unwrap());

    fs::write(&path, b"MMFM\x07\0\0\0").unwrap();
    assert_eq!(load_model(&path).unwrap_err().exit_code(), 1);
}
