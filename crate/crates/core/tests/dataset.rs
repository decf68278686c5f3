use std::fs;

use mdgait::dataset::{build_dataset, cache_path, discover};
use mdgait::radar_synth::{save_raw, sequence_path, SynthPlan};
use mdgait::tfr::PreprocessConfig;

fn plan() -> SynthPlan {
    SynthPlan { subjects: 3, sequences_per_session: 2, duration_s: 1.0, seed: 9, ..SynthPlan::default() }
}

#[test]
fn cached_and_fresh_builds_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, cache) = (tmp.path().join("data"), tmp.path().join("cache"));
    plan().write(&data).unwrap();
    let cfg = PreprocessConfig::default();

    let fresh = build_dataset(&data, &cfg, 1, None).unwrap();
    let first = build_dataset(&data, &cfg, 1, Some(&cache)).unwrap();
    let key = fresh.sequences[0].key;
    assert!(cache_path(&cache, &cfg, key).is_file());
    let second = build_dataset(&data, &cfg, 1, Some(&cache)).unwrap();
    assert_eq!(fresh.sequences, first.sequences);
    assert_eq!(first.sequences, second.sequences);
    assert_eq!(fresh.train, second.train);
    assert_eq!(fresh.census(), second.census());

    // a different hop keys a different cache entry
    let other = PreprocessConfig { hop: 26, ..cfg.clone() };
    assert_ne!(cache_path(&cache, &cfg, key), cache_path(&cache, &other, key));
    let coarse = build_dataset(&data, &other, 1, Some(&cache)).unwrap();
    assert!(coarse.sequences[0].spectrogram.cols() < first.sequences[0].spectrogram.cols());

    // stride only affects cropping, not the cached spectrogram
    let sparse = build_dataset(&data, &PreprocessConfig { stride: 20, ..cfg }, 1, Some(&cache)).unwrap();
    assert_eq!(sparse.sequences, first.sequences);
    assert!(sparse.train.len() < first.train.len());
}

#[test]
fn layout_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let p = plan();
    p.write(&data).unwrap();
    assert_eq!(discover(&data).unwrap().len(), 12);

    // a file labeled with another subject
    let moved = p.synth(mdgait::radar_synth::SequenceKey { subject_id: 2, session: 0, seq: 0 }).unwrap();
    save_raw(&moved, &sequence_path(&data, 1, 0, 0)).unwrap();
    let err = build_dataset(&data, &PreprocessConfig::default(), 0, None).unwrap_err().to_string();
    assert!(err.contains("labeled subject 2"), "{err}");

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert!(build_dataset(&empty, &PreprocessConfig::default(), 0, None).is_err());
}
