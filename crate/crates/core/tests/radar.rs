use mdgait::radar_synth::{
    decimate, decode_raw, encode_raw, load_raw, save_raw, synth_sequence, synth_subject, RawSignal, SynthError,
    SynthPlan, CADENCE_RANGE, RAW_SAMPLE_RATE_HZ,
};
use num_complex::Complex32;
use proptest::prelude::*;

#[test]
fn subjects_are_deterministic_and_distinct() {
    assert_eq!(synth_subject(7, 3), synth_subject(7, 3));
    assert_ne!(synth_subject(7, 3).torso_velocity_mps, synth_subject(7, 4).torso_velocity_mps);
    for id in 0..50 {
        let g = synth_subject(7, id);
        assert!(g.part_reflectivities.iter().all(|&r| r > 0.0));
        assert!((CADENCE_RANGE.0..=CADENCE_RANGE.1).contains(&g.cadence_hz));
    }
}

#[test]
fn sequence_lengths_and_errors() {
    let g = synth_subject(1, 0);
    assert_eq!(synth_sequence(&g, 30.0, 1953.125, 0.0, 0).unwrap().len(), 58593);
    let a = synth_sequence(&g, 0.5, 1953.125, 0.0, 4).unwrap();
    let b = synth_sequence(&g, 0.5, 1953.125, 0.0, 9).unwrap();
    assert_eq!(a, b);
    assert!(matches!(synth_sequence(&g, 0.0, 1000.0, 0.0, 0), Err(SynthError::Duration(_))));
    assert!(matches!(synth_sequence(&g, 1.0, -5.0, 0.0, 0), Err(SynthError::SampleRate(_))));
}

#[test]
fn decimation_contract() {
    let sig = RawSignal::new(vec![Complex32::new(0.25, -2.0); 6400], RAW_SAMPLE_RATE_HZ, Some(1)).unwrap();
    let d = decimate(&sig, 64).unwrap();
    assert_eq!(d.len(), 100);
    assert_eq!(d.sample_rate_hz(), 1953.125);
    assert!(d.samples().iter().all(|&s| s == Complex32::new(0.25, -2.0)));
    assert_eq!(d.subject_id(), Some(1));
}

#[test]
fn file_errors() {
    let sig = RawSignal::new(vec![Complex32::new(1.0, 2.0); 10], 100.0, None).unwrap();
    let bytes = encode_raw(&sig);
    for cut in [0, 3, 10, bytes.len() - 1] {
        assert!(decode_raw(&bytes[..cut]).is_err(), "cut at {cut}");
    }
    let mut empty = bytes[..28].to_vec();
    empty[20..28].copy_from_slice(&0u64.to_le_bytes());
    let err = decode_raw(&empty).unwrap_err();
    assert!(err.to_string().contains("zero samples"), "{err}");
}

#[test]
fn plan_writes_the_layout_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let plan = SynthPlan { subjects: 2, sequences_per_session: 2, sessions: 2, duration_s: 0.01, seed: 3, ..SynthPlan::default() };
    let paths = plan.write(dir.path()).unwrap();
    assert_eq!(paths.len(), 8);
    let first: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
    plan.write(dir.path()).unwrap();
    let second: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(first, second);
    assert_eq!(load_raw(&paths[5]).unwrap().subject_id(), Some(1));
}

proptest! {
    #[test]
    fn raw_round_trip(values in prop::collection::vec((-1e3f32..1e3, -1e3f32..1e3), 1..200),
                      rate in 1.0f64..1e6, subject in prop::option::of(0u32..1000)) {
        let sig = RawSignal::new(values.iter().map(|&(a, b)| Complex32::new(a, b)).collect(), rate, subject).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.mdrs");
        save_raw(&sig, &path).unwrap();
        let back = load_raw(&path).unwrap();
        prop_assert_eq!(back.sample_rate_hz().to_bits(), rate.to_bits());
        prop_assert_eq!(back, sig);
    }
}
