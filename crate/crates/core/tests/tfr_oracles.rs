use std::f64::consts::TAU;

use mdgait::radar_synth::{synth_sequence, GaitParams, RawSignal, RAW_SAMPLE_RATE_HZ, DECIMATION};
use mdgait::tfr::{
    cvd, frame_count, frame_crop, kept_rows, resize_bilinear, shifted_row, stft_columns, stft_magnitude,
    to_model_input, trim_spectrum, Matrix, PreprocessConfig, Spectrogram, DB_FLOOR,
};
use num_complex::{Complex32, Complex64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -TAU * (k * t % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn random_frame(rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(115, 115, |_, _| rng.random_range(-60.0..40.0))
}

#[test]
fn cvd_matches_naive_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let f = random_frame(&mut rng);
        let c = cvd(&f).unwrap();
        for r in 0..115 {
            let row: Vec<Complex64> = f.row(r).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            for (k, z) in naive_dft(&row).iter().enumerate() {
                let (fast, slow) = (c.data.get(r, k), z.norm());
                assert!((fast - slow).abs() <= 1e-9 * slow.max(1.0), "row {r} bin {k}: {fast} vs {slow}");
            }
        }
    }
}

#[test]
fn cvd_of_cosine_row() {
    let f = Matrix::from_fn(115, 115, |r, t| if r == 7 { (TAU * 5.0 * t as f64 / 115.0).cos() } else { 2.0 });
    let c = cvd(&f).unwrap();
    for k in 0..115 {
        let expected = if k == 5 || k == 110 { 57.5 } else { 0.0 };
        assert!((c.data.get(7, k) - expected).abs() < 1e-9, "bin {k}: {}", c.data.get(7, k));
        let constant = if k == 0 { 230.0 } else { 0.0 };
        assert!((c.data.get(0, k) - constant).abs() < 1e-9);
    }
}

fn signal(samples: Vec<Complex32>, rate: f64) -> RawSignal {
    RawSignal::new(samples, rate, None).unwrap()
}

#[test]
fn stft_satisfies_parseval_per_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Complex32> = (0..700).map(|_| Complex32::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let sig = signal(x.clone(), 1953.125);
    let mag = stft_magnitude(&sig, 128, 13).unwrap();
    assert_eq!(mag.cols(), (700 - 128) / 13 + 1);
    for c in 0..mag.cols() {
        let spectral: f64 = (0..128).map(|r| mag.get(r, c).powi(2)).sum();
        let temporal: f64 = (0..128)
            .map(|n| {
                let w = 0.5 - 0.5 * (TAU * n as f64 / 128.0).cos();
                let s = x[c * 13 + n];
                (f64::from(s.re).powi(2) + f64::from(s.im).powi(2)) * w * w
            })
            .sum::<f64>()
            * 128.0;
        assert!((spectral - temporal).abs() <= 1e-6 * temporal, "column {c}: {spectral} vs {temporal}");
    }
}

#[test]
fn tone_lands_on_shifted_bin() {
    for k in [3usize, 20, 64, 100, 127] {
        let x: Vec<Complex32> = (0..400)
            .map(|n| {
                let z = Complex64::from_polar(1.0, TAU * (k * n) as f64 / 128.0);
                Complex32::new(z.re as f32, z.im as f32)
            })
            .collect();
        let mag = stft_magnitude(&signal(x.clone(), 1000.0), 128, 13).unwrap();
        for c in 0..mag.cols() {
            let windowed: Vec<Complex64> = (0..128)
                .map(|n| {
                    let s = x[c * 13 + n];
                    Complex64::new(f64::from(s.re), f64::from(s.im)) * (0.5 - 0.5 * (TAU * n as f64 / 128.0).cos())
                })
                .collect();
            let oracle = naive_dft(&windowed);
            let peak_bin = (0..128).max_by(|&a, &b| oracle[a].norm().total_cmp(&oracle[b].norm())).unwrap();
            let peak_row = (0..128).max_by(|&a, &b| mag.get(a, c).total_cmp(&mag.get(b, c))).unwrap();
            assert_eq!(peak_bin, k);
            assert_eq!(peak_row, (k + 64) % 128);
            assert_eq!(peak_row, shifted_row(k, 128));
        }
    }
}

#[test]
fn column_count_boundaries() {
    assert_eq!(stft_columns(128, 128, 13), 1);
    assert_eq!(stft_columns(258, 128, 13), 11);
    assert_eq!(stft_columns(127, 128, 13), 0);
}

#[test]
fn trim_follows_the_index_map() {
    // rows 4..=61 then 67..=123
    let map: Vec<usize> = (4..=61).chain(67..=123).collect();
    assert_eq!(map.len(), 115);
    assert_eq!(kept_rows(), map);
    for r in 0..128 {
        let spec = Spectrogram {
            data: Matrix::from_fn(128, 3, |i, _| if i == r { 10.0 } else { 20.0 * DB_FLOOR.log10() }),
            bin_hz: 1.0,
            col_s: 1.0,
        };
        let out = trim_spectrum(&spec).unwrap();
        assert_eq!(out.data.rows(), 115);
        let hot: Vec<usize> = (0..115).filter(|&i| out.data.get(i, 0) == 10.0).collect();
        match map.iter().position(|&m| m == r) {
            Some(j) => assert_eq!(hot, vec![j]),
            None => assert!(hot.is_empty(), "removed row {r} leaked to {hot:?}"),
        }
    }
}

#[test]
fn frame_count_closed_form_exhaustive() {
    for t in 115..=2000usize {
        let spec = Spectrogram { data: Matrix::new(1, t, vec![0.0; t]), bin_hz: 1.0, col_s: 1.0 };
        let frames = frame_crop(&spec, 115, 10).unwrap();
        assert_eq!(frames.len(), (t - 115) / 10 + 1);
        assert_eq!(frame_count(t, 115, 10), frames.len());
    }
    assert_eq!(frame_count(135, 115, 10), 3);
}

proptest! {
    #[test]
    fn crops_index_the_parent(cols in 115usize..400, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Matrix::from_fn(4, cols, |_, _| rng.random_range(-1.0..1.0));
        let spec = Spectrogram { data: data.clone(), bin_hz: 1.0, col_s: 1.0 };
        let frames = frame_crop(&spec, 115, 10).unwrap();
        for _ in 0..20 {
            let i = rng.random_range(0..frames.len());
            let c = rng.random_range(0..115);
            let r = rng.random_range(0..4);
            prop_assert_eq!(frames[i].get(r, c), data.get(r, 10 * i + c));
        }
    }
}

#[test]
fn bilinear_two_by_two_to_four_by_four() {
    let (a, b, c, d) = (1.0, 3.0, 5.0, 11.0);
    let m = Matrix::new(2, 2, vec![a, b, c, d]);
    let out = resize_bilinear(&m, 4, 4);
    // half-pixel centers: source coordinate i/2 − 1/4, clamped to [0, 1]
    let w = [0.0, 0.25, 0.75, 1.0];
    for y in 0..4 {
        for x in 0..4 {
            let top = a * (1.0 - w[x]) + b * w[x];
            let bottom = c * (1.0 - w[x]) + d * w[x];
            let expected = top * (1.0 - w[y]) + bottom * w[y];
            assert!((out.get(y, x) - expected).abs() < 1e-12, "({y},{x}) {} vs {expected}", out.get(y, x));
        }
    }
}

#[test]
fn model_input_rules() {
    let flat = to_model_input(&Matrix::new(115, 115, vec![-7.0; 115 * 115]), 224);
    assert_eq!(flat.data.len(), 224 * 224 * 3);
    assert!(flat.data.iter().all(|&v| v == 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let img = to_model_input(&random_frame(&mut rng), 224);
    assert_eq!(img.channel(0), img.channel(1));
    assert_eq!(img.channel(1), img.channel(2));
    assert!(img.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn synthesized_tone_peaks_at_its_doppler() {
    let rate = RAW_SAMPLE_RATE_HZ / DECIMATION as f64;
    let sig = synth_sequence(&GaitParams::tone(1.2), 1.0, rate, 0.0, 0).unwrap();
    assert_eq!(sig.len(), 1953);
    let x: Vec<Complex64> = sig.samples().iter().map(|s| Complex64::new(f64::from(s.re), f64::from(s.im))).collect();
    let spectrum = naive_dft(&x);
    let peak = (0..x.len()).max_by(|&a, &b| spectrum[a].norm().total_cmp(&spectrum[b].norm())).unwrap();
    let expected = (192.0 * x.len() as f64 / rate).round() as usize;
    assert_eq!(peak, expected);
}

#[test]
fn preprocess_census_closed_form() {
    let cfg = PreprocessConfig::default();
    for raw in [3_750_000usize, 1_000_000, 64 * 128, 64 * 128 - 1] {
        let dec = raw / 64;
        let cols = if dec >= 128 { (dec - 128) / 13 + 1 } else { 0 };
        let frames = if cols >= 115 { (cols - 115) / 10 + 1 } else { 0 };
        assert_eq!(cfg.census(raw), (cols, frames));
    }
    assert_eq!(cfg.census(3_750_000), (4498, 439));
}
