//! Synthetic micro-Doppler gait returns and raw-signal I/O.
//!
//! Each body part `k` moves with radial velocity
//! `v_k(t) = v_torso + A_k · sin(2π · cadence · t + φ_k)` and contributes
//! `r_k · exp(j · 2π · doppler_scale · ∫₀ᵗ v_k)` to the baseband return. The
//! torso is part 0 with `A_0 = 0`.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex32;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::binio::{put_f32s, ByteReader, FormatError};
use crate::seed;

/// Hz of Doppler shift per m/s of radial velocity (2/λ at 24 GHz).
pub const DOPPLER_SCALE_HZ_PER_MPS: f64 = 160.0;
/// Acquisition rate of the raw baseband signal.
pub const RAW_SAMPLE_RATE_HZ: f64 = 125_000.0;
/// Decimation factor applied before the STFT.
pub const DECIMATION: usize = 64;

pub const TORSO_VELOCITY_RANGE: (f64, f64) = (0.8, 1.6);
pub const CADENCE_RANGE: (f64, f64) = (0.7, 1.1);
pub const PART_COUNT_RANGE: (usize, usize) = (3, 7);

const RAW_MAGIC: &[u8; 4] = b"MDRS";
const RAW_VERSION: u32 = 1;
const UNLABELED: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("duration must be positive, got {0}")]
    Duration(f64),
    #[error("sample rate must be positive, got {0}")]
    SampleRate(f64),
    #[error("noise sigma must be non-negative, got {0}")]
    Noise(f64),
    #[error("decimation factor must be at least 1")]
    Factor,
    #[error("signal of {len} samples is shorter than decimation factor {factor}")]
    TooShort { len: usize, factor: usize },
    #[error("zero samples")]
    Empty,
    #[error("invalid gait parameters: {0}")]
    Params(String),
    #[error("raw signal format: {0}")]
    Format(#[from] FormatError),
}

/// Complex baseband I/Q sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSignal {
    samples: Vec<Complex32>,
    sample_rate_hz: f64,
    subject_id: Option<u32>,
}

impl RawSignal {
    pub fn new(samples: Vec<Complex32>, sample_rate_hz: f64, subject_id: Option<u32>) -> Result<Self, SynthError> {
        if samples.is_empty() {
            return Err(SynthError::Empty);
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(SynthError::SampleRate(sample_rate_hz));
        }
        if subject_id == Some(UNLABELED) {
            return Err(SynthError::Params(format!("subject id {UNLABELED} is reserved")));
        }
        Ok(Self { samples, sample_rate_hz, subject_id })
    }

    pub fn samples(&self) -> &[Complex32] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn subject_id(&self) -> Option<u32> {
        self.subject_id
    }

    pub fn with_subject(mut self, subject_id: Option<u32>) -> Self {
        self.subject_id = subject_id;
        self
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Kinematic description of one walker.
#[derive(Clone, Debug, PartialEq)]
pub struct GaitParams {
    pub torso_velocity_mps: f64,
    pub cadence_hz: f64,
    pub part_amplitudes_mps: Vec<f64>,
    pub part_phases_rad: Vec<f64>,
    pub part_reflectivities: Vec<f64>,
    pub doppler_scale_hz_per_mps: f64,
}

impl GaitParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let n = self.part_amplitudes_mps.len();
        if n == 0 || self.part_phases_rad.len() != n || self.part_reflectivities.len() != n {
            return Err(SynthError::Params(format!(
                "part lists must have equal non-zero lengths (amplitudes {}, phases {}, reflectivities {})",
                n,
                self.part_phases_rad.len(),
                self.part_reflectivities.len()
            )));
        }
        if let Some(r) = self.part_reflectivities.iter().find(|r| !(**r > 0.0)) {
            return Err(SynthError::Params(format!("reflectivity {r} is not positive")));
        }
        if !(self.cadence_hz > 0.0) {
            return Err(SynthError::Params(format!("cadence {} is not positive", self.cadence_hz)));
        }
        Ok(())
    }

    pub fn parts(&self) -> usize {
        self.part_amplitudes_mps.len()
    }

    /// Single constant-velocity scatterer.
    pub fn tone(velocity_mps: f64) -> Self {
        Self {
            torso_velocity_mps: velocity_mps,
            cadence_hz: 1.0,
            part_amplitudes_mps: vec![0.0],
            part_phases_rad: vec![0.0],
            part_reflectivities: vec![1.0],
            doppler_scale_hz_per_mps: DOPPLER_SCALE_HZ_PER_MPS,
        }
    }
}

/// Deterministic walker for `(seed, subject_id)`. Each subject draws from its
/// own derived random stream.
pub fn synth_subject(seed: u64, subject_id: u32) -> GaitParams {
    let mut rng = seed::rng(seed, "subject", &[u64::from(subject_id)]);
    let torso_velocity_mps = rng.random_range(TORSO_VELOCITY_RANGE.0..=TORSO_VELOCITY_RANGE.1);
    let cadence_hz = rng.random_range(CADENCE_RANGE.0..=CADENCE_RANGE.1);
    let parts = rng.random_range(PART_COUNT_RANGE.0..=PART_COUNT_RANGE.1);

    let mut amps = vec![0.0];
    let mut phases = vec![0.0];
    let mut refl = vec![1.0];
    for k in 1..parts {
        // alternate leg-like (deep swing) and arm-like (shallow swing) parts
        let (lo, hi, r_lo, r_hi) = if k % 2 == 1 { (1.2, 2.6, 0.25, 0.6) } else { (0.4, 1.2, 0.1, 0.35) };
        amps.push(rng.random_range(lo..hi));
        phases.push(rng.random_range(0.0..TAU));
        refl.push(rng.random_range(r_lo..r_hi));
    }
    GaitParams {
        torso_velocity_mps,
        cadence_hz,
        part_amplitudes_mps: amps,
        part_phases_rad: phases,
        part_reflectivities: refl,
        doppler_scale_hz_per_mps: DOPPLER_SCALE_HZ_PER_MPS,
    }
}

/// Subject as observed in one recording session: reflectivities are redrawn
/// (±25 % around the subject's values) from a session-specific stream.
pub fn session_params(base: &GaitParams, seed: u64, subject_id: u32, session: u32) -> GaitParams {
    let mut rng = seed::rng(seed, "session", &[u64::from(subject_id), u64::from(session)]);
    let mut p = base.clone();
    for r in &mut p.part_reflectivities {
        *r *= rng.random_range(0.75..1.25);
    }
    p
}

/// One walk of a session: small velocity and cadence jitter plus a common
/// gait-phase offset, so sequences are not noise-only copies of each other.
pub fn sequence_params(session: &GaitParams, seed: u64, subject_id: u32, session_idx: u32, seq: u32) -> GaitParams {
    let mut rng = seed::rng(
        seed,
        "sequence",
        &[u64::from(subject_id), u64::from(session_idx), u64::from(seq)],
    );
    let mut p = session.clone();
    p.torso_velocity_mps *= rng.random_range(0.98..1.02);
    p.cadence_hz *= rng.random_range(0.97..1.03);
    let offset = rng.random_range(0.0..TAU);
    for ph in &mut p.part_phases_rad {
        *ph = (*ph + offset).rem_euclid(TAU);
    }
    p
}

/// Baseband return of `params` over `duration_s`, `floor(duration · rate)`
/// samples, plus circular complex Gaussian noise with `E|n|² = noise_sigma²`.
pub fn synth_sequence(
    params: &GaitParams,
    duration_s: f64,
    sample_rate_hz: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<RawSignal, SynthError> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(SynthError::Duration(duration_s));
    }
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(SynthError::SampleRate(sample_rate_hz));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(SynthError::Noise(noise_sigma));
    }
    params.validate()?;
    let n = (duration_s * sample_rate_hz).floor() as usize;
    if n == 0 {
        return Err(SynthError::Empty);
    }

    let scale = TAU * params.doppler_scale_hz_per_mps;
    let w = TAU * params.cadence_hz;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sample_rate_hz;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for k in 0..params.parts() {
            let a = params.part_amplitudes_mps[k];
            let phi = params.part_phases_rad[k];
            // ∫₀ᵗ v_k(τ) dτ in closed form
            let displacement = params.torso_velocity_mps * t + a / w * (phi.cos() - (w * t + phi).cos());
            let (s, c) = (scale * displacement).sin_cos();
            re += params.part_reflectivities[k] * c;
            im += params.part_reflectivities[k] * s;
        }
        samples.push(Complex32::new(re as f32, im as f32));
    }

    if noise_sigma > 0.0 {
        let mut rng = seed::rng(seed, "noise", &[]);
        let normal = Normal::new(0.0, noise_sigma / std::f64::consts::SQRT_2).expect("valid sigma");
        for s in &mut samples {
            s.re += normal.sample(&mut rng) as f32;
            s.im += normal.sample(&mut rng) as f32;
        }
    }
    RawSignal::new(samples, sample_rate_hz, None)
}

/// Length-`factor` boxcar average over aligned blocks, one output sample per
/// block; the trailing partial block is dropped.
pub fn decimate(sig: &RawSignal, factor: usize) -> Result<RawSignal, SynthError> {
    if factor == 0 {
        return Err(SynthError::Factor);
    }
    if sig.len() < factor {
        return Err(SynthError::TooShort { len: sig.len(), factor });
    }
    let inv = 1.0 / factor as f64;
    let samples = sig
        .samples
        .chunks_exact(factor)
        .map(|block| {
            let (re, im) = block
                .iter()
                .fold((0.0f64, 0.0f64), |(re, im), s| (re + f64::from(s.re), im + f64::from(s.im)));
            Complex32::new((re * inv) as f32, (im * inv) as f32)
        })
        .collect();
    RawSignal::new(samples, sig.sample_rate_hz / factor as f64, sig.subject_id)
}

pub fn encode_raw(sig: &RawSignal) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + sig.len() * 8);
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&RAW_VERSION.to_le_bytes());
    out.extend_from_slice(&sig.subject_id.unwrap_or(UNLABELED).to_le_bytes());
    out.extend_from_slice(&sig.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(sig.len() as u64).to_le_bytes());
    put_f32s(&mut out, sig.samples.iter().flat_map(|s| [s.re, s.im])).expect("vec write");
    out
}

pub fn decode_raw(buf: &[u8]) -> Result<RawSignal, SynthError> {
    let mut r = ByteReader::new(buf);
    r.magic(RAW_MAGIC)?;
    let version = r.u32("version")?;
    if version != RAW_VERSION {
        return Err(FormatError::Version { format: "MDRS", found: version, expected: RAW_VERSION }.into());
    }
    let subject = r.u32("subject id")?;
    let at = r.offset();
    let rate = r.f64("sample rate")?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(FormatError::Malformed { what: format!("sample rate {rate} is not positive"), offset: at }.into());
    }
    let count = r.u64("sample count")?;
    if count == 0 {
        return Err(SynthError::Empty);
    }
    let count = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(2))
        .ok_or_else(|| FormatError::Malformed { what: format!("sample count {count} too large"), offset: at + 8 })?;
    let values = r.f32s(count, "samples")?;
    r.expect_end()?;
    let samples = values.chunks_exact(2).map(|p| Complex32::new(p[0], p[1])).collect();
    let subject_id = (subject != UNLABELED).then_some(subject);
    RawSignal::new(samples, rate, subject_id)
}

pub fn save_raw(sig: &RawSignal, path: &Path) -> Result<(), SynthError> {
    fs::write(path, encode_raw(sig)).map_err(FormatError::from)?;
    Ok(())
}

pub fn load_raw(path: &Path) -> Result<RawSignal, SynthError> {
    let buf = fs::read(path).map_err(FormatError::from)?;
    decode_raw(&buf)
}

/// `<root>/subject_<id>/session_<s>/seq_<k>.mdrs`
pub fn sequence_path(root: &Path, subject_id: u32, session: u32, seq: u32) -> PathBuf {
    root.join(format!("subject_{subject_id}"))
        .join(format!("session_{session}"))
        .join(format!("seq_{seq}.mdrs"))
}

/// Plan for a synthetic dataset in the on-disk layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthPlan {
    pub subjects: u32,
    pub sequences_per_session: u32,
    pub sessions: u32,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthPlan {
    fn default() -> Self {
        Self {
            subjects: 8,
            sequences_per_session: 4,
            sessions: 2,
            duration_s: 30.0,
            sample_rate_hz: RAW_SAMPLE_RATE_HZ,
            noise_sigma: 0.5,
            seed: 0,
        }
    }
}

/// Identifies one synthesized walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SequenceKey {
    pub subject_id: u32,
    pub session: u32,
    pub seq: u32,
}

impl SynthPlan {
    pub fn keys(&self) -> Vec<SequenceKey> {
        let mut keys = Vec::new();
        for subject_id in 0..self.subjects {
            for session in 0..self.sessions {
                for seq in 0..self.sequences_per_session {
                    keys.push(SequenceKey { subject_id, session, seq });
                }
            }
        }
        keys
    }

    pub fn synth(&self, key: SequenceKey) -> Result<RawSignal, SynthError> {
        let subject = synth_subject(self.seed, key.subject_id);
        let session = session_params(&subject, self.seed, key.subject_id, key.session);
        let walk = sequence_params(&session, self.seed, key.subject_id, key.session, key.seq);
        let noise_seed = seed::derive(
            self.seed,
            "noise",
            &[u64::from(key.subject_id), u64::from(key.session), u64::from(key.seq)],
        );
        Ok(synth_sequence(&walk, self.duration_s, self.sample_rate_hz, self.noise_sigma, noise_seed)?
            .with_subject(Some(key.subject_id)))
    }

    /// Writes every sequence under `root`; returns the written paths in key order.
    pub fn write(&self, root: &Path) -> Result<Vec<PathBuf>, SynthError> {
        use rayon::prelude::*;
        self.keys()
            .par_iter()
            .map(|&key| {
                let path = sequence_path(root, key.subject_id, key.session, key.seq);
                fs::create_dir_all(path.parent().expect("has parent")).map_err(FormatError::from)?;
                save_raw(&self.synth(key)?, &path)?;
                Ok(path)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subject_is_deterministic_and_in_range() {
        let a = synth_subject(7, 3);
        assert_eq!(a, synth_subject(7, 3));
        assert_ne!(a.torso_velocity_mps, synth_subject(7, 4).torso_velocity_mps);
        for id in 0..200 {
            let p = synth_subject(11, id);
            p.validate().unwrap();
            assert!((0.7..=1.1).contains(&p.cadence_hz));
            assert!((0.8..=1.6).contains(&p.torso_velocity_mps));
            assert!((3..=7).contains(&p.parts()));
            assert_eq!(p.part_amplitudes_mps[0], 0.0);
            assert!(p.part_reflectivities.iter().all(|&r| r > 0.0));
        }
    }

    #[test]
    fn sequence_length_and_errors() {
        let p = GaitParams::tone(1.0);
        assert_eq!(synth_sequence(&p, 30.0, 1953.125, 0.0, 0).unwrap().len(), 58593);
        assert!(matches!(synth_sequence(&p, 0.0, 100.0, 0.0, 0), Err(SynthError::Duration(_))));
        assert!(matches!(synth_sequence(&p, 1.0, -1.0, 0.0, 0), Err(SynthError::SampleRate(_))));
        let mut bad = p.clone();
        bad.part_phases_rad.push(0.0);
        assert!(matches!(synth_sequence(&bad, 1.0, 100.0, 0.0, 0), Err(SynthError::Params(_))));
    }

    #[test]
    fn noise_free_synthesis_is_deterministic() {
        let p = synth_subject(1, 2);
        let a = synth_sequence(&p, 0.5, 2000.0, 0.0, 1).unwrap();
        let b = synth_sequence(&p, 0.5, 2000.0, 0.0, 99).unwrap();
        assert_eq!(a, b);
        let n1 = synth_sequence(&p, 0.5, 2000.0, 0.3, 5).unwrap();
        let n2 = synth_sequence(&p, 0.5, 2000.0, 0.3, 5).unwrap();
        assert_eq!(n1, n2);
        assert_ne!(n1, a);
    }

    #[test]
    fn decimation_rate_length_and_constant() {
        let sig = RawSignal::new(vec![Complex32::new(0.3, -1.7); 6400], RAW_SAMPLE_RATE_HZ, Some(1)).unwrap();
        let d = decimate(&sig, 64).unwrap();
        assert_eq!(d.len(), 100);
        assert_eq!(d.sample_rate_hz(), 1953.125);
        assert_eq!(d.subject_id(), Some(1));
        assert!(d.samples().iter().all(|s| *s == Complex32::new(0.3, -1.7)));
        assert_eq!(decimate(&sig, 1).unwrap(), sig);
        assert!(matches!(decimate(&sig, 0), Err(SynthError::Factor)));
        assert!(matches!(decimate(&sig, 6401), Err(SynthError::TooShort { .. })));
    }

    #[test]
    fn raw_file_errors() {
        let sig = synth_sequence(&GaitParams::tone(1.0), 0.01, 1000.0, 0.1, 3).unwrap();
        let bytes = encode_raw(&sig);
        assert_eq!(decode_raw(&bytes).unwrap(), sig);
        for cut in [2, 8, 20, 27, bytes.len() - 3] {
            assert!(decode_raw(&bytes[..cut]).is_err(), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[1] = b'X';
        let err = decode_raw(&bad).unwrap_err().to_string();
        assert!(err.contains("byte 0"), "{err}");

        let mut empty = bytes[..28].to_vec();
        empty[20..28].copy_from_slice(&0u64.to_le_bytes());
        assert_eq!(decode_raw(&empty).unwrap_err().to_string(), "zero samples");
    }

    #[test]
    fn layout_paths() {
        let p = sequence_path(Path::new("/d"), 3, 1, 7);
        assert_eq!(p, Path::new("/d/subject_3/session_1/seq_7.mdrs"));
    }
}
