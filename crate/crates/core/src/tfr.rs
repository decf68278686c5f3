//! Spectrogram and cadence-velocity-diagram front end.
//!
//! Raw signal → decimate → 128-point Hann STFT (hop 13, fft-shifted, dB) →
//! trim to 115 Doppler rows → 115-column frames (stride 10) → per-frame CVD.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::radar_synth::RawSignal;

pub const WINDOW_LEN: usize = 128;
/// 115 of 128 samples overlap (≈ 90 %).
pub const HOP: usize = 13;
pub const TRIMMED_BINS: usize = 115;
pub const FRAME_SIZE: usize = 115;
pub const FRAME_STRIDE: usize = 10;
/// Added to magnitudes before `20·log10` so silent bins stay finite.
pub const DB_FLOOR: f64 = 1e-12;

/// Rows removed around the zero-Doppler row of a 128-row shifted spectrum.
pub const CLUTTER_ROWS: usize = 5;
/// Rows removed at each edge (highest |Doppler|) of the shifted spectrum.
pub const EDGE_ROWS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum TfrError {
    #[error("signal of {len} samples is shorter than one {window}-sample window")]
    ShortSignal { len: usize, window: usize },
    #[error("hop must be at least 1")]
    Hop,
    #[error("expected {expected} spectrum rows, got {found}")]
    Rows { expected: usize, found: usize },
    #[error("spectrogram has {cols} columns, fewer than one {size}-column frame")]
    ShortSpectrogram { cols: usize, size: usize },
    #[error("expected a {expected_rows}×{expected_cols} matrix, got {rows}×{cols}")]
    MatrixShape { expected_rows: usize, expected_cols: usize, rows: usize, cols: usize },
    #[error("matrix contains non-finite values")]
    NonFinite,
    #[error("{0}")]
    Config(String),
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Columns `start..start+len`.
    pub fn columns(&self, start: usize, len: usize) -> Matrix<T> {
        assert!(start + len <= self.cols, "column range out of bounds");
        let mut data = Vec::with_capacity(self.rows * len);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..start + len]);
        }
        Matrix { rows: self.rows, cols: len, data }
    }
}

impl Matrix<f64> {
    fn check(&self, rows: usize, cols: usize) -> Result<(), TfrError> {
        if self.rows != rows || self.cols != cols {
            return Err(TfrError::MatrixShape {
                expected_rows: rows,
                expected_cols: cols,
                rows: self.rows,
                cols: self.cols,
            });
        }
        if !self.data.iter().all(|v| v.is_finite()) {
            return Err(TfrError::NonFinite);
        }
        Ok(())
    }
}

pub fn db(magnitude: f64) -> f64 {
    20.0 * (magnitude.abs() + DB_FLOOR).log10()
}

/// Time–frequency magnitude image. Rows are Doppler bins in ascending
/// frequency (zero Doppler in the middle), columns are time.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub data: Matrix,
    /// Frequency resolution (Hz per row).
    pub bin_hz: f64,
    /// Time step per column (s).
    pub col_s: f64,
}

impl Spectrogram {
    pub fn freq_bins(&self) -> usize {
        self.data.rows()
    }

    pub fn time_cols(&self) -> usize {
        self.data.cols()
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (TAU * i as f64 / n as f64).cos()).collect()
}

/// Number of STFT columns for `len` samples.
pub fn stft_columns(len: usize, window_len: usize, hop: usize) -> usize {
    if len < window_len || hop == 0 {
        0
    } else {
        (len - window_len) / hop + 1
    }
}

/// Number of frames `frame_crop` yields from `cols` columns.
pub fn frame_count(cols: usize, size: usize, stride: usize) -> usize {
    if cols < size || stride == 0 {
        0
    } else {
        (cols - size) / stride + 1
    }
}

/// Shifted row index (0 = most negative frequency) of DFT bin `k`.
pub fn shifted_row(k: usize, n: usize) -> usize {
    (k + n / 2) % n
}

/// Linear STFT magnitudes `|DFT(window · slice)|`, two-sided and fft-shifted.
pub fn stft_magnitude(sig: &RawSignal, window_len: usize, hop: usize) -> Result<Matrix, TfrError> {
    if hop == 0 {
        return Err(TfrError::Hop);
    }
    if sig.len() < window_len || window_len == 0 {
        return Err(TfrError::ShortSignal { len: sig.len(), window: window_len });
    }
    let cols = stft_columns(sig.len(), window_len, hop);
    let window = hann(window_len);
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let mut out = vec![0.0; window_len * cols];
    let mut buf = vec![Complex64::default(); window_len];
    let samples = sig.samples();
    for c in 0..cols {
        let start = c * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            let s = samples[start + i];
            *b = Complex64::new(f64::from(s.re), f64::from(s.im)) * window[i];
        }
        fft.process(&mut buf);
        for (k, v) in buf.iter().enumerate() {
            out[shifted_row(k, window_len) * cols + c] = v.norm();
        }
    }
    Ok(Matrix::new(window_len, cols, out))
}

/// dB spectrogram, `floor((N − window_len) / hop) + 1` columns.
pub fn stft_spectrogram(sig: &RawSignal, window_len: usize, hop: usize) -> Result<Spectrogram, TfrError> {
    let mag = stft_magnitude(sig, window_len, hop)?;
    Ok(Spectrogram {
        data: mag.map(db),
        bin_hz: sig.sample_rate_hz() / window_len as f64,
        col_s: hop as f64 / sig.sample_rate_hz(),
    })
}

/// Rows of a 128-row shifted spectrum kept by [`trim_spectrum`], in order:
/// rows `4..=61` and `67..=123`. Rows `62..=66` surround zero Doppler
/// (row 64); rows `0..=3` and `124..=127` are the highest |Doppler| bins.
pub fn kept_rows() -> Vec<usize> {
    let dc = WINDOW_LEN / 2;
    let half = CLUTTER_ROWS / 2;
    (EDGE_ROWS..WINDOW_LEN - EDGE_ROWS).filter(|&r| r + half < dc || r > dc + half).collect()
}

/// Drops clutter and edge rows: 128 → 115 rows, order preserved.
pub fn trim_spectrum(spec: &Spectrogram) -> Result<Spectrogram, TfrError> {
    if spec.freq_bins() != WINDOW_LEN {
        return Err(TfrError::Rows { expected: WINDOW_LEN, found: spec.freq_bins() });
    }
    let rows = kept_rows();
    let cols = spec.time_cols();
    let mut data = Vec::with_capacity(rows.len() * cols);
    for &r in &rows {
        data.extend_from_slice(spec.data.row(r));
    }
    Ok(Spectrogram { data: Matrix::new(rows.len(), cols, data), bin_hz: spec.bin_hz, col_s: spec.col_s })
}

/// Frame `i` covers columns `[stride·i, stride·i + size)`.
pub fn frame_crop(spec: &Spectrogram, size: usize, stride: usize) -> Result<Vec<Matrix>, TfrError> {
    if stride == 0 {
        return Err(TfrError::Config("frame stride must be at least 1".into()));
    }
    let cols = spec.time_cols();
    if cols < size || size == 0 {
        return Err(TfrError::ShortSpectrogram { cols, size });
    }
    Ok((0..frame_count(cols, size, stride)).map(|i| spec.data.columns(i * stride, size)).collect())
}

/// Cadence velocity diagram: magnitude of the DFT along time for each
/// Doppler row. Rows are Doppler bins, columns cadence bins.
#[derive(Clone, Debug, PartialEq)]
pub struct CvdFrame {
    pub data: Matrix,
}

/// Reusable FFT plan for [`cvd`].
pub struct CvdPlan {
    fft: Arc<dyn Fft<f64>>,
}

impl Default for CvdPlan {
    fn default() -> Self {
        Self::new()
    }
}

impl CvdPlan {
    pub fn new() -> Self {
        Self { fft: FftPlanner::new().plan_fft_forward(FRAME_SIZE) }
    }

    pub fn apply(&self, frame: &Matrix) -> Result<CvdFrame, TfrError> {
        frame.check(TRIMMED_BINS, FRAME_SIZE)?;
        let mut out = Vec::with_capacity(frame.rows() * frame.cols());
        let mut buf = vec![Complex64::default(); FRAME_SIZE];
        for r in 0..frame.rows() {
            for (b, &v) in buf.iter_mut().zip(frame.row(r)) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft.process(&mut buf);
            out.extend(buf.iter().map(|z| z.norm()));
        }
        Ok(CvdFrame { data: Matrix::new(frame.rows(), frame.cols(), out) })
    }
}

pub fn cvd(frame: &Matrix) -> Result<CvdFrame, TfrError> {
    CvdPlan::new().apply(frame)
}

/// `H × W × 3` image, row-major with channels innermost.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub size: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub const CHANNELS: usize = 3;

    pub fn zeros(size: usize) -> Self {
        Self { size, data: vec![0.0; size * size * Self::CHANNELS] }
    }

    pub fn pixel(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.size + x) * Self::CHANNELS + c]
    }

    /// Replicates a `size × size` grayscale plane into three channels.
    pub fn from_gray(size: usize, gray: &[f32]) -> Self {
        assert_eq!(gray.len(), size * size);
        Self { size, data: gray.iter().flat_map(|&v| [v; Self::CHANNELS]).collect() }
    }

    pub fn channel(&self, c: usize) -> Vec<f32> {
        self.data.iter().skip(c).step_by(Self::CHANNELS).copied().collect()
    }
}

/// Min–max scale to `[0, 1]`; a constant matrix maps to all zeros.
pub fn min_max_normalize(m: &Matrix) -> Matrix {
    let (lo, hi) = m.data().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range > 0.0 {
        m.map(|v| (v - lo) / range)
    } else {
        m.map(|_| 0.0)
    }
}

/// Bilinear resampling with half-pixel centers and edge clamping.
pub fn resize_bilinear(m: &Matrix, out_rows: usize, out_cols: usize) -> Matrix {
    fn taps(out: usize, input: usize) -> Vec<(usize, usize, f64)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|d| {
                let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let i0 = src.floor() as usize;
                let i1 = (i0 + 1).min(input - 1);
                (i0, i1, src - i0 as f64)
            })
            .collect()
    }
    let ry = taps(out_rows, m.rows());
    let rx = taps(out_cols, m.cols());
    Matrix::from_fn(out_rows, out_cols, |r, c| {
        let (y0, y1, fy) = ry[r];
        let (x0, x1, fx) = rx[c];
        let top = m.get(y0, x0) * (1.0 - fx) + m.get(y0, x1) * fx;
        let bottom = m.get(y1, x0) * (1.0 - fx) + m.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Normalized, resized grayscale plane (`size × size`).
pub fn model_plane(frame: &Matrix, size: usize) -> Vec<f32> {
    resize_bilinear(&min_max_normalize(frame), size, size).data().iter().map(|&v| v as f32).collect()
}

/// Min–max normalize, resize to `size × size`, replicate to 3 channels.
pub fn to_model_input(frame: &Matrix, size: usize) -> Image {
    Image::from_gray(size, &model_plane(frame, size))
}

/// dB-scaled CVD, the form fed to the CVD stream.
pub fn cvd_db(c: &CvdFrame) -> Matrix {
    c.data.map(db)
}

/// Front-end parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreprocessConfig {
    pub decimation: usize,
    pub window_len: usize,
    pub hop: usize,
    pub frame_size: usize,
    pub stride: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            decimation: crate::radar_synth::DECIMATION,
            window_len: WINDOW_LEN,
            hop: HOP,
            frame_size: FRAME_SIZE,
            stride: FRAME_STRIDE,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), TfrError> {
        if self.window_len != WINDOW_LEN || self.frame_size != FRAME_SIZE {
            return Err(TfrError::Config(format!(
                "window length and frame size are fixed at {WINDOW_LEN} and {FRAME_SIZE}"
            )));
        }
        if self.decimation == 0 || self.hop == 0 || self.stride == 0 {
            return Err(TfrError::Config("decimation, hop and stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Trimmed spectrogram of one raw sequence.
    pub fn spectrogram(&self, raw: &RawSignal) -> Result<Spectrogram, crate::Error> {
        self.validate()?;
        let sig = crate::radar_synth::decimate(raw, self.decimation)?;
        let spec = stft_spectrogram(&sig, self.window_len, self.hop)?;
        Ok(trim_spectrum(&spec)?)
    }

    /// Closed-form (columns, frames) for a raw sequence of `raw_len` samples.
    pub fn census(&self, raw_len: usize) -> (usize, usize) {
        let cols = stft_columns(raw_len / self.decimation, self.window_len, self.hop);
        (cols, frame_count(cols, self.frame_size, self.stride))
    }
}

/// One training/evaluation example.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSample {
    pub spec: Matrix,
    pub cvd: CvdFrame,
    /// Class index.
    pub label: usize,
    pub subject_id: u32,
    pub sequence_id: usize,
    pub frame_index: usize,
}

impl FrameSample {
    /// Spectrogram and CVD images for the two streams.
    pub fn model_inputs(&self, size: usize) -> (Image, Image) {
        (to_model_input(&self.spec, size), to_model_input(&cvd_db(&self.cvd), size))
    }
}

/// Crops every frame of a trimmed spectrogram and pairs it with its CVD.
pub fn frames_with_cvd(spec: &Spectrogram, stride: usize) -> Result<Vec<(Matrix, CvdFrame)>, TfrError> {
    let plan = CvdPlan::new();
    frame_crop(spec, FRAME_SIZE, stride)?
        .into_iter()
        .map(|f| {
            let c = plan.apply(&f)?;
            Ok((f, c))
        })
        .collect()
}
