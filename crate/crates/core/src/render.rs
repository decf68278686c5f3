//! Grayscale image export (binary PGM).

use std::fs;
use std::path::Path;

use crate::tfr::Matrix;
use crate::Error;

/// Min-max scales `m` to 0..=255, row 0 at the top. A constant matrix maps
/// to uniform mid-gray.
pub fn to_gray8(m: &Matrix) -> Vec<u8> {
    let (lo, hi) = m.data().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![128; m.data().len()];
    }
    m.data().iter().map(|&x| (((x - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8).collect()
}

/// `P5` encoding of `m`.
pub fn encode_pgm(m: &Matrix) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    out.extend(to_gray8(m));
    out
}

pub fn write_pgm(m: &Matrix, path: &Path) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, encode_pgm(m)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
