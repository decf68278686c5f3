//! Front end on one synthetic walk: trimmed dB spectrogram, frame crops and
//! their cadence velocity diagrams, written as PGM images.
//!
//!     cargo run --release --example spectrogram_cvd -- [out_dir]

use std::path::PathBuf;

use mdgait::radar_synth::{SequenceKey, SynthPlan};
use mdgait::render::write_pgm;
use mdgait::tfr::{cvd_db, frames_with_cvd, PreprocessConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "spectrogram_cvd".into()));
    let plan = SynthPlan { duration_s: 6.0, ..SynthPlan::default() };
    let raw = plan.synth(SequenceKey { subject_id: 3, session: 0, seq: 0 })?;

    let cfg = PreprocessConfig::default();
    let spec = cfg.spectrogram(&raw)?;
    println!(
        "spectrogram {} × {} ({:.2} Hz per bin, {:.1} ms per column)",
        spec.freq_bins(),
        spec.time_cols(),
        spec.bin_hz,
        spec.col_s * 1e3
    );
    write_pgm(&spec.data, &out.join("spectrogram.pgm"))?;

    let frames = frames_with_cvd(&spec, 40)?;
    for (i, (frame, c)) in frames.iter().enumerate() {
        write_pgm(frame, &out.join(format!("frame_{i}.pgm")))?;
        write_pgm(&cvd_db(c), &out.join(format!("cvd_{i}.pgm")))?;
    }
    println!("{} frames written to {}", frames.len(), out.display());
    Ok(())
}
