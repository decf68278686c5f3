//! Synthesizes one walk for a subject and reports its strongest Doppler
//! components after decimation.
//!
//!     cargo run --release --example synth_signal -- [subject] [seconds]

use mdgait::radar_synth::{decimate, SequenceKey, SynthPlan, DECIMATION, DOPPLER_SCALE_HZ_PER_MPS};
use rustfft::FftPlanner;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let subject: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let seconds: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4.0);

    let plan = SynthPlan { subjects: subject + 1, duration_s: seconds, ..SynthPlan::default() };
    let raw = plan.synth(SequenceKey { subject_id: subject, session: 0, seq: 0 })?;
    let sig = decimate(&raw, DECIMATION)?;
    println!("raw: {} samples at {} Hz", raw.len(), raw.sample_rate_hz());
    println!("decimated: {} samples at {:.3} Hz", sig.len(), sig.sample_rate_hz());

    let mut buf = sig.samples().to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let n = buf.len();
    let mut bins: Vec<(usize, f32)> = buf.iter().map(|z| z.norm()).enumerate().collect();
    bins.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("strongest bins:");
    for &(k, mag) in bins.iter().take(5) {
        // bins above n/2 are negative frequencies
        let k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
        let hz = k * sig.sample_rate_hz() / n as f64;
        println!("  {hz:8.2} Hz  ({:5.2} m/s)  |X| = {mag:.1}", hz / DOPPLER_SCALE_HZ_PER_MPS);
    }
    Ok(())
}
