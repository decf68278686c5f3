//! Desk-scale experiment: 8 synthetic subjects, the small ViT preset, and
//! single-stream ablations next to the dual-stream model.
//!
//!     cargo run --release --example train_desk -- [epochs] [dual,spectrogram,cvd]

use std::time::Instant;

use mdgait::dataset::Dataset;
use mdgait::model::{AdsVitModel, ModelConfig, StreamMode};
use mdgait::radar_synth::SynthPlan;
use mdgait::tfr::PreprocessConfig;
use mdgait::train::{train, FrameTask, TrainConfig};
use mdgait::vit::ViTConfig;
use rayon::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30);
    let modes = match args.next() {
        Some(list) => list.split(',').map(|m| StreamMode::parse(m).ok_or(format!("unknown stream '{m}'"))).collect::<Result<Vec<_>, _>>()?,
        None => vec![StreamMode::Dual, StreamMode::SpectrogramOnly, StreamMode::CvdOnly],
    };

    let plan = SynthPlan { duration_s: 4.0, seed: 7, ..SynthPlan::default() };
    let cfg = PreprocessConfig { stride: 20, ..PreprocessConfig::default() };
    let t = Instant::now();
    let seqs = plan
        .keys()
        .par_iter()
        .map(|&k| Ok((k, cfg.spectrogram(&plan.synth(k)?)?.data)))
        .collect::<Result<Vec<_>, mdgait::Error>>()?;
    let ds = Dataset::from_sequences(cfg, seqs, 7)?;
    println!("{} train / {} test frames in {:.1}s", ds.train.len(), ds.test.len(), t.elapsed().as_secs_f64());

    let tc = TrainConfig { lr_initial: 0.01, batch_size: 32, epochs, seed: 7, ..TrainConfig::default() };
    for mode in modes {
        let model = AdsVitModel::<f32>::new(ModelConfig { vit: ViTConfig::desk(), num_classes: ds.num_classes() }, 7)?;
        let mut task = FrameTask::new(model, &ds, mode)?;
        let m = train(&mut task, &tc, |e, _| {
            println!("{:<11} {:>3}  loss {:.4}  train {:.3}  test {:.3}", mode.name(), e.epoch, e.train_loss, e.train_acc, e.test_acc)
        })?;
        println!("{}: best {:.4} at epoch {} ({:.0}s)", mode.name(), m.best_test_acc, m.best_epoch, m.wall_time_s);
    }
    Ok(())
}
