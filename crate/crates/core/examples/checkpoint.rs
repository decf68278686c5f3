//! Trains the toy preset briefly, saves a checkpoint, reloads it and
//! evaluates the held-out sequences with each stream setting.
//!
//!     cargo run --release --example checkpoint -- [path]

use mdgait::dataset::Dataset;
use mdgait::model::{AdsVitModel, ModelConfig, StreamMode};
use mdgait::radar_synth::SynthPlan;
use mdgait::tfr::PreprocessConfig;
use mdgait::train::{evaluate, train, FrameTask, TrainConfig};
use mdgait::vit::ViTConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "toy.mdck".into());
    let plan = SynthPlan { subjects: 4, sequences_per_session: 2, duration_s: 2.0, seed: 3, ..SynthPlan::default() };
    let cfg = PreprocessConfig { stride: 20, ..PreprocessConfig::default() };
    let seqs = plan
        .keys()
        .into_iter()
        .map(|k| Ok((k, cfg.spectrogram(&plan.synth(k)?)?.data)))
        .collect::<Result<Vec<_>, mdgait::Error>>()?;
    let ds = Dataset::from_sequences(cfg, seqs, 3)?;

    let config = ModelConfig { vit: ViTConfig::toy(), num_classes: ds.num_classes() };
    let mut task = FrameTask::new(AdsVitModel::new(config.clone(), 3)?, &ds, StreamMode::Dual)?;
    let tc = TrainConfig { batch_size: 16, epochs: 5, seed: 3, ..TrainConfig::default() };
    let run = train(&mut task, &tc, |e, _| println!("epoch {}  loss {:.4}  test {:.3}", e.epoch, e.train_loss, e.test_acc))?;
    println!("best {:.3} at epoch {}", run.best_test_acc, run.best_epoch);

    task.model.save(path.as_ref())?;
    let model = AdsVitModel::load(config, path.as_ref())?;
    for mode in [StreamMode::Dual, StreamMode::SpectrogramOnly, StreamMode::CvdOnly] {
        let ev = evaluate(&model, &ds, &ds.test, mode)?;
        println!("{:<11} accuracy {:.3}", mode.name(), ev.accuracy);
        for row in &ev.confusion {
            println!("    {row:?}");
        }
    }
    Ok(())
}
