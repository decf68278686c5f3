//! Mini-batch SGD with momentum and weight decay, a linear warmup/decay
//! schedule, evaluation and run metrics.
//!
//! Each example gets its own graph; per-example gradients are computed in
//! parallel and summed in batch order, so results do not depend on the
//! number of worker threads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::autodiff::{Graph, ParamStore, Tensor};
use crate::dataset::{Dataset, FrameRef};
use crate::model::{argmax, AdsVitModel, StreamMode};
use crate::seed;
use crate::tfr::CvdPlan;
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr_initial: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr_initial: 0.01, momentum: 0.9, weight_decay: 5e-5, batch_size: 128, epochs: 500, warmup_fraction: 0.1, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr_initial.is_finite() && self.lr_initial >= 0.0) {
            return bad("lr_initial must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction must be in [0, 1)");
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lr_initial", self.lr_initial.to_string()),
            ("momentum", self.momentum.to_string()),
            ("weight_decay", self.weight_decay.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("warmup_fraction", self.warmup_fraction.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

/// Learning rate at optimizer step `step` of `total`: linear ramp from 0 to
/// `lr_initial` over the first `round(warmup_fraction · total)` steps, then
/// linear decay reaching 0 at `total`.
pub fn lr_at(step: usize, total: usize, cfg: &TrainConfig) -> Result<f64, Error> {
    if step >= total {
        return Err(Error::Config(format!("step {step} outside schedule of {total} steps")));
    }
    let (s, t) = (step as f64, total as f64);
    let w = (cfg.warmup_fraction * t).round();
    if s < w {
        Ok(cfg.lr_initial * (s / w))
    } else {
        Ok(cfg.lr_initial * ((t - s) / (t - w)))
    }
}

/// Momentum buffers, one per parameter tensor.
#[derive(Clone, Debug, Default)]
pub struct SgdState {
    pub velocity: Vec<Tensor<f32>>,
}

/// One step of `v ← m·v + g + λ·p; p ← p − lr·v`.
pub fn sgd_step(
    params: &mut [Tensor<f32>],
    grads: &[Tensor<f32>],
    state: &mut SgdState,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<(), Error> {
    if grads.len() != params.len() {
        return Err(Error::Config(format!("{} gradients for {} parameters", grads.len(), params.len())));
    }
    if state.velocity.is_empty() {
        state.velocity = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
    }
    let (lr, m, wd) = (lr as f32, momentum as f32, weight_decay as f32);
    for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut state.velocity) {
        if p.shape() != g.shape() || p.shape() != v.shape() {
            return Err(Error::Config(format!("gradient shape {:?} for parameter {:?}", g.shape(), p.shape())));
        }
        for ((pi, gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
            *vi = m * *vi + gi + wd * *pi;
            *pi -= lr * *vi;
        }
    }
    Ok(())
}

/// Loss, correctness and parameter gradients of one training example.
#[derive(Clone, Debug)]
pub struct Example {
    pub loss: f64,
    pub correct: bool,
    pub grads: Vec<Tensor<f32>>,
}

/// Something [`train`] can optimize.
pub trait Task: Sync {
    fn params(&self) -> &ParamStore<f32>;
    fn params_mut(&mut self) -> &mut ParamStore<f32>;
    fn train_len(&self) -> usize;
    fn example(&self, index: usize) -> Result<Example, Error>;
    /// Held-out accuracy with the current parameters.
    fn test_accuracy(&self) -> Result<f64, Error>;
}

/// The recognizer on a dataset's frames.
pub struct FrameTask<'d> {
    pub model: AdsVitModel<f32>,
    pub dataset: &'d Dataset,
    pub mode: StreamMode,
    plan: CvdPlan,
}

impl<'d> FrameTask<'d> {
    pub fn new(model: AdsVitModel<f32>, dataset: &'d Dataset, mode: StreamMode) -> Result<Self, Error> {
        if model.config.num_classes != dataset.num_classes() {
            return Err(Error::Config(format!(
                "model has {} classes, dataset has {}",
                model.config.num_classes,
                dataset.num_classes()
            )));
        }
        if dataset.train.is_empty() {
            return Err(Error::Config("no training frames".into()));
        }
        Ok(Self { model, dataset, mode, plan: CvdPlan::new() })
    }

    pub fn evaluate(&self, refs: &[FrameRef]) -> Result<Evaluation, Error> {
        evaluate(&self.model, self.dataset, refs, self.mode)
    }
}

impl Task for FrameTask<'_> {
    fn params(&self) -> &ParamStore<f32> {
        &self.model.store
    }

    fn params_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.model.store
    }

    fn train_len(&self) -> usize {
        self.dataset.train.len()
    }

    fn example(&self, index: usize) -> Result<Example, Error> {
        let frame = self.dataset.frame_with(self.dataset.train[index], &self.plan);
        let (s, c) = frame.model_inputs(self.model.config.vit.image_size);
        let (s, c) = self.mode.apply(s, c);
        let mut g = Graph::new();
        let p = self.model.store.bind(&mut g);
        let logits = self.model.logits_graph(&mut g, &p, &s, &c)?;
        let correct = argmax(g.value(logits).data()) == frame.label;
        let loss_var = g.cross_entropy_logits(logits, &[frame.label])?;
        let loss = f64::from(g.value(loss_var).item());
        let grads = g.backward(loss_var)?;
        Ok(Example { loss, correct, grads: self.model.store.collect_grads(&p, grads) })
    }

    fn test_accuracy(&self) -> Result<f64, Error> {
        Ok(self.evaluate(&self.dataset.test)?.accuracy)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub epochs: Vec<EpochMetrics>,
    pub best_test_acc: f64,
    pub best_epoch: usize,
    pub wall_time_s: f64,
}

/// Runs `cfg.epochs` epochs, calling `on_epoch` with the epoch's metrics
/// and the updated task after each one.
pub fn train<K: Task>(
    task: &mut K,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics, &K),
) -> Result<RunMetrics, Error> {
    cfg.validate()?;
    let n = task.train_len();
    if n == 0 {
        return Err(Error::Config("no training examples".into()));
    }
    let start = Instant::now();
    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let total = steps_per_epoch * cfg.epochs;
    let mut state = SgdState::default();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut step = 0;
    let mut lr = 0.0;
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(cfg.seed, "shuffle", &[epoch as u64]));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            lr = lr_at(step, total, cfg)?;
            let examples = {
                let t: &K = task;
                batch.par_iter().map(|&i| t.example(i)).collect::<Result<Vec<_>, Error>>()?
            };
            let mut sum: Vec<Tensor<f32>> = task.params().tensors().iter().map(|p| Tensor::zeros(p.shape())).collect();
            for ex in &examples {
                if !ex.loss.is_finite() {
                    return Err(Error::Config(format!("non-finite loss at epoch {}, step {step}", epoch + 1)));
                }
                loss_sum += ex.loss;
                correct += usize::from(ex.correct);
                for (acc, g) in sum.iter_mut().zip(&ex.grads) {
                    for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += b;
                    }
                }
            }
            let inv = 1.0 / batch.len() as f32;
            for t in &mut sum {
                t.data_mut().iter_mut().for_each(|x| *x *= inv);
            }
            sgd_step(task.params_mut().tensors_mut(), &sum, &mut state, lr, cfg.momentum, cfg.weight_decay)?;
            step += 1;
        }
        let m = EpochMetrics {
            epoch: epoch + 1,
            train_loss: loss_sum / n as f64,
            train_acc: correct as f64 / n as f64,
            test_acc: task.test_accuracy()?,
            lr,
        };
        on_epoch(&m, task);
        epochs.push(m);
    }
    let (best_epoch, best_test_acc) = best(&epochs);
    Ok(RunMetrics { epochs, best_test_acc, best_epoch, wall_time_s: start.elapsed().as_secs_f64() })
}

/// Epoch with the highest test accuracy; the earliest wins ties.
fn best(epochs: &[EpochMetrics]) -> (usize, f64) {
    let mut out = (0, f64::NEG_INFINITY);
    for e in epochs {
        if e.test_acc > out.1 {
            out = (e.epoch, e.test_acc);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl Evaluation {
    pub fn from_predictions(predicted: &[usize], labels: &[usize], classes: usize) -> Result<Self, Error> {
        if predicted.len() != labels.len() {
            return Err(Error::Config(format!("{} predictions for {} labels", predicted.len(), labels.len())));
        }
        if predicted.is_empty() {
            return Err(Error::Config("nothing to evaluate".into()));
        }
        let mut confusion = vec![vec![0; classes]; classes];
        let mut hits = 0;
        for (&p, &l) in predicted.iter().zip(labels) {
            if p >= classes || l >= classes {
                return Err(Error::Config(format!("class index {} out of range for {classes} classes", p.max(l))));
            }
            confusion[l][p] += 1;
            hits += usize::from(p == l);
        }
        Ok(Self { accuracy: hits as f64 / labels.len() as f64, confusion })
    }
}

/// Frame-level accuracy and confusion matrix over `refs`.
pub fn evaluate(model: &AdsVitModel<f32>, dataset: &Dataset, refs: &[FrameRef], mode: StreamMode) -> Result<Evaluation, Error> {
    let plan = CvdPlan::new();
    let pairs = refs
        .par_iter()
        .map(|&r| {
            let frame = dataset.frame_with(r, &plan);
            Ok((model.predict(&frame, mode)?, frame.label))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let (predicted, labels): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
    Evaluation::from_predictions(&predicted, &labels, model.config.num_classes)
}

/// Short hex digest of `key = value` lines.
pub fn config_hash(entries: &[(String, String)]) -> String {
    let mut h = Sha256::new();
    for (k, v) in entries {
        h.update(format!("{k} = {v}\n").as_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Tab-separated per-epoch table. Contains no wall-clock values, so equal
/// runs give equal files.
pub fn metrics_tsv(m: &RunMetrics) -> String {
    let mut s = String::from("epoch\ttrain_loss\ttrain_acc\ttest_acc\tlr\n");
    for e in &m.epochs {
        writeln!(s, "{}\t{:.9}\t{:.6}\t{:.6}\t{:.9}", e.epoch, e.train_loss, e.train_acc, e.test_acc, e.lr).unwrap();
    }
    s
}

pub fn summary_text(m: &RunMetrics, seed: u64, config: &[(String, String)]) -> String {
    let mut s = String::new();
    writeln!(s, "best_acc = {:.6}", m.best_test_acc).unwrap();
    writeln!(s, "best_epoch = {}", m.best_epoch).unwrap();
    writeln!(s, "seed = {seed}").unwrap();
    writeln!(s, "config_hash = {}", config_hash(config)).unwrap();
    for (k, v) in config {
        writeln!(s, "config.{k} = {v}").unwrap();
    }
    s
}

/// UTC `YYYYMMDDTHHMMSS` for the current time.
pub fn timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S").to_string()
}

/// Writes `<run>.tsv` and `<run>.summary` into `dir`.
pub fn write_metrics(
    dir: &Path,
    run: &str,
    m: &RunMetrics,
    seed: u64,
    config: &[(String, String)],
) -> Result<(PathBuf, PathBuf), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let tsv = dir.join(format!("{run}.tsv"));
    let summary = dir.join(format!("{run}.summary"));
    fs::write(&tsv, metrics_tsv(m)).map_err(|e| Error::Io(format!("{}: {e}", tsv.display())))?;
    fs::write(&summary, summary_text(m, seed, config)).map_err(|e| Error::Io(format!("{}: {e}", summary.display())))?;
    Ok((tsv, summary))
}
