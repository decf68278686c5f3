//! The `mdgait` command line: `synth`, `preprocess`, `train`, `eval`,
//! `render` and `info`.
//!
//! Run settings come from defaults, then an optional flat `key = value`
//! config file, then repeatable `--set key=value` overrides, in that order.
//! `MDGAIT_THREADS` caps the worker pool; `--deterministic` forces one thread.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::autodiff::checkpoint_io;
use crate::dataset::{build_dataset, decode_frame_cache, discover, Dataset};
use crate::model::{AdsVitModel, ModelConfig, StreamMode};
use crate::radar_synth::{decode_raw, SynthPlan};
use crate::render::write_pgm;
use crate::tfr::{cvd_db, Matrix, PreprocessConfig};
use crate::train::{self, FrameTask, TrainConfig};
use crate::vit::ViTConfig;
use crate::Error;

pub const THREADS_ENV: &str = "MDGAIT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "mdgait", version, about = "Radar micro-Doppler gait recognition")]
pub struct Cli {
    /// Single worker thread; repeated runs give bitwise-identical outputs.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize a labeled raw-signal dataset.
    Synth(SynthArgs),
    /// Build the spectrogram cache and print the frame census.
    Preprocess(PreprocessArgs),
    /// Train a model and write checkpoints and metrics.
    Train(TrainArgs),
    /// Accuracy and confusion matrix of a checkpoint.
    Eval(EvalArgs),
    /// Export spectrogram and CVD frames as PGM images.
    Render(RenderArgs),
    /// Describe a file or dataset directory, or list the settings.
    Info(InfoArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub subjects: u32,
    /// Sequences per subject and session.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub sequences_per_subject: u32,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub sessions: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds per sequence.
    #[arg(long, default_value_t = 30.0)]
    pub duration: f64,
    /// Per-sample complex noise standard deviation.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write into a non-empty directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::tfr::FRAME_STRIDE)]
    pub stride: usize,
    #[arg(long, default_value_t = crate::tfr::HOP)]
    pub hop: usize,
    /// Seed of the train/test split reported in the census.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SettingsArgs {
    /// Flat `key = value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Shorthand for `--set seed=S`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CacheArgs {
    /// Spectrogram cache directory (default: `<data>/cache`).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Recompute spectrograms without reading or writing the cache.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[command(flatten)]
    pub cache: CacheArgs,
    /// Metrics file stem (default `run_<UTC timestamp>`).
    #[arg(long)]
    pub run_name: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to `config.txt` next to the checkpoint when present.
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[command(flatten)]
    pub cache: CacheArgs,
    /// test, train or all.
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// A raw `.mdrs` sequence or a cached `.mdtf` spectrogram.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Frame to export; `--all` exports every frame.
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    #[arg(long)]
    pub all: bool,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    pub path: Option<PathBuf>,
}

/// Every effective run setting.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub vit: ViTConfig,
    pub train: TrainConfig,
    pub preprocess: PreprocessConfig,
    pub stream: StreamMode,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            vit: ViTConfig::default(),
            train: TrainConfig::default(),
            preprocess: PreprocessConfig::default(),
            stream: StreamMode::Dual,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value.parse().map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

impl Settings {
    /// Keys accepted by [`Settings::set`]; `preset` replaces all model keys.
    pub const KEYS: &'static [&'static str] = &[
        "preset",
        "image_size",
        "patch_size",
        "hidden_dim",
        "depth",
        "heads",
        "mlp_dim",
        "feature_dim",
        "lr_initial",
        "momentum",
        "weight_decay",
        "batch_size",
        "epochs",
        "warmup_fraction",
        "seed",
        "decimation",
        "hop",
        "stride",
        "stream",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let v = value.trim();
        match key.trim() {
            "preset" => {
                self.vit = match v {
                    "base" | "default" => ViTConfig::default(),
                    "desk" => ViTConfig::desk(),
                    "toy" => ViTConfig::toy(),
                    _ => return Err(Error::Config(format!("unknown preset '{v}' (base, desk, toy)"))),
                }
            }
            k @ "image_size" => self.vit.image_size = parse(k, v)?,
            k @ "patch_size" => self.vit.patch_size = parse(k, v)?,
            k @ "hidden_dim" => self.vit.hidden_dim = parse(k, v)?,
            k @ "depth" => self.vit.depth = parse(k, v)?,
            k @ "heads" => self.vit.heads = parse(k, v)?,
            k @ "mlp_dim" => self.vit.mlp_dim = parse(k, v)?,
            k @ "feature_dim" => self.vit.feature_dim = parse(k, v)?,
            k @ "lr_initial" => self.train.lr_initial = parse(k, v)?,
            k @ "momentum" => self.train.momentum = parse(k, v)?,
            k @ "weight_decay" => self.train.weight_decay = parse(k, v)?,
            k @ "batch_size" => self.train.batch_size = parse(k, v)?,
            k @ "epochs" => self.train.epochs = parse(k, v)?,
            k @ "warmup_fraction" => self.train.warmup_fraction = parse(k, v)?,
            k @ "seed" => self.train.seed = parse(k, v)?,
            k @ "decimation" => self.preprocess.decimation = parse(k, v)?,
            k @ "hop" => self.preprocess.hop = parse(k, v)?,
            k @ "stride" => self.preprocess.stride = parse(k, v)?,
            "stream" => {
                self.stream = StreamMode::parse(v)
                    .ok_or_else(|| Error::Config(format!("unknown stream '{v}' (dual, spectrogram, cvd)")))?
            }
            other => return Err(Error::Config(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), Error> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{line}'", n + 1)))?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn apply_override(&mut self, kv: &str) -> Result<(), Error> {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        self.set(k, v)
    }

    /// Defaults, then `config`, then `args.set`, then `args.seed`.
    pub fn resolve(args: &SettingsArgs, fallback_config: Option<&Path>) -> Result<Self, Error> {
        let mut s = Self::default();
        if let Some(path) = args.config.as_deref().or(fallback_config) {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            s.apply_text(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        }
        for kv in &args.set {
            s.apply_override(kv)?;
        }
        if let Some(seed) = args.seed {
            s.train.seed = seed;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.vit.validate().map_err(Error::Config)?;
        self.train.validate()?;
        self.preprocess.validate()?;
        Ok(())
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        let v = &self.vit;
        let p = &self.preprocess;
        let mut out: Vec<(String, String)> = [
            ("image_size", v.image_size),
            ("patch_size", v.patch_size),
            ("hidden_dim", v.hidden_dim),
            ("depth", v.depth),
            ("heads", v.heads),
            ("mlp_dim", v.mlp_dim),
            ("feature_dim", v.feature_dim),
        ]
        .iter()
        .map(|(k, x)| (k.to_string(), x.to_string()))
        .collect();
        out.extend(self.train.entries().into_iter().map(|(k, x)| (k.to_string(), x)));
        out.extend([
            ("decimation".to_string(), p.decimation.to_string()),
            ("hop".to_string(), p.hop.to_string()),
            ("stride".to_string(), p.stride.to_string()),
            ("stream".to_string(), self.stream.name().to_string()),
        ]);
        out
    }

    pub fn to_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn model_config(&self, num_classes: usize) -> ModelConfig {
        ModelConfig { vit: self.vit.clone(), num_classes }
    }
}

/// Worker count from `MDGAIT_THREADS` (unset or invalid: all cores).
pub fn thread_count(deterministic: bool) -> usize {
    if deterministic {
        return 1;
    }
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n.min(cores),
        _ => cores,
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn out_line(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<(), Error> {
    writeln!(out, "{line}").map_err(|e| Error::Io(e.to_string()))
}

macro_rules! say {
    ($out:expr, $($t:tt)*) => { out_line($out, format_args!($($t)*)) };
}

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out`.
pub fn run<I, S>(args: I, out: &mut (dyn Write + Send)) -> Result<(), Error>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    execute(cli, out)
}

pub fn execute(cli: Cli, out: &mut (dyn Write + Send)) -> Result<(), Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cli.deterministic))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Preprocess(a) => cmd_preprocess(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Render(a) => cmd_render(&a, out),
        Command::Info(a) => cmd_info(&a, out),
    })
}

/// Entry point for the binary: single-line diagnostics on stderr, exit code
/// 2 for usage errors and 1 for everything else.
pub fn main_exit() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error"));
            return 2;
        }
    };
    let mut stdout = std::io::stdout();
    match execute(cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dir_is_nonempty(dir: &Path) -> bool {
    fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(false)
}

pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<(), Error> {
    if dir_is_nonempty(&a.out) && !a.force {
        return Err(Error::Config(format!("{} is not empty (use --force to write into it)", a.out.display())));
    }
    let plan = SynthPlan {
        subjects: a.subjects,
        sequences_per_session: a.sequences_per_subject,
        sessions: a.sessions,
        duration_s: a.duration,
        noise_sigma: a.noise,
        seed: a.seed,
        ..SynthPlan::default()
    };
    let paths = plan.write(&a.out)?;
    say!(out, "wrote {} sequences to {}", paths.len(), a.out.display())
}

fn dataset_for(
    data: &Path,
    settings: &Settings,
    cache: &CacheArgs,
) -> Result<Dataset, Error> {
    if !data.is_dir() {
        return Err(Error::Io(format!("{}: not a directory", data.display())));
    }
    let cache_root = if cache.no_cache { None } else { Some(cache.cache.clone().unwrap_or_else(|| data.join("cache"))) };
    build_dataset(data, &settings.preprocess, settings.train.seed, cache_root.as_deref())
}

pub fn cmd_preprocess(a: &PreprocessArgs, out: &mut dyn Write) -> Result<(), Error> {
    if !a.input.is_dir() {
        return Err(Error::Io(format!("{}: input directory not found", a.input.display())));
    }
    let cfg = PreprocessConfig { stride: a.stride, hop: a.hop, ..PreprocessConfig::default() };
    cfg.validate()?;
    let ds = build_dataset(&a.input, &cfg, a.seed, Some(&a.out))?;
    say!(out, "sequence\tcolumns\tframes")?;
    for s in &ds.sequences {
        let k = s.key;
        say!(out, "{}/{}/{}\t{}\t{}", k.subject_id, k.session, k.seq, s.spectrogram.cols(), s.frames(&cfg))?;
    }
    say!(out, "subject\tsequences\tframes\ttrain_frames\ttest_frames")?;
    let mut total = 0;
    for row in ds.census() {
        total += row.frames;
        say!(out, "{}\t{}\t{}\t{}\t{}", row.subject_id, row.sequences, row.frames, row.train_frames, row.test_frames)?;
    }
    say!(out, "total_frames\t{total}")?;
    say!(out, "cache\t{}", a.out.display())
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), Error> {
    let settings = Settings::resolve(&a.settings, None)?;
    let ds = dataset_for(&a.data, &settings, &a.cache)?;
    let model = AdsVitModel::<f32>::new(settings.model_config(ds.num_classes()), settings.train.seed)?;
    say!(
        out,
        "train_frames {} test_frames {} classes {} parameters {}",
        ds.train.len(),
        ds.test.len(),
        ds.num_classes(),
        model.config.param_count()
    )?;
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    let config_path = a.out.join("config.txt");
    fs::write(&config_path, settings.to_text()).map_err(|e| io_err(&config_path, e))?;

    let mut task = FrameTask::new(model, &ds, settings.stream)?;
    let best_path = a.out.join("best.mdck");
    let mut best_acc = f64::NEG_INFINITY;
    let mut pending: Option<Error> = None;
    let mut lines = Vec::new();
    let metrics = train::train(&mut task, &settings.train, |e, t| {
        lines.push(format!(
            "epoch {}\tloss {:.6}\ttrain_acc {:.4}\ttest_acc {:.4}\tlr {:.6}",
            e.epoch, e.train_loss, e.train_acc, e.test_acc, e.lr
        ));
        if e.test_acc > best_acc {
            best_acc = e.test_acc;
            if let Err(err) = checkpoint_io::save(&t.model.store, &best_path) {
                pending.get_or_insert(err.into());
            }
        }
    })?;
    if let Some(e) = pending {
        return Err(e);
    }
    for l in &lines {
        say!(out, "{l}")?;
    }
    task.model.save(&a.out.join("last.mdck"))?;
    let run = a.run_name.clone().unwrap_or_else(|| format!("run_{}", train::timestamp()));
    let (tsv, summary) = train::write_metrics(&a.out, &run, &metrics, settings.train.seed, &settings.entries())?;
    say!(out, "best_acc {:.6}\tbest_epoch {}", metrics.best_test_acc, metrics.best_epoch)?;
    say!(out, "metrics {}\nsummary {}", tsv.display(), summary.display())?;
    say!(out, "wall_time_s {:.1}", metrics.wall_time_s)
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), Error> {
    let sibling = a.checkpoint.with_file_name("config.txt");
    let fallback = sibling.is_file().then_some(sibling.as_path());
    let settings = Settings::resolve(&a.settings, fallback)?;
    let ds = dataset_for(&a.data, &settings, &a.cache)?;
    let model = AdsVitModel::load(settings.model_config(ds.num_classes()), &a.checkpoint)?;
    let refs: Vec<_> = match a.split.as_str() {
        "test" => ds.test.clone(),
        "train" => ds.train.clone(),
        "all" => ds.train.iter().chain(&ds.test).copied().collect(),
        s => return Err(Error::Config(format!("unknown split '{s}' (test, train, all)"))),
    };
    let ev = train::evaluate(&model, &ds, &refs, settings.stream)?;
    say!(out, "frames {}", refs.len())?;
    say!(out, "accuracy {:.6}", ev.accuracy)?;
    say!(out, "confusion (rows: true subject, columns: predicted)")?;
    let header: Vec<String> = ds.classes.iter().map(|c| c.to_string()).collect();
    say!(out, "subject\t{}", header.join("\t"))?;
    for (i, row) in ev.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        say!(out, "{}\t{}", ds.classes[i], cells.join("\t"))?;
    }
    Ok(())
}

fn read_spectrogram(path: &Path, cfg: &PreprocessConfig) -> Result<Matrix, Error> {
    let buf = fs::read(path).map_err(|e| io_err(path, e))?;
    match buf.get(..4) {
        Some(b"MDRS") => {
            let raw = decode_raw(&buf).map_err(|e| io_err(path, e))?;
            Ok(cfg.spectrogram(&raw)?.data)
        }
        Some(b"MDTF") => {
            let (rows, cols, _, data) = decode_frame_cache(&buf).map_err(|e| io_err(path, e))?;
            Ok(Matrix::new(rows, cols, data.into_iter().map(f64::from).collect()))
        }
        _ => Err(io_err(path, "not an MDRS or MDTF file")),
    }
}

pub fn cmd_render(a: &RenderArgs, out: &mut dyn Write) -> Result<(), Error> {
    let settings = Settings::resolve(&a.settings, None)?;
    let cfg = &settings.preprocess;
    let spec = read_spectrogram(&a.input, cfg)?;
    let frames = crate::tfr::frame_count(spec.cols(), cfg.frame_size, cfg.stride);
    if frames == 0 {
        return Err(Error::Config(format!("{}: shorter than one frame", a.input.display())));
    }
    let which: Vec<usize> = if a.all {
        (0..frames).collect()
    } else if a.frame < frames {
        vec![a.frame]
    } else {
        return Err(Error::Config(format!("frame {} out of range ({frames} frames)", a.frame)));
    };
    let full = a.out.join("spectrogram.pgm");
    write_pgm(&spec, &full)?;
    say!(out, "{}", full.display())?;
    let plan = crate::tfr::CvdPlan::new();
    for i in which {
        let frame = spec.columns(i * cfg.stride, cfg.frame_size);
        let c = plan.apply(&frame)?;
        let sp = a.out.join(format!("frame_{i:04}_spectrogram.pgm"));
        let cp = a.out.join(format!("frame_{i:04}_cvd.pgm"));
        write_pgm(&frame, &sp)?;
        write_pgm(&cvd_db(&c), &cp)?;
        say!(out, "{}\n{}", sp.display(), cp.display())?;
    }
    Ok(())
}

pub fn cmd_info(a: &InfoArgs, out: &mut dyn Write) -> Result<(), Error> {
    let Some(path) = &a.path else {
        say!(out, "mdgait {}", env!("CARGO_PKG_VERSION"))?;
        say!(out, "threads {}", thread_count(false))?;
        for (k, v) in Settings::default().entries() {
            say!(out, "{k} = {v}")?;
        }
        return Ok(());
    };
    if path.is_dir() {
        let files = discover(path)?;
        let mut subjects: Vec<u32> = files.iter().map(|(k, _)| k.subject_id).collect();
        subjects.dedup();
        say!(out, "dataset {}", path.display())?;
        say!(out, "sequences {}", files.len())?;
        say!(out, "subjects {}", subjects.len())?;
        for s in subjects {
            say!(out, "subject {s}\tsequences {}", files.iter().filter(|(k, _)| k.subject_id == s).count())?;
        }
        return Ok(());
    }
    let buf = fs::read(path).map_err(|e| io_err(path, e))?;
    match buf.get(..4) {
        Some(b"MDRS") => {
            let raw = decode_raw(&buf).map_err(|e| io_err(path, e))?;
            let cfg = PreprocessConfig::default();
            let (cols, frames) = cfg.census(raw.len());
            say!(out, "format MDRS")?;
            say!(out, "samples {}", raw.len())?;
            say!(out, "sample_rate_hz {}", raw.sample_rate_hz())?;
            say!(out, "duration_s {:.6}", raw.duration_s())?;
            say!(out, "subject {}", raw.subject_id().map_or("none".to_string(), |s| s.to_string()))?;
            say!(out, "stft_columns {cols}\tframes {frames}")
        }
        Some(b"MDCK") => {
            let entries = checkpoint_io::decode(&buf).map_err(|e| io_err(path, e))?;
            say!(out, "format MDCK")?;
            say!(out, "tensors {}", entries.len())?;
            say!(out, "scalars {}", entries.iter().map(|(_, t)| t.numel()).sum::<usize>())?;
            for (name, t) in &entries {
                say!(out, "{name}\t{:?}", t.shape())?;
            }
            Ok(())
        }
        Some(b"MDTF") => {
            let (rows, cols, channels, _) = decode_frame_cache(&buf).map_err(|e| io_err(path, e))?;
            say!(out, "format MDTF")?;
            say!(out, "rows {rows}\tcols {cols}\tchannels {channels}")
        }
        _ => Err(io_err(path, "unrecognized file format")),
    }
}
