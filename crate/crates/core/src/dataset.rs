//! Dataset discovery, sequence-level train/test split and the frame cache.
//!
//! Sequences are stored as `<root>/subject_<id>/session_<s>/seq_<k>.mdrs`.
//! Each sequence is reduced to its trimmed dB spectrogram once; frames and
//! their CVDs are cut from it on demand, so overlapping frames share storage.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::binio::{put_f32s, ByteReader, FormatError};
use crate::radar_synth::{load_raw, RawSignal, SequenceKey};
use crate::seed;
use crate::tfr::{frame_count, CvdPlan, FrameSample, Matrix, PreprocessConfig, Spectrogram};
use crate::Error;

const CACHE_MAGIC: &[u8; 4] = b"MDTF";
const CACHE_VERSION: u32 = 1;

/// A preprocessed walk.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub key: SequenceKey,
    pub label: usize,
    /// Trimmed dB spectrogram, 115 rows.
    pub spectrogram: Matrix,
}

impl SequenceRecord {
    pub fn frames(&self, cfg: &PreprocessConfig) -> usize {
        frame_count(self.spectrogram.cols(), cfg.frame_size, cfg.stride)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameRef {
    pub sequence: usize,
    pub frame_index: usize,
}

/// Per-subject frame census line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusRow {
    pub subject_id: u32,
    pub sequences: usize,
    pub frames: usize,
    pub train_frames: usize,
    pub test_frames: usize,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub config: PreprocessConfig,
    /// Subject id of each class index.
    pub classes: Vec<u32>,
    pub sequences: Vec<SequenceRecord>,
    pub train_sequences: Vec<usize>,
    pub test_sequences: Vec<usize>,
    pub train: Vec<FrameRef>,
    pub test: Vec<FrameRef>,
}

impl Dataset {
    /// Splits per subject and per sequence: half of each subject's sequences
    /// (rounded down) go to training, chosen by a shuffle seeded from
    /// `split_seed`. All frames of a sequence stay on one side.
    pub fn from_sequences(
        config: PreprocessConfig,
        mut sequences: Vec<(SequenceKey, Matrix)>,
        split_seed: u64,
    ) -> Result<Self, Error> {
        config.validate()?;
        sequences.sort_by_key(|(k, _)| *k);
        let mut classes: Vec<u32> = sequences.iter().map(|(k, _)| k.subject_id).collect();
        classes.dedup();
        if classes.is_empty() {
            return Err(Error::Config("dataset has no sequences".into()));
        }
        let sequences: Vec<SequenceRecord> = sequences
            .into_iter()
            .map(|(key, spectrogram)| {
                let label = classes.binary_search(&key.subject_id).expect("class present");
                SequenceRecord { key, label, spectrogram }
            })
            .collect();

        let mut train_sequences = Vec::new();
        let mut test_sequences = Vec::new();
        for &subject in &classes {
            let mut ids: Vec<usize> =
                (0..sequences.len()).filter(|&i| sequences[i].key.subject_id == subject).collect();
            if ids.len() < 2 {
                return Err(Error::Config(format!(
                    "subject {subject} has {} sequence(s); at least 2 are needed for a train/test split",
                    ids.len()
                )));
            }
            ids.shuffle(&mut seed::rng(split_seed, "split", &[u64::from(subject)]));
            let n_train = ids.len() / 2;
            let (tr, te) = ids.split_at(n_train);
            train_sequences.extend_from_slice(tr);
            test_sequences.extend_from_slice(te);
        }
        train_sequences.sort_unstable();
        test_sequences.sort_unstable();

        let refs = |ids: &[usize]| -> Vec<FrameRef> {
            ids.iter()
                .flat_map(|&s| {
                    (0..sequences[s].frames(&config)).map(move |frame_index| FrameRef { sequence: s, frame_index })
                })
                .collect()
        };
        let train = refs(&train_sequences);
        let test = refs(&test_sequences);
        Ok(Self { config, classes, sequences, train_sequences, test_sequences, train, test })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Crops frame `r` and computes its CVD.
    pub fn frame(&self, r: FrameRef) -> FrameSample {
        self.frame_with(r, &CvdPlan::new())
    }

    pub fn frame_with(&self, r: FrameRef, plan: &CvdPlan) -> FrameSample {
        let seq = &self.sequences[r.sequence];
        let spec = seq.spectrogram.columns(r.frame_index * self.config.stride, self.config.frame_size);
        let cvd = plan.apply(&spec).expect("cropped frames are 115×115 and finite");
        FrameSample {
            spec,
            cvd,
            label: seq.label,
            subject_id: seq.key.subject_id,
            sequence_id: r.sequence,
            frame_index: r.frame_index,
        }
    }

    pub fn materialize(&self, refs: &[FrameRef]) -> Vec<FrameSample> {
        let plan = CvdPlan::new();
        refs.iter().map(|&r| self.frame_with(r, &plan)).collect()
    }

    pub fn census(&self) -> Vec<CensusRow> {
        self.classes
            .iter()
            .map(|&subject_id| {
                let count = |ids: &[usize]| -> usize {
                    ids.iter()
                        .filter(|&&s| self.sequences[s].key.subject_id == subject_id)
                        .map(|&s| self.sequences[s].frames(&self.config))
                        .sum()
                };
                let train_frames = count(&self.train_sequences);
                let test_frames = count(&self.test_sequences);
                CensusRow {
                    subject_id,
                    sequences: self.sequences.iter().filter(|s| s.key.subject_id == subject_id).count(),
                    frames: train_frames + test_frames,
                    train_frames,
                    test_frames,
                }
            })
            .collect()
    }
}

/// Sequence files under `root`, sorted by key.
pub fn discover(root: &Path) -> Result<Vec<(SequenceKey, PathBuf)>, Error> {
    fn numbered(name: &str, prefix: &str, suffix: &str) -> Option<u32> {
        name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
    }
    fn entries(dir: &Path) -> Result<Vec<(String, PathBuf)>, Error> {
        let mut out = Vec::new();
        for e in fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))? {
            let e = e.map_err(|e| Error::Io(e.to_string()))?;
            out.push((e.file_name().to_string_lossy().into_owned(), e.path()));
        }
        Ok(out)
    }
    if !root.is_dir() {
        return Err(Error::Io(format!("dataset root {} is not a directory", root.display())));
    }
    let mut found = Vec::new();
    for (name, subject_dir) in entries(root)? {
        let Some(subject_id) = numbered(&name, "subject_", "") else { continue };
        if !subject_dir.is_dir() {
            continue;
        }
        for (name, session_dir) in entries(&subject_dir)? {
            let Some(session) = numbered(&name, "session_", "") else { continue };
            if !session_dir.is_dir() {
                continue;
            }
            for (name, path) in entries(&session_dir)? {
                if let Some(seq) = numbered(&name, "seq_", ".mdrs") {
                    found.push((SequenceKey { subject_id, session, seq }, path));
                }
            }
        }
    }
    found.sort();
    Ok(found)
}

fn load_labeled(key: SequenceKey, path: &Path) -> Result<RawSignal, Error> {
    let raw = load_raw(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if let Some(id) = raw.subject_id() {
        if id != key.subject_id {
            return Err(Error::Config(format!(
                "{} is labeled subject {id} but stored under subject_{}",
                path.display(),
                key.subject_id
            )));
        }
    }
    Ok(raw)
}

/// Cache location of one sequence's trimmed spectrogram.
pub fn cache_path(cache_root: &Path, cfg: &PreprocessConfig, key: SequenceKey) -> PathBuf {
    cache_root
        .join(format!("d{}_w{}_h{}", cfg.decimation, cfg.window_len, cfg.hop))
        .join(format!("subject_{}", key.subject_id))
        .join(format!("session_{}", key.session))
        .join(format!("seq_{}.mdtf", key.seq))
}

/// `MDTF` layout: magic, `u32` version, `u32` rows, `u32` cols, `u32`
/// channels, then `rows × cols × channels` f32 values, row-major with the
/// channel index innermost.
pub fn encode_frame_cache(m: &Matrix, channels: usize) -> Vec<u8> {
    assert_eq!(m.cols() % channels, 0);
    let mut out = Vec::with_capacity(20 + m.data().len() * 4);
    out.extend_from_slice(CACHE_MAGIC);
    for v in [CACHE_VERSION, m.rows() as u32, (m.cols() / channels) as u32, channels as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    put_f32s(&mut out, m.data().iter().map(|&v| v as f32)).expect("vec write");
    out
}

/// Returns `(rows, cols, channels, data)`.
pub fn decode_frame_cache(buf: &[u8]) -> Result<(usize, usize, usize, Vec<f32>), FormatError> {
    let mut r = ByteReader::new(buf);
    r.magic(CACHE_MAGIC)?;
    let version = r.u32("version")?;
    if version != CACHE_VERSION {
        return Err(FormatError::Version { format: "MDTF", found: version, expected: CACHE_VERSION });
    }
    let at = r.offset();
    let rows = r.u32("rows")? as usize;
    let cols = r.u32("cols")? as usize;
    let channels = r.u32("channels")? as usize;
    let n = rows.checked_mul(cols).and_then(|v| v.checked_mul(channels)).filter(|&n| n > 0);
    let Some(n) = n else {
        return Err(FormatError::Malformed { what: format!("invalid dimensions {rows}×{cols}×{channels}"), offset: at });
    };
    let data = r.f32s(n, "frame data")?;
    r.expect_end()?;
    Ok((rows, cols, channels, data))
}

fn read_cached(path: &Path) -> Result<Option<Matrix>, Error> {
    let Ok(buf) = fs::read(path) else { return Ok(None) };
    let (rows, cols, channels, data) =
        decode_frame_cache(&buf).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if channels != 1 {
        return Err(Error::Config(format!("{}: expected 1 channel, found {channels}", path.display())));
    }
    Ok(Some(Matrix::new(rows, cols, data.into_iter().map(f64::from).collect())))
}

/// Trimmed spectrogram for one sequence file, via the cache when given.
pub fn sequence_spectrogram(
    key: SequenceKey,
    path: &Path,
    cfg: &PreprocessConfig,
    cache_root: Option<&Path>,
) -> Result<Matrix, Error> {
    let cached = cache_root.map(|c| cache_path(c, cfg, key));
    if let Some(cp) = &cached {
        if let Some(m) = read_cached(cp)? {
            return Ok(m);
        }
    }
    let raw = load_labeled(key, path)?;
    let Spectrogram { data, .. } = cfg.spectrogram(&raw)?;
    // the cache holds f32; round here too so cached and fresh runs agree
    let data = data.map(|x| f64::from(x as f32));
    if let Some(cp) = &cached {
        fs::create_dir_all(cp.parent().expect("has parent")).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(cp, encode_frame_cache(&data, 1)).map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(data)
}

/// Discovers, preprocesses (in parallel, merged in key order) and splits
/// the dataset at `root`.
pub fn build_dataset(
    root: &Path,
    cfg: &PreprocessConfig,
    split_seed: u64,
    cache_root: Option<&Path>,
) -> Result<Dataset, Error> {
    cfg.validate()?;
    let files = discover(root)?;
    let sequences = files
        .par_iter()
        .map(|(key, path)| Ok((*key, sequence_spectrogram(*key, path, cfg, cache_root)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    Dataset::from_sequences(cfg.clone(), sequences, split_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(subject_id: u32, session: u32, seq: u32) -> SequenceKey {
        SequenceKey { subject_id, session, seq }
    }

    fn toy_sequences(subjects: u32, per_subject: u32, cols: usize) -> Vec<(SequenceKey, Matrix)> {
        let mut out = Vec::new();
        for s in 0..subjects {
            for q in 0..per_subject {
                out.push((key(s * 3 + 1, q % 2, q), Matrix::from_fn(115, cols, |r, c| (r + c + q as usize) as f64)));
            }
        }
        out
    }

    #[test]
    fn split_is_per_sequence_and_balanced() {
        let ds = Dataset::from_sequences(PreprocessConfig::default(), toy_sequences(3, 10, 135), 4).unwrap();
        assert_eq!(ds.classes, vec![1, 4, 7]);
        for label in 0..3 {
            let n = |ids: &[usize]| ids.iter().filter(|&&i| ds.sequences[i].label == label).count();
            assert_eq!(n(&ds.train_sequences), 5);
            assert_eq!(n(&ds.test_sequences), 5);
        }
        let train_seqs: std::collections::HashSet<_> = ds.train.iter().map(|r| r.sequence).collect();
        assert!(ds.test.iter().all(|r| !train_seqs.contains(&r.sequence)));
        assert_eq!(ds.train.len() + ds.test.len(), 30 * 3);

        let again = Dataset::from_sequences(PreprocessConfig::default(), toy_sequences(3, 10, 135), 4).unwrap();
        assert_eq!(ds.train, again.train);
        assert_eq!(ds.test, again.test);
    }

    #[test]
    fn subject_with_one_sequence_is_rejected() {
        let mut seqs = toy_sequences(2, 3, 120);
        seqs.push((key(99, 0, 0), Matrix::new(115, 120, vec![0.0; 115 * 120])));
        let err = Dataset::from_sequences(PreprocessConfig::default(), seqs, 0).unwrap_err();
        assert!(err.to_string().contains("subject 99"), "{err}");
    }

    #[test]
    fn frames_index_the_parent_spectrogram() {
        let ds = Dataset::from_sequences(PreprocessConfig::default(), toy_sequences(1, 2, 140), 0).unwrap();
        let r = ds.train[2];
        let f = ds.frame(r);
        let parent = &ds.sequences[r.sequence].spectrogram;
        assert_eq!(f.spec.get(5, 7), parent.get(5, 20 + 7));
        assert_eq!(f.cvd.data.rows(), 115);
    }

    #[test]
    fn cache_codec() {
        let m = Matrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64 * 0.5);
        let bytes = encode_frame_cache(&m, 1);
        let (rows, cols, ch, data) = decode_frame_cache(&bytes).unwrap();
        assert_eq!((rows, cols, ch), (3, 4, 1));
        assert_eq!(data[5], 2.5);
        assert!(decode_frame_cache(&bytes[..bytes.len() - 1]).is_err());
    }
}
