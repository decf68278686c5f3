mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::{field, files, mdgait, p};
use mdgait::dataset::encode_frame_cache;
use mdgait::tfr::{Matrix, PreprocessConfig};

const TOY: &[&str] = &["--set", "preset=toy", "--set", "epochs=1", "--set", "batch_size=16", "--set", "seed=3"];

fn synth_small(dir: &Path) -> String {
    mdgait(&[
        "synth", "--subjects", "8", "--sequences-per-subject", "4", "--duration", "1.0", "--seed", "5", "--out", p(dir),
    ])
    .unwrap()
}

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: &[String]) -> Result<String, String> {
    mdgait(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn synth_layout_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = synth_small(&a);
    assert!(out.contains("wrote 64 sequences"), "{out}");
    synth_small(&b);
    let fa = files(&a);
    assert_eq!(fa.len(), 64);
    assert!(fa.iter().all(|f| f.extension().unwrap() == "mdrs"));
    assert!(a.join("subject_7/session_1/seq_3.mdrs").is_file());
    for (x, y) in fa.iter().zip(files(&b)) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }

    let small = ["synth", "--subjects", "1", "--sequences-per-subject", "1", "--duration", "1", "--out", p(&a)];
    let err = mdgait(&small).unwrap_err();
    assert!(err.contains("--force"), "{err}");
    mdgait(&with(&small, &["--force"]).iter().map(String::as_str).collect::<Vec<_>>()).unwrap();

    let err = mdgait(&["synth", "--subjects", "0", "--sequences-per-subject", "1", "--out", p(&b)]).unwrap_err();
    assert!(err.contains("subjects"), "{err}");
}

#[test]
fn preprocess_census_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth_small(&data);
    let samples = 125_000; // one second of raw signal
    let (cols, frames) = PreprocessConfig::default().census(samples);
    assert_eq!((cols, frames), (141, 3));

    let out = mdgait(&["preprocess", "--in", p(&data), "--out", p(&tmp.path().join("c"))]).unwrap();
    let seq_lines: Vec<&str> = out.lines().filter(|l| l.matches('/').count() == 2 && !l.starts_with("cache")).collect();
    assert_eq!(seq_lines.len(), 64, "{out}");
    assert!(seq_lines.iter().all(|l| l.ends_with(&format!("\t{cols}\t{frames}"))), "{out}");
    assert_eq!(field(&out, "total_frames"), "192");
    let census: Vec<&str> = out.lines().skip_while(|l| !l.starts_with("subject\t")).skip(1).take(8).collect();
    for row in census {
        // 8 sequences, half of them held out
        let cells: Vec<&str> = row.split('\t').collect();
        assert_eq!(&cells[1..], &["8", "24", "12", "12"], "{row}");
    }
    assert_eq!(files(&tmp.path().join("c")).len(), 64);

    let sparse = mdgait(&["preprocess", "--in", p(&data), "--out", p(&tmp.path().join("d")), "--stride", "115"]).unwrap();
    let n: usize = field(&sparse, "total_frames").parse().unwrap();
    assert!(n <= 192 / 2);
    assert_eq!(n, 64);

    let err = mdgait(&["preprocess", "--in", p(&tmp.path().join("missing")), "--out", p(tmp.path())]).unwrap_err();
    assert!(err.contains("missing") && err.contains("not found"), "{err}");
}

#[test]
fn train_eval_render_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run_dir = tmp.path().join("run");
    synth_small(&data);

    let train = with(&["train", "--data", p(&data), "--out", p(&run_dir), "--run-name", "r"], TOY);
    let out = run(&train).unwrap();
    assert_eq!(out.lines().filter(|l| l.starts_with("epoch ")).count(), 1, "{out}");
    let best: f64 = field(&out, "best_acc").parse().unwrap();
    for f in ["config.txt", "best.mdck", "last.mdck", "r.tsv", "r.summary"] {
        assert!(run_dir.join(f).is_file(), "{f} missing");
    }
    let summary = fs::read_to_string(run_dir.join("r.summary")).unwrap();
    assert!(summary.contains("config.hidden_dim = 16"));
    assert!(data.join("cache").is_dir());

    // config.txt next to the checkpoint supplies the model shape
    let ckpt = run_dir.join("best.mdck");
    let ev = mdgait(&["eval", "--data", p(&data), "--checkpoint", p(&ckpt)]).unwrap();
    assert_eq!(field(&ev, "frames"), "96");
    let acc: f64 = field(&ev, "accuracy").parse().unwrap();
    assert!((acc - best).abs() < 1e-6, "{acc} vs {best}");
    let rows: Vec<&str> = ev.lines().skip_while(|l| !l.starts_with("subject\t")).skip(1).collect();
    assert_eq!(rows.len(), 8);
    let total: usize = rows.iter().flat_map(|r| r.split('\t').skip(1)).map(|c| c.parse::<usize>().unwrap()).sum();
    assert_eq!(total, 96);
    let no_cache = mdgait(&["eval", "--data", p(&data), "--checkpoint", p(&ckpt), "--no-cache"]).unwrap();
    assert_eq!(no_cache, ev);

    // wrong class count for this checkpoint
    let other = tmp.path().join("other");
    mdgait(&["synth", "--subjects", "3", "--sequences-per-subject", "1", "--duration", "1", "--out", p(&other)]).unwrap();
    let err = mdgait(&["eval", "--data", p(&other), "--checkpoint", p(&ckpt)]).unwrap_err();
    assert!(err.contains("classifier"), "{err}");

    let info = mdgait(&["info", p(&ckpt)]).unwrap();
    assert!(info.contains("format MDCK") && info.contains("fusion.q\t[1, 16]"), "{info}");
    let info = mdgait(&["info", p(&data.join("subject_0/session_0/seq_0.mdrs"))]).unwrap();
    assert_eq!(field(&info, "samples"), "125000");
    assert_eq!(field(&info, "subject"), "0");

    let pics = tmp.path().join("pics");
    let seq = data.join("subject_2/session_1/seq_0.mdrs");
    let out = mdgait(&["render", "--in", p(&seq), "--out", p(&pics), "--all"]).unwrap();
    assert_eq!(out.lines().count(), 7);
    let pgm = fs::read(pics.join("frame_0002_cvd.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n115 115\n255\n"));
    assert_eq!(pgm.len(), 15 + 115 * 115);
}

#[test]
fn constant_frame_renders_mid_gray() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("flat.mdtf");
    fs::write(&src, encode_frame_cache(&Matrix::new(115, 115, vec![-40.0; 115 * 115]), 1)).unwrap();
    mdgait(&["render", "--in", p(&src), "--out", p(tmp.path())]).unwrap();
    let pgm = fs::read(tmp.path().join("frame_0000_spectrogram.pgm")).unwrap();
    let header = b"P5\n115 115\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert!(pgm[header.len()..].iter().all(|&b| b == 128));
    let err = mdgait(&["render", "--in", p(&src), "--out", p(tmp.path()), "--frame", "1"]).unwrap_err();
    assert!(err.contains("out of range"), "{err}");
}

#[test]
fn settings_are_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let err = mdgait(&["train", "--data", p(&data), "--out", p(tmp.path()), "--set", "bogus=1"]).unwrap_err();
    assert!(err.contains("unknown setting 'bogus'"), "{err}");
    let err = mdgait(&["train", "--data", p(&data), "--out", p(tmp.path()), "--set", "heads=5"]).unwrap_err();
    assert!(err.contains("heads") || err.contains("divis"), "{err}");

    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# desk run\npreset = desk\n\nepochs = 7  # short\nwrong line\n").unwrap();
    let err = mdgait(&["train", "--data", p(&data), "--out", p(tmp.path()), "--config", p(&cfg)]).unwrap_err();
    assert!(err.contains("line 5"), "{err}");

    let info = mdgait(&["info"]).unwrap();
    assert!(info.contains("hidden_dim = 768") && info.contains("epochs = 500"), "{info}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mdgait");
    let tmp = tempfile::tempdir().unwrap();
    let usage = Command::new(bin)
        .args(["synth", "--subjects", "0", "--sequences-per-subject", "1", "--out", p(tmp.path())])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&usage.stderr).trim_end().lines().count(), 1);

    let failure = Command::new(bin)
        .args(["preprocess", "--in", p(&tmp.path().join("nope")), "--out", p(tmp.path())])
        .output()
        .unwrap();
    assert_eq!(failure.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&failure.stderr);
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error: "));

    let ok = Command::new(bin).args(["info"]).env("MDGAIT_THREADS", "1").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("threads 1"));
}
