#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

/// Runs the CLI in-process; returns stdout or the error text.
pub fn mdgait(args: &[&str]) -> Result<String, String> {
    let mut out = Vec::new();
    let argv = std::iter::once("mdgait").chain(args.iter().copied());
    mdgait::cli::run(argv, &mut out).map_err(|e| e.to_string())?;
    Ok(String::from_utf8(out).unwrap())
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every regular file under `dir`, sorted.
pub fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}

/// Value following `key` on the first line that starts with it.
pub fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|r| r.trim_start_matches(['\t', ' ', '='])))
        .unwrap_or_else(|| panic!("no '{key}' in:\n{text}"))
        .split(['\t', ' '])
        .next()
        .unwrap()
}
pub mod gradcases;
