//! `MDCK` parameter checkpoints.
//!
//! Layout (all integers little-endian): magic `MDCK`, `u32` version (1),
//! `u32` entry count, then per entry: `u16` name length, UTF-8 name,
//! `u8` rank, `rank × u32` dims, `f32` data in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::{ParamStore, Tensor};
use crate::binio::{put_f32s, ByteReader, FormatError};

pub const MAGIC: &[u8; 4] = b"MDCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint format: {0}")]
    Format(#[from] FormatError),
    #[error("checkpoint is missing parameters: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("checkpoint has unknown parameters: {}", .0.join(", "))]
    Unknown(Vec<String>),
    #[error("parameter {name}: checkpoint shape {found:?} does not match model shape {expected:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, found: Vec<usize> },
}

pub fn encode<'a>(entries: impl IntoIterator<Item = (&'a str, &'a Tensor<f32>)>) -> Vec<u8> {
    let entries: Vec<_> = entries.into_iter().collect();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (name, t) in entries {
        let bytes = name.as_bytes();
        out.extend_from_slice(&u16::try_from(bytes.len()).expect("name fits u16").to_le_bytes());
        out.extend_from_slice(bytes);
        out.push(u8::try_from(t.rank()).expect("rank fits u8"));
        for &d in t.shape() {
            out.extend_from_slice(&u32::try_from(d).expect("dim fits u32").to_le_bytes());
        }
        put_f32s(&mut out, t.data().iter().copied()).expect("vec write");
    }
    out
}

pub fn decode(buf: &[u8]) -> Result<Vec<(String, Tensor<f32>)>, FormatError> {
    let mut r = ByteReader::new(buf);
    r.magic(MAGIC)?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(FormatError::Version { format: "MDCK", found: version, expected: VERSION });
    }
    let count = r.u32("entry count")?;
    let mut entries = Vec::with_capacity(count.min(4096) as usize);
    for _ in 0..count {
        let len = r.u16("name length")? as usize;
        let at = r.offset();
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| FormatError::Malformed { what: "parameter name is not UTF-8".into(), offset: at })?
            .to_string();
        let rank = r.u8("rank")? as usize;
        let at = r.offset();
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dimension")? as usize);
        }
        let numel = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        let numel = match numel {
            Some(n) if rank > 0 && n > 0 => n,
            _ => {
                return Err(FormatError::Malformed { what: format!("invalid shape {shape:?} for {name}"), offset: at })
            }
        };
        let data = r.f32s(numel, "tensor data")?;
        let t = Tensor::new(&shape, data).expect("length checked");
        entries.push((name, t));
    }
    r.expect_end()?;
    Ok(entries)
}

pub fn save(store: &ParamStore<f32>, path: &Path) -> Result<(), CheckpointError> {
    let bytes = encode(store.iter());
    let mut f = fs::File::create(path).map_err(FormatError::from)?;
    f.write_all(&bytes).map_err(FormatError::from)?;
    Ok(())
}

/// Overwrites every parameter of `store` from the checkpoint at `path`. The
/// checkpoint must contain exactly the store's names with matching shapes;
/// `store` is left untouched on error.
pub fn load_into(store: &mut ParamStore<f32>, path: &Path) -> Result<(), CheckpointError> {
    let buf = fs::read(path).map_err(FormatError::from)?;
    apply(store, decode(&buf)?)
}

pub fn apply(store: &mut ParamStore<f32>, entries: Vec<(String, Tensor<f32>)>) -> Result<(), CheckpointError> {
    let unknown: Vec<String> =
        entries.iter().filter(|(n, _)| store.id(n).is_none()).map(|(n, _)| n.clone()).collect();
    if !unknown.is_empty() {
        return Err(CheckpointError::Unknown(unknown));
    }
    let missing: Vec<String> = store
        .names()
        .iter()
        .filter(|n| !entries.iter().any(|(e, _)| e == *n))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(CheckpointError::Missing(missing));
    }
    for (name, t) in &entries {
        let expected = store.by_name(name).expect("checked").shape();
        if expected != t.shape() {
            return Err(CheckpointError::ShapeMismatch {
                name: name.clone(),
                expected: expected.to_vec(),
                found: t.shape().to_vec(),
            });
        }
    }
    for (name, t) in entries {
        let id = store.id(&name).expect("checked");
        *store.get_mut(id) = t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore<f32> {
        let mut s = ParamStore::new();
        s.add("a.weight", Tensor::new(&[2, 3], vec![1.0, -2.0, 3.5, 0.0, f32::MIN_POSITIVE, 7.25]).unwrap());
        s.add("fusion.q", Tensor::new(&[1, 2], vec![0.5, -0.5]).unwrap());
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = store();
        let decoded = decode(&encode(s.iter())).unwrap();
        let mut t = store();
        t.tensors_mut().iter_mut().for_each(|x| x.data_mut().iter_mut().for_each(|v| *v = 0.0));
        apply(&mut t, decoded).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn missing_name_is_reported() {
        let s = store();
        let entries: Vec<_> = decode(&encode(s.iter())).unwrap().into_iter().filter(|(n, _)| n != "fusion.q").collect();
        let mut t = store();
        let err = apply(&mut t, entries).unwrap_err();
        assert!(err.to_string().contains("fusion.q"), "{err}");
    }

    #[test]
    fn truncation_and_bad_magic() {
        let bytes = encode(store().iter());
        for cut in [0, 3, 10, bytes.len() - 1] {
            assert!(decode(&bytes[..cut]).is_err());
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        let err = decode(&bad).unwrap_err();
        assert!(err.to_string().contains("byte 0"), "{err}");
        let mut v2 = bytes;
        v2[4] = 2;
        assert!(matches!(decode(&v2), Err(FormatError::Version { found: 2, .. })));
    }
}
