//! Artifact persistence: frame files with a JSON index, JSON documents, and
//! an exclusive lock on output directories.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};

pub const FRAMES_FILE: &str = "frames.bin";
pub const INDEX_FILE: &str = "index.json";
const LOCK_FILE: &str = ".lock";

/// Sidecar of a frame file. Values are little-endian f64, frame-major,
/// then field, then node, each node as (re, im).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameIndex {
    pub t: Vec<f64>,
    pub grid: SpatialGrid,
    pub n_fields: usize,
    pub layout: String,
}

pub fn write_frames(dir: &Path, frames: &[(f64, Vec<&ComplexField>)]) -> Result<()> {
    let first = frames.first().ok_or_else(|| Error::Empty("no frames to write".into()))?;
    let grid = *first.1[0].grid();
    let n_fields = first.1.len();
    let mut out = BufWriter::new(File::create(dir.join(FRAMES_FILE))?);
    for (_, fields) in frames {
        if fields.len() != n_fields || fields.iter().any(|f| *f.grid() != grid) {
            return Err(Error::Grid("frames differ in field count or grid".into()));
        }
        for f in fields {
            for z in f.values() {
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    let index = FrameIndex {
        t: frames.iter().map(|f| f.0).collect(),
        grid,
        n_fields,
        layout: "f64 little-endian; frame, field, node, (re, im)".into(),
    };
    write_json(&dir.join(INDEX_FILE), &index)
}

pub fn read_frames(dir: &Path) -> Result<(FrameIndex, Vec<(f64, Vec<ComplexField>)>)> {
    let index: FrameIndex = read_json(&dir.join(INDEX_FILE))?;
    let n = index.grid.n();
    let mut bytes = Vec::new();
    BufReader::new(File::open(dir.join(FRAMES_FILE))?).read_to_end(&mut bytes)?;
    let expected = index.t.len() * index.n_fields * n * 16;
    if bytes.len() != expected {
        return Err(Error::Domain(format!(
            "frame file has {} bytes, index implies {expected}",
            bytes.len()
        )));
    }
    let mut values = bytes.chunks_exact(16).map(|c| {
        let re = f64::from_le_bytes(c[..8].try_into().expect("8-byte chunk"));
        let im = f64::from_le_bytes(c[8..].try_into().expect("8-byte chunk"));
        Complex64::new(re, im)
    });
    let mut frames = Vec::with_capacity(index.t.len());
    for &t in &index.t {
        let mut fields = Vec::with_capacity(index.n_fields);
        for _ in 0..index.n_fields {
            let v: Vec<Complex64> = values.by_ref().take(n).collect();
            fields.push(ComplexField::new(index.grid, v)?);
        }
        frames.push((t, fields));
    }
    Ok((index, frames))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Exclusive hold on an output directory; released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Domain(format!(
                "output directory {} is in use (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::new(8.0, 8).unwrap();
        let a = ComplexField::from_fn(g, |s| Complex64::new(s, -s * s));
        let b = a.scale(-0.5);
        write_frames(dir.path(), &[(0.0, vec![&a, &b]), (0.5, vec![&b, &a])]).unwrap();
        let (index, frames) = read_frames(dir.path()).unwrap();
        assert_eq!(index.t, vec![0.0, 0.5]);
        assert_eq!(frames[1].1[0], b);
        assert_eq!(frames[1].1[1], a);
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let lock = DirLock::acquire(dir.path()).unwrap();
        assert!(DirLock::acquire(dir.path()).is_err());
        drop(lock);
        assert!(DirLock::acquire(dir.path()).is_ok());
    }
}
