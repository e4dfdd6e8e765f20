//! CSV tables, PGM images and the JSON run manifest.

use crate::CliError;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Run(format!("{}: {e}", dir.display())))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Binary graymap (`P5`) of a `[-1, 1]` image.
pub fn write_pgm(path: &Path, pixels: &[f64], rows: usize, cols: usize) -> Result<(), CliError> {
    if pixels.len() != rows * cols {
        return Err(CliError::Run(format!(
            "image has {} pixels, expected {rows}x{cols}",
            pixels.len()
        )));
    }
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write!(f, "P5\n{cols} {rows}\n255\n")?;
    let bytes: Vec<u8> = pixels.iter().map(|&v| sparse_defense::dataio::denormalize_pixel(v)).collect();
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub outputs: Vec<PathBuf>,
    pub results: &'a R,
}

pub fn write_manifest<C: Serialize, R: Serialize>(
    dir: &Path,
    command: &str,
    config: &C,
    outputs: Vec<PathBuf>,
    results: &R,
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{command}_manifest.json"));
    let m = Manifest { command, version: env!("CARGO_PKG_VERSION"), config, outputs, results };
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    serde_json::to_writer_pretty(&mut f, &m)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(path)
}
