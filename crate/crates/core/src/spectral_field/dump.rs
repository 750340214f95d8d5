//! Field dump files: `<stem>.json` holds the header, `<stem>.bin` the payload
//! as little-endian IEEE-754 doubles in row-major order. Spectral payloads
//! interleave `re, im` per coefficient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use super::{GridSpec, RealField, SpectralField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DumpKind {
    Real,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub n: usize,
    pub kind: DumpKind,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DumpPayload {
    Real(RealField),
    Spectral(SpectralField),
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

/// Writes `<stem>.json` and `<stem>.bin`. `n` and `kind` in the header are
/// taken from the payload.
pub fn write_field_dump(
    stem: &Path,
    seed: Option<u64>,
    alpha: Option<f64>,
    payload: &DumpPayload,
) -> Result<()> {
    let (grid, kind, bytes) = match payload {
        DumpPayload::Real(f) => {
            let bytes: Vec<u8> = f.values().iter().flat_map(|v| v.to_le_bytes()).collect();
            (f.grid(), DumpKind::Real, bytes)
        }
        DumpPayload::Spectral(f) => {
            let bytes: Vec<u8> = f
                .coeffs()
                .iter()
                .flat_map(|c| c.re.to_le_bytes().into_iter().chain(c.im.to_le_bytes()))
                .collect();
            (f.grid(), DumpKind::Spectral, bytes)
        }
    };
    let header = DumpHeader {
        n: grid.n(),
        kind,
        seed,
        alpha,
    };
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    fs::write(with_ext(stem, "json"), text)?;
    fs::write(with_ext(stem, "bin"), bytes)?;
    Ok(())
}

pub fn read_field_dump(stem: &Path) -> Result<(DumpHeader, DumpPayload)> {
    let header: DumpHeader = serde_json::from_str(&fs::read_to_string(with_ext(stem, "json"))?)?;
    let grid = GridSpec::new(header.n)?;
    let bytes = fs::read(with_ext(stem, "bin"))?;
    let doubles: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let per_point = match header.kind {
        DumpKind::Real => 1,
        DumpKind::Spectral => 2,
    };
    if bytes.len() % 8 != 0 || doubles.len() != per_point * grid.len() {
        return Err(Error::MalformedDump(format!(
            "payload of {} bytes does not match a {} field with N={}",
            bytes.len(),
            if per_point == 1 { "real" } else { "spectral" },
            grid.n()
        )));
    }
    let payload = match header.kind {
        DumpKind::Real => DumpPayload::Real(RealField::from_values(grid, doubles)?),
        DumpKind::Spectral => DumpPayload::Spectral(SpectralField::from_coeffs(
            grid,
            doubles
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        )?),
    };
    Ok((header, payload))
}
