//! B-mode PGM output and raw beamformed images.
//!
//! A raw image file holds the magic `DASIMAG\n`, a `u64` little-endian
//! metadata length, the JSON metadata and then one `(re, im)` pair of
//! little-endian `f64` per pixel. Pixels are column-major with depth varying
//! fastest, as recorded in the metadata `order` field.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;

const MAGIC: &[u8; 8] = b"DASIMAG\n";
pub const PIXEL_ORDER: &str = "column-major, depth fastest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMeta {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub order: String,
    pub speed_of_sound: f64,
    pub fc: f64,
    pub f_number: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub meta: RawMeta,
    pub values: Vec<Complex64>,
}

impl RawImage {
    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let json = serde_json::to_vec(&self.meta)?;
        let mut out = Vec::with_capacity(16 + json.len() + 16 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            bail!("{} is not a raw image file", path.display());
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into()?) as usize;
        let json = bytes.get(16..16 + len).context("raw image metadata is truncated")?;
        let meta: RawMeta = serde_json::from_slice(json).context("raw image metadata")?;
        let payload = &bytes[16 + len..];
        let expected = meta.grid.nx * meta.grid.nz * 16;
        if payload.len() != expected {
            bail!("raw image payload holds {} bytes, grid implies {expected}", payload.len());
        }
        let values = payload
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(Self { meta, values })
    }
}

/// Write `levels` (in `[0, 1]`, column-major with depth fastest) as an 8-bit
/// binary PGM with `nx` columns and `nz` rows.
pub fn write_pgm(path: &Path, levels: &[f64], nx: usize, nz: usize) -> anyhow::Result<()> {
    if levels.len() != nx * nz {
        bail!("{} pixels for a {nx}x{nz} image", levels.len());
    }
    let mut out = Vec::with_capacity(32 + levels.len());
    write!(out, "P5\n{nx} {nz}\n255\n")?;
    for r in 0..nz {
        for c in 0..nx {
            out.push((levels[c * nz + r].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
