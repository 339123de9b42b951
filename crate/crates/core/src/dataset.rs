//! Channel-data container: a JSON metadata document followed by raw
//! little-endian `f32` samples.
//!
//! Layout:
//!
//! | bytes       | content                                       |
//! |-------------|-----------------------------------------------|
//! | 8           | magic `DASDSET\n`                             |
//! | 8           | metadata length `n`, `u64` little-endian      |
//! | `n`         | UTF-8 JSON metadata                           |
//! | rest        | payload, `f32` little-endian                  |
//!
//! The payload is channel-major within each frame (all samples of element 1,
//! then element 2, ...), frames one after another, with I and Q interleaved
//! per sample for I/Q data.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{DasError, Result};
use crate::geometry::{virtual_source, ArrayGeometry, TransmitScheme, VirtualSource};
use crate::signal::{ChannelData, Samples, SignalKind, SignalParams};

pub const MAGIC: &[u8; 8] = b"DASDSET\n";
pub const SCHEMA_VERSION: u32 = 1;

/// Transmit description as stored in metadata. Angles are in degrees,
/// positions in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransmitSpec {
    Plane {
        tilt_deg: f64,
    },
    /// Diverging wave, given either by tilt and angular width or by its
    /// virtual source.
    Circular {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tilt_deg: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_deg: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source_x_m: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source_z_m: Option<f64>,
    },
    Focused {
        source_x_m: f64,
        source_z_m: f64,
    },
}

impl TransmitSpec {
    pub fn to_scheme(&self, geom: &ArrayGeometry, t0: f64) -> Result<TransmitScheme> {
        match *self {
            TransmitSpec::Plane { tilt_deg } => TransmitScheme::plane(tilt_deg.to_radians(), t0),
            TransmitSpec::Circular {
                tilt_deg,
                beta_deg,
                source_x_m,
                source_z_m,
            } => match (tilt_deg, beta_deg, source_x_m, source_z_m) {
                (Some(tilt), Some(beta), None, None) => {
                    let src = virtual_source(tilt.to_radians(), beta.to_radians(), geom.aperture_length())?;
                    TransmitScheme::circular_from_source(src, t0)
                }
                (None, None, Some(x), Some(z)) => TransmitScheme::circular_from_source(VirtualSource { x, z }, t0),
                _ => Err(schema(
                    "transmit",
                    "circular transmits need either tilt_deg and beta_deg or source_x_m and source_z_m",
                )),
            },
            TransmitSpec::Focused { source_x_m, source_z_m } => TransmitScheme::focused(
                VirtualSource {
                    x: source_x_m,
                    z: source_z_m,
                },
                t0,
            ),
        }
    }
}

/// Metadata document. Keys this crate does not know about are kept in
/// `extra` and written back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub kind: SignalKind,
    pub fs: f64,
    pub fc: f64,
    pub bandwidth: f64,
    pub n_samples: usize,
    pub n_elements: usize,
    pub frames: usize,
    pub pitch: f64,
    pub element_width: f64,
    pub t0: f64,
    pub transmit: TransmitSpec,
    /// One transmit per frame, for compound sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmits: Option<Vec<TransmitSpec>>,
    pub c0_nominal: f64,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub data: ChannelData,
}

fn schema(field: &str, reason: &str) -> DasError {
    DasError::Dataset(format!("field `{field}`: {reason}"))
}

impl Dataset {
    /// Wrap channel data with the metadata needed to beamform it.
    pub fn new(data: ChannelData, geom: &ArrayGeometry, transmit: TransmitSpec, t0: f64, c0: f64) -> Result<Self> {
        let p = data.params();
        let meta = DatasetMeta {
            schema_version: SCHEMA_VERSION,
            kind: data.kind(),
            fs: p.fs,
            fc: p.fc,
            bandwidth: p.bandwidth,
            n_samples: data.n_samples(),
            n_elements: data.n_elements(),
            frames: data.n_frames(),
            pitch: geom.pitch(),
            element_width: geom.element_width(),
            t0,
            transmit,
            transmits: None,
            c0_nominal: c0,
            extra: Map::new(),
        };
        let ds = Self { meta, data };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        if m.schema_version != SCHEMA_VERSION {
            return Err(schema("schema_version", &format!("unsupported version {}", m.schema_version)));
        }
        if !(m.c0_nominal > 0.0) {
            return Err(schema("c0_nominal", "must be positive"));
        }
        if !m.t0.is_finite() {
            return Err(schema("t0", "must be finite"));
        }
        if let Some(t) = &m.transmits {
            if t.len() != m.frames {
                return Err(schema("transmits", &format!("{} entries for {} frames", t.len(), m.frames)));
            }
        }
        self.schemes()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.meta.n_elements, self.meta.pitch, self.meta.element_width)
    }

    /// Transmit of the first frame.
    pub fn scheme(&self) -> Result<TransmitScheme> {
        let spec = self
            .meta
            .transmits
            .as_ref()
            .and_then(|t| t.first())
            .unwrap_or(&self.meta.transmit);
        spec.to_scheme(&self.geometry()?, self.meta.t0)
    }

    /// One transmit per frame.
    pub fn schemes(&self) -> Result<Vec<TransmitScheme>> {
        let geom = self.geometry()?;
        match &self.meta.transmits {
            Some(t) => t.iter().map(|s| s.to_scheme(&geom, self.meta.t0)).collect(),
            None => {
                let s = self.meta.transmit.to_scheme(&geom, self.meta.t0)?;
                Ok(vec![s; self.meta.frames])
            }
        }
    }

    pub fn c0(&self) -> f64 {
        self.meta.c0_nominal
    }

    pub fn into_parts(self) -> Result<(ChannelData, ArrayGeometry, TransmitScheme, f64)> {
        let geom = self.geometry()?;
        let scheme = self.scheme()?;
        let c0 = self.c0();
        Ok((self.data, geom, scheme, c0))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let json = serde_json::to_vec(&self.meta).map_err(|e| DasError::Dataset(e.to_string()))?;
        let mut out = Vec::with_capacity(16 + json.len() + self.data.frame_len() * self.data.n_frames() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        match self.data.samples() {
            Samples::Rf(v) => v.iter().for_each(|x| out.extend_from_slice(&(*x as f32).to_le_bytes())),
            Samples::Iq(v) => v.iter().for_each(|c| {
                out.extend_from_slice(&(c.re as f32).to_le_bytes());
                out.extend_from_slice(&(c.im as f32).to_le_bytes());
            }),
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(DasError::Dataset("not a dataset container (bad magic)".into()));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let json = bytes
            .get(16..16usize.saturating_add(len))
            .ok_or_else(|| DasError::Dataset("metadata extends past end of file".into()))?;
        let meta: DatasetMeta =
            serde_json::from_slice(json).map_err(|e| DasError::Dataset(format!("metadata: {e}")))?;
        let payload = &bytes[16 + len..];
        if !payload.len().is_multiple_of(4) {
            return Err(DasError::Dataset(format!(
                "payload of {} bytes is not a whole number of f32 values",
                payload.len()
            )));
        }
        let floats = payload.len() / 4;
        if meta.kind == SignalKind::Iq && !floats.is_multiple_of(2) {
            return Err(DasError::Dataset(format!("iq payload holds an odd number of floats ({floats})")));
        }
        let per_value = if meta.kind == SignalKind::Iq { 2 } else { 1 };
        let expected = meta
            .n_samples
            .checked_mul(meta.n_elements)
            .and_then(|v| v.checked_mul(meta.frames))
            .and_then(|v| v.checked_mul(per_value))
            .ok_or_else(|| schema("n_samples", "dimensions overflow"))?;
        if floats != expected {
            return Err(DasError::Dataset(format!(
                "payload size mismatch: {floats} floats, metadata implies {expected}"
            )));
        }
        let vals = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64);
        let samples = match meta.kind {
            SignalKind::Rf => Samples::Rf(vals.collect()),
            SignalKind::Iq => {
                let v: Vec<f64> = vals.collect();
                Samples::Iq(v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
            }
        };
        let params = SignalParams::new(meta.fs, meta.fc, meta.bandwidth)?;
        let data = ChannelData::new(meta.n_samples, meta.n_elements, meta.frames, params, samples)?;
        let ds = Self { meta, data };
        ds.validate()?;
        Ok(ds)
    }
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    fs::write(path, ds.to_bytes()?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::from_bytes(&fs::read(path)?)
}
