//! Phantom description files for `das simulate`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use das_core::dataset::{Dataset, TransmitSpec};
use das_core::geometry::{ArrayGeometry, Medium};
use das_core::signal::{ChannelData, Samples, SignalKind, SignalParams};
use das_core::simulator::{synth_iq, synth_rf, Phantom, SimulationConfig};
use serde::Deserialize;

fn default_c0() -> f64 {
    1540.0
}

/// Acquisition parameters as in a dataset header, plus the medium and the
/// scatterer table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomFile {
    #[serde(default = "default_kind")]
    pub kind: SignalKind,
    pub fs: f64,
    pub fc: f64,
    pub bandwidth: f64,
    pub n_samples: usize,
    pub n_elements: usize,
    pub pitch: f64,
    pub element_width: f64,
    #[serde(default)]
    pub t0: f64,
    /// True speed of sound used to synthesize echoes.
    pub speed_of_sound: f64,
    /// Speed of sound written to the dataset as the nominal value.
    #[serde(default = "default_c0")]
    pub c0_nominal: f64,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// One frame is simulated per transmit.
    pub transmits: Vec<TransmitSpec>,
    #[serde(default)]
    pub scatterers: Vec<das_core::simulator::Scatterer>,
    #[serde(default)]
    pub background: Option<das_core::simulator::DiffuseBackground>,
}

fn default_kind() -> SignalKind {
    SignalKind::Rf
}

impl PhantomFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing phantom {}", path.display()))
    }

    pub fn simulate(&self) -> anyhow::Result<Dataset> {
        if self.transmits.is_empty() {
            bail!("phantom lists no transmits");
        }
        let geom = ArrayGeometry::new(self.n_elements, self.pitch, self.element_width)?;
        let medium = Medium::new(self.speed_of_sound)?;
        let params = SignalParams::new(self.fs, self.fc, self.bandwidth)?;
        let phantom = Phantom {
            scatterers: self.scatterers.clone(),
            background: self.background.clone(),
        };

        let mut rf = Vec::new();
        let mut iq = Vec::new();
        for (k, spec) in self.transmits.iter().enumerate() {
            let scheme = spec.to_scheme(&geom, self.t0)?;
            let cfg = SimulationConfig {
                params,
                n_samples: self.n_samples,
                snr_db: self.snr_db,
                seed: self.seed.wrapping_add(k as u64),
            };
            let frame = match self.kind {
                SignalKind::Rf => synth_rf(&phantom, &geom, &scheme, &medium, &cfg)?,
                SignalKind::Iq => synth_iq(&phantom, &geom, &scheme, &medium, &cfg)?,
            };
            match frame.into_samples() {
                Samples::Rf(v) => rf.extend(v),
                Samples::Iq(v) => iq.extend(v),
            }
        }
        let samples = match self.kind {
            SignalKind::Rf => Samples::Rf(rf),
            SignalKind::Iq => Samples::Iq(iq),
        };
        let data = ChannelData::new(self.n_samples, self.n_elements, self.transmits.len(), params, samples)?;
        let mut ds = Dataset::new(data, &geom, self.transmits[0], self.t0, self.c0_nominal)?;
        if self.transmits.len() > 1 {
            ds.meta.transmits = Some(self.transmits.clone());
        }
        ds.meta.extra.insert("simulated_speed_of_sound".into(), self.speed_of_sound.into());
        ds.validate()?;
        Ok(ds)
    }
}
