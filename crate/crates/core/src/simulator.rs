//! Point-scatterer channel-data synthesizer.
//!
//! Each scatterer re-emits a Gaussian-enveloped tone burst centered on its
//! two-way travel time, weighted by the receive directivity of every element.
//! There is no attenuation, multiple scattering or transmit directivity. The
//! synthesizer uses the geometry module for delays and nothing from the
//! beamforming path, so it can serve as an independent oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::aperture::directivity;
use crate::error::{invalid, Result};
use crate::geometry::{travel_time, ArrayGeometry, GridPoint, Medium, TransmitScheme};
use crate::signal::{ChannelData, Samples, SignalParams};

/// Gaussian envelope support, in standard deviations on each side.
const PULSE_HALF_SPAN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub x: f64,
    pub z: f64,
    pub reflectivity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub x: f64,
    pub z: f64,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        (x - self.x).hypot(z - self.z) <= self.radius
    }
}

/// Uniformly scattered diffuse background (speckle), optionally with
/// scatterer-free disks (anechoic cysts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffuseBackground {
    pub count: usize,
    pub seed: u64,
    pub x_range: (f64, f64),
    pub z_range: (f64, f64),
    #[serde(default)]
    pub anechoic: Vec<Disk>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    #[serde(default)]
    pub scatterers: Vec<Scatterer>,
    #[serde(default)]
    pub background: Option<DiffuseBackground>,
}

impl Phantom {
    pub fn point(x: f64, z: f64) -> Self {
        Self {
            scatterers: vec![Scatterer { x, z, reflectivity: 1.0 }],
            background: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.scatterers {
            if !(s.z > 0.0) || !s.x.is_finite() {
                return Err(invalid("scatterer", format!("needs z > 0, got ({}, {})", s.x, s.z)));
            }
            if !(s.reflectivity.is_finite() && s.reflectivity >= 0.0) {
                return Err(invalid("reflectivity", "must be finite and >= 0"));
            }
        }
        if let Some(bg) = &self.background {
            if !(bg.z_range.0 > 0.0 && bg.z_range.1 > bg.z_range.0 && bg.x_range.1 > bg.x_range.0) {
                return Err(invalid("background", "needs positive, non-empty ranges"));
            }
        }
        Ok(())
    }

    /// Explicit scatterers followed by the realized diffuse background.
    /// Background reflectivities are uniform in `[0, 1)`.
    pub fn all_scatterers(&self) -> Vec<Scatterer> {
        let mut out = self.scatterers.clone();
        if let Some(bg) = &self.background {
            let mut rng = ChaCha8Rng::seed_from_u64(bg.seed);
            let mut placed = 0;
            while placed < bg.count {
                let x = rng.gen_range(bg.x_range.0..bg.x_range.1);
                let z = rng.gen_range(bg.z_range.0..bg.z_range.1);
                let r: f64 = rng.gen();
                if bg.anechoic.iter().any(|d| d.contains(x, z)) {
                    continue;
                }
                out.push(Scatterer { x, z, reflectivity: r });
                placed += 1;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub params: SignalParams,
    pub n_samples: usize,
    /// Additive white Gaussian noise, as a signal-to-noise ratio in dB relative
    /// to the RMS of the noiseless channel data. `None` disables noise.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// Standard deviation of the Gaussian envelope whose spectrum falls to half
/// amplitude at `fc +/- bandwidth/2`.
pub fn pulse_sigma(bandwidth: f64) -> f64 {
    (2.0 * 2f64.ln()).sqrt() / (PI * bandwidth)
}

struct Echo {
    tau: f64,
    amplitude: f64,
}

fn echoes(
    scatterers: &[Scatterer],
    element_x: f64,
    geom: &ArrayGeometry,
    scheme: &TransmitScheme,
    medium: &Medium,
    width_over_lambda: f64,
) -> Vec<Echo> {
    scatterers
        .iter()
        .map(|s| {
            let pt = GridPoint::new(s.x, s.z);
            let angle = (element_x - s.x).atan2(s.z);
            Echo {
                tau: travel_time(pt, element_x, scheme, geom, medium),
                amplitude: s.reflectivity * directivity(angle, width_over_lambda),
            }
        })
        .collect()
}

fn check_config(cfg: &SimulationConfig) -> Result<()> {
    if cfg.n_samples < 2 {
        return Err(invalid("n_samples", "at least two samples are required"));
    }
    if cfg.params.fs < 4.0 * cfg.params.fc {
        return Err(invalid("fs", "the simulator needs fs >= 4 fc"));
    }
    Ok(())
}

/// Synthesize one column per element, `render(echoes)` producing the samples.
fn synthesize<T, F>(geom: &ArrayGeometry, render: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> Vec<T> + Sync,
{
    let xs = geom.element_positions();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        xs.par_iter().flat_map_iter(|&x| render(x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        xs.iter().flat_map(|&x| render(x)).collect()
    }
}

fn sample_window(tau: f64, sigma: f64, fs: f64, n: usize) -> std::ops::Range<usize> {
    let lo = ((tau - PULSE_HALF_SPAN * sigma) * fs).ceil().max(0.0) as usize;
    let hi = (((tau + PULSE_HALF_SPAN * sigma) * fs).floor() + 1.0).max(0.0) as usize;
    lo.min(n)..hi.min(n)
}

/// Real RF channel data for a single transmit.
pub fn synth_rf(
    phantom: &Phantom,
    geom: &ArrayGeometry,
    scheme: &TransmitScheme,
    medium: &Medium,
    cfg: &SimulationConfig,
) -> Result<ChannelData> {
    phantom.validate()?;
    check_config(cfg)?;
    let SignalParams { fs, fc, bandwidth } = cfg.params;
    let n = cfg.n_samples;
    let sigma = pulse_sigma(bandwidth);
    let wl = geom.element_width() * fc / medium.speed_of_sound;
    let scatterers = phantom.all_scatterers();

    let mut samples = synthesize(geom, |x| {
        let mut col = vec![0.0; n];
        for e in echoes(&scatterers, x, geom, scheme, medium, wl) {
            for k in sample_window(e.tau, sigma, fs, n) {
                let dt = k as f64 / fs - e.tau;
                col[k] += e.amplitude * (-0.5 * (dt / sigma).powi(2)).exp() * (2.0 * PI * fc * dt).cos();
            }
        }
        col
    });
    if let Some(snr) = cfg.snr_db {
        let std = noise_std(samples.iter().map(|v| v * v), samples.len(), snr);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, std).map_err(|e| invalid("snr_db", e.to_string()))?;
        samples.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    ChannelData::new(n, geom.num_elements(), 1, cfg.params, Samples::Rf(samples))
}

/// Baseband I/Q channel data synthesized directly:
/// `IQ_i(t) = sum r D g(t - tau) exp(-i 2 pi fc tau)`.
///
/// Noise, when requested, is circular complex Gaussian with the same
/// per-component standard deviation the RF path would use.
pub fn synth_iq(
    phantom: &Phantom,
    geom: &ArrayGeometry,
    scheme: &TransmitScheme,
    medium: &Medium,
    cfg: &SimulationConfig,
) -> Result<ChannelData> {
    phantom.validate()?;
    check_config(cfg)?;
    let SignalParams { fs, fc, bandwidth } = cfg.params;
    let n = cfg.n_samples;
    let sigma = pulse_sigma(bandwidth);
    let wl = geom.element_width() * fc / medium.speed_of_sound;
    let scatterers = phantom.all_scatterers();

    let mut samples = synthesize(geom, |x| {
        let mut col = vec![Complex64::default(); n];
        for e in echoes(&scatterers, x, geom, scheme, medium, wl) {
            let carrier = Complex64::from_polar(e.amplitude, -2.0 * PI * fc * e.tau);
            for k in sample_window(e.tau, sigma, fs, n) {
                let dt = k as f64 / fs - e.tau;
                col[k] += carrier * (-0.5 * (dt / sigma).powi(2)).exp();
            }
        }
        col
    });
    if let Some(snr) = cfg.snr_db {
        // RF power is half the baseband envelope power.
        let std = noise_std(samples.iter().map(|v| 0.5 * v.norm_sqr()), samples.len(), snr);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, std).map_err(|e| invalid("snr_db", e.to_string()))?;
        samples
            .iter_mut()
            .for_each(|v| *v += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)));
    }
    ChannelData::new(n, geom.num_elements(), 1, cfg.params, Samples::Iq(samples))
}

fn noise_std(power: impl Iterator<Item = f64>, len: usize, snr_db: f64) -> f64 {
    let mean_power = power.sum::<f64>() / len.max(1) as f64;
    (mean_power / 10f64.powf(snr_db / 10.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hyperbola_residual;
    use crate::signal::{iq_demodulate, Samples};

    fn setup() -> (ArrayGeometry, TransmitScheme, Medium, SimulationConfig) {
        let fc = 5e6;
        (
            ArrayGeometry::new(32, 0.3e-3, 0.27e-3).unwrap(),
            TransmitScheme::plane(0.0, 0.0).unwrap(),
            Medium::new(1540.0).unwrap(),
            SimulationConfig {
                params: SignalParams::new(4.0 * fc, fc, 0.6 * fc).unwrap(),
                n_samples: 600,
                snr_db: None,
                seed: 7,
            },
        )
    }

    #[test]
    fn empty_phantom_is_silent() {
        let (g, s, m, cfg) = setup();
        let rf = synth_rf(&Phantom::default(), &g, &s, &m, &cfg).unwrap();
        let Samples::Rf(v) = rf.samples() else { panic!() };
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn reflectivity_is_linear() {
        let (g, s, m, cfg) = setup();
        let mut p = Phantom::point(1e-3, 15e-3);
        let a = synth_rf(&p, &g, &s, &m, &cfg).unwrap();
        p.scatterers[0].reflectivity = 2.0;
        let b = synth_rf(&p, &g, &s, &m, &cfg).unwrap();
        let (Samples::Rf(a), Samples::Rf(b)) = (a.samples(), b.samples()) else { panic!() };
        assert!(a.iter().zip(b).all(|(x, y)| 2.0 * x == *y));
    }

    #[test]
    fn peaks_follow_the_hyperbola() {
        let (g, s, m, mut cfg) = setup();
        cfg.params = SignalParams::new(40e6, 5e6, 3e6).unwrap();
        cfg.n_samples = 1200;
        let pt = GridPoint::new(0.0, 12e-3);
        let iq = synth_iq(&Phantom::point(pt.x, pt.z), &g, &s, &m, &cfg).unwrap();
        let Samples::Iq(v) = iq.samples() else { panic!() };
        let fs = cfg.params.fs;
        for (i, x) in g.element_positions().into_iter().enumerate() {
            let col = &v[i * cfg.n_samples..(i + 1) * cfg.n_samples];
            let k = (0..col.len()).max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm())).unwrap();
            let t = k as f64 / fs;
            let tau = travel_time(pt, x, &s, &g, &m);
            assert!((t - tau).abs() <= 0.5 / fs + 1e-12, "element {i}");
            // The peak sample lies on the hyperbola up to the sampling step.
            let r = hyperbola_residual(pt, x, t, &s, &g, &m);
            let scale = 4.0 * m.speed_of_sound * tau / pt.z * m.speed_of_sound / pt.z / fs;
            assert!(r.abs() <= scale, "element {i}: residual {r} vs {scale}");
            // Phase at the peak, after rotating back, is near zero.
            let ph = (col[k] * Complex64::from_polar(1.0, 2.0 * PI * cfg.params.fc * t)).arg();
            assert!(ph.abs() < 2.0 * PI * cfg.params.fc * 0.5 / fs + 1e-9);
        }
    }

    #[test]
    fn direct_iq_matches_demodulated_rf() {
        let (g, s, m, cfg) = setup();
        let phantom = Phantom {
            scatterers: vec![
                Scatterer { x: -2e-3, z: 8e-3, reflectivity: 1.0 },
                Scatterer { x: 1e-3, z: 12e-3, reflectivity: 0.5 },
                Scatterer { x: 3e-3, z: 15e-3, reflectivity: 0.8 },
            ],
            background: None,
        };
        let rf = synth_rf(&phantom, &g, &s, &m, &cfg).unwrap();
        let demod = iq_demodulate(&rf).unwrap();
        let direct = synth_iq(&phantom, &g, &s, &m, &cfg).unwrap();
        let (Samples::Iq(a), Samples::Iq(b)) = (demod.samples(), direct.samples()) else { panic!() };
        let n = cfg.n_samples;
        let (mut err, mut norm) = (0.0, 0.0);
        for e in 0..g.num_elements() {
            for k in n / 10..n - n / 10 {
                let i = e * n + k;
                err += (a[i] - b[i]).norm_sqr();
                norm += b[i].norm_sqr();
            }
        }
        assert!((err / norm).sqrt() < 0.01, "rms {}", (err / norm).sqrt());
    }

    #[test]
    fn seeded_background_is_deterministic_and_respects_cysts() {
        let bg = DiffuseBackground {
            count: 500,
            seed: 3,
            x_range: (-5e-3, 5e-3),
            z_range: (5e-3, 15e-3),
            anechoic: vec![Disk { x: 0.0, z: 10e-3, radius: 2e-3 }],
        };
        let p = Phantom { scatterers: vec![], background: Some(bg) };
        let a = p.all_scatterers();
        assert_eq!(a, p.all_scatterers());
        assert_eq!(a.len(), 500);
        assert!(a.iter().all(|s| (s.x).hypot(s.z - 10e-3) > 2e-3));
    }

    #[test]
    fn noise_level_matches_snr() {
        let (g, s, m, mut cfg) = setup();
        let p = Phantom::point(0.0, 10e-3);
        let clean = synth_rf(&p, &g, &s, &m, &cfg).unwrap();
        cfg.snr_db = Some(10.0);
        let noisy = synth_rf(&p, &g, &s, &m, &cfg).unwrap();
        let (Samples::Rf(a), Samples::Rf(b)) = (clean.samples(), noisy.samples()) else { panic!() };
        let ps: f64 = a.iter().map(|v| v * v).sum();
        let pn: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let snr = 10.0 * (ps / pn).log10();
        assert!((snr - 10.0).abs() < 0.5, "{snr}");
    }

    #[test]
    fn rejects_undersampling() {
        let (g, s, m, mut cfg) = setup();
        cfg.params = SignalParams::new(15e6, 5e6, 3e6).unwrap();
        assert!(synth_rf(&Phantom::point(0.0, 1e-2), &g, &s, &m, &cfg).is_err());
    }
}
