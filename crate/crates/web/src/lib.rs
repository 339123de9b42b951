//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes and returns plain numbers or vectors so the same
//! functions are exercised by native tests.

use das_core::aperture::{design_fnumber, directivity, ApertureConfig};
use das_core::beamformer::{beamform, build_das_matrix, BeamformGrid, Interpolation, SignalMeta};
use das_core::geometry::{ArrayGeometry, Medium, TransmitScheme};
use das_core::signal::{log_compress, SignalParams};
use das_core::simulator::{synth_iq, Phantom, Scatterer, SimulationConfig};
use das_core::soundspeed::{qp_at_speed, Acquisition};
use wasm_bindgen::prelude::*;

const FS: f64 = 20e6;
const FC: f64 = 5e6;
const BW: f64 = 3e6;
const PITCH: f64 = 0.3e-3;
const WIDTH: f64 = 0.27e-3;
const ELEMENTS: usize = 64;
const N_SAMPLES: usize = 800;

/// Side of the square PSF image, in pixels.
#[wasm_bindgen(js_name = psfSize)]
pub fn psf_size() -> usize {
    96
}

fn msg(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn geometry() -> ArrayGeometry {
    ArrayGeometry::new(ELEMENTS, PITCH, WIDTH).expect("fixed probe is valid")
}

fn config(seed: u64) -> SimulationConfig {
    SimulationConfig {
        params: SignalParams::new(FS, FC, BW).expect("fixed signal is valid"),
        n_samples: N_SAMPLES,
        snr_db: None,
        seed,
    }
}

/// `[lambda_min (m), width / lambda, alpha (deg), f-number]`.
pub fn fnumber_design(
    width_m: f64,
    fc: f64,
    bandwidth: f64,
    c: f64,
    threshold: f64,
    steer_deg: f64,
) -> Result<Vec<f64>, String> {
    let d = design_fnumber(width_m, c, fc, bandwidth, threshold, steer_deg.to_radians()).map_err(msg)?;
    Ok(vec![d.lambda_min, d.width_over_lambda, d.alpha.to_degrees(), d.f_number])
}

/// Element directivity sampled at `n` angles evenly spread over [-90, 90] degrees.
pub fn directivity_curve(width_over_lambda: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            let deg = -90.0 + 180.0 * k as f64 / (n - 1) as f64;
            directivity(deg.to_radians(), width_over_lambda)
        })
        .collect()
}

/// B-mode image (RGBA, `psf_size()` squared) of a point target at
/// `(x_mm, z_mm)` insonified by a plane wave tilted `tilt_deg`, simulated
/// at 1540 m/s and beamformed assuming `c_beamform`. Pixels span 8 mm
/// around the target.
pub fn psf_image(
    x_mm: f64,
    z_mm: f64,
    tilt_deg: f64,
    f_number: f64,
    c_beamform: f64,
    dynamic_range_db: f64,
) -> Result<Vec<u8>, String> {
    let (x, z) = (x_mm * 1e-3, z_mm * 1e-3);
    let geom = geometry();
    let scheme = TransmitScheme::plane(tilt_deg.to_radians(), 0.0).map_err(msg)?;
    let data = synth_iq(&Phantom::point(x, z), &geom, &scheme, &Medium::new(1540.0).map_err(msg)?, &config(0))
        .map_err(msg)?;
    let n = psf_size();
    let half = 4e-3;
    let grid = BeamformGrid::rectangular((x - half, x + half), ((z - half).max(1e-3), z + half), n, n).map_err(msg)?;
    let aperture = if f_number > 0.0 { ApertureConfig::new(f_number) } else { Ok(ApertureConfig::full()) }.map_err(msg)?;
    let medium = Medium::new(c_beamform).map_err(msg)?;
    let m = build_das_matrix(&grid, &geom, &scheme, &medium, SignalMeta::of(&data), &aperture, Interpolation::Linear)
        .map_err(msg)?;
    let frame = beamform(&m, &data).map_err(msg)?.remove(0);
    let levels = log_compress(&frame.envelope(), dynamic_range_db).map_err(msg)?;

    // Grid is column-major with depth fastest; canvas rows are depths.
    let mut rgba = vec![255u8; 4 * n * n];
    for r in 0..n {
        for c in 0..n {
            let v = (levels[grid.index(r, c)] * 255.0).round() as u8;
            let p = 4 * (r * n + c);
            rgba[p..p + 3].fill(v);
        }
    }
    Ok(rgba)
}

/// Phase-coherence metric `Qp` for `steps` speeds evenly spread over
/// `[c_min, c_max]`, for five point targets simulated at `c_true` with an
/// unsteered plane wave. Returns interleaved `(c, Qp)` pairs.
pub fn qp_curve(c_true: f64, c_min: f64, c_max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if c_min.partial_cmp(&c_max) != Some(std::cmp::Ordering::Less) || steps < 2 {
        return Err("need c_min < c_max and at least two steps".into());
    }
    let geom = geometry();
    let scheme = TransmitScheme::plane(0.0, 0.0).map_err(msg)?;
    let phantom = Phantom {
        scatterers: [(-4.0, 10.0), (3.0, 13.0), (0.0, 16.0), (-2.0, 20.0), (4.0, 24.0)]
            .iter()
            .map(|&(x, z)| Scatterer { x: x * 1e-3, z: z * 1e-3, reflectivity: 1.0 })
            .collect(),
        background: None,
    };
    let data = synth_iq(&phantom, &geom, &scheme, &Medium::new(c_true).map_err(msg)?, &config(0)).map_err(msg)?;
    let grid = BeamformGrid::rectangular((-6e-3, 6e-3), (8e-3, 26e-3), 48, 72).map_err(msg)?;
    let aperture = ApertureConfig::new(1.3).map_err(msg)?;
    let acq = [Acquisition { data: &data, scheme: &scheme }];
    let mut out = Vec::with_capacity(2 * steps);
    for k in 0..steps {
        let c = c_min + (c_max - c_min) * k as f64 / (steps - 1) as f64;
        out.push(c);
        out.push(qp_at_speed(&acq, &grid, &geom, &aperture, 1540.0, c).map_err(msg)?);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = fnumberDesign)]
pub fn fnumber_design_js(
    width_m: f64,
    fc: f64,
    bandwidth: f64,
    c: f64,
    threshold: f64,
    steer_deg: f64,
) -> Result<Vec<f64>, JsError> {
    js(fnumber_design(width_m, fc, bandwidth, c, threshold, steer_deg))
}

#[wasm_bindgen(js_name = directivityCurve)]
pub fn directivity_curve_js(width_over_lambda: f64, n: usize) -> Vec<f64> {
    directivity_curve(width_over_lambda, n)
}

#[wasm_bindgen(js_name = psfImage)]
pub fn psf_image_js(
    x_mm: f64,
    z_mm: f64,
    tilt_deg: f64,
    f_number: f64,
    c_beamform: f64,
    dynamic_range_db: f64,
) -> Result<Vec<u8>, JsError> {
    psf_image(x_mm, z_mm, tilt_deg, f_number, c_beamform, dynamic_range_db).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = qpCurve)]
pub fn qp_curve_js(c_true: f64, c_min: f64, c_max: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    js(qp_curve(c_true, c_min, c_max, steps))
}
