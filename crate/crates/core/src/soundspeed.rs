//! Average speed-of-sound estimation by maximizing the phase-dispersion
//! metric `Qp` along diffraction hyperbolas.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::aperture::ApertureConfig;
use crate::beamformer::{build_das_matrix, check_data, BeamformGrid, DasMatrix, Interpolation, SignalMeta};
use crate::error::{invalid, DasError, Result};
use crate::geometry::{ArrayGeometry, Medium, TransmitScheme};
use crate::optimize::minimize_bounded;
use crate::signal::{ChannelData, SignalKind};

/// Floor on the per-row phase variance.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Interpolated, phase-rotated channel samples along the hyperbola of every
/// grid point: an `M x N_e` row-major array with a presence mask.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolaSamples {
    rows: usize,
    cols: usize,
    values: Vec<Complex64>,
    present: Vec<bool>,
}

impl HyperbolaSamples {
    /// Entries equal to exactly zero are treated as absent.
    pub fn from_values(rows: usize, cols: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(DasError::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} array",
                values.len()
            )));
        }
        let present = values.iter().map(|v| *v != Complex64::default()).collect();
        Ok(Self { rows, cols, values, present })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Complex64> {
        let i = row * self.cols + col;
        self.present[i].then_some(self.values[i])
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = Complex64> + '_ {
        let span = row * self.cols..(row + 1) * self.cols;
        self.values[span.clone()]
            .iter()
            .zip(&self.present[span])
            .filter_map(|(v, &p)| p.then_some(*v))
    }

    /// Element-wise sum, used for compound hyperbolas.
    pub fn sum(items: &[HyperbolaSamples]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| invalid("hyperbola samples", "nothing to sum"))?;
        let mut values = vec![Complex64::default(); first.values.len()];
        for h in items {
            if (h.rows, h.cols) != (first.rows, first.cols) {
                return Err(DasError::ShapeMismatch("hyperbola arrays differ in shape".into()));
            }
            values.iter_mut().zip(&h.values).for_each(|(a, v)| *a += v);
        }
        Self::from_values(first.rows, first.cols, values)
    }
}

/// Multiply the DAS matrix by the block-diagonal arrangement of one frame of
/// I/Q data, keeping one column per element.
pub fn hyperbola_samples(matrix: &DasMatrix, data: &ChannelData, frame: usize) -> Result<HyperbolaSamples> {
    if data.kind() != SignalKind::Iq {
        return Err(DasError::SignalKind {
            expected: "iq",
            actual: data.kind().name(),
        });
    }
    check_data(matrix, data)?;
    if frame >= data.n_frames() {
        return Err(invalid("frame", format!("{frame} out of range ({} frames)", data.n_frames())));
    }
    let iq = data.frame_complex(frame);
    let (m, ne, ns) = (matrix.nrows(), matrix.n_elements(), matrix.n_samples());
    let mut values = vec![Complex64::default(); m * ne];
    let csr = matrix.csr();
    let fill = |r: usize, out: &mut [Complex64]| {
        for (c, w) in csr.row(r) {
            out[c / ns] += w * iq[c];
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values.par_chunks_mut(ne).enumerate().for_each(|(r, out)| fill(r, out));
    }
    #[cfg(not(feature = "parallel"))]
    values.chunks_mut(ne).enumerate().for_each(|(r, out)| fill(r, out));
    HyperbolaSamples::from_values(m, ne, values)
}

fn unwrap_in_place(phases: &mut [f64]) {
    let mut offset = 0.0;
    for k in 1..phases.len() {
        let raw = phases[k] + offset;
        let mut d = raw - phases[k - 1];
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        phases[k] = phases[k - 1] + d;
    }
}

/// Mean over rows with at least two present entries of
/// `|sum|^2 / max(Var(unwrapped phase), VARIANCE_FLOOR)`.
pub fn qp_metric(h: &HyperbolaSamples) -> Result<f64> {
    let mut total = 0.0;
    let mut eligible = 0usize;
    let mut phases = Vec::with_capacity(h.cols);
    for r in 0..h.rows {
        phases.clear();
        let mut sum = Complex64::default();
        for v in h.row(r) {
            phases.push(v.arg());
            sum += v;
        }
        let n = phases.len();
        if n < 2 {
            continue;
        }
        unwrap_in_place(&mut phases);
        let mean = phases.iter().sum::<f64>() / n as f64;
        let var = phases.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        total += sum.norm_sqr() / var.max(VARIANCE_FLOOR);
        eligible += 1;
    }
    if eligible == 0 {
        return Err(DasError::InsufficientAperture);
    }
    Ok(total / eligible as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SosConfig {
    /// Speed of sound the grid depths refer to.
    pub c0: f64,
    pub bounds: (f64, f64),
    pub tolerance: f64,
}

impl Default for SosConfig {
    fn default() -> Self {
        Self {
            c0: 1540.0,
            bounds: (1200.0, 1700.0),
            tolerance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosEstimate {
    pub c_hat: f64,
    /// `(c, Qp)` pairs visited by the search, sorted by `c`.
    pub qp_curve: Vec<(f64, f64)>,
    pub bounds: (f64, f64),
    /// Set when the optimum sits within tolerance of a bound, which usually
    /// means the true speed lies outside the bracket.
    pub at_bound: bool,
}

/// One transmit of a compound set: its I/Q data and transmit scheme.
#[derive(Debug, Clone, Copy)]
pub struct Acquisition<'a> {
    pub data: &'a ChannelData,
    pub scheme: &'a TransmitScheme,
}

/// `Qp` at candidate speed `c`. The grid depths are scaled by `c / c0` so
/// on-axis vertices stay pinned to the same fast-time samples; hyperbola
/// samples of all acquisitions are summed before the metric is taken.
pub fn qp_at_speed(
    acquisitions: &[Acquisition<'_>],
    grid: &BeamformGrid,
    geom: &ArrayGeometry,
    aperture: &ApertureConfig,
    c0: f64,
    c: f64,
) -> Result<f64> {
    if acquisitions.is_empty() {
        return Err(invalid("acquisitions", "at least one is required"));
    }
    let medium = Medium::new(c)?;
    let scaled = grid.with_depth_scaled(c / c0);
    let mut parts = Vec::with_capacity(acquisitions.len());
    for acq in acquisitions {
        let matrix = build_das_matrix(
            &scaled,
            geom,
            acq.scheme,
            &medium,
            SignalMeta::of(acq.data),
            aperture,
            Interpolation::Linear,
        )?;
        for frame in 0..acq.data.n_frames() {
            parts.push(hyperbola_samples(&matrix, acq.data, frame)?);
        }
    }
    qp_metric(&HyperbolaSamples::sum(&parts)?)
}

/// Single-transmit speed-of-sound estimate.
pub fn estimate_sos(
    data: &ChannelData,
    grid: &BeamformGrid,
    geom: &ArrayGeometry,
    scheme: &TransmitScheme,
    aperture: &ApertureConfig,
    cfg: &SosConfig,
) -> Result<SosEstimate> {
    estimate_sos_compound(&[Acquisition { data, scheme }], grid, geom, aperture, cfg)
}

/// Maximize `Qp` over `cfg.bounds` with a bounded scalar search; the
/// result is rounded to the nearest integer m/s.
pub fn estimate_sos_compound(
    acquisitions: &[Acquisition<'_>],
    grid: &BeamformGrid,
    geom: &ArrayGeometry,
    aperture: &ApertureConfig,
    cfg: &SosConfig,
) -> Result<SosEstimate> {
    let (lo, hi) = cfg.bounds;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(invalid("bounds", format!("need 0 < c_lo < c_hi, got ({lo}, {hi})")));
    }
    if !(cfg.tolerance > 0.0 && cfg.c0 > 0.0) {
        return Err(invalid("sos config", "c0 and tolerance must be positive"));
    }
    let mut curve = Vec::new();
    let mut failure = None;
    let best = minimize_bounded(
        |c| match qp_at_speed(acquisitions, grid, geom, aperture, cfg.c0, c) {
            Ok(q) => {
                curve.push((c, q));
                -q
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        cfg.tolerance,
        500,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let c_hat = best.x.round().clamp(lo.ceil(), hi.floor());
    let at_bound = c_hat - lo <= cfg.tolerance || hi - c_hat <= cfg.tolerance;
    if at_bound {
        log::warn!("speed-of-sound estimate {c_hat} m/s sits at the search bound ({lo}, {hi})");
    }
    Ok(SosEstimate {
        c_hat,
        qp_curve: curve,
        bounds: cfg.bounds,
        at_bound,
    })
}
