//! Delay-and-sum beamforming as a sparse matrix product.
//!
//! Each row of a [`DasMatrix`] belongs to one grid point. For every element
//! inside the receive aperture the row holds the fast-time interpolation
//! weights at the two-way travel time, multiplied by the phase rotator
//! `exp(i 2 pi fc tau)` when the data are baseband I/Q. Beamforming is then a
//! single sparse product against channel data stacked element by element.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aperture::{in_aperture, ApertureConfig};
use crate::error::{invalid, DasError, Result};
use crate::geometry::{travel_time, ArrayGeometry, GridPoint, Medium, TransmitScheme};
use crate::signal::{ChannelData, SignalKind};
use crate::sparse::CsrMatrix;

/// Beamforming points. Rectangular grids are ordered column-major with depth
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformGrid {
    points: Vec<GridPoint>,
    rows: usize,
    cols: usize,
}

impl BeamformGrid {
    /// `nx` lateral by `nz` axial points spanning the given bounds inclusively.
    pub fn rectangular(x_range: (f64, f64), z_range: (f64, f64), nx: usize, nz: usize) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(invalid("grid", "point counts must be positive"));
        }
        if !(z_range.0 > 0.0 && z_range.1 > 0.0) {
            return Err(invalid("grid", "depths must be positive"));
        }
        let lin = |(a, b): (f64, f64), n: usize, k: usize| {
            if n == 1 {
                a
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        };
        let mut points = Vec::with_capacity(nx * nz);
        for ix in 0..nx {
            let x = lin(x_range, nx, ix);
            for iz in 0..nz {
                points.push(GridPoint::new(x, lin(z_range, nz, iz)));
            }
        }
        Ok(Self {
            points,
            rows: nz,
            cols: nx,
        })
    }

    /// Arbitrary point list, treated as a single column.
    pub fn from_points(points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("grid", "at least one point is required"));
        }
        if let Some(p) = points.iter().find(|p| !(p.z > 0.0)) {
            return Err(invalid("grid", format!("depth must be positive, got {}", p.z)));
        }
        let rows = points.len();
        Ok(Self {
            points,
            rows,
            cols: 1,
        })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(rows, cols)`: rows run along depth, columns along x.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        col * self.rows + row
    }

    /// Same lateral positions, depths multiplied by `factor`.
    pub fn with_depth_scaled(&self, factor: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| GridPoint::new(p.x, p.z * factor))
                .collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// SHA-256 over the point coordinates and shape, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows as u64).to_le_bytes());
        h.update((self.cols as u64).to_le_bytes());
        for p in &self.points {
            h.update(p.x.to_le_bytes());
            h.update(p.z.to_le_bytes());
        }
        to_hex(&h.finalize())
    }
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// One sample per element (q = 1).
    Nearest,
    /// Two samples per element (q = 2).
    Linear,
}

impl Interpolation {
    pub fn points(self) -> usize {
        match self {
            Interpolation::Nearest => 1,
            Interpolation::Linear => 2,
        }
    }
}

/// Sampling parameters the matrix is built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalMeta {
    pub fs: f64,
    pub fc: f64,
    pub n_samples: usize,
    pub is_iq: bool,
}

impl SignalMeta {
    pub fn of(data: &ChannelData) -> Self {
        let p = data.params();
        Self {
            fs: p.fs,
            fc: p.fc,
            n_samples: data.n_samples(),
            is_iq: data.kind() == SignalKind::Iq,
        }
    }
}

/// Everything a DAS matrix depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid: String,
    pub grid_len: usize,
    pub scheme: TransmitScheme,
    pub geometry: ArrayGeometry,
    pub speed_of_sound: f64,
    pub signal: SignalMeta,
    pub aperture: ApertureConfig,
    pub interpolation: Interpolation,
}

impl Provenance {
    pub fn new(
        grid: &BeamformGrid,
        geom: &ArrayGeometry,
        scheme: &TransmitScheme,
        medium: &Medium,
        signal: SignalMeta,
        aperture: &ApertureConfig,
        interpolation: Interpolation,
    ) -> Self {
        Self {
            grid: grid.fingerprint(),
            grid_len: grid.len(),
            scheme: *scheme,
            geometry: *geom,
            speed_of_sound: medium.speed_of_sound,
            signal,
            aperture: *aperture,
            interpolation,
        }
    }

    /// Stable SHA-256 digest of the provenance.
    pub fn digest(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("provenance serializes");
        Sha256::digest(json).into()
    }

    /// Human-readable list of fields that differ.
    pub fn diff(&self, other: &Provenance) -> Vec<String> {
        let a = serde_json::to_value(self).expect("provenance serializes");
        let b = serde_json::to_value(other).expect("provenance serializes");
        match (a, b) {
            (serde_json::Value::Object(a), serde_json::Value::Object(b)) => a
                .iter()
                .filter(|(k, v)| b.get(*k) != Some(v))
                .map(|(k, v)| format!("{k}: {v} vs {}", b.get(k).cloned().unwrap_or_default()))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Sparse DAS matrix of size `M x (n_s N_e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DasMatrix {
    csr: CsrMatrix,
    provenance: Provenance,
}

impl DasMatrix {
    pub(crate) fn from_parts(csr: CsrMatrix, provenance: Provenance) -> Result<Self> {
        let expected_cols = provenance.signal.n_samples * provenance.geometry.num_elements();
        if csr.nrows() != provenance.grid_len || csr.ncols() != expected_cols {
            return Err(DasError::ShapeMismatch(format!(
                "matrix is {}x{}, provenance expects {}x{}",
                csr.nrows(),
                csr.ncols(),
                provenance.grid_len,
                expected_cols
            )));
        }
        Ok(Self { csr, provenance })
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn nrows(&self) -> usize {
        self.csr.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.csr.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub fn n_samples(&self) -> usize {
        self.provenance.signal.n_samples
    }

    pub fn n_elements(&self) -> usize {
        self.provenance.geometry.num_elements()
    }

    /// False when no sample of any element fell inside the acquisition
    /// window, which usually means the grid and `t0` disagree.
    pub fn has_support(&self) -> bool {
        self.nnz() > 0
    }

    /// `1 - nnz / (M n_s N_e)`.
    pub fn sparsity(&self) -> f64 {
        let total = self.nrows() as f64 * self.ncols() as f64;
        if total == 0.0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / total
    }
}

/// Build the DAS matrix for `grid`.
///
/// The fractional (1-based) fast-time index of element `i` at a point is
/// `u = tau fs + 1`; contributions with `u` outside `[1, n_s - 1]` are dropped.
/// Zero interpolation weights are not stored.
#[allow(clippy::too_many_arguments)]
pub fn build_das_matrix(
    grid: &BeamformGrid,
    geom: &ArrayGeometry,
    scheme: &TransmitScheme,
    medium: &Medium,
    signal: SignalMeta,
    aperture: &ApertureConfig,
    interp: Interpolation,
) -> Result<DasMatrix> {
    if signal.n_samples < 2 {
        return Err(invalid("n_samples", "at least two samples are required"));
    }
    if !(signal.fs > 0.0 && signal.fc > 0.0) {
        return Err(invalid("signal", "fs and fc must be positive"));
    }
    let ns = signal.n_samples;
    let xe = geom.element_positions();
    let upper = (ns - 1) as f64;
    let rotate = |tau: f64| {
        if signal.is_iq {
            Complex64::from_polar(1.0, 2.0 * PI * signal.fc * tau)
        } else {
            Complex64::new(1.0, 0.0)
        }
    };

    let row_entries = |pt: &GridPoint| -> Vec<(usize, Complex64)> {
        let mut row = Vec::with_capacity(xe.len() * interp.points());
        for (i, &x) in xe.iter().enumerate() {
            if !in_aperture(*pt, x, aperture.f_number) {
                continue;
            }
            let tau = travel_time(*pt, x, scheme, geom, medium);
            let u = tau * signal.fs + 1.0;
            if !(u >= 1.0 && u <= upper) {
                continue;
            }
            let rot = rotate(tau);
            let base = i * ns;
            match interp {
                Interpolation::Nearest => {
                    let k = u.round() as usize;
                    row.push((base + k - 1, rot));
                }
                Interpolation::Linear => {
                    let f = u.floor();
                    let k = f as usize;
                    let w_lo = f + 1.0 - u;
                    let w_hi = u - f;
                    if w_lo != 0.0 {
                        row.push((base + k - 1, rot * w_lo));
                    }
                    if w_hi != 0.0 {
                        row.push((base + k, rot * w_hi));
                    }
                }
            }
        }
        row
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<(usize, Complex64)>> = {
        use rayon::prelude::*;
        grid.points().par_iter().map(row_entries).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<(usize, Complex64)>> = grid.points().iter().map(row_entries).collect();

    let csr = CsrMatrix::from_rows(ns * xe.len(), rows)?;
    if csr.nnz() == 0 {
        log::warn!("DAS matrix is empty: no travel time falls inside the acquisition window");
    }
    let provenance = Provenance::new(grid, geom, scheme, medium, signal, aperture, interp);
    DasMatrix::from_parts(csr, provenance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformedFrame {
    pub values: Vec<Complex64>,
    pub provenance: Provenance,
}

impl BeamformedFrame {
    pub fn envelope(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

pub(crate) fn check_data(matrix: &DasMatrix, data: &ChannelData) -> Result<()> {
    let meta = SignalMeta::of(data);
    let expected = &matrix.provenance.signal;
    if data.n_samples() != matrix.n_samples() || data.n_elements() != matrix.n_elements() {
        return Err(DasError::ShapeMismatch(format!(
            "data is {} samples x {} elements, matrix was built for {} x {}",
            data.n_samples(),
            data.n_elements(),
            matrix.n_samples(),
            matrix.n_elements()
        )));
    }
    if meta.is_iq != expected.is_iq {
        return Err(DasError::SignalKind {
            expected: if expected.is_iq { "iq" } else { "rf" },
            actual: data.kind().name(),
        });
    }
    Ok(())
}

/// Beamform every frame of `data` with one sparse product.
pub fn beamform(matrix: &DasMatrix, data: &ChannelData) -> Result<Vec<BeamformedFrame>> {
    check_data(matrix, data)?;
    let stacked = data.to_complex();
    let out = matrix.csr.mul_dense(&stacked, data.n_frames())?;
    Ok(out
        .chunks(matrix.nrows())
        .map(|values| BeamformedFrame {
            values: values.to_vec(),
            provenance: matrix.provenance.clone(),
        })
        .collect())
}

/// Coherent compounding: complex mean of frames beamformed on the same grid.
pub fn compound(frames: &[BeamformedFrame]) -> Result<BeamformedFrame> {
    let first = frames
        .first()
        .ok_or_else(|| invalid("frames", "cannot compound an empty list"))?;
    for f in &frames[1..] {
        if f.provenance.grid != first.provenance.grid || f.values.len() != first.values.len() {
            return Err(DasError::ShapeMismatch(
                "frames were beamformed on different grids".into(),
            ));
        }
    }
    let n = frames.len() as f64;
    let mut values = vec![Complex64::default(); first.values.len()];
    for f in frames {
        for (acc, v) in values.iter_mut().zip(&f.values) {
            *acc += v;
        }
    }
    values.iter_mut().for_each(|v| *v /= n);
    Ok(BeamformedFrame {
        values,
        provenance: first.provenance.clone(),
    })
}
