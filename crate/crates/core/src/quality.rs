//! Image-quality metrics: contrast-to-noise ratio and full width at half
//! maximum.

use serde::{Deserialize, Serialize};

use crate::beamformer::{BeamformGrid, BeamformedFrame};
use crate::error::{invalid, DasError, Result};
use crate::geometry::GridPoint;
use crate::simulator::Disk;

/// Minimum pixel count of each CNR region.
pub const MIN_REGION_PIXELS: usize = 25;

/// Normalized envelope values are floored here before taking logarithms.
const DB_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Exterior {
    /// Ring around the interior disk center.
    Annulus { inner: f64, outer: f64 },
    /// Axis-aligned rectangle; pixels inside the interior disk are excluded.
    Rect { x0: f64, x1: f64, z0: f64, z1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub interior: Disk,
    pub exterior: Exterior,
}

impl RegionSpec {
    /// Pixel indices of the interior and exterior regions.
    pub fn pixels(&self, grid: &BeamformGrid) -> Result<(Vec<usize>, Vec<usize>)> {
        let d = self.interior;
        if let Exterior::Annulus { inner, outer } = self.exterior {
            if !(inner >= d.radius && outer > inner) {
                return Err(DasError::UnusableRegion(format!(
                    "annulus ({inner}, {outer}) must lie outside the interior radius {}",
                    d.radius
                )));
            }
        }
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        for (k, p) in grid.points().iter().enumerate() {
            let r = (p.x - d.x).hypot(p.z - d.z);
            if r <= d.radius {
                inside.push(k);
                continue;
            }
            let out = match self.exterior {
                Exterior::Annulus { inner, outer } => r >= inner && r <= outer,
                Exterior::Rect { x0, x1, z0, z1 } => p.x >= x0 && p.x <= x1 && p.z >= z0 && p.z <= z1,
            };
            if out {
                outside.push(k);
            }
        }
        for (name, px) in [("interior", &inside), ("exterior", &outside)] {
            if px.len() < MIN_REGION_PIXELS {
                return Err(DasError::UnusableRegion(format!(
                    "{name} region holds {} pixels, at least {MIN_REGION_PIXELS} are needed",
                    px.len()
                )));
            }
        }
        Ok((inside, outside))
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Envelope in dB relative to its maximum.
pub fn to_db(envelope: &[f64]) -> Vec<f64> {
    let max = envelope.iter().copied().fold(0.0, f64::max);
    envelope
        .iter()
        .map(|&e| {
            if max > 0.0 {
                20.0 * (e / max).max(DB_FLOOR).log10()
            } else {
                20.0 * DB_FLOOR.log10()
            }
        })
        .collect()
}

/// `|mu_in - mu_out| / sqrt(sigma_in^2 + sigma_out^2)` on the dB envelope.
pub fn cnr_envelope(envelope: &[f64], grid: &BeamformGrid, region: &RegionSpec) -> Result<f64> {
    if envelope.len() != grid.len() {
        return Err(DasError::ShapeMismatch(format!(
            "{} envelope values for a {}-point grid",
            envelope.len(),
            grid.len()
        )));
    }
    let (inside, outside) = region.pixels(grid)?;
    let db = to_db(envelope);
    let (mi, si) = mean_std(inside.iter().map(|&k| db[k]));
    let (mo, so) = mean_std(outside.iter().map(|&k| db[k]));
    if si == 0.0 || so == 0.0 {
        return Err(DasError::UnusableRegion("a region has zero variance".into()));
    }
    Ok((mi - mo).abs() / (si * si + so * so).sqrt())
}

pub fn cnr(frame: &BeamformedFrame, grid: &BeamformGrid, region: &RegionSpec) -> Result<f64> {
    cnr_envelope(&frame.envelope(), grid, region)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Lateral,
    Axial,
}

/// Width of the amplitude profile at half its peak (the -6 dB width).
///
/// The peak is the largest envelope pixel within `search_radius` of `point`;
/// the profile runs through it along `axis` on a rectangular grid.
pub fn fwhm_envelope(
    envelope: &[f64],
    grid: &BeamformGrid,
    point: GridPoint,
    axis: Axis,
    search_radius: f64,
) -> Result<f64> {
    if envelope.len() != grid.len() {
        return Err(DasError::ShapeMismatch(format!(
            "{} envelope values for a {}-point grid",
            envelope.len(),
            grid.len()
        )));
    }
    let (rows, cols) = grid.shape();
    let pts = grid.points();
    let peak = pts
        .iter()
        .enumerate()
        .filter(|(_, p)| (p.x - point.x).hypot(p.z - point.z) <= search_radius)
        .max_by(|a, b| envelope[a.0].total_cmp(&envelope[b.0]))
        .map(|(k, _)| k)
        .ok_or_else(|| invalid("point", "no grid pixel within the search radius"))?;
    let (col, row) = (peak / rows, peak % rows);
    if row == 0 || row + 1 == rows || col == 0 || col + 1 == cols {
        return Err(DasError::Unresolvable("peak lies on the grid edge".into()));
    }
    let (coords, profile): (Vec<f64>, Vec<f64>) = match axis {
        Axis::Lateral => (0..cols)
            .map(|c| {
                let k = grid.index(row, c);
                (pts[k].x, envelope[k])
            })
            .unzip(),
        Axis::Axial => (0..rows)
            .map(|r| {
                let k = grid.index(r, col);
                (pts[k].z, envelope[k])
            })
            .unzip(),
    };
    let centre = match axis {
        Axis::Lateral => col,
        Axis::Axial => row,
    };
    let half = 0.5 * profile[centre];
    if !(half > 0.0) {
        return Err(DasError::Unresolvable("zero envelope at the peak".into()));
    }
    let crossing = |step: isize| -> Result<f64> {
        let mut k = centre as isize;
        loop {
            let next = k + step;
            if next < 0 || next as usize >= profile.len() {
                return Err(DasError::Unresolvable("profile does not fall to half maximum".into()));
            }
            let (a, b) = (profile[k as usize], profile[next as usize]);
            if b < half {
                let t = (a - half) / (a - b);
                let (xa, xb) = (coords[k as usize], coords[next as usize]);
                return Ok(xa + t * (xb - xa));
            }
            k = next;
        }
    };
    Ok((crossing(1)? - crossing(-1)?).abs())
}

pub fn fwhm(
    frame: &BeamformedFrame,
    grid: &BeamformGrid,
    point: GridPoint,
    axis: Axis,
    search_radius: f64,
) -> Result<f64> {
    fwhm_envelope(&frame.envelope(), grid, point, axis, search_radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> BeamformGrid {
        BeamformGrid::rectangular((-5e-3, 5e-3), (5e-3, 15e-3), 101, 101).unwrap()
    }

    fn region() -> RegionSpec {
        RegionSpec {
            interior: Disk { x: 0.0, z: 10e-3, radius: 2e-3 },
            exterior: Exterior::Annulus { inner: 3e-3, outer: 4.5e-3 },
        }
    }

    fn jitter(k: usize) -> f64 {
        ((k * 7919) % 101) as f64 / 101.0 - 0.5
    }

    #[test]
    fn identical_statistics_give_zero() {
        let g = grid();
        let env: Vec<f64> = (0..g.len()).map(|k| 1.0 + 0.1 * jitter(k)).collect();
        let c = cnr_envelope(&env, &g, &region()).unwrap();
        assert!(c < 0.1, "{c}");
    }

    #[test]
    fn contrast_grows_with_level_gap() {
        let g = grid();
        let (inside, _) = region().pixels(&g).unwrap();
        let mut last = 0.0;
        for gap in [0.1, 0.3, 0.6] {
            let env: Vec<f64> = (0..g.len())
                .map(|k| {
                    let base = if inside.contains(&k) { gap } else { 1.0 };
                    base * (1.0 + 1e-3 * jitter(k))
                })
                .collect();
            let c = cnr_envelope(&env, &g, &region()).unwrap();
            assert!(c > 100.0);
            if last > 0.0 {
                assert!(c < last);
            }
            last = c;
        }
    }

    #[test]
    fn constant_regions_are_unusable() {
        let g = grid();
        let env = vec![1.0; g.len()];
        assert!(matches!(cnr_envelope(&env, &g, &region()), Err(DasError::UnusableRegion(_))));
    }

    #[test]
    fn tiny_regions_are_unusable() {
        let g = grid();
        let r = RegionSpec {
            interior: Disk { x: 0.0, z: 10e-3, radius: 0.1e-3 },
            exterior: Exterior::Rect { x0: -5e-3, x1: 5e-3, z0: 5e-3, z1: 15e-3 },
        };
        let env: Vec<f64> = (0..g.len()).map(|k| 1.0 + jitter(k)).collect();
        assert!(matches!(cnr_envelope(&env, &g, &r), Err(DasError::UnusableRegion(_))));
    }

    #[test]
    fn cnr_ignores_scale() {
        let g = grid();
        let env: Vec<f64> = (0..g.len()).map(|k| 1.0 + jitter(k) + (k % 3) as f64).collect();
        let scaled: Vec<f64> = env.iter().map(|v| 37.0 * v).collect();
        let (a, b) = (cnr_envelope(&env, &g, &region()).unwrap(), cnr_envelope(&scaled, &g, &region()).unwrap());
        assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }

    fn blob(g: &BeamformGrid, cx: f64, cz: f64, s: f64) -> Vec<f64> {
        g.points()
            .iter()
            .map(|p| (-((p.x - cx).powi(2) + (p.z - cz).powi(2)) / (2.0 * s * s)).exp())
            .collect()
    }

    #[test]
    fn gaussian_blob_width() {
        let g = grid();
        let s = 0.4e-3;
        let env = blob(&g, 0.3e-3, 9e-3, s);
        let expected = 2.0 * (2.0 * 2f64.ln()).sqrt() * s;
        let pixel = 1e-4;
        for axis in [Axis::Lateral, Axis::Axial] {
            let w = fwhm_envelope(&env, &g, GridPoint::new(0.2e-3, 9.1e-3), axis, 0.3e-3).unwrap();
            assert!((w - expected).abs() <= pixel, "{axis:?}: {w} vs {expected}");
        }
    }

    #[test]
    fn edge_peak_is_unresolvable() {
        let g = grid();
        let env = blob(&g, -5e-3, 10e-3, 0.4e-3);
        let r = fwhm_envelope(&env, &g, GridPoint::new(-5e-3, 10e-3), Axis::Lateral, 0.3e-3);
        assert!(matches!(r, Err(DasError::Unresolvable(_))));
    }

    #[test]
    fn wide_profile_is_unresolvable() {
        let g = grid();
        let env = blob(&g, 0.0, 10e-3, 20e-3);
        let r = fwhm_envelope(&env, &g, GridPoint::new(0.0, 10e-3), Axis::Lateral, 0.3e-3);
        assert!(matches!(r, Err(DasError::Unresolvable(_))));
    }
}
