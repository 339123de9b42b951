//! `das metrics`: CNR around cysts and FWHM of wire targets.

use std::path::Path;

use anyhow::{bail, Context};
use das_core::geometry::GridPoint;
use das_core::quality::{cnr_envelope, fwhm_envelope, Axis, Exterior, RegionSpec};
use das_core::signal::envelope;
use das_core::simulator::Disk;
use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;
use crate::image::RawImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Cyst,
    Wire,
}

#[derive(Debug, Deserialize)]
struct Target {
    kind: TargetKind,
    x_m: f64,
    z_m: f64,
    #[serde(default)]
    radius_m: Option<f64>,
    /// Annulus bounds; default to 1.2 and 1.7 times the cyst radius.
    #[serde(default)]
    inner_m: Option<f64>,
    #[serde(default)]
    outer_m: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Row<'a> {
    param: &'a str,
    kind: TargetKind,
    x_m: f64,
    z_m: f64,
    cnr: Option<f64>,
    fwhm_lateral_m: Option<f64>,
    fwhm_axial_m: Option<f64>,
}

pub fn run(
    input: &Path,
    grid: Option<GridSpec>,
    targets: &Path,
    out: &Path,
    param: Option<&str>,
    search_radius: Option<f64>,
) -> anyhow::Result<()> {
    let img = RawImage::load(input)?;
    if let Some(g) = grid {
        if g != img.meta.grid {
            bail!("--grid {:?} differs from the grid stored with the image {:?}", g, img.meta.grid);
        }
    }
    let grid = img.meta.grid.build()?;
    let env = envelope(&img.values);
    let radius = search_radius.unwrap_or(img.meta.speed_of_sound / img.meta.fc);

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(targets)
        .with_context(|| format!("reading {}", targets.display()))?;
    let mut writer = csv::Writer::from_path(out).with_context(|| format!("writing {}", out.display()))?;
    let param = param.unwrap_or("");
    for (i, rec) in reader.deserialize::<Target>().enumerate() {
        let t = rec.with_context(|| format!("target row {}", i + 1))?;
        let mut row = Row {
            param,
            kind: t.kind,
            x_m: t.x_m,
            z_m: t.z_m,
            cnr: None,
            fwhm_lateral_m: None,
            fwhm_axial_m: None,
        };
        let at = || format!("target row {} at ({}, {})", i + 1, t.x_m, t.z_m);
        match t.kind {
            TargetKind::Cyst => {
                let r = t.radius_m.with_context(|| format!("{}: cysts need radius_m", at()))?;
                let region = RegionSpec {
                    interior: Disk { x: t.x_m, z: t.z_m, radius: r },
                    exterior: Exterior::Annulus {
                        inner: t.inner_m.unwrap_or(1.2 * r),
                        outer: t.outer_m.unwrap_or(1.7 * r),
                    },
                };
                row.cnr = Some(cnr_envelope(&env, &grid, &region).with_context(at)?);
            }
            TargetKind::Wire => {
                let p = GridPoint::new(t.x_m, t.z_m);
                row.fwhm_lateral_m = Some(fwhm_envelope(&env, &grid, p, Axis::Lateral, radius).with_context(at)?);
                row.fwhm_axial_m = Some(fwhm_envelope(&env, &grid, p, Axis::Axial, radius).with_context(at)?);
            }
        }
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
