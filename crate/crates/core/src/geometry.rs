//! Pulse-echo geometry for a uniform linear array (ULA).
//!
//! Coordinates follow the usual ULA convention: `x` runs along the array from
//! the first to the last element with `x = 0` at the array center, `z` points
//! into the medium with `z = 0` on the element surface. Lengths are meters,
//! times are seconds.
//!
//! Transmit distances are measured from the instant the first element fires,
//! so the minimum transmit delay over the array is zero.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DasError, Result};

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    num_elements: usize,
    pitch: f64,
    element_width: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, pitch: f64, element_width: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(invalid("num_elements", "at least two elements are required"));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(invalid("pitch", format!("must be positive, got {pitch}")));
        }
        if !(element_width > 0.0 && element_width <= pitch) {
            return Err(invalid(
                "element_width",
                format!("must lie in (0, pitch], got {element_width}"),
            ));
        }
        Ok(Self {
            num_elements,
            pitch,
            element_width,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn element_width(&self) -> f64 {
        self.element_width
    }

    /// Center-to-center distance from the first to the last element.
    pub fn aperture_length(&self) -> f64 {
        (self.num_elements - 1) as f64 * self.pitch
    }

    /// Lateral element centers, `x_i = (p/2)(2i - N - 1)` for `i = 1..=N`. All
    /// elements sit at `z = 0`.
    pub fn element_positions(&self) -> Vec<f64> {
        let n = self.num_elements as f64;
        (1..=self.num_elements)
            .map(|i| 0.5 * self.pitch * (2.0 * i as f64 - n - 1.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub speed_of_sound: f64,
}

impl Medium {
    pub fn new(speed_of_sound: f64) -> Result<Self> {
        if !(speed_of_sound.is_finite() && speed_of_sound > 0.0) {
            return Err(invalid(
                "speed_of_sound",
                format!("must be positive and finite, got {speed_of_sound}"),
            ));
        }
        Ok(Self { speed_of_sound })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub z: f64,
}

impl GridPoint {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
}

/// Virtual point source (diverging wave, `z < 0`) or focus (`z > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualSource {
    pub x: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Wavefront {
    /// Plane wave steered by `tilt` radians, counterclockwise from the z-axis.
    Plane { tilt: f64 },
    /// Diverging (circular) wave emanating from a virtual source behind the array.
    Circular { source: VirtualSource },
    /// Focused wave converging on a focus in front of the array.
    Focused { focus: VirtualSource },
}

/// One transmit event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmitScheme {
    pub wavefront: Wavefront,
    /// Acquisition start time (s).
    pub t0: f64,
}

impl TransmitScheme {
    pub fn plane(tilt: f64, t0: f64) -> Result<Self> {
        check_tilt(tilt)?;
        Ok(Self {
            wavefront: Wavefront::Plane { tilt },
            t0,
        })
    }

    /// Circular wave defined by its tilt and angular width over an array of
    /// the given aperture length.
    pub fn circular(tilt: f64, width: f64, aperture_length: f64, t0: f64) -> Result<Self> {
        let source = virtual_source(tilt, width, aperture_length)?;
        Self::circular_from_source(source, t0)
    }

    pub fn circular_from_source(source: VirtualSource, t0: f64) -> Result<Self> {
        if !(source.z < 0.0) {
            return Err(DasError::Geometry(format!(
                "a diverging wave needs a virtual source behind the array (z0 < 0), got z0 = {}",
                source.z
            )));
        }
        Ok(Self {
            wavefront: Wavefront::Circular { source },
            t0,
        })
    }

    pub fn focused(focus: VirtualSource, t0: f64) -> Result<Self> {
        if !(focus.z > 0.0) {
            return Err(DasError::Geometry(format!(
                "a focused wave needs its focus in front of the array (z0 > 0), got z0 = {}",
                focus.z
            )));
        }
        Ok(Self {
            wavefront: Wavefront::Focused { focus },
            t0,
        })
    }

    /// Transmit distance to `pt`, dispatched on the wavefront kind.
    pub fn transmit_distance(&self, pt: GridPoint, aperture_length: f64) -> f64 {
        match self.wavefront {
            Wavefront::Plane { tilt } => transmit_distance_plane(pt, tilt, aperture_length),
            Wavefront::Circular { source } => {
                transmit_distance_circular(pt, source, aperture_length)
            }
            Wavefront::Focused { focus } => general_distance(pt, focus, aperture_length),
        }
    }
}

fn check_tilt(tilt: f64) -> Result<()> {
    if !(tilt.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(invalid("tilt", format!("must lie in (-pi/2, pi/2), got {tilt}")));
    }
    Ok(())
}

fn heaviside(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Virtual source of a circular wave of tilt `tilt` and angular width `width`.
pub fn virtual_source(tilt: f64, width: f64, aperture_length: f64) -> Result<VirtualSource> {
    check_tilt(tilt)?;
    if !(width > 0.0 && width < std::f64::consts::PI) {
        return Err(DasError::Geometry(format!(
            "angular width must lie in (0, pi), got {width}"
        )));
    }
    if !(aperture_length > 0.0) {
        return Err(invalid("aperture_length", "must be positive"));
    }
    let half = 0.5 * aperture_length;
    let sb = width.sin();
    Ok(VirtualSource {
        x: half * (2.0 * tilt).sin() / sb,
        z: -half * (width.cos() + (2.0 * tilt).cos()) / sb,
    })
}

/// Diverging-wave transmit distance. Only certified for points in the shadow
/// of the array; other points are computed with the same formula.
pub fn transmit_distance_circular(pt: GridPoint, source: VirtualSource, aperture_length: f64) -> f64 {
    let edge = source.x.abs() - 0.5 * aperture_length;
    (pt.x - source.x).hypot(pt.z - source.z) - (heaviside(edge) * edge).hypot(source.z)
}

/// Plane-wave transmit distance, the `width -> 0+` limit of the circular case.
pub fn transmit_distance_plane(pt: GridPoint, tilt: f64, aperture_length: f64) -> f64 {
    (sgn(tilt) * 0.5 * aperture_length - pt.x) * tilt.sin() + pt.z * tilt.cos()
}

/// Transmit distance for focused (`z0 > 0`) or diverging (`z0 < 0`) waves.
///
/// The second term is the distance from the source to the first element that
/// fires (the nearest one for a diverging wave, the farthest one for a
/// focused wave), so the distance is zero at that element and the diverging
/// case coincides with [`transmit_distance_circular`].
pub fn transmit_distance_general(
    pt: GridPoint,
    source: VirtualSource,
    aperture_length: f64,
) -> Result<f64> {
    if source.z == 0.0 {
        return Err(DasError::Geometry(
            "virtual source on the array plane (z0 = 0)".into(),
        ));
    }
    Ok(general_distance(pt, source, aperture_length))
}

fn general_distance(pt: GridPoint, source: VirtualSource, aperture_length: f64) -> f64 {
    let s0 = sgn(source.z);
    let edge = source.x.abs() + s0 * 0.5 * aperture_length;
    sgn(pt.z - source.z) * (pt.x - source.x).hypot(pt.z - source.z)
        + s0 * (heaviside(edge) * edge).hypot(source.z)
}

/// Distance from the scatterer back to the element at lateral position `element_x`.
pub fn receive_distance(pt: GridPoint, element_x: f64) -> f64 {
    (element_x - pt.x).hypot(pt.z)
}

/// Two-way travel time to `pt` and back to the element at `element_x`,
/// relative to the acquisition start.
pub fn travel_time(
    pt: GridPoint,
    element_x: f64,
    scheme: &TransmitScheme,
    geom: &ArrayGeometry,
    medium: &Medium,
) -> f64 {
    let d_tx = scheme.transmit_distance(pt, geom.aperture_length());
    (d_tx + receive_distance(pt, element_x)) / medium.speed_of_sound - scheme.t0
}

/// Residual of the diffraction-hyperbola equation at `(x, t)`, where `t` is
/// absolute time (acquisition start not subtracted). Zero on the hyperbola of
/// the scatterer at `pt`.
pub fn hyperbola_residual(
    pt: GridPoint,
    x: f64,
    t: f64,
    scheme: &TransmitScheme,
    geom: &ArrayGeometry,
    medium: &Medium,
) -> f64 {
    let c = medium.speed_of_sound;
    let d_tx = scheme.transmit_distance(pt, geom.aperture_length());
    let dt = t - d_tx / c;
    dt * dt / (pt.z * pt.z / (c * c)) - (x - pt.x).powi(2) / (pt.z * pt.z) - 1.0
}
