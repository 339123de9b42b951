//! Element directivity and the directivity-derived receive f-number.
//!
//! A soft-baffled strip element of width `W` receives with directivity
//! `D(t) = cos(t) sinc(pi (W/lambda) sin(t))`. The receive aperture at a pixel
//! is limited to the elements seen under an angle where `D` stays above a
//! threshold (0.71, i.e. -3 dB, by default). That half-angle `alpha` maps to the
//! f-number `1 / (2 tan(alpha))`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DasError, Result};
use crate::geometry::GridPoint;
use crate::optimize::minimize_bounded;

pub const DEFAULT_DIRECTIVITY_THRESHOLD: f64 = 0.71;

/// Absolute tolerance of the angle-of-view solve (rad).
pub const ANGLE_TOLERANCE: f64 = 1e-6;

/// Bracket resolution used to isolate the first threshold crossing.
const SCAN_STEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureConfig {
    /// Receive f-number; 0 selects the full aperture.
    pub f_number: f64,
    pub directivity_threshold: f64,
    /// Receive steering angle (rad).
    pub receive_steer: f64,
}

impl ApertureConfig {
    pub fn new(f_number: f64) -> Result<Self> {
        Self::with_threshold(f_number, DEFAULT_DIRECTIVITY_THRESHOLD, 0.0)
    }

    pub fn full() -> Self {
        Self {
            f_number: 0.0,
            directivity_threshold: DEFAULT_DIRECTIVITY_THRESHOLD,
            receive_steer: 0.0,
        }
    }

    pub fn with_threshold(f_number: f64, directivity_threshold: f64, receive_steer: f64) -> Result<Self> {
        if !(f_number.is_finite() && f_number >= 0.0) {
            return Err(invalid("f_number", format!("must be >= 0, got {f_number}")));
        }
        check_threshold(directivity_threshold)?;
        Ok(Self {
            f_number,
            directivity_threshold,
            receive_steer,
        })
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid("directivity_threshold", format!("must lie in (0, 1], got {t}")));
    }
    Ok(())
}

/// Unnormalized sinc, `sin(u)/u` with `sinc(0) = 1`.
pub fn sinc(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.sin() / u
    }
}

pub fn directivity(theta: f64, width_over_lambda: f64) -> f64 {
    theta.cos() * sinc(PI * width_over_lambda * theta.sin())
}

/// Smallest significant wavelength, `c / (fc + B/2)`.
pub fn lambda_min(c: f64, fc: f64, bandwidth: f64) -> f64 {
    c / (fc + 0.5 * bandwidth)
}

/// Half angle-of-view: the smallest `alpha` in `[0, pi/2]` at which
/// `D(alpha + |steer|)` drops to `threshold`.
///
/// The first crossing is bracketed on a fine grid, then refined with a bounded
/// minimization of `|D - threshold|`.
pub fn solve_angle_of_view(width_over_lambda: f64, threshold: f64, receive_steer: f64) -> Result<f64> {
    check_threshold(threshold)?;
    if !(width_over_lambda > 0.0) {
        return Err(invalid("width_over_lambda", "must be positive"));
    }
    let steer = receive_steer.abs();
    if steer >= FRAC_PI_2 {
        return Err(invalid("receive_steer", "must lie in (-pi/2, pi/2)"));
    }
    let d = |alpha: f64| directivity(alpha + steer, width_over_lambda);
    let d0 = d(0.0);
    if d0 < threshold {
        return Err(DasError::ThresholdUnreachable {
            steer_rad: receive_steer,
            directivity: d0,
            threshold,
        });
    }
    if d0 == threshold {
        return Ok(0.0);
    }
    let span = FRAC_PI_2 - steer;
    let step = span / SCAN_STEPS as f64;
    let mut lo = 0.0;
    let mut hi = span;
    for k in 1..=SCAN_STEPS {
        let a = k as f64 * step;
        if d(a) <= threshold {
            hi = a;
            lo = a - step;
            break;
        }
    }
    let m = minimize_bounded(|a| (d(a) - threshold).abs(), lo, hi, ANGLE_TOLERANCE, 500);
    Ok(m.x)
}

pub fn fnumber_from_angle(alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(DasError::InfiniteFNumber);
    }
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(invalid("alpha", format!("must lie in (0, pi/2), got {alpha}")));
    }
    Ok(1.0 / (2.0 * alpha.tan()))
}

/// Result of the directivity-based f-number design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FNumberDesign {
    pub lambda_min: f64,
    pub width_over_lambda: f64,
    pub alpha: f64,
    pub f_number: f64,
}

/// F-number for an element of width `element_width` given the probe's center
/// frequency and bandwidth.
pub fn design_fnumber(
    element_width: f64,
    c: f64,
    fc: f64,
    bandwidth: f64,
    threshold: f64,
    receive_steer: f64,
) -> Result<FNumberDesign> {
    if !(element_width > 0.0 && c > 0.0 && fc > 0.0 && bandwidth >= 0.0) {
        return Err(invalid("fnumber design", "width, c and fc must be positive, bandwidth >= 0"));
    }
    let lambda = lambda_min(c, fc, bandwidth);
    let wl = element_width / lambda;
    let alpha = solve_angle_of_view(wl, threshold, receive_steer)?;
    Ok(FNumberDesign {
        lambda_min: lambda,
        width_over_lambda: wl,
        alpha,
        f_number: fnumber_from_angle(alpha)?,
    })
}

/// Elements contributing to the pixel `pt`: `|x_s - x_i| <= z_s / (2 f#)`.
pub fn aperture_mask(pt: GridPoint, element_xs: &[f64], f_number: f64) -> Vec<bool> {
    element_xs.iter().map(|&x| in_aperture(pt, x, f_number)).collect()
}

#[inline]
pub(crate) fn in_aperture(pt: GridPoint, element_x: f64, f_number: f64) -> bool {
    f_number == 0.0 || (pt.x - element_x).abs() <= pt.z / (2.0 * f_number)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn directivity_examples() {
        assert_eq!(directivity(0.0, 1.3), 1.0);
        assert_abs_diff_eq!(directivity(FRAC_PI_2, 0.8), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(directivity(22.62f64.to_radians(), 1.0), 0.71, epsilon = 0.005);
        assert_eq!(directivity(0.4, 1.1), directivity(-0.4, 1.1));
    }

    #[test]
    fn lambda_min_examples() {
        let l = lambda_min(1540.0, 5.2e6, 0.65 * 5.2e6);
        assert!(l > 0.22e-3 && l < 0.23e-3, "{l}");
        assert_abs_diff_eq!(lambda_min(1540.0, 5e6, 0.0), 1540.0 / 5e6);
        assert_abs_diff_eq!(lambda_min(3080.0, 5e6, 2e6), 2.0 * lambda_min(1540.0, 5e6, 2e6), epsilon = 1e-18);
    }

    #[test]
    fn angle_of_view_reference_values() {
        let alpha = solve_angle_of_view(1.0, 0.71, 0.0).unwrap();
        assert!((alpha.to_degrees() - 22.6).abs() < 0.3, "{}", alpha.to_degrees());
        let f = fnumber_from_angle(alpha).unwrap();
        assert!((f - 1.2).abs() < 0.05, "{f}");
        let f = fnumber_from_angle(solve_angle_of_view(1.17, 0.71, 0.0).unwrap()).unwrap();
        assert!((f - 1.4).abs() < 0.05, "{f}");
        assert_eq!(solve_angle_of_view(1.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn angle_solution_hits_threshold() {
        for wl in [0.3, 0.5, 1.0, 1.7, 2.5] {
            let a = solve_angle_of_view(wl, 0.71, 0.0).unwrap();
            assert_abs_diff_eq!(directivity(a, wl), 0.71, epsilon = 1e-5);
            // no earlier crossing
            let probe = a * 0.999;
            assert!(directivity(probe, wl) > 0.71);
        }
    }

    #[test]
    fn steering_narrows_the_view() {
        let a0 = solve_angle_of_view(1.0, 0.71, 0.0).unwrap();
        let a1 = solve_angle_of_view(1.0, 0.71, 10f64.to_radians()).unwrap();
        assert!(a1 < a0);
        assert!(matches!(
            solve_angle_of_view(1.0, 0.71, 40f64.to_radians()),
            Err(DasError::ThresholdUnreachable { .. })
        ));
    }

    #[test]
    fn fnumber_from_angle_examples() {
        assert_abs_diff_eq!(fnumber_from_angle(PI / 4.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fnumber_from_angle(22.62f64.to_radians()).unwrap(), 1.2, epsilon = 0.005);
        assert_abs_diff_eq!(fnumber_from_angle(0.5f64.atan()).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(fnumber_from_angle(0.0), Err(DasError::InfiniteFNumber));
        assert!(fnumber_from_angle(FRAC_PI_2).is_err());
    }

    #[test]
    fn aperture_mask_examples() {
        let xs: Vec<f64> = (-5..=5).map(|i| i as f64 * 1e-3).collect();
        assert!(aperture_mask(GridPoint::new(0.0, 0.01), &xs, 0.0).iter().all(|&b| b));
        let m = aperture_mask(GridPoint::new(0.0, 0.006), &xs, 1.0);
        let inside: Vec<f64> = xs.iter().zip(&m).filter(|(_, &b)| b).map(|(&x, _)| x).collect();
        assert_eq!(inside.len(), 7); // |x| <= 3 mm, boundary included
        let m = aperture_mask(GridPoint::new(0.0, 1e-9), &xs, 1.0);
        assert_eq!(m.iter().filter(|&&b| b).count(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(ApertureConfig::new(-1.0).is_err());
        assert!(ApertureConfig::with_threshold(1.0, 0.0, 0.0).is_err());
        assert!(ApertureConfig::with_threshold(1.0, 1.2, 0.0).is_err());
    }
}
