//! Bounded scalar minimization (Brent's method: golden-section steps with
//! successive parabolic interpolation).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - sqrt(5)) / 2

/// Minimize `f` on `[lo, hi]` to absolute tolerance `tol` on the abscissa.
///
/// Follows the classic `fminbnd` iteration; the bounds themselves are never
/// evaluated.
pub fn minimize_bounded<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    assert!(lo < hi, "minimize_bounded needs lo < hi");
    let seps = f64::EPSILON.sqrt();
    let (mut a, mut b) = (lo, hi);
    let mut v = a + GOLDEN * (b - a);
    let mut w = v;
    let mut xf = v;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut fx = f(xf);
    let mut evaluations = 1;
    let mut fv = fx;
    let mut fw = fx;
    let mut xm = 0.5 * (a + b);
    let mut tol1 = seps * xf.abs() + tol / 3.0;
    let mut tol2 = 2.0 * tol1;

    while (xf - xm).abs() > tol2 - 0.5 * (b - a) && evaluations < max_iter {
        let mut golden = true;
        if e.abs() > tol1 {
            golden = false;
            let mut r = (xf - w) * (fx - fv);
            let mut q = (xf - v) * (fx - fw);
            let mut p = (xf - v) * q - (xf - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = d;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - xf) && p < q * (b - xf) {
                d = p / q;
                let x = xf + d;
                if (x - a) < tol2 || (b - x) < tol2 {
                    d = tol1 * sign_nonzero(xm - xf);
                }
            } else {
                golden = true;
            }
        }
        if golden {
            e = if xf >= xm { a - xf } else { b - xf };
            d = GOLDEN * e;
        }
        let x = xf + sign_nonzero(d) * d.abs().max(tol1);
        let fu = f(x);
        evaluations += 1;

        if fu <= fx {
            if x >= xf {
                a = xf;
            } else {
                b = xf;
            }
            v = w;
            fv = fw;
            w = xf;
            fw = fx;
            xf = x;
            fx = fu;
        } else {
            if x < xf {
                a = x;
            } else {
                b = x;
            }
            if fu <= fw || w == xf {
                v = w;
                fv = fw;
                w = x;
                fw = fu;
            } else if fu <= fv || v == xf || v == w {
                v = x;
                fv = fu;
            }
        }
        xm = 0.5 * (a + b);
        tol1 = seps * xf.abs() + tol / 3.0;
        tol2 = 2.0 * tol1;
    }

    Minimum {
        x: xf,
        value: fx,
        evaluations,
    }
}

fn sign_nonzero(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let m = minimize_bounded(|x| (x - 1.3).powi(2) + 2.0, -4.0, 5.0, 1e-8, 500);
        assert!((m.x - 1.3).abs() < 1e-7);
        assert!((m.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn minimum_at_bound_is_approached() {
        let m = minimize_bounded(|x| x, 0.0, 1.0, 1e-6, 500);
        assert!(m.x < 1e-5);
    }

    #[test]
    fn nonsmooth_absolute_value() {
        let m = minimize_bounded(|x| (x.cos() - 0.5).abs(), 0.0, 1.5, 1e-9, 500);
        assert!((m.x - std::f64::consts::FRAC_PI_3).abs() < 1e-8);
    }

    #[test]
    fn tolerance_controls_evaluations() {
        let coarse = minimize_bounded(|x| (x - 1470.0).powi(2), 1200.0, 1700.0, 1.0, 500);
        let fine = minimize_bounded(|x| (x - 1470.0).powi(2), 1200.0, 1700.0, 1e-6, 500);
        assert!((coarse.x - 1470.0).abs() < 1.0);
        assert!(coarse.evaluations <= fine.evaluations);
    }
}
