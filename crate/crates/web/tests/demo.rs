use das_web::{directivity_curve, fnumber_design, psf_image, psf_size, qp_curve};

#[test]
fn fnumber_matches_the_derived_value() {
    let d = fnumber_design(0.27e-3, 5e6, 3e6, 1540.0, 0.71, 0.0).unwrap();
    assert!((d[0] - 1540.0 / 6.5e6).abs() < 1e-12);
    assert!((d[3] - 1.338).abs() < 2e-3, "{d:?}");
    assert!(fnumber_design(-1.0, 5e6, 3e6, 1540.0, 0.71, 0.0).is_err());
}

#[test]
fn directivity_peaks_broadside() {
    let d = directivity_curve(1.0, 181);
    assert_eq!(d.len(), 181);
    assert!((d[90] - 1.0).abs() < 1e-12);
    assert!(d[0].abs() < 1e-12 && d[180].abs() < 1e-12);
    for k in 0..90 {
        assert!((d[k] - d[180 - k]).abs() < 1e-12);
    }
}

#[test]
fn psf_is_brightest_at_the_target() {
    let n = psf_size();
    let img = psf_image(2.0, 15.0, 0.0, 1.3, 1540.0, 40.0).unwrap();
    assert_eq!(img.len(), 4 * n * n);
    let (best, _) = img.chunks(4).enumerate().max_by_key(|(_, p)| p[0]).unwrap();
    let (row, col) = (best / n, best % n);
    // Target sits at the centre of an 8 mm window.
    let px = 8.0 / (n - 1) as f64;
    assert!(((col as f64) * px - 4.0).abs() < 0.2, "col {col}");
    assert!(((row as f64) * px - 4.0).abs() < 0.2, "row {row}");
    assert!(img.chunks(4).all(|p| p[3] == 255));
}

#[test]
fn qp_peaks_near_the_true_speed() {
    let curve = qp_curve(1500.0, 1400.0, 1600.0, 21).unwrap();
    let best = curve.chunks(2).max_by(|a, b| a[1].total_cmp(&b[1])).unwrap()[0];
    assert!((best - 1500.0).abs() <= 10.0, "{curve:?}");
    assert!(qp_curve(1500.0, 1600.0, 1400.0, 5).is_err());
}
