use das_core::aperture::{aperture_mask, design_fnumber, ApertureConfig};
use das_core::beamformer::{beamform, build_das_matrix, BeamformGrid, Interpolation, SignalMeta};
use das_core::dataset::{Dataset, TransmitSpec};
use das_core::geometry::*;
use das_core::signal::{log_compress, ChannelData, Samples, SignalParams};
use das_core::soundspeed::{qp_metric, HyperbolaSamples};
use num_complex::Complex64;
use proptest::prelude::*;

const L: f64 = 19.2e-3;

fn geom() -> ArrayGeometry {
    ArrayGeometry::new(64, 0.3e-3, 0.27e-3).unwrap()
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

fn small_matrix(tilt: f64, f_number: f64) -> das_core::beamformer::DasMatrix {
    let g = ArrayGeometry::new(8, 0.3e-3, 0.27e-3).unwrap();
    let grid = BeamformGrid::rectangular((-2e-3, 2e-3), (3e-3, 8e-3), 5, 6).unwrap();
    let meta = SignalMeta { fs: 20e6, fc: 5e6, n_samples: 160, is_iq: true };
    let ap = if f_number == 0.0 { ApertureConfig::full() } else { ApertureConfig::new(f_number).unwrap() };
    build_das_matrix(&grid, &g, &TransmitScheme::plane(tilt, 0.0).unwrap(), &Medium::new(1540.0).unwrap(), meta, &ap, Interpolation::Linear).unwrap()
}

fn iq(values: Vec<Complex64>, frames: usize) -> ChannelData {
    ChannelData::new(160, 8, frames, SignalParams::new(20e6, 5e6, 3e6).unwrap(), Samples::Iq(values)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn narrow_circular_wave_approaches_plane(tilt_deg in -20.0f64..20.0, x in -15e-3f64..15e-3, z in 1e-3f64..40e-3) {
        let tilt = tilt_deg.to_radians();
        let src = virtual_source(tilt, 1e-6, L).unwrap();
        let pt = GridPoint::new(x, z);
        let d = transmit_distance_circular(pt, src, L) - transmit_distance_plane(pt, tilt, L);
        prop_assert!(d.abs() < 1e-6 * L, "gap {d}");
    }

    #[test]
    fn general_distance_reduces_to_circular(tilt_deg in -30.0f64..30.0, beta_deg in 20.0f64..120.0, x in -8e-3f64..8e-3, z in 1e-3f64..40e-3) {
        let src = virtual_source(tilt_deg.to_radians(), beta_deg.to_radians(), L).unwrap();
        let pt = GridPoint::new(x, z);
        let a = transmit_distance_general(pt, src, L).unwrap();
        let b = transmit_distance_circular(pt, src, L);
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-3));
    }

    #[test]
    fn echo_times_lie_on_the_hyperbola(tilt_deg in -20.0f64..20.0, x in -10e-3f64..10e-3, z in 2e-3f64..40e-3, t0 in 0.0f64..5e-6, c in 1300.0f64..1700.0) {
        let g = geom();
        let s = TransmitScheme::plane(tilt_deg.to_radians(), t0).unwrap();
        let m = Medium::new(c).unwrap();
        let pt = GridPoint::new(x, z);
        for xe in g.element_positions() {
            let tau = travel_time(pt, xe, &s, &g, &m);
            prop_assert!(hyperbola_residual(pt, xe, tau + t0, &s, &g, &m).abs() < 1e-9);
        }
    }

    #[test]
    fn receive_distance_grows_with_offset(x in -10e-3f64..10e-3, z in 1e-3f64..40e-3, a in 0.0f64..5e-3, b in 0.0f64..5e-3) {
        let pt = GridPoint::new(x, z);
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(receive_distance(pt, x + near) <= receive_distance(pt, x + far));
        let (r, l) = (receive_distance(pt, x + a), receive_distance(pt, x - a));
        prop_assert!((r - l).abs() <= 1e-15 * r);
    }

    #[test]
    fn aperture_mask_is_symmetric(z in 1e-3f64..40e-3, f in 0.0f64..4.0) {
        let xs = geom().element_positions();
        let mask = aperture_mask(GridPoint::new(0.0, z), &xs, f);
        let rev: Vec<bool> = mask.iter().rev().copied().collect();
        prop_assert_eq!(mask, rev);
    }

    #[test]
    fn wider_elements_need_larger_fnumbers(w1 in 0.1e-3f64..0.3e-3, dw in 0.01e-3f64..0.1e-3) {
        let a = design_fnumber(w1, 1540.0, 5e6, 3e6, 0.71, 0.0).unwrap();
        let b = design_fnumber(w1 + dw, 1540.0, 5e6, 3e6, 0.71, 0.0).unwrap();
        prop_assert!(b.f_number > a.f_number);
    }

    #[test]
    fn beamforming_is_linear(d1 in complex_vec(1280), d2 in complex_vec(1280), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let m = small_matrix(0.1, 1.0);
        let mix: Vec<Complex64> = d1.iter().zip(&d2).map(|(x, y)| x * a + y * b).collect();
        let y1 = &beamform(&m, &iq(d1, 1)).unwrap()[0].values;
        let y2 = &beamform(&m, &iq(d2, 1)).unwrap()[0].values;
        let ym = &beamform(&m, &iq(mix, 1)).unwrap()[0].values;
        for k in 0..ym.len() {
            let expected = y1[k] * a + y2[k] * b;
            prop_assert!((ym[k] - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn stacked_frames_match_single_frames(d in complex_vec(3 * 1280)) {
        let m = small_matrix(-0.2, 0.0);
        let all = beamform(&m, &iq(d.clone(), 3)).unwrap();
        for (f, frame) in all.iter().enumerate() {
            let single = beamform(&m, &iq(d[f * 1280..(f + 1) * 1280].to_vec(), 1)).unwrap();
            prop_assert_eq!(&single[0].values, &frame.values);
        }
    }

    #[test]
    fn rebuilt_matrices_are_identical(tilt in -0.3f64..0.3, f in 0.0f64..3.0) {
        prop_assert_eq!(small_matrix(tilt, f), small_matrix(tilt, f));
    }

    #[test]
    fn nonzero_fnumber_never_grows_the_matrix(f in 0.3f64..3.0) {
        let full = small_matrix(0.0, 0.0);
        let part = small_matrix(0.0, f);
        // Some element leaves the aperture of the shallow corner pixels once
        // 3 mm / (2 f) is below their 3.05 mm reach to the far element.
        let restricted = 3e-3 / (2.0 * f) < 0.5 * 7.0 * 0.3e-3 + 2e-3;
        if restricted {
            prop_assert!(part.nnz() < full.nnz());
        } else {
            prop_assert!(part.nnz() <= full.nnz());
        }
        let q = 2.0;
        prop_assert!(part.sparsity() >= 1.0 - q / 160.0);
    }

    #[test]
    fn log_compress_ignores_scale(env in prop::collection::vec(0.0f64..1.0, 1..64), k in -30i32..30) {
        let scale = 2f64.powi(k);
        let scaled: Vec<f64> = env.iter().map(|v| v * scale).collect();
        prop_assert_eq!(log_compress(&env, 40.0).unwrap(), log_compress(&scaled, 40.0).unwrap());
    }

    #[test]
    fn log_compress_is_monotone(env in prop::collection::vec(0.0f64..1.0, 2..64), dr in 10.0f64..80.0) {
        let out = log_compress(&env, dr).unwrap();
        for i in 0..env.len() {
            for j in 0..env.len() {
                if env[i] <= env[j] {
                    prop_assert!(out[i] <= out[j]);
                }
            }
        }
    }

    #[test]
    fn qp_ignores_global_phase(v in complex_vec(6 * 12), phi in -3.0f64..3.0) {
        let h = HyperbolaSamples::from_values(6, 12, v.clone()).unwrap();
        let rot: Vec<Complex64> = v.iter().map(|x| x * Complex64::from_polar(1.0, phi)).collect();
        let hr = HyperbolaSamples::from_values(6, 12, rot).unwrap();
        let (a, b) = (qp_metric(&h).unwrap(), qp_metric(&hr).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
    }

    #[test]
    fn qp_scales_with_squared_amplitude(v in complex_vec(6 * 12), a in 0.1f64..10.0) {
        let h = HyperbolaSamples::from_values(6, 12, v.clone()).unwrap();
        let hs = HyperbolaSamples::from_values(6, 12, v.iter().map(|x| x * a).collect()).unwrap();
        let (q, qs) = (qp_metric(&h).unwrap(), qp_metric(&hs).unwrap());
        prop_assert!((qs - a * a * q).abs() <= 1e-9 * qs.max(1e-300));
    }

    #[test]
    fn dataset_round_trip(values in prop::collection::vec(-1e3f64..1e3, 2 * 3 * 20), tilt in -20.0f64..20.0, extra in "[a-z]{1,8}") {
        let g = ArrayGeometry::new(3, 0.3e-3, 0.27e-3).unwrap();
        let samples = Samples::Iq(values.chunks(2).map(|c| Complex64::new(c[0] as f32 as f64, c[1] as f32 as f64)).collect());
        let data = ChannelData::new(20, 3, 1, SignalParams::new(20e6, 5e6, 3e6).unwrap(), samples).unwrap();
        let mut ds = Dataset::new(data, &g, TransmitSpec::Plane { tilt_deg: tilt }, 0.0, 1540.0).unwrap();
        ds.meta.extra.insert(format!("x_{extra}"), serde_json::Value::from(extra.clone()));
        let bytes = ds.to_bytes().unwrap();
        let back = Dataset::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
    }
}
