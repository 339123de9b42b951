//! Channel data, I/Q demodulation, envelope detection and log compression.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Rf,
    Iq,
}

impl SignalKind {
    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Rf => "rf",
            SignalKind::Iq => "iq",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Rf(Vec<f64>),
    Iq(Vec<Complex64>),
}

/// Acquisition parameters shared by every channel of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    /// Sampling frequency (Hz).
    pub fs: f64,
    /// Center (and downmixing) frequency (Hz).
    pub fc: f64,
    /// Full bandwidth (Hz).
    pub bandwidth: f64,
}

impl SignalParams {
    pub fn new(fs: f64, fc: f64, bandwidth: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(invalid("fs", "must be positive"));
        }
        if !(fc.is_finite() && fc > 0.0) {
            return Err(invalid("fc", "must be positive"));
        }
        if !(bandwidth > 0.0 && bandwidth < 2.0 * fc) {
            return Err(invalid("bandwidth", format!("must lie in (0, 2 fc), got {bandwidth}")));
        }
        Ok(Self { fs, fc, bandwidth })
    }
}

/// Raw per-element signals.
///
/// Samples are stored channel-major: frame by frame, and within a frame all
/// `n_samples` fast-time samples of element 1, then element 2, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelData {
    n_samples: usize,
    n_elements: usize,
    n_frames: usize,
    params: SignalParams,
    samples: Samples,
}

impl ChannelData {
    pub fn new(
        n_samples: usize,
        n_elements: usize,
        n_frames: usize,
        params: SignalParams,
        samples: Samples,
    ) -> Result<Self> {
        if n_samples < 2 {
            return Err(invalid("n_samples", "at least two samples are required"));
        }
        if n_elements == 0 || n_frames == 0 {
            return Err(invalid("shape", "element and frame counts must be positive"));
        }
        let expected = n_samples * n_elements * n_frames;
        let actual = match &samples {
            Samples::Rf(v) => v.len(),
            Samples::Iq(v) => v.len(),
        };
        if actual != expected {
            return Err(DasError::ShapeMismatch(format!(
                "{n_samples} samples x {n_elements} elements x {n_frames} frames needs {expected} values, got {actual}"
            )));
        }
        Ok(Self {
            n_samples,
            n_elements,
            n_frames,
            params,
            samples,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn params(&self) -> SignalParams {
        self.params
    }

    pub fn kind(&self) -> SignalKind {
        match self.samples {
            Samples::Rf(_) => SignalKind::Rf,
            Samples::Iq(_) => SignalKind::Iq,
        }
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn into_samples(self) -> Samples {
        self.samples
    }

    pub fn frame_len(&self) -> usize {
        self.n_samples * self.n_elements
    }

    /// Samples of one frame as complex values (RF is promoted with zero
    /// imaginary part).
    pub fn frame_complex(&self, frame: usize) -> Vec<Complex64> {
        let range = frame * self.frame_len()..(frame + 1) * self.frame_len();
        match &self.samples {
            Samples::Rf(v) => v[range].iter().map(|&r| Complex64::new(r, 0.0)).collect(),
            Samples::Iq(v) => v[range].to_vec(),
        }
    }

    /// Every frame as complex values, frame-major.
    pub fn to_complex(&self) -> Vec<Complex64> {
        match &self.samples {
            Samples::Rf(v) => v.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
            Samples::Iq(v) => v.clone(),
        }
    }

    /// Extract a subset of frames.
    pub fn select_frames(&self, frames: &[usize]) -> Result<ChannelData> {
        let fl = self.frame_len();
        if let Some(&bad) = frames.iter().find(|&&f| f >= self.n_frames) {
            return Err(invalid("frame", format!("frame {bad} out of range")));
        }
        let samples = match &self.samples {
            Samples::Rf(v) => {
                Samples::Rf(frames.iter().flat_map(|&f| v[f * fl..(f + 1) * fl].iter().copied()).collect())
            }
            Samples::Iq(v) => {
                Samples::Iq(frames.iter().flat_map(|&f| v[f * fl..(f + 1) * fl].iter().copied()).collect())
            }
        };
        ChannelData::new(self.n_samples, self.n_elements, frames.len(), self.params, samples)
    }
}

/// Digital Butterworth low-pass filter in transfer-function form.
///
/// `cutoff` is normalized to the Nyquist frequency, as in the usual
/// `butter(order, cutoff)` convention. Coefficients are `(b, a)` with `a[0] = 1`.
pub fn butterworth_lowpass(order: usize, cutoff: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "filter order must be positive");
    assert!(cutoff > 0.0 && cutoff < 1.0, "cutoff must lie in (0, 1)");
    // Analog prototype poles, prewarped for a bilinear transform at fs = 2.
    let fs = 2.0;
    let warped = 2.0 * fs * (std::f64::consts::PI * cutoff / fs).tan();
    let n = order as f64;
    let poles: Vec<Complex64> = (0..order)
        .map(|k| {
            let m = -(order as f64) + 1.0 + 2.0 * k as f64;
            -Complex64::from_polar(warped, std::f64::consts::PI * m / (2.0 * n))
        })
        .collect();
    let gain_analog = warped.powi(order as i32);

    let fs2 = 2.0 * fs;
    let z_poles: Vec<Complex64> = poles.iter().map(|&p| (fs2 + p) / (fs2 - p)).collect();
    let denom: Complex64 = poles.iter().map(|&p| fs2 - p).product();
    let gain = (gain_analog / denom).re;

    let zeros = vec![Complex64::new(-1.0, 0.0); order];
    let b: Vec<f64> = poly(&zeros).into_iter().map(|c| c.re * gain).collect();
    let a: Vec<f64> = poly(&z_poles).into_iter().map(|c| c.re).collect();
    (b, a)
}

fn poly(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Steady-state initial conditions of a direct-form II transposed filter for
/// a unit step input.
fn lfilter_zi(b: &[f64], a: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let m = n - 1;
    if m == 0 {
        return Vec::new();
    }
    let mut bb = b.to_vec();
    bb.resize(n, 0.0);
    let mut aa = a.to_vec();
    aa.resize(n, 0.0);
    // I - companion(a)^T
    let mut mat = nalgebra::DMatrix::<f64>::identity(m, m);
    for j in 0..m {
        mat[(j, 0)] += aa[j + 1] / aa[0];
    }
    for i in 0..m.saturating_sub(1) {
        mat[(i, i + 1)] -= 1.0;
    }
    let rhs = nalgebra::DVector::from_iterator(m, (0..m).map(|i| bb[i + 1] - aa[i + 1] * bb[0]));
    mat.lu()
        .solve(&rhs)
        .expect("Butterworth steady-state system is nonsingular")
        .iter()
        .copied()
        .collect()
}

fn lfilter(b: &[f64], a: &[f64], x: &[Complex64], zi: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    let mut bb = b.to_vec();
    bb.resize(n, 0.0);
    let mut aa = a.to_vec();
    aa.resize(n, 0.0);
    let mut z = zi.to_vec();
    let mut y = Vec::with_capacity(x.len());
    for &xn in x {
        let yn = bb[0] * xn + z.first().copied().unwrap_or_default();
        for i in 0..n - 1 {
            let next = if i + 1 < n - 1 { z[i + 1] } else { Complex64::default() };
            z[i] = bb[i + 1] * xn + next - aa[i + 1] * yn;
        }
        y.push(yn);
    }
    y
}

/// Zero-phase forward-backward filtering with odd reflection padding of
/// `3 (nfilt - 1)` samples at both ends (clipped to the signal length).
pub fn filtfilt(b: &[f64], a: &[f64], x: &[Complex64]) -> Vec<Complex64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    let nfilt = a.len().max(b.len());
    let pad = (3 * (nfilt - 1)).min(len - 1);
    let first = x[0];
    let last = x[len - 1];
    let mut ext = Vec::with_capacity(len + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[len - 1 - i]));

    let zi = lfilter_zi(b, a);
    let scaled = |v: Complex64| zi.iter().map(|&z| z * v).collect::<Vec<_>>();
    let mut y = lfilter(b, a, &ext, &scaled(ext[0]));
    y.reverse();
    let mut y = lfilter(b, a, &y, &scaled(y[0]));
    y.reverse();
    y[pad..pad + len].to_vec()
}

const DEMOD_ORDER: usize = 5;
const DEMOD_CUTOFF: f64 = 0.5;

/// Downmix RF channels to baseband I/Q.
///
/// Each column is multiplied by `exp(-i 2 pi fc t)`, low-pass filtered with a
/// zero-phase 5th-order Butterworth at half Nyquist and scaled by 2.
pub fn iq_demodulate(rf: &ChannelData) -> Result<ChannelData> {
    let values = match rf.samples() {
        Samples::Rf(v) => v,
        Samples::Iq(_) => {
            return Err(DasError::SignalKind {
                expected: "rf",
                actual: "iq",
            })
        }
    };
    let SignalParams { fs, fc, .. } = rf.params();
    if fc >= fs / 2.0 {
        return Err(invalid("fc", format!("{fc} Hz aliases at fs = {fs} Hz (needs fc < fs/2)")));
    }
    let (b, a) = butterworth_lowpass(DEMOD_ORDER, DEMOD_CUTOFF);
    let ns = rf.n_samples();
    let mixer: Vec<Complex64> = (0..ns)
        .map(|k| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * fc * k as f64 / fs))
        .collect();
    let demod_column = |col: &[f64]| -> Vec<Complex64> {
        let mixed: Vec<Complex64> = col.iter().zip(&mixer).map(|(&r, &m)| m * r).collect();
        filtfilt(&b, &a, &mixed).into_iter().map(|v| v * 2.0).collect()
    };

    #[cfg(feature = "parallel")]
    let out: Vec<Complex64> = {
        use rayon::prelude::*;
        values.par_chunks(ns).flat_map_iter(demod_column).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out: Vec<Complex64> = values.chunks(ns).flat_map(demod_column).collect();

    ChannelData::new(ns, rf.n_elements(), rf.n_frames(), rf.params(), Samples::Iq(out))
}

pub fn envelope(values: &[Complex64]) -> Vec<f64> {
    values.iter().map(|v| v.norm()).collect()
}

/// Map an envelope to `[0, 1]` on a logarithmic scale spanning
/// `dynamic_range_db` below the maximum. An all-zero envelope maps to zeros.
pub fn log_compress(env: &[f64], dynamic_range_db: f64) -> Result<Vec<f64>> {
    if !(dynamic_range_db > 0.0) {
        return Err(invalid("dynamic_range_db", "must be positive"));
    }
    let max = env.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Ok(vec![0.0; env.len()]);
    }
    Ok(env
        .iter()
        .map(|&e| {
            let db = 20.0 * (e / max).log10();
            (1.0 + db / dynamic_range_db).clamp(0.0, 1.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    // Reference coefficients and outputs computed with scipy.signal
    // (butter, filtfilt with padlen = 15).
    const B5: [f64; 6] = [
        0.05278640450004204,
        0.2639320225002102,
        0.5278640450004204,
        0.5278640450004204,
        0.2639320225002102,
        0.05278640450004204,
    ];
    const A5: [f64; 6] = [1.0, 0.0, 0.6334368540005048, 0.0, 0.0557280900008412, 0.0];

    #[test]
    fn butterworth_matches_reference_design() {
        let (b, a) = butterworth_lowpass(5, 0.5);
        for (x, y) in b.iter().zip(B5) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
        for (x, y) in a.iter().zip(A5) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
        let (b, a) = butterworth_lowpass(3, 0.3);
        let b_ref = [0.04953299635725319, 0.14859898907175956, 0.14859898907175956, 0.04953299635725319];
        let a_ref = [1.0, -1.1619174836717323, 0.6959427557896507, -0.13776130125989283];
        for (x, y) in b.iter().zip(b_ref) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
        for (x, y) in a.iter().zip(a_ref) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn filtfilt_matches_reference() {
        let (b, a) = butterworth_lowpass(5, 0.5);
        let x: Vec<Complex64> = (0..40)
            .map(|k| {
                let k = k as f64;
                Complex64::new((k * 0.7).cos() + 0.3 * (k * 0.11).sin(), 0.0)
            })
            .collect();
        let y = filtfilt(&b, &a, &x);
        let expected = [
            (0, 1.0006215840602306),
            (1, 0.7545022490376),
            (2, 0.2565402668536163),
            (20, 0.3791541486771574),
            (37, 0.4661130016859893),
            (38, -0.13031607260092404),
            (39, -0.8328922025710446),
        ];
        for (i, v) in expected {
            assert_abs_diff_eq!(y[i].re, v, epsilon = 1e-12);
            assert_abs_diff_eq!(y[i].im, 0.0, epsilon = 1e-15);
        }
    }

    fn rf_tone(n: usize, fs: f64, fc: f64, f: impl Fn(f64) -> f64) -> ChannelData {
        let v = (0..n).map(|k| f(k as f64 / fs)).collect();
        ChannelData::new(n, 1, 1, SignalParams::new(fs, fc, 0.6 * fc).unwrap(), Samples::Rf(v)).unwrap()
    }

    fn middle(n: usize) -> std::ops::Range<usize> {
        n / 10..n - n / 10
    }

    #[test]
    fn demodulated_cosine_is_unit_dc() {
        let (fs, fc) = (20e6, 5e6);
        let rf = rf_tone(1000, fs, fc, |t| (2.0 * PI * fc * t).cos());
        let iq = iq_demodulate(&rf).unwrap();
        let Samples::Iq(v) = iq.samples() else { panic!() };
        for k in middle(1000) {
            assert!((v[k] - Complex64::new(1.0, 0.0)).norm() < 0.01, "k={k} {}", v[k]);
        }
    }

    #[test]
    fn demodulated_sine_is_minus_i() {
        let (fs, fc) = (20e6, 5e6);
        let rf = rf_tone(1000, fs, fc, |t| (2.0 * PI * fc * t).sin());
        let iq = iq_demodulate(&rf).unwrap();
        let Samples::Iq(v) = iq.samples() else { panic!() };
        for k in middle(1000) {
            assert!((v[k] - Complex64::new(0.0, -1.0)).norm() < 0.01);
        }
    }

    #[test]
    fn demodulated_envelope_tracks_amplitude() {
        // fs = 4 fc puts the 2 fc mixing product on Nyquist, where the filter has its zeros.
        let (fs, fc) = (20e6, 5e6);
        let amp = |t: f64| 1.0 + 0.5 * (2.0 * PI * 0.2e6 * t).sin();
        let rf = rf_tone(2000, fs, fc, |t| amp(t) * (2.0 * PI * fc * t + 0.7).cos());
        let iq = iq_demodulate(&rf).unwrap();
        let Samples::Iq(v) = iq.samples() else { panic!() };
        for k in middle(2000) {
            let t = k as f64 / fs;
            assert!((v[k].norm() - amp(t)).abs() < 0.01 * amp(t));
        }
    }

    #[test]
    fn demodulation_rejects_bad_input() {
        let rf = rf_tone(100, 8e6, 4e6, |t| t);
        assert!(iq_demodulate(&rf).is_err());
        let iq = ChannelData::new(
            4,
            1,
            1,
            SignalParams::new(20e6, 5e6, 3e6).unwrap(),
            Samples::Iq(vec![Complex64::default(); 4]),
        )
        .unwrap();
        assert!(matches!(iq_demodulate(&iq), Err(DasError::SignalKind { .. })));
    }

    #[test]
    fn envelope_examples() {
        let e = envelope(&[Complex64::new(3.0, 4.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(e, vec![5.0, 0.0]);
        let v = Complex64::new(-1.5, 0.25);
        for phi in [0.3, -2.0, 5.0] {
            assert_abs_diff_eq!(envelope(&[v * Complex64::from_polar(1.0, phi)])[0], v.norm(), epsilon = 1e-15);
        }
    }

    #[test]
    fn log_compress_examples() {
        let out = log_compress(&[1.0, 0.1], 40.0).unwrap();
        assert_abs_diff_eq!(out[0], 1.0);
        assert_abs_diff_eq!(out[1], 0.5, epsilon = 1e-15);
        let out = log_compress(&[1.0, 0.01], 40.0).unwrap();
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-15);
        assert_eq!(log_compress(&[0.0, 0.0], 40.0).unwrap(), vec![0.0, 0.0]);
        assert!(log_compress(&[1.0], 0.0).is_err());
    }

    #[test]
    fn channel_data_shape_checked() {
        let p = SignalParams::new(20e6, 5e6, 3e6).unwrap();
        assert!(ChannelData::new(10, 2, 1, p, Samples::Rf(vec![0.0; 19])).is_err());
        assert!(ChannelData::new(1, 2, 1, p, Samples::Rf(vec![0.0; 2])).is_err());
        assert!(SignalParams::new(20e6, 5e6, 10e6).is_err());
    }
}
