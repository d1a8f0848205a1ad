//! Channel-level signal primitives: zero-phase band-pass filtering,
//! full-wave rectification and centered moving-average smoothing.

use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("sampling rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("time series `{0}` is empty")]
    Empty(String),
    #[error("time series `{label}` has a non-finite sample at index {index}")]
    NonFinite { label: String, index: usize },
    #[error("invalid band {lo}..{hi} Hz for fs = {fs} Hz (need 0 < lo < hi < fs/2)")]
    InvalidBand { lo: f64, hi: f64, fs: f64 },
    #[error("band-pass order must be a positive even integer, got {0}")]
    InvalidOrder(usize),
    #[error("series of {len} samples is too short for forward-backward filtering (need more than {needed})")]
    TooShort { len: usize, needed: usize },
    #[error("moving-average window must cover at least one sample, got {window_s} s at {fs} Hz")]
    InvalidWindow { window_s: f64, fs: f64 },
}

/// One channel of a uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    fs: f64,
    label: String,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, fs: f64, label: impl Into<String>) -> Result<Self, SignalError> {
        let label = label.into();
        if !(fs.is_finite() && fs > 0.0) {
            return Err(SignalError::InvalidRate(fs));
        }
        if samples.is_empty() {
            return Err(SignalError::Empty(label));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite { label, index });
        }
        Ok(Self { samples, fs, label })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Copies `len` samples starting at `start`. Panics if out of range.
    pub fn slice(&self, start: usize, len: usize) -> TimeSeries {
        TimeSeries {
            samples: self.samples[start..start + len].to_vec(),
            fs: self.fs,
            label: self.label.clone(),
        }
    }

    /// Same rate and label, new samples. Caller guarantees finiteness.
    fn with_samples(&self, samples: Vec<f64>) -> TimeSeries {
        TimeSeries {
            samples,
            fs: self.fs,
            label: self.label.clone(),
        }
    }
}

/// Band-pass edges in Hz and the overall filter order (poles of the
/// digital band-pass, i.e. twice the low-pass prototype order).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BandPassSpec {
    pub lo: f64,
    pub hi: f64,
    pub order: usize,
}

impl BandPassSpec {
    pub const fn new(lo: f64, hi: f64, order: usize) -> Self {
        Self { lo, hi, order }
    }

    /// 3-80 Hz, 4th order: the usual EEG/EMG preprocessing band.
    pub const fn preprocessing() -> Self {
        Self::new(3.0, 80.0, 4)
    }

    pub fn validate(&self, fs: f64) -> Result<(), SignalError> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(SignalError::InvalidRate(fs));
        }
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi < fs / 2.0) {
            return Err(SignalError::InvalidBand {
                lo: self.lo,
                hi: self.hi,
                fs,
            });
        }
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(SignalError::InvalidOrder(self.order));
        }
        Ok(())
    }

    /// Samples of reflection padding at each end for forward-backward runs.
    pub fn pad_len(&self) -> usize {
        3 * self.order
    }
}

/// Second-order section, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z2;
        let den = self.a[0] + self.a[1] * z_inv + self.a[2] * z2;
        num / den
    }

    /// Transposed direct-form II state for a unit step held forever.
    fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let z2 = b2 - a2 * dc;
        let z1 = b1 - a1 * dc + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        (self.b.iter().sum::<f64>()) / (self.a.iter().sum::<f64>())
    }

    fn run(&self, data: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in data.iter_mut() {
            let x = *v;
            let y = b0 * x + state[0];
            state[0] = b1 * x - a1 * y + state[1];
            state[1] = b2 * x - a2 * y;
            *v = y;
        }
    }
}

/// Butterworth band-pass designed by bilinear transform, stored as a
/// cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPass {
    spec: BandPassSpec,
    fs: f64,
    sections: Vec<Biquad>,
}

impl BandPass {
    pub fn design(spec: BandPassSpec, fs: f64) -> Result<Self, SignalError> {
        spec.validate(fs)?;
        let n = spec.order / 2;
        let two_fs = 2.0 * fs;
        let w_lo = two_fs * (PI * spec.lo / fs).tan();
        let w_hi = two_fs * (PI * spec.hi / fs).tan();
        let bw = w_hi - w_lo;
        let w0_sq = w_lo * w_hi;

        let bilinear = |s: Complex64| (two_fs + s) / (two_fs - s);
        let lp_to_bp = |p: Complex64| {
            let t = p * (bw / 2.0);
            let r = (t * t - w0_sq).sqrt();
            (t + r, t - r)
        };

        let mut pole_pairs: Vec<(Complex64, Complex64)> = Vec::with_capacity(n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta);
            if p.im > 1e-12 {
                let (s1, s2) = lp_to_bp(p);
                for s in [s1, s2] {
                    let z = bilinear(s);
                    pole_pairs.push((z, z.conj()));
                }
            } else if p.im.abs() <= 1e-12 {
                let (s1, s2) = lp_to_bp(Complex64::new(p.re, 0.0));
                pole_pairs.push((bilinear(s1), bilinear(s2)));
            }
        }

        let mut sections: Vec<Biquad> = pole_pairs
            .into_iter()
            .map(|(q1, q2)| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(q1 + q2).re, (q1 * q2).re],
            })
            .collect();

        // Unit gain at the (prewarped) geometric centre frequency.
        let omega_c = 2.0 * (w0_sq.sqrt() / two_fs).atan();
        let z_inv = Complex64::from_polar(1.0, -omega_c);
        let mag: f64 = sections.iter().map(|s| s.response(z_inv).norm()).product();
        let per_section = mag.powf(-1.0 / sections.len() as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per_section;
            }
        }
        Ok(Self { spec, fs, sections })
    }

    pub fn spec(&self) -> BandPassSpec {
        self.spec
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Complex response of one causal pass at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / self.fs);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Amplitude gain of the forward-backward (zero-phase) application,
    /// which is the squared magnitude of one pass.
    pub fn zero_phase_gain(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm_sqr()
    }

    fn run_cascade(&self, data: &mut [f64]) {
        let mut level = data[0];
        for s in &self.sections {
            let [z1, z2] = s.step_state();
            s.run(data, [z1 * level, z2 * level]);
            level *= s.dc_gain();
        }
    }

    /// Forward-backward application on odd-reflected padding.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>, SignalError> {
        let pad = self.spec.pad_len();
        if x.len() <= pad {
            return Err(SignalError::TooShort {
                len: x.len(),
                needed: pad,
            });
        }
        let n = x.len();
        let first = x[0];
        let last = x[n - 1];
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        self.run_cascade(&mut ext);
        ext.reverse();
        self.run_cascade(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }

    pub fn apply(&self, ts: &TimeSeries) -> Result<TimeSeries, SignalError> {
        if (ts.fs - self.fs).abs() > 0.0 {
            return Err(SignalError::InvalidRate(ts.fs));
        }
        Ok(ts.with_samples(self.filtfilt(&ts.samples)?))
    }
}

/// Zero-phase band-pass of a series.
pub fn bandpass(ts: &TimeSeries, spec: BandPassSpec) -> Result<TimeSeries, SignalError> {
    BandPass::design(spec, ts.fs)?.apply(ts)
}

/// Full-wave rectification.
pub fn rectify(ts: &TimeSeries) -> TimeSeries {
    ts.with_samples(ts.samples.iter().map(|v| v.abs()).collect())
}

/// Number of samples covered by a smoothing window of `window_s` seconds.
pub fn window_samples(window_s: f64, fs: f64) -> Result<usize, SignalError> {
    let w = (window_s * fs).round();
    if !(window_s > 0.0 && w >= 1.0 && w.is_finite()) {
        return Err(SignalError::InvalidWindow { window_s, fs });
    }
    Ok(w as usize)
}

/// Centered moving average of `window_s` seconds. Near the edges the
/// window is truncated to the available samples.
///
/// For an even window of `W` samples, output `i` averages
/// `i - W/2 ..= i + W/2 - 1`.
pub fn moving_average(ts: &TimeSeries, window_s: f64) -> Result<TimeSeries, SignalError> {
    let w = window_samples(window_s, ts.fs)?;
    let x = &ts.samples;
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    let (lo_bound, hi_bound) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let back = w / 2;
    let fwd = w - back;
    let out = (0..n)
        .map(|i| {
            let start = i.saturating_sub(back);
            let end = (i + fwd).min(n);
            let mean = (prefix[end] - prefix[start]) / (end - start) as f64;
            mean.clamp(lo_bound, hi_bound)
        })
        .collect();
    Ok(ts.with_samples(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v, 500.0, "t").unwrap()
    }

    #[test]
    fn rejects_bad_series() {
        assert!(matches!(
            TimeSeries::new(vec![], 500.0, "x"),
            Err(SignalError::Empty(_))
        ));
        assert!(matches!(
            TimeSeries::new(vec![1.0], 0.0, "x"),
            Err(SignalError::InvalidRate(_))
        ));
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN], 500.0, "x"),
            Err(SignalError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn dc_is_removed() {
        let x = ts(vec![5.0; 2500]);
        let y = bandpass(&x, BandPassSpec::preprocessing()).unwrap();
        for v in &y.samples()[250..2250] {
            assert!(v.abs() < 0.05 * 5.0, "{v}");
        }
    }

    #[test]
    fn passband_sine_keeps_amplitude() {
        let fs = 500.0;
        let filt = BandPass::design(BandPassSpec::preprocessing(), fs).unwrap();
        let expected = filt.zero_phase_gain(40.0);
        assert!((expected - 1.0).abs() < 0.05, "designed gain {expected}");
        let x: Vec<f64> = (0..5000)
            .map(|i| (2.0 * PI * 40.0 * i as f64 / fs).sin())
            .collect();
        let y = filt.filtfilt(&x).unwrap();
        // 3000 samples span exactly 240 periods
        let (mut s, mut c) = (0.0, 0.0);
        for (i, v) in y.iter().enumerate().take(4000).skip(1000) {
            let ph = 2.0 * PI * 40.0 * i as f64 / fs;
            s += v * ph.sin();
            c += v * ph.cos();
        }
        let amp = 2.0 / 3000.0 * s.hypot(c);
        assert!((amp - 1.0).abs() < 0.05, "amplitude {amp}");
        assert!((amp - expected).abs() < 1e-3, "amplitude {amp} expected {expected}");
    }

    #[test]
    fn swapped_edges_rejected() {
        let x = ts(vec![0.0; 100]);
        assert!(matches!(
            bandpass(&x, BandPassSpec::new(80.0, 3.0, 4)),
            Err(SignalError::InvalidBand { .. })
        ));
        assert!(matches!(
            bandpass(&x, BandPassSpec::new(3.0, 260.0, 4)),
            Err(SignalError::InvalidBand { .. })
        ));
        assert!(matches!(
            bandpass(&x, BandPassSpec::new(3.0, 80.0, 3)),
            Err(SignalError::InvalidOrder(3))
        ));
    }

    #[test]
    fn short_series_rejected() {
        let x = ts(vec![1.0; 12]);
        assert!(matches!(
            bandpass(&x, BandPassSpec::preprocessing()),
            Err(SignalError::TooShort { len: 12, .. })
        ));
        assert!(bandpass(&ts(vec![1.0; 13]), BandPassSpec::preprocessing()).is_ok());
    }

    #[test]
    fn stopband_edges_attenuated() {
        let filt = BandPass::design(BandPassSpec::preprocessing(), 500.0).unwrap();
        let mid = filt.zero_phase_gain(15.5);
        let db = |g: f64| 20.0 * (g / mid).max(1e-300).log10();
        assert!(db(filt.zero_phase_gain(0.0)) < -20.0);
        assert!(db(filt.zero_phase_gain(249.999)) < -20.0);
        // odd prototype orders take the real-pole branch
        let odd = BandPass::design(BandPassSpec::new(3.0, 80.0, 6), 500.0).unwrap();
        assert_eq!(odd.sections.len(), 3);
        assert!((odd.zero_phase_gain(20.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn rectify_examples() {
        assert_eq!(rectify(&ts(vec![-1.0, 2.0, -3.0])).samples(), &[1.0, 2.0, 3.0]);
        assert_eq!(rectify(&ts(vec![0.0; 4])).samples(), &[0.0; 4]);
        let pos = ts(vec![0.5, 1.0, 2.0]);
        assert_eq!(rectify(&pos), pos);
    }

    #[test]
    fn moving_average_examples() {
        let c = ts(vec![0.1; 1000]);
        assert!(moving_average(&c, 0.4)
            .unwrap()
            .samples()
            .iter()
            .all(|&v| v == 0.1));

        let mut imp = vec![0.0; 1001];
        imp[500] = 1.0;
        let y = moving_average(&ts(imp), 0.4).unwrap();
        let w = 200;
        let plateau: Vec<_> = y.samples().iter().filter(|v| **v > 0.0).collect();
        assert_eq!(plateau.len(), w);
        assert!(plateau.iter().all(|&&v| v == 1.0 / w as f64));

        let alt: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let y = moving_average(&ts(alt), 0.4).unwrap();
        assert!(y.samples()[100..900].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moving_average_window_errors() {
        let x = ts(vec![1.0; 10]);
        assert!(matches!(
            moving_average(&x, 0.0),
            Err(SignalError::InvalidWindow { .. })
        ));
        assert!(matches!(
            moving_average(&x, -0.4),
            Err(SignalError::InvalidWindow { .. })
        ));
        assert!(matches!(
            moving_average(&x, 0.0005),
            Err(SignalError::InvalidWindow { .. })
        ));
    }

    #[test]
    fn moving_average_truncates_at_edges() {
        let x = ts(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        // 4-sample window: i-2 ..= i+1
        let y = moving_average(&TimeSeries::new(x.samples().to_vec(), 1.0, "x").unwrap(), 4.0)
            .unwrap();
        assert_eq!(y.samples(), &[1.5, 2.0, 2.5, 3.5, 4.0]);
    }
}
