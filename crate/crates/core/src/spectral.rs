//! Welch auto/cross spectra, per-trial magnitude-squared coherence,
//! trial-population statistics and band features.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error("segments differ in length ({x} vs {y} samples)")]
    LengthMismatch { x: usize, y: usize },
    #[error("segment of {len} samples is shorter than one {win}-sample sub-window")]
    TooShort { len: usize, win: usize },
    #[error("invalid Welch configuration: {0}")]
    InvalidConfig(String),
    #[error("spectra are on different frequency grids")]
    GridMismatch,
    #[error("coherence needs at least 2 averaged sub-windows, got {0}")]
    TooFewSegments(usize),
    #[error("no spectra to aggregate")]
    Empty,
    #[error("band `{name}` ({lo}-{hi} Hz) contains no frequency bins")]
    EmptyBand { name: String, lo: f64, hi: f64 },
    #[error("invalid significance inputs: l = {l}, alpha = {alpha}")]
    InvalidSignificance { l: usize, alpha: f64 },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    Hann,
    Rectangular,
}

impl Taper {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            // periodic Hann
            Taper::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Taper::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub win_s: f64,
    pub overlap: f64,
    pub taper: Taper,
    /// Subtract each sub-window's mean before tapering.
    pub detrend: bool,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            win_s: 0.5,
            overlap: 0.5,
            taper: Taper::Hann,
            detrend: true,
        }
    }
}

impl WelchConfig {
    pub fn window_len(&self, fs: f64) -> usize {
        (self.win_s * fs).round() as usize
    }

    pub fn step_len(&self, fs: f64) -> usize {
        ((self.window_len(fs) as f64) * (1.0 - self.overlap)).round().max(1.0) as usize
    }

    pub fn nfft(&self, fs: f64) -> usize {
        self.window_len(fs).next_power_of_two()
    }

    /// Sub-window count for a segment of `len` samples.
    pub fn segment_count(&self, len: usize, fs: f64) -> usize {
        let w = self.window_len(fs);
        if len < w {
            0
        } else {
            (len - w) / self.step_len(fs) + 1
        }
    }

    fn validate(&self, fs: f64) -> Result<(), SpectralError> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(SpectralError::InvalidConfig(format!("fs = {fs}")));
        }
        if self.window_len(fs) < 2 {
            return Err(SpectralError::InvalidConfig(format!(
                "sub-window of {} s spans fewer than 2 samples",
                self.win_s
            )));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(SpectralError::InvalidConfig(format!(
                "overlap {} not in [0, 1)",
                self.overlap
            )));
        }
        Ok(())
    }
}

/// One-sided frequency grid `k * fs / nfft`, `k = 0..=nfft/2`.
pub fn frequency_grid(nfft: usize, fs: f64) -> Vec<f64> {
    (0..=nfft / 2).map(|k| k as f64 * fs / nfft as f64).collect()
}

/// Anything holding values on a frequency grid.
pub trait Gridded {
    fn freqs(&self) -> &[f64];
    fn values(&self) -> &[f64];
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Number of sub-windows averaged into the estimate.
    pub segments: usize,
}

/// Magnitude-squared coherence per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcSpectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
}

macro_rules! impl_gridded {
    ($($t:ty),*) => {$(
        impl Gridded for $t {
            fn freqs(&self) -> &[f64] { &self.freqs }
            fn values(&self) -> &[f64] { &self.values }
        }
    )*};
}
impl_gridded!(Spectrum, CmcSpectrum);

#[derive(Debug, Clone, PartialEq)]
pub struct WelchSpectra {
    pub sx: Spectrum,
    pub sy: Spectrum,
    pub sxy: CrossSpectrum,
}

impl WelchSpectra {
    pub fn segments(&self) -> usize {
        self.sxy.segments
    }
}

struct Periodograms {
    nfft: usize,
    win: usize,
    step: usize,
    taper: Vec<f64>,
    detrend: bool,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    /// density scale `1 / (fs * sum(w^2))`
    scale: f64,
}

impl Periodograms {
    fn new(cfg: &WelchConfig, fs: f64) -> Self {
        let win = cfg.window_len(fs);
        let nfft = cfg.nfft(fs);
        let taper = cfg.taper.weights(win);
        let energy: f64 = taper.iter().map(|w| w * w).sum();
        Self {
            nfft,
            win,
            step: cfg.step_len(fs),
            scale: 1.0 / (fs * energy),
            detrend: cfg.detrend,
            taper,
            fft: FftPlanner::new().plan_fft_forward(nfft),
        }
    }

    fn transform(&self, chunk: &[f64], buf: &mut Vec<Complex64>) {
        let mean = if self.detrend {
            chunk.iter().sum::<f64>() / chunk.len() as f64
        } else {
            0.0
        };
        buf.clear();
        buf.extend(
            chunk
                .iter()
                .zip(&self.taper)
                .map(|(v, w)| Complex64::new((v - mean) * w, 0.0)),
        );
        buf.resize(self.nfft, Complex64::new(0.0, 0.0));
        self.fft.process(buf);
    }

    /// Density weight for a one-sided bin.
    fn bin_weight(&self, k: usize) -> f64 {
        if k == 0 || (self.nfft.is_multiple_of(2) && k == self.nfft / 2) {
            self.scale
        } else {
            2.0 * self.scale
        }
    }
}

/// Single periodogram of `x`, zero-padded to the next power of two.
pub fn periodogram(x: &[f64], fs: f64, taper: Taper, detrend: bool) -> Result<Spectrum, SpectralError> {
    let cfg = WelchConfig {
        win_s: x.len() as f64 / fs,
        overlap: 0.0,
        taper,
        detrend,
    };
    cfg.validate(fs)?;
    let p = Periodograms::new(&cfg, fs);
    let mut buf = Vec::with_capacity(p.nfft);
    p.transform(x, &mut buf);
    let values = (0..=p.nfft / 2)
        .map(|k| p.bin_weight(k) * buf[k].norm_sqr())
        .collect();
    Ok(Spectrum {
        freqs: frequency_grid(p.nfft, fs),
        values,
    })
}

/// Welch-averaged auto spectra of `x`, `y` and their cross spectrum
/// `conj(X) * Y`, over tapered sub-windows.
pub fn welch_spectra(x: &[f64], y: &[f64], fs: f64, cfg: &WelchConfig) -> Result<WelchSpectra, SpectralError> {
    if x.len() != y.len() {
        return Err(SpectralError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    cfg.validate(fs)?;
    let p = Periodograms::new(cfg, fs);
    let segments = cfg.segment_count(x.len(), fs);
    if segments == 0 {
        return Err(SpectralError::TooShort {
            len: x.len(),
            win: p.win,
        });
    }
    let bins = p.nfft / 2 + 1;
    let mut sx = vec![0.0; bins];
    let mut sy = vec![0.0; bins];
    let mut sxy = vec![Complex64::new(0.0, 0.0); bins];
    let mut bx = Vec::with_capacity(p.nfft);
    let mut by = Vec::with_capacity(p.nfft);
    for s in 0..segments {
        let start = s * p.step;
        p.transform(&x[start..start + p.win], &mut bx);
        p.transform(&y[start..start + p.win], &mut by);
        for k in 0..bins {
            sx[k] += bx[k].norm_sqr();
            sy[k] += by[k].norm_sqr();
            sxy[k] += bx[k].conj() * by[k];
        }
    }
    let norm = 1.0 / segments as f64;
    for k in 0..bins {
        let w = p.bin_weight(k) * norm;
        sx[k] *= w;
        sy[k] *= w;
        sxy[k] *= w;
    }
    let freqs = frequency_grid(p.nfft, fs);
    Ok(WelchSpectra {
        sx: Spectrum {
            freqs: freqs.clone(),
            values: sx,
        },
        sy: Spectrum {
            freqs: freqs.clone(),
            values: sy,
        },
        sxy: CrossSpectrum {
            freqs,
            values: sxy,
            segments,
        },
    })
}

/// `|Sxy|^2 / (Sx * Sy)` per bin; bins with a zero denominator are 0.
pub fn cmc(sx: &Spectrum, sy: &Spectrum, sxy: &CrossSpectrum) -> Result<CmcSpectrum, SpectralError> {
    if sx.freqs != sy.freqs || sx.freqs != sxy.freqs {
        return Err(SpectralError::GridMismatch);
    }
    if sxy.segments < 2 {
        return Err(SpectralError::TooFewSegments(sxy.segments));
    }
    let values = sx
        .values
        .iter()
        .zip(&sy.values)
        .zip(&sxy.values)
        .map(|((&px, &py), c)| {
            let den = px * py;
            if den > 0.0 {
                c.norm_sqr() / den
            } else {
                0.0
            }
        })
        .collect();
    Ok(CmcSpectrum {
        freqs: sx.freqs.clone(),
        values,
    })
}

/// Welch spectra followed by coherence.
pub fn coherence(x: &[f64], y: &[f64], fs: f64, cfg: &WelchConfig) -> Result<CmcSpectrum, SpectralError> {
    let w = welch_spectra(x, y, fs, cfg)?;
    cmc(&w.sx, &w.sy, &w.sxy)
}

/// Per-bin mean and population standard deviation across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumStats {
    pub freqs: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n: usize,
}

pub fn trial_stats<T: Gridded>(spectra: &[T]) -> Result<SpectrumStats, SpectralError> {
    let first = spectra.first().ok_or(SpectralError::Empty)?;
    let freqs = first.freqs();
    if spectra
        .iter()
        .any(|s| s.freqs() != freqs || s.values().len() != freqs.len())
    {
        return Err(SpectralError::GridMismatch);
    }
    let n = spectra.len() as f64;
    let bins = freqs.len();
    let mut mean = vec![0.0; bins];
    for s in spectra {
        for (m, v) in mean.iter_mut().zip(s.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; bins];
    for s in spectra {
        for ((acc, v), m) in var.iter_mut().zip(s.values()).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(SpectrumStats {
        freqs: freqs.to_vec(),
        mean,
        std,
        n: spectra.len(),
    })
}

impl SpectrumStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,mean,std\n");
        for ((f, m), s) in self.freqs.iter().zip(&self.mean).zip(&self.std) {
            let _ = writeln!(out, "{f},{m},{s}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SpectralError> {
        std::fs::write(path, self.to_csv()).map_err(|source| SpectralError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Named half-open frequency band `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandDef {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

impl BandDef {
    pub const fn new(name: &'static str, lo: f64, hi: f64) -> Self {
        Self { name, lo, hi }
    }

    pub fn contains(&self, f: f64) -> bool {
        self.lo <= f && f < self.hi
    }
}

/// The eight feature bands, in feature order.
pub const STANDARD_BANDS: [BandDef; 8] = [
    BandDef::new("low_alpha", 6.0, 8.0),
    BandDef::new("alpha", 8.0, 12.0),
    BandDef::new("low_beta", 13.0, 20.0),
    BandDef::new("high_beta", 20.0, 30.0),
    BandDef::new("beta", 13.0, 30.0),
    BandDef::new("low_gamma", 30.0, 60.0),
    BandDef::new("high_gamma", 60.0, 80.0),
    BandDef::new("gamma", 30.0, 80.0),
];

pub const FEATURES_PER_MUSCLE: usize = STANDARD_BANDS.len();

/// How a band's coherence bins collapse to one feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandStatistic {
    #[default]
    Mean,
    Max,
}

pub fn band_features(
    c: &CmcSpectrum,
    bands: &[BandDef],
    stat: BandStatistic,
) -> Result<Vec<f64>, SpectralError> {
    bands
        .iter()
        .map(|band| {
            let vals: Vec<f64> = c
                .freqs
                .iter()
                .zip(&c.values)
                .filter(|(f, _)| band.contains(**f))
                .map(|(_, v)| *v)
                .collect();
            if vals.is_empty() {
                return Err(SpectralError::EmptyBand {
                    name: band.name.to_string(),
                    lo: band.lo,
                    hi: band.hi,
                });
            }
            Ok(match stat {
                BandStatistic::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                BandStatistic::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

/// Coherence level not exceeded by independent signals with probability
/// `1 - alpha`, for `l` averaged sub-windows.
pub fn confidence_level(l: usize, alpha: f64) -> Result<f64, SpectralError> {
    if l < 2 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(SpectralError::InvalidSignificance { l, alpha });
    }
    Ok(1.0 - alpha.powf(1.0 / (l as f64 - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 500.0;

    fn sine(f: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / FS).sin()).collect()
    }

    #[test]
    fn segment_counts() {
        let cfg = WelchConfig::default();
        assert_eq!(cfg.segment_count(2000, FS), 15);
        assert_eq!(cfg.segment_count(1000, FS), 7);
        assert_eq!(cfg.segment_count(500, FS), 3);
        assert_eq!(cfg.nfft(FS), 256);
        let w = welch_spectra(&sine(20.0, 2000), &sine(20.0, 2000), FS, &cfg).unwrap();
        assert_eq!(w.segments(), 15);
        assert_eq!(w.sx.freqs.len(), 129);
    }

    #[test]
    fn sine_peak_at_nearest_bin() {
        let x = sine(20.0, 2000);
        let w = welch_spectra(&x, &x, FS, &WelchConfig::default()).unwrap();
        let (k, _) = w
            .sx
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let nearest = w
            .sx
            .freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 20.0).abs().total_cmp(&(b.1 - 20.0).abs()))
            .unwrap()
            .0;
        assert_eq!(k, nearest);
    }

    #[test]
    fn self_cross_spectrum_is_auto_spectrum() {
        let x: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 113) as f64 - 56.0).collect();
        let w = welch_spectra(&x, &x, FS, &WelchConfig::default()).unwrap();
        for (c, s) in w.sxy.values.iter().zip(&w.sx.values) {
            assert!((c.re - s).abs() <= 1e-9 * s.max(1.0));
            assert!(c.im.abs() <= 1e-9 * s.max(1.0));
            assert!(*s >= 0.0);
        }
    }

    #[test]
    fn too_short_and_mismatch() {
        let cfg = WelchConfig::default();
        assert!(matches!(
            welch_spectra(&[0.0; 200], &[0.0; 200], FS, &cfg),
            Err(SpectralError::TooShort { len: 200, win: 250 })
        ));
        assert!(matches!(
            welch_spectra(&[0.0; 300], &[0.0; 200], FS, &cfg),
            Err(SpectralError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_window_coherence_refused() {
        let x = sine(10.0, 250);
        let w = welch_spectra(&x, &x, FS, &WelchConfig::default()).unwrap();
        assert_eq!(w.segments(), 1);
        assert!(matches!(
            cmc(&w.sx, &w.sy, &w.sxy),
            Err(SpectralError::TooFewSegments(1))
        ));
    }

    #[test]
    fn grid_mismatch_detected() {
        let x = sine(10.0, 1000);
        let a = welch_spectra(&x, &x, FS, &WelchConfig::default()).unwrap();
        let b = welch_spectra(&x, &x, 400.0, &WelchConfig::default()).unwrap();
        assert!(matches!(
            cmc(&a.sx, &b.sy, &a.sxy),
            Err(SpectralError::GridMismatch)
        ));
    }

    #[test]
    fn zero_bins_are_zero() {
        let x = vec![0.0; 1000];
        let w = welch_spectra(&x, &x, FS, &WelchConfig::default()).unwrap();
        let c = cmc(&w.sx, &w.sy, &w.sxy).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stats_examples() {
        let mk = |v: f64| CmcSpectrum {
            freqs: vec![0.0, 1.0],
            values: vec![v, 0.5],
        };
        let one = trial_stats(&[mk(0.3)]).unwrap();
        assert_eq!(one.std, vec![0.0, 0.0]);
        let two = trial_stats(&[mk(1.0), mk(3.0)]).unwrap();
        assert_eq!(two.mean[0], 2.0);
        assert_eq!(two.std[0], 1.0);
        let same = trial_stats(&vec![mk(0.25); 5]).unwrap();
        assert_eq!(same.mean, vec![0.25, 0.5]);
        assert_eq!(same.std, vec![0.0, 0.0]);
        assert!(matches!(
            trial_stats::<CmcSpectrum>(&[]),
            Err(SpectralError::Empty)
        ));
        let other = CmcSpectrum {
            freqs: vec![0.0, 2.0],
            values: vec![0.0, 0.0],
        };
        assert!(matches!(
            trial_stats(&[mk(1.0), other]),
            Err(SpectralError::GridMismatch)
        ));
    }

    #[test]
    fn stats_csv_layout() {
        let s = SpectrumStats {
            freqs: vec![0.0, 1.5],
            mean: vec![0.25, 0.5],
            std: vec![0.0, 0.125],
            n: 2,
        };
        assert_eq!(s.to_csv(), "freq_hz,mean,std\n0,0.25,0\n1.5,0.5,0.125\n");
    }

    fn grid_cmc(f: impl Fn(f64) -> f64) -> CmcSpectrum {
        let freqs = frequency_grid(256, FS);
        let values = freqs.iter().map(|&x| f(x)).collect();
        CmcSpectrum { freqs, values }
    }

    #[test]
    fn band_feature_examples() {
        let c = grid_cmc(|_| 0.3);
        let f = band_features(&c, &STANDARD_BANDS, BandStatistic::Mean).unwrap();
        assert_eq!(f.len(), 8);
        assert!(f.iter().all(|v| (v - 0.3).abs() < 1e-15));

        let c = grid_cmc(|x| if (13.0..30.0).contains(&x) { 1.0 } else { 0.0 });
        let f = band_features(&c, &STANDARD_BANDS, BandStatistic::Mean).unwrap();
        assert_eq!(f[4], 1.0);
        assert_eq!(f[2], 1.0);
        assert_eq!(f[3], 1.0);
        assert_eq!(f[1], 0.0);
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn band_max_statistic() {
        let c = grid_cmc(|x| if (9.0..10.0).contains(&x) { 0.9 } else { 0.1 });
        let f = band_features(&c, &STANDARD_BANDS, BandStatistic::Max).unwrap();
        assert_eq!(f[1], 0.9);
        assert_eq!(f[0], 0.1);
    }

    #[test]
    fn empty_band_named() {
        let c = CmcSpectrum {
            freqs: frequency_grid(32, FS),
            values: vec![0.0; 17],
        };
        let err = band_features(&c, &STANDARD_BANDS, BandStatistic::Mean).unwrap_err();
        assert!(matches!(err, SpectralError::EmptyBand { ref name, .. } if name == "low_alpha"));
    }

    #[test]
    fn confidence_examples() {
        assert!((confidence_level(2, 0.05).unwrap() - 0.95).abs() < 1e-15);
        assert!(confidence_level(15, 0.999_999).unwrap() < 1e-6);
        assert!(confidence_level(1, 0.05).is_err());
        assert!(confidence_level(10, 0.0).is_err());
        assert!(confidence_level(10, 1.0).is_err());
    }
}
