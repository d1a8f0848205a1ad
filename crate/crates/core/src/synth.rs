//! Synthetic linearly coupled signal pairs with a closed-form coherence,
//! and class-labelled synthetic EEG/EMG datasets built from them.

use crate::ingest::{
    ChannelSource, Dataset, DatasetManifest, IngestError, RecordingRef, TrialEntry, FORMAT_VERSION,
};
use crate::labels::{Condition, Muscle};
use crate::sigcore::{BandPass, BandPassSpec, SignalError, TimeSeries};
use crate::spectral::{coherence, trial_stats, SpectralError, WelchConfig};
use rayon::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid coupling model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `y = gain * (H * x) + w` with `x` unit-variance white noise, `H` the
/// zero-phase band-pass over `coupling_band` and `w` white noise of
/// variance `noise_var`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    pub gain: f64,
    pub coupling_band: (f64, f64),
    pub noise_var: f64,
    pub fs: f64,
    pub seed: u64,
}

pub const COUPLING_FILTER_ORDER: usize = 4;

const STREAM_X: u64 = 0;
const STREAM_W: u64 = 1;

/// Seeded standard-normal stream; distinct `stream` ids are independent.
pub fn gaussian_stream(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

impl CouplingModel {
    pub fn filter(&self) -> Result<BandPass, SynthError> {
        let (lo, hi) = self.coupling_band;
        Ok(BandPass::design(BandPassSpec::new(lo, hi, COUPLING_FILTER_ORDER), self.fs)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !self.gain.is_finite() {
            return Err(SynthError::InvalidModel(format!("gain {}", self.gain)));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(SynthError::InvalidModel(format!(
                "noise variance {} must be finite and non-negative",
                self.noise_var
            )));
        }
        self.filter().map(|_| ())
    }

    /// Centre of the coupling band.
    pub fn center(&self) -> f64 {
        0.5 * (self.coupling_band.0 + self.coupling_band.1)
    }

    /// Noise variance that puts the theoretical coherence at `f0` on
    /// `target` (in `(0, 1]`) for the current gain.
    pub fn noise_for_coherence(&self, f0: f64, target: f64) -> Result<f64, SynthError> {
        if !(target > 0.0 && target <= 1.0) {
            return Err(SynthError::InvalidModel(format!("target coherence {target}")));
        }
        let p = self.gain * self.gain * self.filter()?.zero_phase_gain(f0).powi(2);
        Ok(p * (1.0 / target - 1.0))
    }
}

/// Draws `n` samples of the coupled pair.
pub fn generate_pair(m: &CouplingModel, n: usize) -> Result<(TimeSeries, TimeSeries), SynthError> {
    m.validate()?;
    if (n as f64) < m.fs {
        return Err(SynthError::InvalidModel(format!(
            "need at least one second of data ({} samples), got {n}",
            m.fs
        )));
    }
    let x = gaussian_stream(m.seed, STREAM_X, n);
    let w = gaussian_stream(m.seed, STREAM_W, n);
    let hx = m.filter()?.filtfilt(&x)?;
    let sd = m.noise_var.sqrt();
    let y = hx
        .iter()
        .zip(&w)
        .map(|(h, e)| m.gain * h + sd * e)
        .collect();
    Ok((TimeSeries::new(x, m.fs, "x")?, TimeSeries::new(y, m.fs, "y")?))
}

/// Closed-form magnitude-squared coherence between `x` and `y` of the model.
pub fn theoretical_coherence(m: &CouplingModel, freqs: &[f64]) -> Result<Vec<f64>, SynthError> {
    let filter = m.filter()?;
    Ok(freqs
        .iter()
        .map(|&f| {
            // both inputs are white, so their densities share one flat level
            let coupled = m.gain * m.gain * filter.zero_phase_gain(f).powi(2);
            let total = coupled + m.noise_var;
            if total > 0.0 {
                coupled / total
            } else {
                0.0
            }
        })
        .collect())
}

/// Trial-averaged estimated coherence next to the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub freqs: Vec<f64>,
    pub estimated: Vec<f64>,
    pub theoretical: Vec<f64>,
    pub trials: usize,
}

impl OracleComparison {
    pub fn abs_error(&self) -> Vec<f64> {
        self.estimated
            .iter()
            .zip(&self.theoretical)
            .map(|(e, t)| (e - t).abs())
            .collect()
    }

    /// Index of the grid bin closest to `f`.
    pub fn bin(&self, f: f64) -> usize {
        nearest_bin(&self.freqs, f)
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("freq_hz,estimated,theoretical,abs_error\n");
        for (((f, e), t), a) in self
            .freqs
            .iter()
            .zip(&self.estimated)
            .zip(&self.theoretical)
            .zip(self.abs_error())
        {
            let _ = writeln!(out, "{f},{e},{t},{a}");
        }
        out
    }
}

pub fn nearest_bin(freqs: &[f64], f: f64) -> usize {
    freqs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
        .map_or(0, |(i, _)| i)
}

/// Mean Welch coherence over `trials` independent draws of `n` samples
/// (trial `i` uses seed `m.seed ^ i`), against the model's closed form.
pub fn oracle_comparison(
    m: &CouplingModel,
    trials: usize,
    n: usize,
    welch: &WelchConfig,
) -> Result<OracleComparison, SynthError> {
    if trials == 0 {
        return Err(SynthError::InvalidModel("need at least one trial".into()));
    }
    let spectra = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let (x, y) = generate_pair(&CouplingModel { seed: m.seed ^ i, ..*m }, n)?;
            Ok(coherence(x.samples(), y.samples(), m.fs, welch)?)
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    let stats = trial_stats(&spectra)?;
    let theoretical = theoretical_coherence(m, &stats.freqs)?;
    Ok(OracleComparison {
        freqs: stats.freqs,
        estimated: stats.mean,
        theoretical,
        trials,
    })
}

/// The 32 scalp electrodes of the grasp-and-lift montage.
pub const EEG_MONTAGE: [&str; 32] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6", "T7", "C3", "Cz",
    "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3", "Pz", "P4", "P8", "PO9",
    "O1", "Oz", "O2", "PO10",
];

/// One labelled population of synthetic trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthClass {
    pub condition: Condition,
    pub trials: usize,
    /// Coherence between the cortical source and each muscle's drive at the
    /// centre of the coupling band.
    pub drive_coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDatasetConfig {
    pub subject: String,
    pub fs: f64,
    pub trial_len_s: f64,
    pub coupling_band: (f64, f64),
    /// Relative EMG amplitude modulation per unit (standardized) drive.
    pub modulation_depth: f64,
    /// Channel carrying the cortical source.
    pub source_channel: String,
    pub classes: Vec<SynthClass>,
    pub seed: u64,
}

impl Default for SynthDatasetConfig {
    fn default() -> Self {
        Self {
            subject: "synthetic".into(),
            fs: 500.0,
            trial_len_s: 8.0,
            coupling_band: (13.0, 30.0),
            modulation_depth: 0.8,
            source_channel: "C3".into(),
            classes: Vec::new(),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct TrialPlan {
    seed: u64,
    drive_coherence: f64,
}

/// Generates channel data on demand; nothing is stored.
#[derive(Debug, Clone)]
pub struct SynthSource {
    cfg: SynthDatasetConfig,
    plans: Vec<TrialPlan>,
    source_index: usize,
    n: usize,
}

const STREAM_EEG_BASE: u64 = 100;
const STREAM_DRIVE_BASE: u64 = 200;
const STREAM_CARRIER_BASE: u64 = 300;
const STREAM_TIMING_BASE: u64 = 400;

impl SynthSource {
    fn coupling(&self, plan: &TrialPlan) -> Result<CouplingModel, SynthError> {
        let mut m = CouplingModel {
            gain: 1.0,
            coupling_band: self.cfg.coupling_band,
            noise_var: 1.0,
            fs: self.cfg.fs,
            seed: plan.seed,
        };
        if plan.drive_coherence <= 0.0 {
            m.gain = 0.0;
        } else {
            m.noise_var = m.noise_for_coherence(m.center(), plan.drive_coherence)?;
        }
        Ok(m)
    }

    /// Trapezoidal activation: baseline, ramp up, plateau, ramp down.
    fn activation(&self, plan: &TrialPlan, muscle: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(STREAM_TIMING_BASE + muscle as u64);
        let onset = rng.random_range(2.0..2.5);
        let hold = rng.random_range(2.5..3.0);
        let ramp = 0.25;
        let fs = self.cfg.fs;
        (0..self.n)
            .map(|i| {
                let t = i as f64 / fs;
                let level = if t < onset {
                    0.0
                } else if t < onset + ramp {
                    (t - onset) / ramp
                } else if t < onset + ramp + hold {
                    1.0
                } else if t < onset + 2.0 * ramp + hold {
                    1.0 - (t - onset - ramp - hold) / ramp
                } else {
                    0.0
                };
                0.05 + 0.95 * level
            })
            .collect()
    }

    fn emg(&self, plan: &TrialPlan, muscle: usize) -> Result<Vec<f64>, SynthError> {
        let model = self.coupling(plan)?;
        let x = gaussian_stream(plan.seed, STREAM_X, self.n);
        let w = gaussian_stream(plan.seed, STREAM_DRIVE_BASE + muscle as u64, self.n);
        let hx = model.filter()?.filtfilt(&x)?;
        let sd = model.noise_var.sqrt();
        let drive: Vec<f64> = hx.iter().zip(&w).map(|(h, e)| model.gain * h + sd * e).collect();
        let mean = drive.iter().sum::<f64>() / drive.len() as f64;
        let scale = (drive.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / drive.len() as f64)
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let carrier = gaussian_stream(plan.seed, STREAM_CARRIER_BASE + muscle as u64, self.n);
        let act = self.activation(plan, muscle);
        Ok((0..self.n)
            .map(|i| {
                let m = (1.0 + self.cfg.modulation_depth * (drive[i] - mean) / scale).max(0.0);
                act[i] * m * carrier[i]
            })
            .collect())
    }
}

impl ChannelSource for SynthSource {
    fn read_channel(&self, recording: usize, channel: usize) -> Result<Vec<f32>, IngestError> {
        let plan = self.plans.get(recording).ok_or(IngestError::Recording {
            recording,
            message: "no such synthetic recording".into(),
        })?;
        let eeg = EEG_MONTAGE.len();
        let data = if channel == self.source_index {
            gaussian_stream(plan.seed, STREAM_X, self.n)
        } else if channel < eeg {
            gaussian_stream(plan.seed, STREAM_EEG_BASE + channel as u64, self.n)
        } else if channel < eeg + Muscle::ALL.len() {
            self.emg(plan, channel - eeg).map_err(|e| IngestError::Recording {
                recording,
                message: e.to_string(),
            })?
        } else {
            return Err(IngestError::Recording {
                recording,
                message: format!("channel {channel} out of range"),
            });
        };
        Ok(data.into_iter().map(|v| v as f32).collect())
    }
}

/// Builds a synthetic dataset: one recording per trial, classes dealt
/// round-robin into trial ids `1..`.
pub fn synth_dataset(cfg: &SynthDatasetConfig) -> Result<Dataset, SynthError> {
    let source_index = EEG_MONTAGE
        .iter()
        .position(|c| *c == cfg.source_channel)
        .ok_or_else(|| SynthError::InvalidModel(format!("unknown source channel {}", cfg.source_channel)))?;
    let n = (cfg.trial_len_s * cfg.fs).round() as usize;
    if (n as f64) < cfg.fs {
        return Err(SynthError::InvalidModel("trials must last at least 1 s".into()));
    }
    let mut remaining: Vec<usize> = cfg.classes.iter().map(|c| c.trials).collect();
    let mut order = Vec::new();
    while remaining.iter().any(|&r| r > 0) {
        for (ci, r) in remaining.iter_mut().enumerate() {
            if *r > 0 {
                *r -= 1;
                order.push(ci);
            }
        }
    }
    let mut plans = Vec::with_capacity(order.len());
    let mut trials = Vec::with_capacity(order.len());
    let mut recordings = Vec::with_capacity(order.len());
    for (i, &ci) in order.iter().enumerate() {
        let class = &cfg.classes[ci];
        let trial_id = i as u32 + 1;
        plans.push(TrialPlan {
            seed: cfg.seed ^ u64::from(trial_id),
            drive_coherence: class.drive_coherence,
        });
        recordings.push(RecordingRef {
            file: format!("trial_{trial_id:04}.bin"),
            n_samples: n as u64,
        });
        trials.push(TrialEntry {
            trial_id,
            recording: i,
            start_s: 0.0,
            end_s: n as f64 / cfg.fs,
            weight_g: class.condition.weight.grams(),
            surface: class.condition.surface.to_string(),
        });
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        subject: cfg.subject.clone(),
        fs: cfg.fs,
        eeg_channels: EEG_MONTAGE.iter().map(|s| s.to_string()).collect(),
        emg_channels: Muscle::ALL.iter().map(|m| m.name().to_string()).collect(),
        emg_muscles: None,
        recordings,
        trials,
    };
    let source = SynthSource {
        cfg: cfg.clone(),
        plans,
        source_index,
        n,
    };
    Ok(Dataset::from_source(manifest, Box::new(source))?)
}
