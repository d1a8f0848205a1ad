//! Run configuration: one JSON document that fully determines a run.
//!
//! ```json
//! {
//!   "dataset": "data/subject7",
//!   "out": "runs/s7",
//!   "task": "light_vs_heavy",
//!   "eeg_channel": "C3",
//!   "durations": [1, 2, 4],
//!   "kernels": ["linear", "rbf"],
//!   "muscles": ["AD", "BR", "CED", "FD", "FDI"],
//!   "c": 1.0,
//!   "gamma": "scale",
//!   "cv": { "k": 5, "reps": 10 },
//!   "seed": 2018,
//!   "z_max": 5.0,
//!   "band_statistic": "mean",
//!   "jobs": null
//! }
//! ```
//!
//! Every key is optional and falls back to the defaults shown. `gamma` is
//! `"scale"` or a positive number. `z_max: null` disables artifact
//! rejection. `jobs: null` uses every core.

use crate::experiment::{PipelineConfig, Task};
use crate::labels::Muscle;
use crate::segmentation::{SegmentDuration, DEFAULT_Z_MAX};
use crate::sigcore::BandPassSpec;
use crate::spectral::{BandStatistic, WelchConfig};
use crate::svm::{CvParams, GammaMode, KernelChoice, SmoParams};
use crate::synth::SynthClass;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Self::Linear),
            "rbf" => Ok(Self::Rbf),
            _ => Err(format!("unknown kernel `{s}` (expected linear or rbf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Fixed(f64),
    Named(GammaName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaName {
    Scale,
}

impl GammaSetting {
    pub fn mode(self) -> GammaMode {
        match self {
            GammaSetting::Fixed(g) => GammaMode::Fixed(g),
            GammaSetting::Named(GammaName::Scale) => GammaMode::Scale,
        }
    }
}

impl FromStr for GammaSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("scale") {
            return Ok(Self::Named(GammaName::Scale));
        }
        s.parse::<f64>()
            .map(Self::Fixed)
            .map_err(|_| format!("gamma must be `scale` or a number, got `{s}`"))
    }
}

impl fmt::Display for GammaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaSetting::Fixed(g) => write!(f, "{g}"),
            GammaSetting::Named(GammaName::Scale) => f.write_str("scale"),
        }
    }
}

/// Parameters of the synthetic oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthValidateConfig {
    pub target_coherence: f64,
    pub f0_hz: f64,
    pub coupling_band: (f64, f64),
    pub trials: usize,
    pub dur_s: SegmentDuration,
    pub fs: f64,
    /// Noise variances for the monotonicity check.
    pub noise_grid: Vec<f64>,
}

impl Default for SynthValidateConfig {
    fn default() -> Self {
        Self {
            target_coherence: 0.8,
            f0_hz: 20.0,
            coupling_band: (13.0, 30.0),
            trials: 200,
            dur_s: SegmentDuration::Four,
            fs: 500.0,
            noise_grid: vec![0.25, 1.0, 4.0],
        }
    }
}

/// Layout of a generated synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthDataConfig {
    pub subject: String,
    pub trial_len_s: f64,
    pub coupling_band: (f64, f64),
    pub modulation_depth: f64,
    pub classes: Vec<SynthClass>,
}

impl Default for SynthDataConfig {
    fn default() -> Self {
        let base = crate::synth::SynthDatasetConfig::default();
        use crate::labels::{Condition, Surface, Weight};
        let class = |weight, surface, trials, drive_coherence| SynthClass {
            condition: Condition { weight, surface },
            trials,
            drive_coherence,
        };
        Self {
            subject: base.subject,
            trial_len_s: base.trial_len_s,
            coupling_band: base.coupling_band,
            modulation_depth: base.modulation_depth,
            classes: vec![
                class(Weight::Light, Surface::Sandpaper, 60, 0.2),
                class(Weight::Heavy, Surface::Silk, 60, 0.7),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub task: Task,
    pub eeg_channel: String,
    pub durations: Vec<SegmentDuration>,
    pub kernels: Vec<KernelKind>,
    pub muscles: Vec<Muscle>,
    pub c: f64,
    pub gamma: GammaSetting,
    pub cv: CvParams,
    pub seed: u64,
    pub z_max: Option<f64>,
    pub band_statistic: BandStatistic,
    pub bandpass: BandPassSpec,
    pub welch: WelchConfig,
    pub smo_tol: f64,
    pub smo_max_passes: usize,
    pub jobs: Option<usize>,
    pub synth: SynthDataConfig,
    pub synth_validate: SynthValidateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let smo = SmoParams::default();
        Self {
            dataset: None,
            out: PathBuf::from("out"),
            task: Task::LightVsHeavy,
            eeg_channel: "C3".into(),
            durations: SegmentDuration::ALL.to_vec(),
            kernels: vec![KernelKind::Linear, KernelKind::Rbf],
            muscles: Muscle::ALL.to_vec(),
            c: smo.c,
            gamma: GammaSetting::Named(GammaName::Scale),
            cv: CvParams::default(),
            seed: PipelineConfig::default().master_seed,
            z_max: Some(DEFAULT_Z_MAX),
            band_statistic: BandStatistic::Mean,
            bandpass: BandPassSpec::preprocessing(),
            welch: WelchConfig::default(),
            smo_tol: smo.tol,
            smo_max_passes: smo.max_passes,
            jobs: None,
            synth: SynthDataConfig::default(),
            synth_validate: SynthValidateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.durations.is_empty() {
            return bad("durations is empty".into());
        }
        if self.kernels.is_empty() {
            return bad("kernels is empty".into());
        }
        if self.muscles.is_empty() {
            return bad("muscles is empty".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if let GammaSetting::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("gamma must be positive, got {g}"));
            }
        }
        if self.cv.k < 2 || self.cv.reps == 0 {
            return bad(format!("cv needs k >= 2 and reps >= 1, got {:?}", self.cv));
        }
        if let Some(z) = self.z_max {
            if !(z > 0.0) {
                return bad(format!("z_max must be positive, got {z}"));
            }
        }
        if self.smo_tol <= 0.0 || self.smo_max_passes == 0 {
            return bad("smo_tol and smo_max_passes must be positive".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        Ok(())
    }

    pub fn kernel_choices(&self) -> Vec<KernelChoice> {
        let mut kinds = self.kernels.clone();
        kinds.dedup();
        kinds
            .into_iter()
            .map(|k| match k {
                KernelKind::Linear => KernelChoice::Linear,
                KernelKind::Rbf => KernelChoice::Rbf {
                    gamma: self.gamma.mode(),
                },
            })
            .collect()
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            band: self.bandpass,
            welch: self.welch,
            band_statistic: self.band_statistic,
            z_max: self.z_max.unwrap_or(f64::INFINITY),
            smo: SmoParams {
                c: self.c,
                tol: self.smo_tol,
                max_passes: self.smo_max_passes,
                seed: 0,
            },
            cv: self.cv,
            master_seed: self.seed,
        }
    }

    pub fn synth_dataset_config(&self) -> crate::synth::SynthDatasetConfig {
        crate::synth::SynthDatasetConfig {
            subject: self.synth.subject.clone(),
            fs: crate::ingest::EXPECTED_FS,
            trial_len_s: self.synth.trial_len_s,
            coupling_band: self.synth.coupling_band,
            modulation_depth: self.synth.modulation_depth,
            source_channel: self.eeg_channel.clone(),
            classes: self.synth.classes.clone(),
            seed: self.seed,
        }
    }
}
