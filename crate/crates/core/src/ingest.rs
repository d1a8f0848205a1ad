//! Canonical on-disk dataset: a JSON manifest plus one binary file per
//! recording.
//!
//! # Manifest (`manifest.json`)
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "subject": "P7",
//!   "fs": 500.0,
//!   "eeg_channels": ["Fp1", "...", "C3", "..."],
//!   "emg_channels": ["EMG1", "..."],
//!   "emg_muscles": ["AD", "BR", "FD", "CED", "FDI"],
//!   "recordings": [{ "file": "series_01.bin", "n_samples": 123456 }],
//!   "trials": [{ "trial_id": 1, "recording": 0, "start_s": 1.5, "end_s": 9.0,
//!                "weight_g": 165, "surface": "silk" }]
//! }
//! ```
//!
//! `emg_muscles` is optional; when absent the EMG channel names themselves
//! must be muscle abbreviations. Trial windows are `[start_s, end_s)` on the
//! referenced recording.
//!
//! # Recording binary
//!
//! All integers little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `CMCR`                            |
//! | 4      | 2    | version `u16` = 1                       |
//! | 6      | 2    | reserved `u16` = 0                      |
//! | 8      | 4    | channel count `u32`                     |
//! | 12     | 8    | sample count `u64` (per channel)        |
//! | 20     | ...  | `f32` samples, channel-major            |
//!
//! Channel order is the manifest's EEG channels followed by its EMG
//! channels. Channel `c` occupies bytes `20 + 4*c*n .. 20 + 4*(c+1)*n`.

use crate::labels::{Condition, Muscle, Surface, Weight};
use crate::sigcore::TimeSeries;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;
pub const MAGIC: [u8; 4] = *b"CMCR";
pub const BINARY_VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 20;

pub const EXPECTED_FS: f64 = 500.0;
pub const EXPECTED_EEG_CHANNELS: usize = 32;
pub const EXPECTED_EMG_CHANNELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingRef {
    pub file: String,
    pub n_samples: u64,
}

/// Trial entry as written in the manifest; labels are kept raw so every
/// malformed value can be reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub trial_id: u32,
    pub recording: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub weight_g: u32,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub subject: String,
    pub fs: f64,
    pub eeg_channels: Vec<String>,
    pub emg_channels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emg_muscles: Option<Vec<String>>,
    pub recordings: Vec<RecordingRef>,
    pub trials: Vec<TrialEntry>,
}

/// A validated trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub trial_id: u32,
    pub recording: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub context: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

fn issues_text(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  - {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed manifest: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("dataset failed validation ({} issue(s)):\n{}", .0.len(), issues_text(.0))]
    Validation(Vec<ValidationIssue>),
    #[error("unknown trial {0}")]
    UnknownTrial(u32),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("recording {recording}: {message}")]
    Recording { recording: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_surface(s: &str) -> Option<Surface> {
    match s {
        "sandpaper" => Some(Surface::Sandpaper),
        "suede" => Some(Surface::Suede),
        "silk" => Some(Surface::Silk),
        _ => None,
    }
}

impl DatasetManifest {
    pub fn channel_count(&self) -> usize {
        self.eeg_channels.len() + self.emg_channels.len()
    }

    /// Muscle recorded by each EMG channel, in channel order.
    pub fn muscle_map(&self) -> Result<Vec<Muscle>, Vec<ValidationIssue>> {
        let names = self.emg_muscles.as_ref().unwrap_or(&self.emg_channels);
        let mut issues = Vec::new();
        let mut out = Vec::new();
        for (i, n) in names.iter().enumerate() {
            match n.parse::<Muscle>() {
                Ok(m) => out.push(m),
                Err(e) => issues.push(ValidationIssue {
                    context: format!("EMG channel {i}"),
                    message: e,
                }),
            }
        }
        let unique: HashSet<_> = out.iter().collect();
        if issues.is_empty() && unique.len() != out.len() {
            issues.push(ValidationIssue {
                context: "emg_muscles".into(),
                message: "a muscle is mapped to more than one EMG channel".into(),
            });
        }
        if issues.is_empty() {
            Ok(out)
        } else {
            Err(issues)
        }
    }

    /// Index of a channel in the recording layout.
    pub fn eeg_index(&self, name: &str) -> Option<usize> {
        self.eeg_channels.iter().position(|c| c == name)
    }

    pub fn emg_index(&self, muscle: Muscle) -> Option<usize> {
        let map = self.muscle_map().ok()?;
        map.iter()
            .position(|m| *m == muscle)
            .map(|i| self.eeg_channels.len() + i)
    }

    /// Checks the manifest against the schema and the expected recording
    /// layout; returns every issue found.
    pub fn validate(&self) -> Result<Vec<Trial>, Vec<ValidationIssue>> {
        let mut issues = Vec::new();
        let mut push = |context: String, message: String| issues.push(ValidationIssue { context, message });

        if self.format_version != FORMAT_VERSION {
            push(
                "format_version".into(),
                format!("unsupported version {} (expected {FORMAT_VERSION})", self.format_version),
            );
        }
        if self.fs != EXPECTED_FS {
            push("fs".into(), format!("sampling rate {} Hz, expected {EXPECTED_FS} Hz", self.fs));
        }
        if self.eeg_channels.len() != EXPECTED_EEG_CHANNELS {
            push(
                "eeg_channels".into(),
                format!(
                    "{} EEG channels declared, expected {EXPECTED_EEG_CHANNELS}",
                    self.eeg_channels.len()
                ),
            );
        }
        if self.emg_channels.len() != EXPECTED_EMG_CHANNELS {
            push(
                "emg_channels".into(),
                format!(
                    "{} EMG channels declared, expected {EXPECTED_EMG_CHANNELS}",
                    self.emg_channels.len()
                ),
            );
        }
        if let Some(m) = &self.emg_muscles {
            if m.len() != self.emg_channels.len() {
                push(
                    "emg_muscles".into(),
                    format!("{} entries for {} EMG channels", m.len(), self.emg_channels.len()),
                );
            }
        }
        let mut seen = HashSet::new();
        for c in self.eeg_channels.iter().chain(&self.emg_channels) {
            if !seen.insert(c) {
                push(format!("channel `{c}`"), "duplicate channel name".into());
            }
        }
        if let Err(mut e) = self.muscle_map() {
            issues.append(&mut e);
        }

        let mut trials = Vec::new();
        let mut ids = HashSet::new();
        let mut per_rec: BTreeMap<usize, Vec<(f64, f64, u32)>> = BTreeMap::new();
        for t in &self.trials {
            let ctx = format!("trial {}", t.trial_id);
            let mut ok = true;
            let mut bad = |msg: String, issues: &mut Vec<ValidationIssue>| {
                ok = false;
                issues.push(ValidationIssue {
                    context: ctx.clone(),
                    message: msg,
                });
            };
            if !ids.insert(t.trial_id) {
                bad("duplicate trial_id".into(), &mut issues);
            }
            if !(t.start_s.is_finite() && t.end_s.is_finite()) {
                bad("non-finite window".into(), &mut issues);
            } else if t.end_s <= t.start_s {
                bad(format!("end {} s is not after start {} s", t.end_s, t.start_s), &mut issues);
            } else if t.start_s < 0.0 {
                bad(format!("start {} s is negative", t.start_s), &mut issues);
            }
            match self.recordings.get(t.recording) {
                None => bad(format!("references missing recording {}", t.recording), &mut issues),
                Some(r) => {
                    let len_s = r.n_samples as f64 / self.fs;
                    if t.end_s > len_s + 1e-9 {
                        bad(
                            format!("end {} s exceeds recording length {len_s} s", t.end_s),
                            &mut issues,
                        );
                    }
                }
            }
            let weight = Weight::try_from(t.weight_g);
            if let Err(e) = &weight {
                bad(e.clone(), &mut issues);
            }
            let window_ok = t.start_s.is_finite() && t.end_s > t.start_s && t.recording < self.recordings.len();
            let surface = parse_surface(&t.surface);
            if surface.is_none() {
                bad(
                    format!("unknown surface `{}` (expected sandpaper, suede or silk)", t.surface),
                    &mut issues,
                );
            }
            if window_ok {
                per_rec
                    .entry(t.recording)
                    .or_default()
                    .push((t.start_s, t.end_s, t.trial_id));
            }
            if ok {
                trials.push(Trial {
                    trial_id: t.trial_id,
                    recording: t.recording,
                    start_s: t.start_s,
                    end_s: t.end_s,
                    condition: Condition {
                        weight: weight.expect("checked"),
                        surface: surface.expect("checked"),
                    },
                });
            }
        }
        for (rec, mut windows) in per_rec {
            windows.sort_by(|a, b| a.0.total_cmp(&b.0));
            for pair in windows.windows(2) {
                if pair[1].0 < pair[0].1 {
                    issues.push(ValidationIssue {
                        context: format!("trial {}", pair[1].2),
                        message: format!("overlaps trial {} on recording {rec}", pair[0].2),
                    });
                }
            }
        }
        if issues.is_empty() {
            trials.sort_by_key(|t| t.trial_id);
            Ok(trials)
        } else {
            Err(issues)
        }
    }
}

/// Source of raw channel data for a dataset.
pub trait ChannelSource: Send + Sync {
    /// All samples of one channel of one recording.
    fn read_channel(&self, recording: usize, channel: usize) -> Result<Vec<f32>, IngestError>;
}

/// Reads channels lazily from recording binaries on disk.
#[derive(Debug)]
struct DiskSource {
    files: Vec<PathBuf>,
    channels: usize,
    samples: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryHeader {
    pub version: u16,
    pub channels: u32,
    pub samples: u64,
}

pub fn read_header(path: &Path) -> Result<BinaryHeader, IngestError> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut buf = [0u8; HEADER_LEN as usize];
    f.read_exact(&mut buf).map_err(io_err(path))?;
    parse_header(&buf).map_err(|message| IngestError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, message),
    })
}

fn parse_header(buf: &[u8; HEADER_LEN as usize]) -> Result<BinaryHeader, String> {
    if buf[0..4] != MAGIC {
        return Err("bad magic (not a recording binary)".into());
    }
    let version = u16::from_le_bytes([buf[4], buf[5]]);
    if version != BINARY_VERSION {
        return Err(format!("unsupported binary version {version}"));
    }
    Ok(BinaryHeader {
        version,
        channels: u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes")),
        samples: u64::from_le_bytes(buf[12..20].try_into().expect("8 bytes")),
    })
}

pub fn encode_header(channels: u32, samples: u64) -> [u8; HEADER_LEN as usize] {
    let mut buf = [0u8; HEADER_LEN as usize];
    buf[0..4].copy_from_slice(&MAGIC);
    buf[4..6].copy_from_slice(&BINARY_VERSION.to_le_bytes());
    buf[8..12].copy_from_slice(&channels.to_le_bytes());
    buf[12..20].copy_from_slice(&samples.to_le_bytes());
    buf
}

impl ChannelSource for DiskSource {
    fn read_channel(&self, recording: usize, channel: usize) -> Result<Vec<f32>, IngestError> {
        let path = &self.files[recording];
        let n = self.samples[recording];
        if channel >= self.channels {
            return Err(IngestError::Recording {
                recording,
                message: format!("channel {channel} out of range"),
            });
        }
        let mut f = File::open(path).map_err(io_err(path))?;
        f.seek(SeekFrom::Start(HEADER_LEN + 4 * channel as u64 * n))
            .map_err(io_err(path))?;
        let mut bytes = vec![0u8; 4 * n as usize];
        f.read_exact(&mut bytes).map_err(io_err(path))?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

/// One trial window of selected channels, with its labels.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial_id: u32,
    pub condition: Condition,
    pub channels: Vec<TimeSeries>,
}

/// A validated dataset with on-demand channel access.
pub struct Dataset {
    manifest: DatasetManifest,
    trials: Vec<Trial>,
    source: Box<dyn ChannelSource>,
}

impl fmt::Debug for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dataset")
            .field("subject", &self.manifest.subject)
            .field("trials", &self.trials.len())
            .finish()
    }
}

impl Dataset {
    /// Wraps an in-memory or generated source; the manifest must validate.
    pub fn from_source(manifest: DatasetManifest, source: Box<dyn ChannelSource>) -> Result<Self, IngestError> {
        let trials = manifest.validate().map_err(IngestError::Validation)?;
        Ok(Self {
            manifest,
            trials,
            source,
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn fs(&self) -> f64 {
        self.manifest.fs
    }

    pub fn trial_meta(&self, trial_id: u32) -> Result<&Trial, IngestError> {
        self.trials
            .binary_search_by_key(&trial_id, |t| t.trial_id)
            .map(|i| &self.trials[i])
            .map_err(|_| IngestError::UnknownTrial(trial_id))
    }

    pub fn read_channel(&self, recording: usize, channel: usize) -> Result<Vec<f32>, IngestError> {
        self.source.read_channel(recording, channel)
    }

    fn channel_label(&self, channel: usize) -> &str {
        let eeg = self.manifest.eeg_channels.len();
        if channel < eeg {
            &self.manifest.eeg_channels[channel]
        } else {
            &self.manifest.emg_channels[channel - eeg]
        }
    }

    /// Loads only the requested channels of one trial window.
    pub fn trial(&self, trial_id: u32, channels: &[usize]) -> Result<TrialRecord, IngestError> {
        let t = *self.trial_meta(trial_id)?;
        let fs = self.manifest.fs;
        let start = (t.start_s * fs).round() as usize;
        let end = (t.end_s * fs).round() as usize;
        let series = channels
            .iter()
            .map(|&c| {
                if c >= self.manifest.channel_count() {
                    return Err(IngestError::UnknownChannel(c.to_string()));
                }
                let raw = self.source.read_channel(t.recording, c)?;
                if raw.len() < end {
                    return Err(IngestError::Recording {
                        recording: t.recording,
                        message: format!("{} samples, trial {trial_id} needs {end}", raw.len()),
                    });
                }
                let samples = raw[start..end].iter().map(|&v| f64::from(v)).collect();
                TimeSeries::new(samples, fs, self.channel_label(c)).map_err(|e| IngestError::Recording {
                    recording: t.recording,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TrialRecord {
            trial_id,
            condition: t.condition,
            channels: series,
        })
    }

    /// Every channel of every recording, read eagerly.
    pub fn load_all(&self) -> Result<Vec<Vec<Vec<f32>>>, IngestError> {
        (0..self.manifest.recordings.len())
            .map(|r| {
                (0..self.manifest.channel_count())
                    .map(|c| self.source.read_channel(r, c))
                    .collect()
            })
            .collect()
    }
}

/// Reads and validates a dataset directory; trial data stays on disk until
/// requested.
pub fn load_dataset(root: &Path) -> Result<Dataset, IngestError> {
    let manifest_path = root.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|source| IngestError::Json {
        path: manifest_path.display().to_string(),
        source,
    })?;
    let mut issues = manifest.validate().err().unwrap_or_default();
    let mut files = Vec::new();
    for (i, r) in manifest.recordings.iter().enumerate() {
        let path = root.join(&r.file);
        let ctx = format!("recording {i} ({})", r.file);
        match read_header(&path) {
            Err(e) => issues.push(ValidationIssue {
                context: ctx,
                message: e.to_string(),
            }),
            Ok(h) => {
                if h.channels as usize != manifest.channel_count() {
                    issues.push(ValidationIssue {
                        context: ctx.clone(),
                        message: format!(
                            "header declares {} channels, manifest {}",
                            h.channels,
                            manifest.channel_count()
                        ),
                    });
                }
                if h.samples != r.n_samples {
                    issues.push(ValidationIssue {
                        context: ctx.clone(),
                        message: format!("header declares {} samples, manifest {}", h.samples, r.n_samples),
                    });
                }
                let want = HEADER_LEN + 4 * u64::from(h.channels) * h.samples;
                match std::fs::metadata(&path) {
                    Ok(m) if m.len() != want => issues.push(ValidationIssue {
                        context: ctx,
                        message: format!("file is {} bytes, header implies {want}", m.len()),
                    }),
                    Ok(_) => {}
                    Err(e) => issues.push(ValidationIssue {
                        context: ctx,
                        message: e.to_string(),
                    }),
                }
            }
        }
        files.push(path);
    }
    if !issues.is_empty() {
        return Err(IngestError::Validation(issues));
    }
    let source = DiskSource {
        files,
        channels: manifest.channel_count(),
        samples: manifest.recordings.iter().map(|r| r.n_samples).collect(),
    };
    Dataset::from_source(manifest, Box::new(source))
}

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".into(),
    });
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Encodes channel-major `f32` data with the recording header.
pub fn encode_recording(channels: &[Vec<f32>]) -> Vec<u8> {
    let n = channels.first().map_or(0, Vec::len);
    assert!(channels.iter().all(|c| c.len() == n), "ragged recording");
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * n * channels.len());
    out.extend_from_slice(&encode_header(channels.len() as u32, n as u64));
    for c in channels {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Materializes a dataset (manifest and every recording) under `root`.
pub fn write_dataset(root: &Path, dataset: &Dataset) -> Result<(), IngestError> {
    std::fs::create_dir_all(root).map_err(io_err(root))?;
    let m = dataset.manifest();
    for (r, rec) in m.recordings.iter().enumerate() {
        let channels = (0..m.channel_count())
            .map(|c| dataset.read_channel(r, c))
            .collect::<Result<Vec<_>, _>>()?;
        write_atomic(&root.join(&rec.file), &encode_recording(&channels))?;
    }
    let text = serde_json::to_string_pretty(m).expect("manifest serializes");
    write_atomic(&root.join(MANIFEST_FILE), text.as_bytes())
}

/// Trial counts per condition of interest, compared with the reference
/// recording session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCounts {
    pub light: usize,
    pub heavy: usize,
    pub sandpaper: usize,
    pub silk: usize,
}

pub const REFERENCE_COUNTS: ConditionCounts = ConditionCounts {
    light: 84,
    heavy: 57,
    sandpaper: 51,
    silk: 221,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceCheck {
    pub observed: ConditionCounts,
    pub expected: ConditionCounts,
    pub deviations: Vec<String>,
}

impl ReferenceCheck {
    pub fn matches(&self) -> bool {
        self.deviations.is_empty()
    }
}

pub fn condition_counts(manifest: &DatasetManifest) -> ConditionCounts {
    let mut c = ConditionCounts {
        light: 0,
        heavy: 0,
        sandpaper: 0,
        silk: 0,
    };
    for t in &manifest.trials {
        match t.weight_g {
            165 => c.light += 1,
            660 => c.heavy += 1,
            _ => {}
        }
        match t.surface.as_str() {
            "sandpaper" => c.sandpaper += 1,
            "silk" => c.silk += 1,
            _ => {}
        }
    }
    c
}

/// Informational comparison of trial counts with the reference session
/// (light 84, heavy 57, sandpaper 51, silk 221). Never fails.
pub fn validate_against_reference(manifest: &DatasetManifest) -> ReferenceCheck {
    let observed = condition_counts(manifest);
    let expected = REFERENCE_COUNTS;
    let mut deviations = Vec::new();
    for (name, got, want) in [
        ("light", observed.light, expected.light),
        ("heavy", observed.heavy, expected.heavy),
        ("sandpaper", observed.sandpaper, expected.sandpaper),
        ("silk", observed.silk, expected.silk),
    ] {
        if got != want {
            deviations.push(format!("{name}: {got} trials (expected {want})"));
        }
    }
    ReferenceCheck {
        observed,
        expected,
        deviations,
    }
}
