//! Muscle-activation detection on the EMG envelope and extraction of
//! fixed-duration, time-aligned EEG/EMG segments.

use crate::labels::{Condition, Muscle};
use crate::sigcore::{self, BandPassSpec, SignalError, TimeSeries};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Smoothing window applied to the rectified EMG, in seconds.
pub const ENVELOPE_WINDOW_S: f64 = 0.400;

/// Scale from median absolute deviation to a Gaussian-consistent sigma.
pub const MAD_TO_SIGMA: f64 = 1.4826;

pub const DEFAULT_Z_MAX: f64 = 5.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error("no envelope sample of `{label}` exceeds threshold {threshold}")]
    NoActivation { label: String, threshold: f64 },
    #[error("window {start_s:.3}..{end_s:.3} s falls outside the {len_s:.3} s recording")]
    OutOfBounds { start_s: f64, end_s: f64, len_s: f64 },
    #[error("sampling rates differ: EEG {eeg} Hz vs EMG {emg} Hz")]
    RateMismatch { eeg: f64, emg: f64 },
    #[error("unsupported segment duration {0} s (expected 1, 2 or 4)")]
    InvalidDuration(f64),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Allowed segment lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum SegmentDuration {
    One,
    Two,
    Four,
}

impl SegmentDuration {
    pub const ALL: [SegmentDuration; 3] = [Self::One, Self::Two, Self::Four];

    pub const fn seconds(self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Two => 2.0,
            Self::Four => 4.0,
        }
    }

    pub fn samples(self, fs: f64) -> usize {
        (self.seconds() * fs).round() as usize
    }
}

impl TryFrom<f64> for SegmentDuration {
    type Error = SegmentError;

    fn try_from(s: f64) -> Result<Self, Self::Error> {
        match s {
            1.0 => Ok(Self::One),
            2.0 => Ok(Self::Two),
            4.0 => Ok(Self::Four),
            other => Err(SegmentError::InvalidDuration(other)),
        }
    }
}

impl From<SegmentDuration> for f64 {
    fn from(d: SegmentDuration) -> f64 {
        d.seconds()
    }
}

impl fmt::Display for SegmentDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.seconds() as u32)
    }
}

/// Longest above-threshold run of an envelope. Times are relative to the
/// first envelope sample; `t_end` is the exclusive end of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationInterval {
    pub start_idx: usize,
    pub end_idx: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub t0: f64,
    pub threshold: f64,
}

/// Time-aligned EEG and EMG windows of one trial for one muscle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSegment {
    pub trial_id: u32,
    pub muscle: Muscle,
    pub condition: Condition,
    pub dur: SegmentDuration,
    /// Index of the first sample within the source trial.
    pub start: usize,
    pub eeg: TimeSeries,
    pub emg: TimeSeries,
}

/// Rectified band-passed EMG and its smoothed activation envelope.
#[derive(Debug, Clone)]
pub struct EmgProfile {
    pub rectified: TimeSeries,
    pub envelope: TimeSeries,
}

pub fn emg_profile(emg: &TimeSeries, band: BandPassSpec) -> Result<EmgProfile, SignalError> {
    let rectified = sigcore::rectify(&sigcore::bandpass(emg, band)?);
    let envelope = sigcore::moving_average(&rectified, ENVELOPE_WINDOW_S)?;
    Ok(EmgProfile {
        rectified,
        envelope,
    })
}

/// `(max - min) / 3 + min` over the whole envelope.
pub fn compute_threshold(envelope: &TimeSeries) -> f64 {
    let (lo, hi) = envelope
        .samples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    (hi - lo) / 3.0 + lo
}

/// Longest maximal run strictly above `th`; ties go to the earliest run.
pub fn find_activation(envelope: &TimeSeries, th: f64) -> Result<ActivationInterval, SegmentError> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    let x = envelope.samples();
    for i in 0..=x.len() {
        let above = i < x.len() && x[i] > th;
        match (above, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    let (start_idx, end_idx) = best.ok_or_else(|| SegmentError::NoActivation {
        label: envelope.label().to_string(),
        threshold: th,
    })?;
    let fs = envelope.fs();
    let t_start = start_idx as f64 / fs;
    let t_end = end_idx as f64 / fs;
    Ok(ActivationInterval {
        start_idx,
        end_idx,
        t_start,
        t_end,
        t0: (t_start + t_end) / 2.0,
        threshold: th,
    })
}

/// Cuts `[t0 - dur/2, t0 + dur/2)` from both channels.
pub fn extract_segment(
    eeg: &TimeSeries,
    emg: &TimeSeries,
    t0: f64,
    dur: SegmentDuration,
    trial_id: u32,
    muscle: Muscle,
    condition: Condition,
) -> Result<TrialSegment, SegmentError> {
    if eeg.fs() != emg.fs() {
        return Err(SegmentError::RateMismatch {
            eeg: eeg.fs(),
            emg: emg.fs(),
        });
    }
    let fs = eeg.fs();
    let half = dur.seconds() / 2.0;
    let n = dur.samples(fs);
    let start = ((t0 - half) * fs).round();
    let len = eeg.len().min(emg.len());
    if !(start >= 0.0 && start as usize + n <= len) {
        return Err(SegmentError::OutOfBounds {
            start_s: t0 - half,
            end_s: t0 + half,
            len_s: len as f64 / fs,
        });
    }
    let start = start as usize;
    Ok(TrialSegment {
        trial_id,
        muscle,
        condition,
        dur,
        start,
        eeg: eeg.slice(start, n),
        emg: emg.slice(start, n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub trial_id: u32,
    pub muscle: Muscle,
    pub dur: SegmentDuration,
    pub peak: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ArtifactScreen {
    pub kept: Vec<TrialSegment>,
    pub rejected: Vec<Rejection>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median and MAD-based sigma of a sample population.
pub fn robust_location_scale(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let med = median(&v);
    let mut dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    (med, MAD_TO_SIGMA * median(&dev))
}

/// Drops segments whose EEG peak deviation from the pooled median exceeds
/// `z_max` robust sigmas of all pooled EEG samples. A population with zero
/// dispersion rejects nothing.
pub fn reject_artifacts(segments: Vec<TrialSegment>, z_max: f64) -> ArtifactScreen {
    if segments.is_empty() || z_max.is_infinite() {
        return ArtifactScreen {
            kept: segments,
            rejected: Vec::new(),
        };
    }
    let pooled: Vec<f64> = segments
        .iter()
        .flat_map(|s| s.eeg.samples().iter().copied())
        .collect();
    let (med, sigma) = robust_location_scale(&pooled);
    if sigma <= 0.0 {
        return ArtifactScreen {
            kept: segments,
            rejected: Vec::new(),
        };
    }
    let limit = z_max * sigma;
    let mut screen = ArtifactScreen::default();
    for seg in segments {
        let peak = seg
            .eeg
            .samples()
            .iter()
            .fold(0.0f64, |m, v| m.max((v - med).abs()));
        if peak > limit {
            screen.rejected.push(Rejection {
                trial_id: seg.trial_id,
                muscle: seg.muscle,
                dur: seg.dur,
                peak,
                limit,
            });
        } else {
            screen.kept.push(seg);
        }
    }
    screen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{Surface, Weight};

    const COND: Condition = Condition {
        weight: Weight::Light,
        surface: Surface::Silk,
    };

    fn ts(v: Vec<f64>, fs: f64) -> TimeSeries {
        TimeSeries::new(v, fs, "env").unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(compute_threshold(&ts(vec![0.0, 3.0, 1.0], 1.0)), 1.0);
        assert_eq!(compute_threshold(&ts(vec![2.0, 2.0], 1.0)), 2.0);
        let ramp: Vec<f64> = (0..=6).map(f64::from).collect();
        assert_eq!(compute_threshold(&ts(ramp, 1.0)), 2.0);
    }

    #[test]
    fn constant_envelope_has_no_activation() {
        let env = ts(vec![2.0; 100], 500.0);
        let th = compute_threshold(&env);
        assert!(matches!(
            find_activation(&env, th),
            Err(SegmentError::NoActivation { .. })
        ));
    }

    #[test]
    fn longest_run_wins() {
        let mut v = vec![0.0; 1000];
        v[50..150].iter_mut().for_each(|x| *x = 1.0);
        v[400..700].iter_mut().for_each(|x| *x = 1.0);
        let a = find_activation(&ts(v, 500.0), 0.5).unwrap();
        assert_eq!((a.start_idx, a.end_idx), (400, 700));
        assert_eq!(a.t0, (a.t_start + a.t_end) / 2.0);
    }

    #[test]
    fn equal_runs_pick_earliest() {
        let v = vec![1.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let a = find_activation(&ts(v, 1.0), 0.5).unwrap();
        assert_eq!((a.start_idx, a.end_idx), (0, 2));
    }

    #[test]
    fn extract_index_arithmetic() {
        let x = ts(vec![0.0; 10_000], 500.0);
        let s = extract_segment(&x, &x, 10.0, SegmentDuration::Four, 1, Muscle::BR, COND).unwrap();
        assert_eq!(s.start, 4000);
        assert_eq!(s.eeg.len(), 2000);
        assert_eq!(s.emg.len(), 2000);
    }

    #[test]
    fn extract_errors() {
        let x = ts(vec![0.0; 10_000], 500.0);
        assert!(matches!(
            extract_segment(&x, &x, 0.3, SegmentDuration::One, 1, Muscle::BR, COND),
            Err(SegmentError::OutOfBounds { .. })
        ));
        assert!(matches!(
            extract_segment(&x, &x, 19.9, SegmentDuration::One, 1, Muscle::BR, COND),
            Err(SegmentError::OutOfBounds { .. })
        ));
        let y = ts(vec![0.0; 10_000], 1000.0);
        assert!(matches!(
            extract_segment(&x, &y, 5.0, SegmentDuration::One, 1, Muscle::BR, COND),
            Err(SegmentError::RateMismatch { .. })
        ));
    }

    #[test]
    fn duration_parse() {
        assert_eq!(SegmentDuration::try_from(2.0).unwrap(), SegmentDuration::Two);
        assert!(SegmentDuration::try_from(3.0).is_err());
    }

    fn seg(id: u32, eeg: Vec<f64>) -> TrialSegment {
        let e = ts(eeg, 500.0);
        TrialSegment {
            trial_id: id,
            muscle: Muscle::AD,
            condition: COND,
            dur: SegmentDuration::One,
            start: 0,
            emg: e.clone(),
            eeg: e,
        }
    }

    #[test]
    fn identical_segments_survive() {
        let segs: Vec<_> = (0..5).map(|i| seg(i, vec![1.0; 500])).collect();
        let out = reject_artifacts(segs.clone(), 5.0);
        assert_eq!(out.kept, segs);
        let varied: Vec<_> = (0..5)
            .map(|i| seg(i, (0..500).map(|k| ((k * 7 + 3) % 11) as f64).collect()))
            .collect();
        assert_eq!(reject_artifacts(varied.clone(), 5.0).kept, varied);
    }

    #[test]
    fn infinite_limit_is_identity() {
        let mut segs: Vec<_> = (0..4).map(|i| seg(i, vec![i as f64; 500])).collect();
        segs[0].eeg = ts(vec![1e6; 500], 500.0);
        let out = reject_artifacts(segs.clone(), f64::INFINITY);
        assert_eq!(out.kept, segs);
        assert!(out.rejected.is_empty());
    }
}
