//! Single-muscle accuracy tables and the exhaustive muscle-subset sweep.

use crate::ingest::{write_atomic, Dataset, IngestError, Trial};
use crate::labels::{muscle_key, Condition, Muscle, Surface, Weight};
use crate::segmentation::{
    self, reject_artifacts, ArtifactScreen, Rejection, SegmentDuration, SegmentError, TrialSegment,
    DEFAULT_Z_MAX,
};
use crate::sigcore::{self, BandPassSpec};
use crate::spectral::{
    self, band_features, BandStatistic, CmcSpectrum, SpectralError, WelchConfig, FEATURES_PER_MUSCLE,
    STANDARD_BANDS,
};
use crate::svm::{cross_validate, CvParams, CvReport, KernelChoice, Sample, SmoParams, SvmError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::sync::{Arc, Mutex};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("task {task}: no trials for class `{class}`")]
    EmptyClass { task: Task, class: &'static str },
    #[error("EEG channel `{0}` not in dataset")]
    UnknownChannel(String),
    #[error("muscle {0} has no EMG channel in dataset")]
    MissingMuscle(Muscle),
    #[error("empty muscle subset")]
    NoMuscles,
    #[error("{cell}: insufficient data ({negative} vs {positive} trials for k = {k})")]
    InsufficientData {
        cell: String,
        negative: usize,
        positive: usize,
        k: usize,
    },
    #[error("trial {trial_id}: {source}")]
    Trial {
        trial_id: u32,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("{cell}: {source}")]
    Svm {
        cell: String,
        #[source]
        source: SvmError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    LightVsHeavy,
    SandpaperVsSilk,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::LightVsHeavy, Task::SandpaperVsSilk];

    pub const fn name(self) -> &'static str {
        match self {
            Task::LightVsHeavy => "light_vs_heavy",
            Task::SandpaperVsSilk => "sandpaper_vs_silk",
        }
    }

    /// Class names for labels -1 and +1.
    pub const fn class_names(self) -> [&'static str; 2] {
        match self {
            Task::LightVsHeavy => ["light", "heavy"],
            Task::SandpaperVsSilk => ["sandpaper", "silk"],
        }
    }

    /// -1 / +1 for trials in the task, `None` for excluded conditions.
    pub fn label(self, c: &Condition) -> Option<i8> {
        match self {
            Task::LightVsHeavy => match c.weight {
                Weight::Light => Some(-1),
                Weight::Heavy => Some(1),
                Weight::Medium => None,
            },
            Task::SandpaperVsSilk => match c.surface {
                Surface::Sandpaper => Some(-1),
                Surface::Silk => Some(1),
                Surface::Suede => None,
            },
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}` (expected light_vs_heavy or sandpaper_vs_silk)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledTrial {
    pub trial_id: u32,
    pub label: i8,
}

/// Keeps the trials that belong to one of the task's two classes.
pub fn label_trials(trials: &[Trial], task: Task) -> Result<Vec<LabeledTrial>, ExperimentError> {
    let out: Vec<LabeledTrial> = trials
        .iter()
        .filter_map(|t| {
            task.label(&t.condition).map(|label| LabeledTrial {
                trial_id: t.trial_id,
                label,
            })
        })
        .collect();
    for (label, class) in [-1i8, 1].into_iter().zip(task.class_names()) {
        if !out.iter().any(|t| t.label == label) {
            return Err(ExperimentError::EmptyClass { task, class });
        }
    }
    Ok(out)
}

/// Processing and classification parameters shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub band: BandPassSpec,
    pub welch: WelchConfig,
    pub band_statistic: BandStatistic,
    pub z_max: f64,
    pub smo: SmoParams,
    pub cv: CvParams,
    pub master_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            band: BandPassSpec::preprocessing(),
            welch: WelchConfig::default(),
            band_statistic: BandStatistic::Mean,
            z_max: DEFAULT_Z_MAX,
            smo: SmoParams::default(),
            cv: CvParams::default(),
            master_seed: 2018,
        }
    }
}

/// Stable seed for a cell: FNV-1a of its key mixed with the master seed.
pub fn derive_seed(master: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // splitmix64 finalizer
    let mut z = h ^ master.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentFailure {
    pub trial_id: u32,
    pub muscle: Muscle,
    pub dur: Option<SegmentDuration>,
    pub reason: String,
}

/// Segments of every trial for a set of muscles and durations, after
/// artifact screening.
#[derive(Debug, Clone, Default)]
pub struct Preprocessed {
    pub cells: BTreeMap<(Muscle, SegmentDuration), ArtifactScreen>,
    pub failures: Vec<SegmentFailure>,
}

impl Preprocessed {
    pub fn rejections(&self) -> impl Iterator<Item = &Rejection> {
        self.cells.values().flat_map(|c| c.rejected.iter())
    }

    pub fn kept_count(&self) -> usize {
        self.cells.values().map(|c| c.kept.len()).sum()
    }
}

/// Filters, locates activations and cuts segments for each trial, then
/// screens artifacts per (muscle, duration) population.
pub fn preprocess(
    dataset: &Dataset,
    trial_ids: &[u32],
    eeg_channel: &str,
    muscles: &[Muscle],
    durations: &[SegmentDuration],
    cfg: &PipelineConfig,
) -> Result<Preprocessed, ExperimentError> {
    let m = dataset.manifest();
    let eeg_idx = m
        .eeg_index(eeg_channel)
        .ok_or_else(|| ExperimentError::UnknownChannel(eeg_channel.to_string()))?;
    let emg_idx = muscles
        .iter()
        .map(|&mu| m.emg_index(mu).ok_or(ExperimentError::MissingMuscle(mu)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut channels = vec![eeg_idx];
    channels.extend(&emg_idx);

    type PerTrial = (Vec<TrialSegment>, Vec<SegmentFailure>);
    let per_trial: Vec<PerTrial> = trial_ids
        .par_iter()
        .map(|&trial_id| -> Result<PerTrial, ExperimentError> {
            let rec = dataset
                .trial(trial_id, &channels)
                .map_err(|source| ExperimentError::Trial { trial_id, source })?;
            let mut segs = Vec::new();
            let mut fails = Vec::new();
            let fail = |muscle, dur, reason: String| SegmentFailure {
                trial_id,
                muscle,
                dur,
                reason,
            };
            let eeg = match sigcore::bandpass(&rec.channels[0], cfg.band) {
                Ok(e) => e,
                Err(e) => {
                    fails.extend(muscles.iter().map(|&mu| fail(mu, None, e.to_string())));
                    return Ok((segs, fails));
                }
            };
            for (k, &muscle) in muscles.iter().enumerate() {
                let located = segmentation::emg_profile(&rec.channels[k + 1], cfg.band)
                    .map_err(SegmentError::from)
                    .and_then(|p| {
                        let th = segmentation::compute_threshold(&p.envelope);
                        segmentation::find_activation(&p.envelope, th).map(|a| (p, a))
                    });
                let (profile, act) = match located {
                    Ok(v) => v,
                    Err(e) => {
                        fails.push(fail(muscle, None, e.to_string()));
                        continue;
                    }
                };
                for &dur in durations {
                    match segmentation::extract_segment(
                        &eeg,
                        &profile.rectified,
                        act.t0,
                        dur,
                        trial_id,
                        muscle,
                        rec.condition,
                    ) {
                        Ok(s) => segs.push(s),
                        Err(e) => fails.push(fail(muscle, Some(dur), e.to_string())),
                    }
                }
            }
            Ok((segs, fails))
        })
        .collect::<Result<_, _>>()?;

    let mut grouped: BTreeMap<(Muscle, SegmentDuration), Vec<TrialSegment>> = BTreeMap::new();
    for &mu in muscles {
        for &d in durations {
            grouped.insert((mu, d), Vec::new());
        }
    }
    let mut failures = Vec::new();
    for (segs, fails) in per_trial {
        for s in segs {
            grouped.get_mut(&(s.muscle, s.dur)).expect("pre-seeded").push(s);
        }
        failures.extend(fails);
    }
    let cells = grouped
        .into_par_iter()
        .map(|(key, mut segs)| {
            segs.sort_by_key(|s| s.trial_id);
            (key, reject_artifacts(segs, cfg.z_max))
        })
        .collect();
    Ok(Preprocessed { cells, failures })
}

/// Coherence spectra and band features of one (task, EEG channel, duration)
/// population, keyed by muscle then trial id.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub task: Task,
    pub eeg_channel: String,
    pub dur: SegmentDuration,
    pub labels: BTreeMap<u32, i8>,
    pub coherence: BTreeMap<Muscle, BTreeMap<u32, CmcSpectrum>>,
    pub features: BTreeMap<Muscle, BTreeMap<u32, Vec<f64>>>,
    pub preprocessed: Preprocessed,
}

impl Analysis {
    pub fn compute(
        dataset: &Dataset,
        task: Task,
        eeg_channel: &str,
        dur: SegmentDuration,
        muscles: &[Muscle],
        cfg: &PipelineConfig,
    ) -> Result<Self, ExperimentError> {
        let labeled = label_trials(dataset.trials(), task)?;
        let ids: Vec<u32> = labeled.iter().map(|t| t.trial_id).collect();
        let pre = preprocess(dataset, &ids, eeg_channel, muscles, &[dur], cfg)?;
        let mut coherence = BTreeMap::new();
        let mut features = BTreeMap::new();
        for (&(muscle, _), screen) in &pre.cells {
            let spectra: Vec<(u32, CmcSpectrum)> = screen
                .kept
                .par_iter()
                .map(|s| {
                    spectral::coherence(s.eeg.samples(), s.emg.samples(), s.eeg.fs(), &cfg.welch)
                        .map(|c| (s.trial_id, c))
                })
                .collect::<Result<_, _>>()?;
            let feats = spectra
                .iter()
                .map(|(id, c)| Ok((*id, band_features(c, &STANDARD_BANDS, cfg.band_statistic)?)))
                .collect::<Result<BTreeMap<_, _>, SpectralError>>()?;
            coherence.insert(muscle, spectra.into_iter().collect());
            features.insert(muscle, feats);
        }
        Ok(Self {
            task,
            eeg_channel: eeg_channel.to_string(),
            dur,
            labels: labeled.iter().map(|t| (t.trial_id, t.label)).collect(),
            coherence,
            features,
            preprocessed: pre,
        })
    }

    /// Samples for the trials that have features for every muscle in the
    /// subset; features concatenated in canonical muscle order.
    pub fn samples(&self, muscles: &[Muscle]) -> Result<(Vec<u32>, Vec<Sample>), ExperimentError> {
        let mut ms = muscles.to_vec();
        ms.sort();
        ms.dedup();
        if ms.is_empty() {
            return Err(ExperimentError::NoMuscles);
        }
        let tables = ms
            .iter()
            .map(|m| self.features.get(m).ok_or(ExperimentError::MissingMuscle(*m)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut ids = Vec::new();
        let mut samples = Vec::new();
        for (&id, &label) in &self.labels {
            if tables.iter().all(|t| t.contains_key(&id)) {
                let features: Vec<f64> = tables.iter().flat_map(|t| t[&id].iter().copied()).collect();
                debug_assert_eq!(features.len(), FEATURES_PER_MUSCLE * ms.len());
                ids.push(id);
                samples.push(Sample { features, label });
            }
        }
        Ok((ids, samples))
    }
}

/// One classification cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: Task,
    pub eeg_channel: String,
    pub dur: SegmentDuration,
    pub kernel: KernelChoice,
    pub muscles: Vec<Muscle>,
}

impl TaskSpec {
    pub fn key(&self) -> CellKey {
        let mut muscles = self.muscles.clone();
        muscles.sort();
        muscles.dedup();
        CellKey {
            task: self.task,
            muscles,
            dur: self.dur,
            kernel: self.kernel.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CellKey {
    pub task: Task,
    pub muscles: Vec<Muscle>,
    pub dur: SegmentDuration,
    pub kernel: String,
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}|{}s|{}",
            self.task,
            muscle_key(&self.muscles),
            self.dur,
            self.kernel
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Evaluated(CvReport),
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub key: CellKey,
    pub eeg_channel: String,
    pub negatives: usize,
    pub positives: usize,
    pub outcome: CellOutcome,
}

impl CellResult {
    pub fn report(&self) -> Option<&CvReport> {
        match &self.outcome {
            CellOutcome::Evaluated(r) => Some(r),
            CellOutcome::InsufficientData => None,
        }
    }

    pub fn mean_accuracy(&self) -> Option<f64> {
        self.report().map(|r| r.mean)
    }
}

/// Cross-validates one cell from precomputed features.
pub fn evaluate_cell(analysis: &Analysis, spec: &TaskSpec, cfg: &PipelineConfig) -> Result<CellResult, ExperimentError> {
    let key = spec.key();
    let (_, samples) = analysis.samples(&key.muscles)?;
    let negatives = samples.iter().filter(|s| s.label < 0).count();
    let positives = samples.len() - negatives;
    let outcome = if negatives < cfg.cv.k || positives < cfg.cv.k {
        CellOutcome::InsufficientData
    } else {
        let seed = derive_seed(
            cfg.master_seed,
            &format!("{}|{}", key, spec.eeg_channel),
        );
        let report = cross_validate(&samples, spec.kernel, &cfg.smo, cfg.cv, seed).map_err(|source| {
            ExperimentError::Svm {
                cell: key.to_string(),
                source,
            }
        })?;
        CellOutcome::Evaluated(report)
    };
    Ok(CellResult {
        key,
        eeg_channel: spec.eeg_channel.clone(),
        negatives,
        positives,
        outcome,
    })
}

/// Every non-empty subset of `muscles` (canonically ordered), grouped by
/// size, each group in lexicographic order.
pub fn muscle_subsets(muscles: &[Muscle]) -> Vec<Vec<Vec<Muscle>>> {
    let mut ms = muscles.to_vec();
    ms.sort();
    ms.dedup();
    let n = ms.len();
    let mut by_size: Vec<Vec<Vec<Muscle>>> = vec![Vec::new(); n];
    for mask in 1u32..(1 << n) {
        let subset: Vec<Muscle> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ms[i]).collect();
        by_size[subset.len() - 1].push(subset);
    }
    for group in &mut by_size {
        group.sort();
    }
    by_size
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    pub size: usize,
    pub subsets: Vec<(Vec<Muscle>, f64)>,
    pub mean: f64,
    pub std: f64,
    pub best_subset: Vec<Muscle>,
    pub best_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub task: Task,
    pub eeg_channel: String,
    pub dur: SegmentDuration,
    pub kernel: String,
    pub sizes: Vec<SizeSummary>,
    pub cells: Vec<CellResult>,
}

impl SweepReport {
    pub fn subset_counts(&self) -> Vec<usize> {
        self.sizes.iter().map(|s| s.subsets.len()).collect()
    }
}

/// Drives cells and sweeps over one dataset, caching the per-duration
/// feature tables.
pub struct Experiment<'a> {
    dataset: &'a Dataset,
    cfg: PipelineConfig,
    muscles: Vec<Muscle>,
    cache: Mutex<HashMap<(Task, String, SegmentDuration), Arc<Analysis>>>,
}

impl<'a> Experiment<'a> {
    /// Uses every muscle that has an EMG channel in the dataset.
    pub fn new(dataset: &'a Dataset, cfg: PipelineConfig) -> Self {
        let muscles = Muscle::ALL
            .into_iter()
            .filter(|&m| dataset.manifest().emg_index(m).is_some())
            .collect();
        Self::with_muscles(dataset, cfg, muscles)
    }

    pub fn with_muscles(dataset: &'a Dataset, cfg: PipelineConfig, mut muscles: Vec<Muscle>) -> Self {
        muscles.sort();
        muscles.dedup();
        Self {
            dataset,
            cfg,
            muscles,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn muscles(&self) -> &[Muscle] {
        &self.muscles
    }

    pub fn analysis(&self, task: Task, eeg_channel: &str, dur: SegmentDuration) -> Result<Arc<Analysis>, ExperimentError> {
        let key = (task, eeg_channel.to_string(), dur);
        if let Some(a) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(a));
        }
        let a = Arc::new(Analysis::compute(
            self.dataset,
            task,
            eeg_channel,
            dur,
            &self.muscles,
            &self.cfg,
        )?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, Arc::clone(&a));
        Ok(a)
    }

    pub fn run_cell(&self, spec: &TaskSpec) -> Result<CellResult, ExperimentError> {
        if spec.muscles.is_empty() {
            return Err(ExperimentError::NoMuscles);
        }
        let a = self.analysis(spec.task, &spec.eeg_channel, spec.dur)?;
        evaluate_cell(&a, spec, &self.cfg)
    }

    /// Cross-validates every muscle subset and aggregates per subset size.
    pub fn run_sweep(
        &self,
        task: Task,
        eeg_channel: &str,
        dur: SegmentDuration,
        kernel: KernelChoice,
    ) -> Result<SweepReport, ExperimentError> {
        let a = self.analysis(task, eeg_channel, dur)?;
        let groups = muscle_subsets(&self.muscles);
        let specs: Vec<TaskSpec> = groups
            .iter()
            .flatten()
            .map(|muscles| TaskSpec {
                task,
                eeg_channel: eeg_channel.to_string(),
                dur,
                kernel,
                muscles: muscles.clone(),
            })
            .collect();
        let cells: Vec<CellResult> = specs
            .par_iter()
            .map(|s| evaluate_cell(&a, s, &self.cfg))
            .collect::<Result<_, _>>()?;
        let mut sizes = Vec::with_capacity(groups.len());
        let mut it = cells.iter();
        for (i, group) in groups.iter().enumerate() {
            let mut subsets = Vec::with_capacity(group.len());
            for subset in group {
                let cell = it.next().expect("one cell per subset");
                debug_assert_eq!(&cell.key.muscles, subset);
                let acc = cell.mean_accuracy().ok_or_else(|| ExperimentError::InsufficientData {
                    cell: cell.key.to_string(),
                    negative: cell.negatives,
                    positive: cell.positives,
                    k: self.cfg.cv.k,
                })?;
                subsets.push((subset.clone(), acc));
            }
            let accs: Vec<f64> = subsets.iter().map(|s| s.1).collect();
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let std = (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n).sqrt();
            let (best_subset, best_accuracy) = subsets
                .iter()
                .fold(None::<&(Vec<Muscle>, f64)>, |best, s| match best {
                    Some(b) if b.1 >= s.1 => Some(b),
                    _ => Some(s),
                })
                .cloned()
                .expect("non-empty group");
            sizes.push(SizeSummary {
                size: i + 1,
                subsets,
                mean,
                std,
                best_subset,
                best_accuracy,
            });
        }
        Ok(SweepReport {
            task,
            eeg_channel: eeg_channel.to_string(),
            dur,
            kernel: kernel.name().to_string(),
            sizes,
            cells,
        })
    }
}

/// Everything a run produced, ready for serialization.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub cells: Vec<CellResult>,
    pub sweeps: Vec<SweepReport>,
}

pub const CELLS_HEADER: &str = "task,muscles,dur_s,kernel,fold,accuracy";
pub const SWEEP_HEADER: &str = "size,mean,std,best_subset,best_accuracy";
pub const SUMMARY_HEADER: &str =
    "task,muscles,dur_s,kernel,negatives,positives,mean,std,balanced_mean";

impl Report {
    fn sorted_cells(&self) -> Vec<&CellResult> {
        let mut cells: Vec<&CellResult> = self.cells.iter().collect();
        cells.sort_by(|a, b| a.key.cmp(&b.key).then_with(|| a.eeg_channel.cmp(&b.eeg_channel)));
        cells
    }

    /// One row per fold; insufficient cells get a single marker row.
    pub fn cells_csv(&self) -> String {
        let mut out = format!("{CELLS_HEADER}\n");
        for c in self.sorted_cells() {
            let k = &c.key;
            let prefix = format!("{},{},{},{}", k.task, muscle_key(&k.muscles), k.dur, k.kernel);
            match &c.outcome {
                CellOutcome::Evaluated(r) => {
                    for (i, a) in r.fold_accuracies.iter().enumerate() {
                        let _ = writeln!(out, "{prefix},{i},{a}");
                    }
                }
                CellOutcome::InsufficientData => {
                    let _ = writeln!(out, "{prefix},-,insufficient_data");
                }
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for c in self.sorted_cells() {
            let k = &c.key;
            let stats = match &c.outcome {
                CellOutcome::Evaluated(r) => format!("{},{},{}", r.mean, r.std, r.balanced_mean),
                CellOutcome::InsufficientData => "insufficient_data,,".to_string(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{stats}",
                k.task,
                muscle_key(&k.muscles),
                k.dur,
                k.kernel,
                c.negatives,
                c.positives
            );
        }
        out
    }

    pub fn sweep_csv(sweep: &SweepReport) -> String {
        let mut out = format!("{SWEEP_HEADER}\n");
        for s in &sweep.sizes {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.size,
                s.mean,
                s.std,
                muscle_key(&s.best_subset),
                s.best_accuracy
            );
        }
        out
    }

    pub fn sweep_file_name(sweep: &SweepReport) -> String {
        format!("sweep_{}_{}s_{}.csv", sweep.task, sweep.dur, sweep.kernel)
    }
}

/// Writes `cells.csv`, `summary.csv`, one `sweep_*.csv` per sweep and
/// `report.json` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_atomic(&dir.join("cells.csv"), report.cells_csv().as_bytes())?;
    write_atomic(&dir.join("summary.csv"), report.summary_csv().as_bytes())?;
    for s in &report.sweeps {
        write_atomic(&dir.join(Report::sweep_file_name(s)), Report::sweep_csv(s).as_bytes())?;
    }
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_atomic(&dir.join("report.json"), json.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_counts_five_and_four() {
        let five: Vec<usize> = muscle_subsets(&Muscle::ALL).iter().map(Vec::len).collect();
        assert_eq!(five, vec![5, 10, 10, 5, 1]);
        let four: Vec<usize> = muscle_subsets(&Muscle::ALL[..4]).iter().map(Vec::len).collect();
        assert_eq!(four, vec![4, 6, 4, 1]);
    }

    #[test]
    fn task_labels() {
        let c = |w, s| Condition {
            weight: w,
            surface: s,
        };
        assert_eq!(Task::LightVsHeavy.label(&c(Weight::Light, Surface::Suede)), Some(-1));
        assert_eq!(Task::LightVsHeavy.label(&c(Weight::Medium, Surface::Silk)), None);
        assert_eq!(Task::SandpaperVsSilk.label(&c(Weight::Medium, Surface::Silk)), Some(1));
        assert_eq!(Task::SandpaperVsSilk.label(&c(Weight::Heavy, Surface::Suede)), None);
    }

    #[test]
    fn only_medium_trials_is_an_error() {
        let trials: Vec<Trial> = (1..=4)
            .map(|i| Trial {
                trial_id: i,
                recording: 0,
                start_s: 0.0,
                end_s: 1.0,
                condition: Condition {
                    weight: Weight::Medium,
                    surface: Surface::Silk,
                },
            })
            .collect();
        assert!(matches!(
            label_trials(&trials, Task::LightVsHeavy),
            Err(ExperimentError::EmptyClass { class: "light", .. })
        ));
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = Report::default();
        assert_eq!(r.cells_csv(), format!("{CELLS_HEADER}\n"));
    }
}
