//! Subcommand bodies. Each writes into `cfg.out`: a `resolved_config.json`
//! snapshot first, a `RUN_INCOMPLETE` marker while running, then its
//! outputs. The marker is removed only when every stage succeeded.

use crate::config::RunConfig;
use crate::experiment::{emit_report, Analysis, Experiment, Report, Task, TaskSpec};
use crate::ingest::{
    condition_counts, encode_recording, load_dataset, validate_against_reference, write_atomic,
    write_dataset, Dataset, IngestError, ValidationIssue,
};
use crate::labels::{muscle_key, Muscle};
use crate::segmentation::SegmentDuration;
use crate::spectral::{confidence_level, trial_stats, STANDARD_BANDS};
use crate::synth::{oracle_comparison, synth_dataset, CouplingModel};
use anyhow::{bail, Context, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SNAPSHOT_FILE: &str = "resolved_config.json";
pub const INCOMPLETE_MARKER: &str = "RUN_INCOMPLETE";

/// Output directory of one run.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn open(cfg: &RunConfig, command: &str) -> Result<Self> {
        let root = cfg.out.clone();
        std::fs::create_dir_all(&root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        let dir = Self { root };
        dir.write(INCOMPLETE_MARKER, format!("{command}\n"))?;
        dir.write(SNAPSHOT_FILE, cfg.to_json())?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        write_atomic(&path, contents.as_ref()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn finish(self) -> Result<()> {
        let marker = self.root.join(INCOMPLETE_MARKER);
        std::fs::remove_file(&marker).with_context(|| format!("removing {}", marker.display()))
    }
}

fn open_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let Some(root) = &cfg.dataset else {
        bail!("no dataset given (use --dataset or the `dataset` config key)");
    };
    if !root.is_dir() {
        bail!("dataset directory {} does not exist", root.display());
    }
    load_dataset(root).with_context(|| format!("loading dataset {}", root.display()))
}

fn experiment<'a>(cfg: &RunConfig, ds: &'a Dataset) -> Experiment<'a> {
    Experiment::with_muscles(ds, cfg.pipeline(), cfg.muscles.clone())
}

fn sorted_durations(cfg: &RunConfig) -> Vec<SegmentDuration> {
    let mut d = cfg.durations.clone();
    d.sort();
    d.dedup();
    d
}

/// Segments every trial of the dataset for every configured muscle and
/// duration. Per (muscle, duration) one binary file holds the segments as
/// channel pairs (EEG, EMG) in `index.csv` order.
pub fn preprocess(cfg: &RunConfig) -> Result<String> {
    let ds = open_dataset(cfg)?;
    let run = RunDir::open(cfg, "preprocess")?;
    let ids: Vec<u32> = ds.trials().iter().map(|t| t.trial_id).collect();
    let mut muscles = cfg.muscles.clone();
    muscles.sort();
    muscles.dedup();
    let pre = crate::experiment::preprocess(
        &ds,
        &ids,
        &cfg.eeg_channel,
        &muscles,
        &sorted_durations(cfg),
        &cfg.pipeline(),
    )
    .context("preprocessing")?;

    let mut index = String::from("trial_id,muscle,dur_s,weight_g,surface,start_sample,file,eeg_channel,emg_channel\n");
    for ((muscle, dur), screen) in &pre.cells {
        let file = format!("segments/{muscle}_{dur}s.bin");
        let mut channels = Vec::with_capacity(2 * screen.kept.len());
        for (i, s) in screen.kept.iter().enumerate() {
            let _ = writeln!(
                index,
                "{},{muscle},{dur},{},{},{},{file},{},{}",
                s.trial_id,
                s.condition.weight.grams(),
                s.condition.surface,
                s.start,
                2 * i,
                2 * i + 1
            );
            channels.push(s.eeg.samples().iter().map(|&v| v as f32).collect());
            channels.push(s.emg.samples().iter().map(|&v| v as f32).collect());
        }
        run.write(&file, encode_recording(&channels))?;
    }
    run.write("index.csv", index)?;

    let mut rejections = String::from("trial_id,muscle,dur_s,peak,limit\n");
    for r in pre.rejections() {
        let _ = writeln!(rejections, "{},{},{},{},{}", r.trial_id, r.muscle, r.dur, r.peak, r.limit);
    }
    run.write("rejections.csv", rejections)?;

    let mut failures = String::from("trial_id,muscle,dur_s,reason\n");
    for f in &pre.failures {
        let dur = f.dur.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(failures, "{},{},{dur},\"{}\"", f.trial_id, f.muscle, f.reason.replace('"', "'"));
    }
    run.write("failures.csv", failures)?;
    run.finish()?;
    Ok(format!(
        "{} segments kept, {} rejected, {} failed",
        pre.kept_count(),
        pre.rejections().count(),
        pre.failures.len()
    ))
}

fn features_csv(a: &Analysis) -> String {
    let mut out = String::from("trial_id,label,muscle");
    for b in &STANDARD_BANDS {
        out.push(',');
        out.push_str(b.name);
    }
    out.push('\n');
    for (muscle, table) in &a.features {
        for (id, f) in table {
            let _ = write!(out, "{id},{},{muscle}", a.labels[id]);
            for v in f {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

/// Class-wise mean/std coherence spectra and per-trial band features.
pub fn cmc(cfg: &RunConfig) -> Result<String> {
    let ds = open_dataset(cfg)?;
    let run = RunDir::open(cfg, "cmc")?;
    let ex = experiment(cfg, &ds);
    let task = cfg.task;
    let mut levels = String::from("dur_s,subwindows,confidence_95\n");
    let mut files = 0;
    for dur in sorted_durations(cfg) {
        let a = ex
            .analysis(task, &cfg.eeg_channel, dur)
            .with_context(|| format!("coherence for {task}, {dur} s"))?;
        let l = cfg.welch.segment_count(dur.samples(ds.fs()), ds.fs());
        let _ = writeln!(levels, "{dur},{l},{}", confidence_level(l, 0.05)?);
        for (muscle, spectra) in &a.coherence {
            for (label, class) in [-1i8, 1].into_iter().zip(task.class_names()) {
                let class_spectra: Vec<_> = spectra
                    .iter()
                    .filter(|(id, _)| a.labels[id] == label)
                    .map(|(_, c)| c.clone())
                    .collect();
                if class_spectra.is_empty() {
                    continue;
                }
                let stats = trial_stats(&class_spectra)?;
                run.write(&format!("cmc/{task}_{dur}s_{muscle}_{class}.csv"), stats.to_csv())?;
                files += 1;
            }
        }
        run.write(&format!("features_{task}_{dur}s.csv"), features_csv(&a))?;
    }
    run.write("confidence.csv", levels)?;
    run.finish()?;
    Ok(format!("{files} spectra written"))
}

/// Single-muscle accuracy table plus the all-muscle cell, per duration and
/// kernel.
pub fn classify(cfg: &RunConfig) -> Result<String> {
    let ds = open_dataset(cfg)?;
    let run = RunDir::open(cfg, "classify")?;
    let ex = experiment(cfg, &ds);
    let mut subsets: Vec<Vec<Muscle>> = ex.muscles().iter().map(|&m| vec![m]).collect();
    if ex.muscles().len() > 1 {
        subsets.push(ex.muscles().to_vec());
    }
    let mut report = Report::default();
    for dur in sorted_durations(cfg) {
        for kernel in cfg.kernel_choices() {
            for muscles in &subsets {
                let spec = TaskSpec {
                    task: cfg.task,
                    eeg_channel: cfg.eeg_channel.clone(),
                    dur,
                    kernel,
                    muscles: muscles.clone(),
                };
                let cell = ex
                    .run_cell(&spec)
                    .with_context(|| format!("cell {}", spec.key()))?;
                report.cells.push(cell);
            }
        }
    }
    emit_report(&report, run.path())?;
    run.write("table.csv", accuracy_table(&report, cfg.task))?;
    run.finish()?;
    Ok(format!("{} cells evaluated", report.cells.len()))
}

/// Rows = muscle subset, columns = duration, one block per kernel.
fn accuracy_table(report: &Report, task: Task) -> String {
    let mut durs: Vec<SegmentDuration> = report.cells.iter().map(|c| c.key.dur).collect();
    durs.sort();
    durs.dedup();
    let mut out = String::from("task,kernel,muscles");
    for d in &durs {
        let _ = write!(out, ",{d}s");
    }
    out.push('\n');
    let mut rows: Vec<(String, Vec<Muscle>)> = report
        .cells
        .iter()
        .map(|c| (c.key.kernel.clone(), c.key.muscles.clone()))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.len().cmp(&b.1.len())).then(a.1.cmp(&b.1)));
    rows.dedup();
    for (kernel, muscles) in rows {
        let _ = write!(out, "{task},{kernel},{}", muscle_key(&muscles));
        for d in &durs {
            let v = report
                .cells
                .iter()
                .find(|c| c.key.kernel == kernel && c.key.muscles == muscles && c.key.dur == *d)
                .and_then(|c| c.mean_accuracy())
                .map(|a| a.to_string())
                .unwrap_or_else(|| "insufficient_data".into());
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Exhaustive muscle-subset sweep per duration and kernel.
pub fn sweep(cfg: &RunConfig) -> Result<String> {
    let ds = open_dataset(cfg)?;
    let run = RunDir::open(cfg, "sweep")?;
    let ex = experiment(cfg, &ds);
    let mut report = Report::default();
    for dur in sorted_durations(cfg) {
        for kernel in cfg.kernel_choices() {
            let s = ex
                .run_sweep(cfg.task, &cfg.eeg_channel, dur, kernel)
                .with_context(|| format!("sweep {}, {dur} s, {kernel}", cfg.task))?;
            report.cells.extend(s.cells.iter().cloned());
            report.sweeps.push(s);
        }
    }
    emit_report(&report, run.path())?;
    run.finish()?;
    let best: Vec<String> = report
        .sweeps
        .iter()
        .map(|s| {
            let top = s.sizes.iter().map(|z| z.best_accuracy).fold(0.0, f64::max);
            format!("{}s/{}: best {top:.4}", s.dur, s.kernel)
        })
        .collect();
    Ok(best.join("; "))
}

#[derive(Debug, Serialize)]
struct NoisePoint {
    noise_var: f64,
    theoretical: f64,
    estimated: f64,
}

#[derive(Debug, Serialize)]
struct SynthValidateSummary {
    f0_hz: f64,
    target: f64,
    theoretical_at_f0: f64,
    estimated_at_f0: f64,
    abs_error_at_f0: f64,
    trials: usize,
    noise_grid: Vec<NoisePoint>,
    monotone_in_noise: bool,
}

/// Compares the estimator's trial-mean coherence with the closed form.
pub fn synth_validate(cfg: &RunConfig) -> Result<String> {
    let sv = &cfg.synth_validate;
    let run = RunDir::open(cfg, "synth-validate")?;
    let n = sv.dur_s.samples(sv.fs);
    let seed = crate::experiment::derive_seed(cfg.seed, "synth-validate");
    let mut model = CouplingModel {
        gain: 1.0,
        coupling_band: sv.coupling_band,
        noise_var: 1.0,
        fs: sv.fs,
        seed,
    };
    let grid = crate::spectral::frequency_grid(cfg.welch.nfft(sv.fs), sv.fs);
    let f0 = grid[crate::synth::nearest_bin(&grid, sv.f0_hz)];
    model.noise_var = model.noise_for_coherence(f0, sv.target_coherence)?;
    let cmp = oracle_comparison(&model, sv.trials, n, &cfg.welch)?;
    run.write("synth_validate.csv", cmp.to_csv())?;
    let k = cmp.bin(f0);

    let mut points = Vec::new();
    for &noise_var in &sv.noise_grid {
        let m = CouplingModel { noise_var, ..model };
        let c = oracle_comparison(&m, sv.trials, n, &cfg.welch)?;
        points.push(NoisePoint {
            noise_var,
            theoretical: c.theoretical[k],
            estimated: c.estimated[k],
        });
    }
    let mut by_noise: Vec<&NoisePoint> = points.iter().collect();
    by_noise.sort_by(|a, b| a.noise_var.total_cmp(&b.noise_var));
    let monotone = by_noise.windows(2).all(|w| w[1].estimated < w[0].estimated);
    let summary = SynthValidateSummary {
        f0_hz: f0,
        target: sv.target_coherence,
        theoretical_at_f0: cmp.theoretical[k],
        estimated_at_f0: cmp.estimated[k],
        abs_error_at_f0: (cmp.estimated[k] - cmp.theoretical[k]).abs(),
        trials: sv.trials,
        noise_grid: points,
        monotone_in_noise: monotone,
    };
    run.write(
        "synth_validate.json",
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    run.finish()?;
    Ok(format!(
        "f0 = {f0} Hz: estimated {:.4}, theoretical {:.4}, |error| {:.4}; monotone in noise: {monotone}",
        summary.estimated_at_f0, summary.theoretical_at_f0, summary.abs_error_at_f0
    ))
}

#[derive(Debug, Serialize)]
struct ValidationReport<'a> {
    dataset: String,
    valid: bool,
    issues: &'a [ValidationIssue],
    counts: Option<crate::ingest::ConditionCounts>,
    reference: Option<crate::ingest::ReferenceCheck>,
}

/// Validates a dataset and compares its condition counts with the
/// reference session. Fails when the dataset itself is invalid; count
/// deviations are reported only.
pub fn validate_dataset(cfg: &RunConfig) -> Result<String> {
    let Some(root) = cfg.dataset.clone() else {
        bail!("no dataset given (use --dataset or the `dataset` config key)");
    };
    let run = RunDir::open(cfg, "validate-dataset")?;
    let loaded = load_dataset(&root);
    let (issues, ds) = match loaded {
        Ok(ds) => (Vec::new(), Some(ds)),
        Err(IngestError::Validation(issues)) => (issues, None),
        Err(e) => return Err(e).with_context(|| format!("loading dataset {}", root.display())),
    };
    let report = ValidationReport {
        dataset: root.display().to_string(),
        valid: ds.is_some(),
        issues: &issues,
        counts: ds.as_ref().map(|d| condition_counts(d.manifest())),
        reference: ds.as_ref().map(|d| validate_against_reference(d.manifest())),
    };
    run.write(
        "validation.json",
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    )?;
    if !issues.is_empty() {
        bail!(IngestError::Validation(issues));
    }
    let reference = report.reference.expect("valid dataset");
    run.finish()?;
    if reference.matches() {
        Ok("dataset valid; condition counts match the reference session".into())
    } else {
        Ok(format!(
            "dataset valid; condition counts deviate from the reference session: {}",
            reference.deviations.join("; ")
        ))
    }
}

/// Writes a synthetic dataset in the canonical format to `cfg.out`.
pub fn synth(cfg: &RunConfig) -> Result<String> {
    let run = RunDir::open(cfg, "synth")?;
    let ds = synth_dataset(&cfg.synth_dataset_config())?;
    write_dataset(run.path(), &ds)?;
    run.finish()?;
    Ok(format!(
        "{} trials written to {}",
        ds.trials().len(),
        cfg.out.display()
    ))
}
