use cmcgrasp::commands::{INCOMPLETE_MARKER, SNAPSHOT_FILE};
use cmcgrasp::config::RunConfig;
use cmcgrasp::experiment::{emit_report, CellOutcome, Experiment, PipelineConfig, Report, Task, TaskSpec};
use cmcgrasp::labels::{Condition, Muscle, Surface, Weight};
use cmcgrasp::segmentation::SegmentDuration;
use cmcgrasp::svm::{GammaMode, KernelChoice};
use cmcgrasp::synth::{synth_dataset, SynthClass, SynthDatasetConfig};
use cmcgrasp::Dataset;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn classes(per_class: usize, light: f64, heavy: f64) -> Vec<SynthClass> {
    vec![
        SynthClass {
            condition: Condition { weight: Weight::Light, surface: Surface::Sandpaper },
            trials: per_class,
            drive_coherence: light,
        },
        SynthClass {
            condition: Condition { weight: Weight::Heavy, surface: Surface::Silk },
            trials: per_class,
            drive_coherence: heavy,
        },
    ]
}

fn dataset(per_class: usize, light: f64, heavy: f64, seed: u64) -> Dataset {
    synth_dataset(&SynthDatasetConfig {
        classes: classes(per_class, light, heavy),
        seed,
        ..SynthDatasetConfig::default()
    })
    .unwrap()
}

fn quick() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.cv.reps = 2;
    cfg
}

const DUR: SegmentDuration = SegmentDuration::Two;

#[test]
fn sweep_structure() {
    let ds = dataset(15, 0.2, 0.7, 1);
    let ex = Experiment::new(&ds, quick());
    let s = ex.run_sweep(Task::LightVsHeavy, "C3", DUR, KernelChoice::Linear).unwrap();
    assert_eq!(s.subset_counts(), vec![5, 10, 10, 5, 1]);
    for size in &s.sizes {
        assert!(size.best_accuracy >= size.mean);
        assert!(size.subsets.iter().all(|(m, _)| m.len() == size.size));
    }
    let a = ex.analysis(Task::LightVsHeavy, "C3", DUR).unwrap();
    for group in cmcgrasp::experiment::muscle_subsets(&Muscle::ALL) {
        for subset in group {
            let (_, samples) = a.samples(&subset).unwrap();
            assert!(samples.iter().all(|x| x.features.len() == 8 * subset.len()));
        }
    }

    let four = Experiment::with_muscles(&ds, quick(), Muscle::ALL[..4].to_vec());
    let s4 = four.run_sweep(Task::LightVsHeavy, "C3", DUR, KernelChoice::Linear).unwrap();
    assert_eq!(s4.subset_counts(), vec![4, 6, 4, 1]);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let ds = dataset(12, 0.2, 0.7, 2);
    let run = |dir: &Path| {
        let ex = Experiment::new(&ds, quick());
        let rbf = KernelChoice::Rbf { gamma: GammaMode::Scale };
        let s = ex.run_sweep(Task::LightVsHeavy, "C3", DUR, rbf).unwrap();
        let report = Report { cells: s.cells.clone(), sweeps: vec![s] };
        emit_report(&report, dir).unwrap();
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path());
    run(b.path());
    assert_same_files(a.path(), b.path(), &[]);
    let sweep = fs::read_to_string(a.path().join("sweep_light_vs_heavy_2s_rbf.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 6);
}

#[test]
fn too_few_trials_marks_cell_insufficient() {
    let ds = dataset(3, 0.2, 0.7, 3);
    let ex = Experiment::new(&ds, quick());
    let spec = TaskSpec {
        task: Task::LightVsHeavy,
        eeg_channel: "C3".into(),
        dur: DUR,
        kernel: KernelChoice::Linear,
        muscles: vec![Muscle::FD],
    };
    let cell = ex.run_cell(&spec).unwrap();
    assert_eq!(cell.outcome, CellOutcome::InsufficientData);
    assert!(ex.run_sweep(Task::LightVsHeavy, "C3", DUR, KernelChoice::Linear).is_err());
    let report = Report { cells: vec![cell], sweeps: vec![] };
    assert!(report.cells_csv().contains("insufficient_data"));
}

#[test]
fn identical_classes_give_chance_accuracy() {
    let ds = dataset(40, 0.45, 0.45, 4);
    let ex = Experiment::new(&ds, quick());
    let spec = TaskSpec {
        task: Task::LightVsHeavy,
        eeg_channel: "C3".into(),
        dur: SegmentDuration::Four,
        kernel: KernelChoice::Linear,
        muscles: Muscle::ALL.to_vec(),
    };
    let acc = ex.run_cell(&spec).unwrap().mean_accuracy().unwrap();
    assert!((acc - 0.5).abs() <= 0.15, "accuracy {acc}");
}

fn assert_same_files(a: &Path, b: &Path, skip: &[&str]) {
    let mut names = Vec::new();
    collect(a, a, &mut names);
    assert!(!names.is_empty());
    for name in names {
        if skip.iter().any(|s| name.ends_with(s)) {
            continue;
        }
        let x = fs::read(a.join(&name)).unwrap();
        let y = fs::read(b.join(&name)).unwrap_or_else(|_| panic!("{} missing in second run", name.display()));
        assert!(x == y, "{} differs", name.display());
    }
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect(root, &p, out);
        } else {
            out.push(p.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmcgrasp")).args(args).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new(per_class: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.synth.classes = classes(per_class, 0.2, 0.7);
        cfg.cv.reps = 2;
        cfg.durations = vec![SegmentDuration::One, SegmentDuration::Two];
        fs::write(dir.path().join("config.json"), cfg.to_json()).unwrap();
        let ws = Self { dir };
        ok(cli(&["synth", "--config", &ws.arg("config.json"), "--out", &ws.arg("data")]));
        ws
    }

    fn arg(&self, rel: &str) -> String {
        self.dir.path().join(rel).display().to_string()
    }

    fn run(&self, cmd: &str, out: &str, extra: &[&str]) -> String {
        let mut args = vec![cmd, "--config", "", "--dataset", "", "--out", ""];
        let (c, d, o) = (self.arg("config.json"), self.arg("data"), self.arg(out));
        args[2] = &c;
        args[4] = &d;
        args[6] = &o;
        args.extend_from_slice(extra);
        ok(cli(&args))
    }
}

fn data_lines(path: PathBuf) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn preprocess_accounts_for_every_segment() {
    let ws = Workspace::new(6);
    ws.run("preprocess", "pre", &["--durations", "1,2,4"]);
    let root = ws.dir.path().join("pre");
    let kept = data_lines(root.join("index.csv"));
    let rejected = data_lines(root.join("rejections.csv"));
    let failed = data_lines(root.join("failures.csv"));
    assert_eq!(kept + rejected + failed, 12 * 5 * 3);
    assert!(!root.join(INCOMPLETE_MARKER).exists());
    assert!(root.join("segments/FDI_4s.bin").exists());

    ws.run("preprocess", "pre_none", &["--durations", "1,2,4", "--z-max", "none"]);
    let root = ws.dir.path().join("pre_none");
    assert_eq!(data_lines(root.join("rejections.csv")), 0);
    assert_eq!(data_lines(root.join("index.csv")) + data_lines(root.join("failures.csv")), 12 * 5 * 3);
}

#[test]
fn missing_dataset_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_dataset");
    let out = cli(&[
        "classify",
        "--dataset",
        &missing.display().to_string(),
        "--out",
        &dir.path().join("o").display().to_string(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_dataset"));
}

#[test]
fn runs_reproduce_from_flags_and_snapshot() {
    let ws = Workspace::new(10);
    ws.run("classify", "a", &["--kernels", "linear"]);
    ws.run("classify", "b", &["--kernels", "linear"]);
    let a = ws.dir.path().join("a");
    assert!(!a.join(INCOMPLETE_MARKER).exists());
    assert!(a.join("table.csv").exists());
    assert_same_files(&a, &ws.dir.path().join("b"), &[SNAPSHOT_FILE]);

    let snap = ws.arg("a/resolved_config.json");
    let c = ws.arg("c");
    ok(cli(&["classify", "--config", &snap, "--out", &c]));
    assert_same_files(&a, &ws.dir.path().join("c"), &[SNAPSHOT_FILE]);

    let table = fs::read_to_string(a.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 6);
}

#[test]
fn cmc_and_sweep_commands_write_outputs() {
    let ws = Workspace::new(8);
    ws.run("cmc", "cmc", &["--durations", "2"]);
    let root = ws.dir.path().join("cmc");
    assert!(root.join("cmc/light_vs_heavy_2s_FD_light.csv").exists());
    assert_eq!(data_lines(root.join("features_light_vs_heavy_2s.csv")), 16 * 5);

    ws.run("sweep", "sweep", &["--durations", "2", "--kernels", "linear"]);
    let sweep = fs::read_to_string(ws.dir.path().join("sweep/sweep_light_vs_heavy_2s_linear.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 6);
    ok(cli(&["validate-dataset", "--dataset", &ws.arg("data"), "--out", &ws.arg("v")]));
    assert!(ws.dir.path().join("v/validation.json").exists());
}
