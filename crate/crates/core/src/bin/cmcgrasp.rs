use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cmcgrasp::commands;
use cmcgrasp::config::{GammaSetting, KernelKind, RunConfig};
use cmcgrasp::experiment::Task;
use cmcgrasp::labels::Muscle;
use cmcgrasp::segmentation::SegmentDuration;
use cmcgrasp::spectral::BandStatistic;
use std::path::PathBuf;
use std::process::ExitCode;

/// Cortico-muscular coherence features and grasp-condition classification.
#[derive(Parser)]
#[command(name = "cmcgrasp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Cut activation-centred segments and log artifact rejections.
    Preprocess,
    /// Class-wise coherence spectra and band features.
    Cmc,
    /// Single-muscle and all-muscle cross-validated accuracies.
    Classify,
    /// Exhaustive muscle-subset sweep.
    Sweep,
    /// Compare the coherence estimator with the synthetic closed form.
    SynthValidate,
    /// Validate a dataset directory and report condition counts.
    ValidateDataset,
    /// Write a synthetic dataset to --out.
    Synth,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_parser = parse_task)]
    task: Option<Task>,
    #[arg(long, global = true)]
    eeg_channel: Option<String>,
    /// Comma-separated segment durations in seconds (1, 2, 4).
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_duration)]
    durations: Option<Vec<SegmentDuration>>,
    /// Comma-separated kernels (linear, rbf).
    #[arg(long, global = true, value_delimiter = ',')]
    kernels: Option<Vec<KernelKind>>,
    /// Comma-separated muscles (AD, BR, CED, FD, FDI).
    #[arg(long, global = true, value_delimiter = ',')]
    muscles: Option<Vec<Muscle>>,
    #[arg(long, global = true)]
    c: Option<f64>,
    /// `scale` or a positive number.
    #[arg(long, global = true)]
    gamma: Option<GammaSetting>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Artifact threshold in robust SDs; `none` disables rejection.
    #[arg(long, global = true, value_parser = parse_z_max)]
    z_max: Option<ZMax>,
    #[arg(long, global = true, value_parser = parse_statistic)]
    band_statistic: Option<BandStatistic>,
    /// Trials for synth-validate.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Clone, Copy)]
struct ZMax(Option<f64>);

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse()
}

fn parse_duration(s: &str) -> Result<SegmentDuration, String> {
    let v: f64 = s.parse().map_err(|_| format!("duration `{s}` is not a number"))?;
    SegmentDuration::try_from(v).map_err(|e| e.to_string())
}

fn parse_z_max(s: &str) -> Result<ZMax, String> {
    match s {
        "none" | "inf" => Ok(ZMax(None)),
        _ => s
            .parse()
            .map(|v| ZMax(Some(v)))
            .map_err(|_| format!("z-max `{s}` is not a number or `none`")),
    }
}

fn parse_statistic(s: &str) -> Result<BandStatistic, String> {
    match s {
        "mean" => Ok(BandStatistic::Mean),
        "max" => Ok(BandStatistic::Max),
        _ => Err(format!("band statistic `{s}` (expected mean or max)")),
    }
}

fn resolve(c: Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($flag:ident => $field:expr),* $(,)?) => {
            $(if let Some(v) = c.$flag { $field = v; })*
        };
    }
    set! {
        out => cfg.out,
        seed => cfg.seed,
        task => cfg.task,
        eeg_channel => cfg.eeg_channel,
        durations => cfg.durations,
        kernels => cfg.kernels,
        muscles => cfg.muscles,
        c => cfg.c,
        gamma => cfg.gamma,
        folds => cfg.cv.k,
        reps => cfg.cv.reps,
        band_statistic => cfg.band_statistic,
        trials => cfg.synth_validate.trials,
    }
    if let Some(d) = c.dataset {
        cfg.dataset = Some(d);
    }
    if let Some(j) = c.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(ZMax(z)) = c.z_max {
        cfg.z_max = z;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<String> {
    let cfg = resolve(cli.common)?;
    if let Some(jobs) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Preprocess => commands::preprocess(&cfg),
        Command::Cmc => commands::cmc(&cfg),
        Command::Classify => commands::classify(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::SynthValidate => commands::synth_validate(&cfg),
        Command::ValidateDataset => commands::validate_dataset(&cfg),
        Command::Synth => commands::synth(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
