// Every muscle subset on a synthetic session; prints the mean and best
// accuracy per subset size and writes the report files.

use cmcgrasp::experiment::{emit_report, Experiment, PipelineConfig, Report, Task};
use cmcgrasp::labels::muscle_key;
use cmcgrasp::svm::{GammaMode, KernelChoice};
use cmcgrasp::synth::{synth_dataset, SynthClass, SynthDatasetConfig};
use cmcgrasp::{Condition, SegmentDuration, Surface, Weight};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let class = |surface, drive_coherence| SynthClass {
        condition: Condition { weight: Weight::Medium, surface },
        trials: 30,
        drive_coherence,
    };
    let ds = synth_dataset(&SynthDatasetConfig {
        classes: vec![class(Surface::Sandpaper, 0.6), class(Surface::Silk, 0.3)],
        ..SynthDatasetConfig::default()
    })?;
    let mut cfg = PipelineConfig::default();
    cfg.cv.reps = 3;
    let kernel = KernelChoice::Rbf { gamma: GammaMode::Scale };
    let s = Experiment::new(&ds, cfg).run_sweep(Task::SandpaperVsSilk, "C3", SegmentDuration::Two, kernel)?;
    for z in &s.sizes {
        println!(
            "{} muscles ({:>2} subsets): mean {:.3} +/- {:.3}, best {:.3} ({})",
            z.size,
            z.subsets.len(),
            z.mean,
            z.std,
            z.best_accuracy,
            muscle_key(&z.best_subset)
        );
    }
    let dir = std::env::temp_dir().join("cmcgrasp_muscle_sweep");
    emit_report(&Report { cells: s.cells.clone(), sweeps: vec![s] }, &dir)?;
    println!("report written to {}", dir.display());
    Ok(())
}
