// Cross-validated light/heavy accuracy per muscle and duration on a
// synthetic session.

use cmcgrasp::experiment::{Experiment, PipelineConfig, Task, TaskSpec};
use cmcgrasp::svm::KernelChoice;
use cmcgrasp::synth::{synth_dataset, SynthClass, SynthDatasetConfig};
use cmcgrasp::{Condition, Muscle, SegmentDuration, Surface, Weight};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let class = |weight, drive_coherence| SynthClass {
        condition: Condition { weight, surface: Surface::Suede },
        trials: 30,
        drive_coherence,
    };
    let ds = synth_dataset(&SynthDatasetConfig {
        classes: vec![class(Weight::Light, 0.2), class(Weight::Heavy, 0.7)],
        ..SynthDatasetConfig::default()
    })?;
    let mut cfg = PipelineConfig::default();
    cfg.cv.reps = 3;
    let ex = Experiment::new(&ds, cfg);
    println!("muscle  1 s    2 s    4 s");
    for m in Muscle::ALL {
        let mut row = format!("{:<6}", m.name());
        for dur in SegmentDuration::ALL {
            let spec = TaskSpec {
                task: Task::LightVsHeavy,
                eeg_channel: "C3".into(),
                dur,
                kernel: KernelChoice::Linear,
                muscles: vec![m],
            };
            let acc = ex.run_cell(&spec)?.mean_accuracy().unwrap_or(f64::NAN);
            row.push_str(&format!("  {acc:.3}"));
        }
        println!("{row}");
    }
    Ok(())
}
