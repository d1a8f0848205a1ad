// Locate the grasp activation in one synthetic trial and cut 1, 2 and 4 s
// EEG/EMG segments around it.

use cmcgrasp::labels::Muscle;
use cmcgrasp::segmentation::{compute_threshold, emg_profile, extract_segment, find_activation, SegmentDuration};
use cmcgrasp::sigcore::BandPassSpec;
use cmcgrasp::synth::{synth_dataset, SynthClass, SynthDatasetConfig};
use cmcgrasp::{Condition, Surface, Weight};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let condition = Condition { weight: Weight::Heavy, surface: Surface::Silk };
    let ds = synth_dataset(&SynthDatasetConfig {
        classes: vec![SynthClass { condition, trials: 1, drive_coherence: 0.6 }],
        ..SynthDatasetConfig::default()
    })?;
    let m = ds.manifest();
    let eeg_ch = m.eeg_index("C3").ok_or("no C3")?;
    let emg_ch = m.emg_index(Muscle::BR).ok_or("no BR")?;
    let trial = ds.trials()[0];
    let rec = ds.trial(trial.trial_id, &[eeg_ch, emg_ch])?;
    let (eeg, emg) = (&rec.channels[0], &rec.channels[1]);

    let p = emg_profile(emg, BandPassSpec::preprocessing())?;
    let th = compute_threshold(&p.envelope);
    let a = find_activation(&p.envelope, th)?;
    println!("threshold {th:.4}, active {:.3}-{:.3} s, t0 {:.3} s", a.t_start, a.t_end, a.t0);
    for dur in SegmentDuration::ALL {
        let s = extract_segment(eeg, emg, a.t0, dur, trial.trial_id, Muscle::BR, condition)?;
        println!("{dur} s segment: samples {}..{}", s.start, s.start + s.eeg.len());
    }
    Ok(())
}
