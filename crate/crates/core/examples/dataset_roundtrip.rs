// Write a synthetic session in the on-disk format, load it back lazily and
// compare condition counts with the reference session.

use cmcgrasp::ingest::{condition_counts, validate_against_reference, write_dataset};
use cmcgrasp::synth::{synth_dataset, SynthDatasetConfig};
use cmcgrasp::load_dataset;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("cmcgrasp_roundtrip");
    let cfg = cmcgrasp::config::RunConfig::default();
    let ds = synth_dataset(&SynthDatasetConfig { trial_len_s: 4.0, ..cfg.synth_dataset_config() })?;
    write_dataset(&dir, &ds)?;
    let back = load_dataset(&dir)?;
    let t = back.trials()[0];
    let rec = back.trial(t.trial_id, &[12, 32])?;
    println!(
        "{} trials in {}; trial {} {} / {} has {} samples per channel",
        back.trials().len(),
        dir.display(),
        t.trial_id,
        rec.channels[0].label(),
        rec.channels[1].label(),
        rec.channels[0].len()
    );
    let c = condition_counts(back.manifest());
    println!("light {} heavy {} sandpaper {} silk {}", c.light, c.heavy, c.sandpaper, c.silk);
    for d in validate_against_reference(back.manifest()).deviations {
        println!("  {d}");
    }
    Ok(())
}
