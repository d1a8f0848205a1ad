// Band-pass, rectify and smooth a synthetic EMG burst, then print the
// envelope every 250 ms.

use cmcgrasp::segmentation::emg_profile;
use cmcgrasp::sigcore::{BandPass, BandPassSpec, TimeSeries};
use cmcgrasp::synth::gaussian_stream;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 500.0;
    let noise = gaussian_stream(1, 0, 2500);
    let emg: Vec<f64> = noise
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let t = i as f64 / fs;
            let gain = if (1.5..3.5).contains(&t) { 1.0 } else { 0.05 };
            gain * w
        })
        .collect();
    let spec = BandPassSpec::preprocessing();
    let filter = BandPass::design(spec, fs)?;
    println!("pass band {}-{} Hz, gain at 40 Hz {:.4}", spec.lo, spec.hi, filter.zero_phase_gain(40.0));

    let p = emg_profile(&TimeSeries::new(emg, fs, "FD")?, spec)?;
    for (i, v) in p.envelope.samples().iter().enumerate().step_by(125) {
        println!("{:>5.2} s  {:.4}", i as f64 / fs, v);
    }
    Ok(())
}
