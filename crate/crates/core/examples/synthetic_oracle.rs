// Trial-averaged coherence of the coupling model next to its closed form,
// across a few noise levels.

use cmcgrasp::spectral::WelchConfig;
use cmcgrasp::synth::{oracle_comparison, CouplingModel};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = CouplingModel { gain: 1.0, coupling_band: (13.0, 30.0), noise_var: 1.0, fs: 500.0, seed: 2018 };
    println!("noise variance for 0.8 at 20 Hz: {:.4}", base.noise_for_coherence(20.0, 0.8)?);
    for noise_var in [0.25, 1.0, 4.0] {
        let m = CouplingModel { noise_var, ..base };
        let c = oracle_comparison(&m, 100, 2000, &WelchConfig::default())?;
        let k = c.bin(20.0);
        println!(
            "noise {noise_var:.3}: {:.2} Hz estimated {:.4}, theoretical {:.4}",
            c.freqs[k], c.estimated[k], c.theoretical[k]
        );
    }
    Ok(())
}
