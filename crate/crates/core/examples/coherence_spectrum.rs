// Welch coherence between a source and a noisy band-limited copy, with the
// eight band features and the 95 % confidence level.

use cmcgrasp::spectral::{band_features, coherence, confidence_level, BandStatistic, WelchConfig, STANDARD_BANDS};
use cmcgrasp::synth::{generate_pair, CouplingModel};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = CouplingModel { gain: 1.0, coupling_band: (13.0, 30.0), noise_var: 0.5, fs: 500.0, seed: 3 };
    let (x, y) = generate_pair(&model, 2000)?;
    let cfg = WelchConfig::default();
    let c = coherence(x.samples(), y.samples(), 500.0, &cfg)?;
    let l = cfg.segment_count(x.len(), 500.0);
    println!("{l} sub-windows, 95 % level {:.4}", confidence_level(l, 0.05)?);
    for (f, v) in c.freqs.iter().zip(&c.values).filter(|(f, _)| **f <= 80.0).step_by(4) {
        println!("{f:>7.2} Hz  {v:.3}");
    }
    let feats = band_features(&c, &STANDARD_BANDS, BandStatistic::Mean)?;
    for (b, v) in STANDARD_BANDS.iter().zip(feats) {
        println!("{:<10} {v:.3}", b.name);
    }
    Ok(())
}
