//! Static and dynamic feature vectors along a sequence. The second half of
//! a dynamic vector measures how much the frame differs from its
//! neighbors; thrombus sequences change less than muscle sequences.

use laa_thrombus::eval::{extract_features, ExperimentConfig, Variant};
use laa_thrombus::synth::{synthesize, SynthParams};

fn main() -> laa_thrombus::Result<()> {
    let dataset = synthesize(&SynthParams {
        n_thrombus: 3,
        n_muscle: 3,
        partial_fraction: 0.0,
        ..SynthParams::default()
    })?;
    let config = ExperimentConfig::default();
    let features = extract_features(&dataset, &config.enhance, &config.lbp)?;

    for bag in &features {
        let dynamic = Variant::LbpvdMil.instances(&bag.statics)?;
        let half = bag.statics[0].len();
        let magnitudes: Vec<String> = dynamic
            .iter()
            .map(|v| {
                format!(
                    "{:>9.1}",
                    v.values[half..].iter().map(|x| x * x).sum::<f64>().sqrt()
                )
            })
            .collect();
        println!("{:<14} |diff| per frame: {}", bag.id, magnitudes.join(""));
    }
    Ok(())
}
