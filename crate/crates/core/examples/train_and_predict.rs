//! Trains the MIL model on one synthetic corpus and classifies the bags of
//! a second corpus generated with another seed.

use laa_thrombus::eval::{extract_features, train_final, ExperimentConfig, Variant};
use laa_thrombus::synth::{synthesize, SynthParams};

fn main() -> laa_thrombus::Result<()> {
    let config = ExperimentConfig::default();
    let train = synthesize(&SynthParams::default())?;
    let test = synthesize(&SynthParams {
        n_thrombus: 10,
        n_muscle: 10,
        seed: 99,
        ..SynthParams::default()
    })?;

    let train_features = extract_features(&train, &config.enhance, &config.lbp)?;
    let model = train_final(&train_features, Variant::LbpvdMil, &config, 7)?;
    println!(
        "C = {}, gamma = {}, inner CV accuracy {:.3}",
        model.c, model.gamma, model.cv_accuracy
    );

    let mut correct = 0;
    for bag in extract_features(&test, &config.enhance, &config.lbp)? {
        let (score, _) = model.score(&bag.statics)?;
        let predicted = model.predict(&bag.statics)?;
        correct += usize::from(predicted == bag.label);
        println!(
            "{:<14} score {score:>10.2e} -> {}",
            bag.id,
            predicted.as_str()
        );
    }
    println!("{correct}/{} correct", test.len());
    Ok(())
}
