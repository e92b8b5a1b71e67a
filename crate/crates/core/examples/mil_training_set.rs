//! Builds the multiple-instance training set: each thrombus bag is
//! represented by its instance farthest from the muscle center, each muscle
//! bag by the mean of its instances.

use laa_thrombus::eval::{extract_features, ExperimentConfig, Variant};
use laa_thrombus::features::{build_mil_training_set, euclidean, fit_normalizer, InstanceBag};
use laa_thrombus::synth::{synthesize, SynthParams};

fn main() -> laa_thrombus::Result<()> {
    let dataset = synthesize(&SynthParams {
        n_thrombus: 8,
        n_muscle: 8,
        ..SynthParams::default()
    })?;
    let config = ExperimentConfig::default();
    let features = extract_features(&dataset, &config.enhance, &config.lbp)?;

    let instances = features
        .iter()
        .map(|b| Variant::LbpvdMil.instances(&b.statics))
        .collect::<laa_thrombus::Result<Vec<_>>>()?;
    let normalizer = fit_normalizer(instances.iter().flatten())?;
    let bags = features
        .iter()
        .zip(&instances)
        .map(|(b, inst)| {
            Ok(InstanceBag {
                bag: b.index,
                label: b.label,
                instances: inst
                    .iter()
                    .map(|v| normalizer.apply(v))
                    .collect::<laa_thrombus::Result<_>>()?,
            })
        })
        .collect::<laa_thrombus::Result<Vec<_>>>()?;

    let set = build_mil_training_set(&bags)?;
    for s in &set.samples {
        let chosen = s.frame.map_or("mean".to_string(), |t| format!("frame {t}"));
        println!(
            "{:<14} y = {:+}  {chosen:<8} distance to muscle center {:.3}",
            features[s.bag].id,
            s.y,
            euclidean(&s.x.values, &set.muscle_center.values)
        );
    }
    Ok(())
}
