//! Generates the default synthetic corpus in memory and evaluates the three
//! pipeline variants with bag-level 10-fold cross-validation.
//!
//! ```text
//! cargo run --release --example variant_ladder -- [seed]
//! ```

use std::time::Instant;

use laa_thrombus::eval::{
    compare_auc_z, extract_features, run_variant_on_features, ExperimentConfig, Variant,
};
use laa_thrombus::synth::{synthesize, SynthParams};

fn main() -> laa_thrombus::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let start = Instant::now();
    let dataset = synthesize(&SynthParams {
        seed,
        ..SynthParams::default()
    })?;
    let config = ExperimentConfig::default();
    let features = extract_features(&dataset, &config.enhance, &config.lbp)?;
    println!(
        "{} bags, features in {:.1?}",
        dataset.len(),
        start.elapsed()
    );

    let mut reports = Vec::new();
    for variant in Variant::ALL {
        let t = Instant::now();
        let report = run_variant_on_features(&features, variant, &config, seed)?;
        println!("{}  [{:.1?}]", report.summary_line(), t.elapsed());
        reports.push(report);
    }
    let labels = reports[0].labels();
    for (i, j) in [(2, 1), (2, 0), (1, 0)] {
        let z = compare_auc_z(
            &reports[i].scores(),
            &reports[j].scores(),
            &labels,
            config.bootstrap_iters,
            seed,
        )?;
        println!(
            "{} vs {}: z = {:.3}, p = {:.4}",
            reports[i].variant, reports[j].variant, z.z, z.p_two_tailed
        );
    }
    println!("total {:.1?}", start.elapsed());
    Ok(())
}
