//! ROC curve, bootstrap AUC statistics and the paired bootstrap Z-test on
//! two simulated scorers.

use laa_thrombus::eval::{compare_auc_z, roc_with_bootstrap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> laa_thrombus::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let labels: Vec<f64> = (0..132).map(|i| if i < 57 { 1.0 } else { -1.0 }).collect();
    let strong: Vec<f64> = labels
        .iter()
        .map(|l| 1.5 * l + rng.random_range(-1.0..1.0))
        .collect();
    let weak: Vec<f64> = labels
        .iter()
        .map(|l| 0.4 * l + rng.random_range(-1.0..1.0))
        .collect();

    for (name, scores) in [("strong", &strong), ("weak", &weak)] {
        let roc = roc_with_bootstrap(scores, &labels, 5000, 11)?;
        println!(
            "{name:<7} AUC {:.4}  SE {:.4}  95% CI ({:.4}, {:.4})  {} ROC points",
            roc.auc,
            roc.bootstrap_se,
            roc.ci95.0,
            roc.ci95.1,
            roc.points.len()
        );
    }
    let z = compare_auc_z(&strong, &weak, &labels, 5000, 11)?;
    println!(
        "strong vs weak: dAUC {:.4}, z = {:.2}, two-tailed p = {:.2e}",
        z.mean_diff, z.z, z.p_two_tailed
    );
    Ok(())
}
