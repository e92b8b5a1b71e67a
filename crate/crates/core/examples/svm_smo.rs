//! Trains an RBF SVM with SMO on two noisy rings, picks `C` and `gamma` by
//! grid search, and round-trips the model through its text format.

use laa_thrombus::svm::{grid_search, smo_train, GridSpec, KernelSpec, SmoConfig, SvmModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> laa_thrombus::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..120 {
        let radius = if i % 2 == 0 { 1.0 } else { 2.5 };
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = radius + rng.random_range(-0.4..0.4);
        xs.push(vec![r * angle.cos(), r * angle.sin()]);
        ys.push(if i % 2 == 0 { 1.0 } else { -1.0 });
    }

    let smo = SmoConfig::default();
    let best = grid_search(&xs, &ys, &GridSpec::default(), 5, 7, &smo)?;
    println!(
        "grid search: C = {}, gamma = {}, CV accuracy {:.3}",
        best.c, best.gamma, best.cv_accuracy
    );

    let model = smo_train(&xs, &ys, best.c, KernelSpec::rbf(best.gamma), &smo)?;
    let text = model.to_text();
    let reloaded = SvmModel::from_text(&text)?;
    let correct = xs
        .iter()
        .zip(&ys)
        .filter(|(x, y)| reloaded.classify(x).map(|p| p == **y).unwrap_or(false))
        .count();
    println!(
        "{} support vectors, training accuracy {correct}/{}",
        model.support_vectors.len(),
        xs.len()
    );
    println!(
        "f(0, 0) = {:.3}, f(3, 0) = {:.3}",
        model.decision_value(&[0.0, 0.0])?,
        model.decision_value(&[3.0, 0.0])?
    );
    Ok(())
}
