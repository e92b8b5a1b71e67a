//! Exhaustive (C, γ) search for the RBF kernel scored by cross-validated
//! accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::{solve_dual, SmoConfig};
use super::{sign, KernelSpec};
use crate::error::{Error, Result};
use crate::eval::folds::stratified_assignment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
}

impl Default for GridSpec {
    /// C ∈ {2⁻⁵, 2⁻³, …, 2¹³}, γ ∈ {2⁻¹⁵, 2⁻¹³, …, 2³}.
    fn default() -> Self {
        let pow2 = |exps: &[i32]| exps.iter().map(|e| 2f64.powi(*e)).collect();
        Self {
            c_values: pow2(&[-5, -3, -1, 1, 3, 5, 7, 9, 11, 13]),
            gamma_values: pow2(&[-15, -13, -11, -9, -7, -5, -3, -1, 1, 3]),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() || self.gamma_values.is_empty() {
            return Err(Error::InvalidParameter("empty search grid".into()));
        }
        if self
            .c_values
            .iter()
            .chain(&self.gamma_values)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::InvalidParameter(
                "grid values must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub correct: usize,
    pub total: usize,
}

impl GridCell {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub c: f64,
    pub gamma: f64,
    pub cv_accuracy: f64,
    /// Every evaluated cell, ordered by C then γ.
    pub cells: Vec<GridCell>,
}

/// Stratified `folds`-fold CV over individual samples.
pub fn grid_search(
    xs: &[Vec<f64>],
    y: &[f64],
    grid: &GridSpec,
    folds: usize,
    seed: u64,
    smo: &SmoConfig,
) -> Result<GridResult> {
    check_inputs(xs, y, folds)?;
    let classes: Vec<usize> = y.iter().map(|v| usize::from(*v > 0.0)).collect();
    let assignment = stratified_assignment(&classes, folds, seed)?;
    search_with_folds(xs, y, &assignment, grid, smo)
}

/// CV where all samples sharing a group id land in the same fold; groups are
/// stratified by their label. Used when several samples come from one bag.
pub fn grid_search_grouped(
    xs: &[Vec<f64>],
    y: &[f64],
    groups: &[usize],
    grid: &GridSpec,
    folds: usize,
    seed: u64,
    smo: &SmoConfig,
) -> Result<GridResult> {
    check_inputs(xs, y, folds)?;
    if groups.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} group ids for {} samples",
            groups.len(),
            y.len()
        )));
    }
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut classes = vec![usize::MAX; ids.len()];
    for (g, label) in groups.iter().zip(y) {
        let slot = &mut classes[ids.binary_search(g).expect("id collected above")];
        let cls = usize::from(*label > 0.0);
        if *slot != usize::MAX && *slot != cls {
            return Err(Error::InvalidParameter(format!("group {g} mixes labels")));
        }
        *slot = cls;
    }
    let group_folds = stratified_assignment(&classes, folds, seed)?;
    let assignment: Vec<Vec<usize>> = group_folds
        .iter()
        .map(|gf| {
            (0..groups.len())
                .filter(|&s| {
                    gf.binary_search(&ids.binary_search(&groups[s]).unwrap())
                        .is_ok()
                })
                .collect()
        })
        .collect();
    search_with_folds(xs, y, &assignment, grid, smo)
}

fn check_inputs(xs: &[Vec<f64>], y: &[f64], folds: usize) -> Result<()> {
    if xs.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples, {} labels",
            xs.len(),
            y.len()
        )));
    }
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if y.len() < folds {
        return Err(Error::TooFewSamples(format!(
            "{} samples for {folds} folds",
            y.len()
        )));
    }
    Ok(())
}

/// Scores every cell on the given validation folds. Ties in accuracy go to
/// the smaller C, then the smaller γ.
pub fn search_with_folds(
    xs: &[Vec<f64>],
    y: &[f64],
    folds: &[Vec<usize>],
    grid: &GridSpec,
    smo: &SmoConfig,
) -> Result<GridResult> {
    grid.validate()?;
    let n = y.len();
    let mut in_fold = vec![usize::MAX; n];
    for (f, members) in folds.iter().enumerate() {
        for &s in members {
            in_fold[s] = f;
        }
    }

    let mut cs = grid.c_values.clone();
    cs.sort_by(f64::total_cmp);
    let mut gammas = grid.gamma_values.clone();
    gammas.sort_by(f64::total_cmp);

    // correct[g][c] summed over folds
    let per_gamma: Vec<Vec<usize>> = gammas
        .par_iter()
        .map(|&gamma| -> Result<Vec<usize>> {
            let gram = KernelSpec::rbf(gamma).gram(xs);
            let per_fold = folds
                .par_iter()
                .enumerate()
                .map(|(f, valid)| fold_correct(&gram, n, y, &in_fold, f, valid, &cs, smo))
                .collect::<Result<Vec<Vec<usize>>>>()?;
            Ok((0..cs.len())
                .map(|ci| per_fold.iter().map(|v| v[ci]).sum())
                .collect())
        })
        .collect::<Result<_>>()?;

    let total: usize = folds.iter().map(Vec::len).sum();
    let mut cells = Vec::with_capacity(cs.len() * gammas.len());
    for (ci, &c) in cs.iter().enumerate() {
        for (gi, &gamma) in gammas.iter().enumerate() {
            cells.push(GridCell {
                c,
                gamma,
                correct: per_gamma[gi][ci],
                total,
            });
        }
    }
    let best = cells
        .iter()
        .fold(None::<&GridCell>, |acc, cell| match acc {
            Some(b) if b.correct >= cell.correct => Some(b),
            _ => Some(cell),
        })
        .expect("grid is non-empty");
    Ok(GridResult {
        c: best.c,
        gamma: best.gamma,
        cv_accuracy: best.accuracy(),
        cells,
    })
}

#[allow(clippy::too_many_arguments)]
fn fold_correct(
    gram: &[f64],
    n: usize,
    y: &[f64],
    in_fold: &[usize],
    fold: usize,
    valid: &[usize],
    cs: &[f64],
    smo: &SmoConfig,
) -> Result<Vec<usize>> {
    let train: Vec<usize> = (0..n).filter(|&s| in_fold[s] != fold).collect();
    let m = train.len();
    let mut sub = Vec::with_capacity(m * m);
    for &a in &train {
        sub.extend(train.iter().map(|&b| gram[a * n + b]));
    }
    let ty: Vec<f64> = train.iter().map(|&s| y[s]).collect();

    cs.iter()
        .map(|&c| {
            let sol = solve_dual(&sub, &ty, c, smo)?;
            Ok(valid
                .iter()
                .filter(|&&v| {
                    let f: f64 = train
                        .iter()
                        .zip(&sol.alpha)
                        .filter(|(_, a)| **a > 0.0)
                        .map(|(&t, a)| a * y[t] * gram[v * n + t])
                        .sum::<f64>()
                        + sol.bias;
                    sign(f) == y[v]
                })
                .count())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::folds::seeded_rng;
    use rand::Rng;

    fn blobs(n: usize, seed: u64, separation: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = seeded_rng(seed, 0);
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            let center = label * separation;
            xs.push(vec![
                center + rng.random_range(-0.5..0.5),
                center + rng.random_range(-0.5..0.5),
            ]);
            y.push(label);
        }
        (xs, y)
    }

    fn small_grid() -> GridSpec {
        GridSpec {
            c_values: vec![0.5, 8.0, 2.0],
            gamma_values: vec![0.5, 0.125],
        }
    }

    #[test]
    fn default_grid_is_powers_of_four() {
        let g = GridSpec::default();
        assert_eq!(g.c_values.len(), 10);
        assert_eq!(g.c_values[0], 1.0 / 32.0);
        assert_eq!(g.c_values[9], 8192.0);
        assert_eq!(g.gamma_values[0], 2f64.powi(-15));
        assert_eq!(g.gamma_values[9], 8.0);
    }

    #[test]
    fn separable_blobs_reach_full_accuracy() {
        let (xs, y) = blobs(60, 1, 2.0);
        let r = grid_search(&xs, &y, &small_grid(), 5, 7, &SmoConfig::default()).unwrap();
        assert_eq!(r.cv_accuracy, 1.0);
        assert_eq!(r.cells.len(), 6);
        // every cell separates these blobs, so the tie rule picks the corner
        assert_eq!((r.c, r.gamma), (0.5, 0.125));
    }

    #[test]
    fn shuffled_labels_score_near_chance() {
        let mut rng = seeded_rng(2, 0);
        let xs: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random(), rng.random()]).collect();
        let mut y: Vec<f64> = (0..100).map(|i| if i < 50 { 1.0 } else { -1.0 }).collect();
        rand::seq::SliceRandom::shuffle(&mut y[..], &mut rng);
        let r = grid_search(&xs, &y, &small_grid(), 5, 3, &SmoConfig::default()).unwrap();
        assert!((r.cv_accuracy - 0.5).abs() <= 0.15, "{}", r.cv_accuracy);
    }

    #[test]
    fn grouped_folds_keep_groups_together() {
        let (xs, y) = blobs(40, 4, 2.0);
        // pairs (0,2), (1,3), ... share a group and a label
        let groups: Vec<usize> = (0..40).map(|i| (i / 4) * 2 + i % 2).collect();
        let r = grid_search_grouped(&xs, &y, &groups, &small_grid(), 4, 1, &SmoConfig::default())
            .unwrap();
        assert_eq!(r.cv_accuracy, 1.0);
        let mixed: Vec<usize> = (0..40).map(|i| i / 2).collect();
        assert!(
            grid_search_grouped(&xs, &y, &mixed, &small_grid(), 4, 1, &SmoConfig::default())
                .is_err()
        );
    }

    #[test]
    fn too_few_samples() {
        let (xs, y) = blobs(4, 5, 2.0);
        assert!(grid_search(&xs, &y, &small_grid(), 5, 0, &SmoConfig::default()).is_err());
        assert!(grid_search(&xs, &y, &small_grid(), 1, 0, &SmoConfig::default()).is_err());
    }
}
