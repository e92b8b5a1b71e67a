//! Stratified k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded generator for an independent stream of `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits items into `k` disjoint folds, stratified by `classes[i]`.
///
/// Each class is shuffled and dealt round-robin; the deal continues where
/// the previous class stopped, so fold sizes differ by at most one and every
/// fold holds `⌊n_c/k⌋` or `⌈n_c/k⌉` items of class `c`. Fold contents are
/// returned sorted.
pub fn stratified_assignment(classes: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let mut by_class: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &c) in classes.iter().enumerate() {
        match by_class.iter_mut().find(|(cls, _)| *cls == c) {
            Some((_, members)) => members.push(i),
            None => by_class.push((c, vec![i])),
        }
    }
    by_class.sort_by_key(|(c, _)| *c);
    if let Some((c, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(Error::TooFewSamples(format!(
            "class {c} has {} items, fewer than {k} folds",
            members.len()
        )));
    }

    let mut rng = seeded_rng(seed, 0);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (_, mut members) in by_class {
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clinical_sized_split() {
        let classes: Vec<usize> = (0..264).map(|i| usize::from(i >= 114)).collect();
        let folds = stratified_assignment(&classes, 10, 3).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..264).collect::<Vec<_>>());
        for f in &folds {
            assert!(f.len() == 26 || f.len() == 27, "{}", f.len());
            let thrombi = f.iter().filter(|i| classes[**i] == 0).count();
            assert!(thrombi == 11 || thrombi == 12, "{thrombi}");
        }
    }

    #[test]
    fn small_split_and_determinism() {
        let classes = [0, 0, 0, 0, 1, 1, 1, 1];
        let folds = stratified_assignment(&classes, 2, 9).unwrap();
        for f in &folds {
            assert_eq!(f.iter().filter(|i| classes[**i] == 0).count(), 2);
            assert_eq!(f.iter().filter(|i| classes[**i] == 1).count(), 2);
        }
        assert_eq!(folds, stratified_assignment(&classes, 2, 9).unwrap());
        assert_ne!(
            stratified_assignment(&(0..40).map(|i| i % 2).collect::<Vec<_>>(), 4, 1).unwrap(),
            stratified_assignment(&(0..40).map(|i| i % 2).collect::<Vec<_>>(), 4, 2).unwrap()
        );
    }

    #[test]
    fn too_small_class_fails() {
        assert!(stratified_assignment(&[0, 0, 0, 1, 1], 3, 0).is_err());
        assert!(stratified_assignment(&[0, 1], 1, 0).is_err());
    }
}
