//! ROC curves, AUC, bootstrap standard errors and the paired AUC Z-test.
//!
//! Labels are `+1` (positive, thrombus) and `-1`. Higher scores mean more
//! positive. AUC is computed from integer pair counts, so the trapezoid
//! over the ROC curve and the Mann-Whitney statistic agree exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::folds::seeded_rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Samples scoring at least this value are called positive. `None` for
    /// the initial `(0, 0)` point.
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub bootstrap_se: f64,
    pub ci95: (f64, f64),
}

impl RocResult {
    /// `fpr,tpr,threshold` rows; the open threshold of the first point is
    /// written as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            let t = p.threshold.map_or("inf".to_string(), |t| t.to_string());
            out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, t));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapAuc {
    pub auc: f64,
    pub se: f64,
    pub ci95: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub auc_a: f64,
    pub auc_b: f64,
    pub mean_diff: f64,
    pub se_diff: f64,
    pub z: f64,
    pub p_two_tailed: f64,
}

/// Scores grouped by distinct value in descending order, with the original
/// indices in each group.
struct RankedScores {
    groups: Vec<Vec<usize>>,
    positive: Vec<bool>,
}

impl RankedScores {
    fn new(scores: &[f64], labels: &[f64]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} scores, {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("scores"));
        }
        if let Some(l) = labels.iter().find(|l| **l != 1.0 && **l != -1.0) {
            return Err(Error::InvalidParameter(format!(
                "label {l} is not +1 or -1"
            )));
        }
        let positive: Vec<bool> = labels.iter().map(|l| *l > 0.0).collect();
        if !positive.contains(&true) || !positive.contains(&false) {
            return Err(Error::SingleClass(
                "ROC needs positive and negative samples".into(),
            ));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some(g) if scores[g[0]] == scores[i] => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        Ok(Self { groups, positive })
    }

    /// AUC with each sample counted `weight[i]` times. `None` when the
    /// weighted sample lacks a class.
    fn weighted_auc(&self, weight: impl Fn(usize) -> u64) -> Option<f64> {
        let mut pos_above = 0u64;
        let mut twice_area = 0u64;
        let mut neg_total = 0u64;
        for g in &self.groups {
            let (mut p, mut n) = (0u64, 0u64);
            for &i in g {
                if self.positive[i] {
                    p += weight(i);
                } else {
                    n += weight(i);
                }
            }
            // trapezoid slice: width n, heights pos_above and pos_above + p
            twice_area += n * (2 * pos_above + p);
            pos_above += p;
            neg_total += n;
        }
        if pos_above == 0 || neg_total == 0 {
            return None;
        }
        Some(twice_area as f64 / (2 * pos_above * neg_total) as f64)
    }
}

/// ROC curve by sweeping the threshold over the distinct scores, and the
/// trapezoid AUC. The bootstrap fields are left at `se = 0`, `ci = (auc, auc)`.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<RocResult> {
    let ranked = RankedScores::new(scores, labels)?;
    let n_pos = ranked.positive.iter().filter(|p| **p).count();
    let n_neg = ranked.positive.len() - n_pos;

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut twice_area = 0usize;
    for g in &ranked.groups {
        let p = g.iter().filter(|&&i| ranked.positive[i]).count();
        let n = g.len() - p;
        twice_area += n * (2 * tp + p);
        tp += p;
        fp += n;
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: Some(scores[g[0]]),
        });
    }
    let auc = twice_area as f64 / (2 * n_pos * n_neg) as f64;
    Ok(RocResult {
        points,
        auc,
        bootstrap_se: 0.0,
        ci95: (auc, auc),
    })
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Draws `iters` resamples (with replacement) that contain both classes and
/// calls `f` with the per-sample multiplicities.
fn resample(n: usize, iters: usize, seed: u64, mut f: impl FnMut(&[u64]) -> bool) {
    let mut rng = seeded_rng(seed, 1);
    let mut counts = vec![0u64; n];
    let mut accepted = 0;
    while accepted < iters {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
        if f(&counts) {
            accepted += 1;
        }
    }
}

/// AUC with bootstrap standard error and 2.5/97.5 percentile interval.
/// Resamples that miss a class are redrawn. The interval is widened to
/// include the point estimate if needed.
pub fn bootstrap_auc(
    scores: &[f64],
    labels: &[f64],
    iters: usize,
    seed: u64,
) -> Result<BootstrapAuc> {
    if iters < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 bootstrap iterations, got {iters}"
        )));
    }
    let ranked = RankedScores::new(scores, labels)?;
    let auc = ranked.weighted_auc(|_| 1).expect("both classes checked");
    let mut aucs = Vec::with_capacity(iters);
    resample(scores.len(), iters, seed, |w| {
        match ranked.weighted_auc(|i| w[i]) {
            Some(a) => {
                aucs.push(a);
                true
            }
            None => false,
        }
    });
    let (_, se) = mean_and_sd(&aucs);
    aucs.sort_by(f64::total_cmp);
    let lo = quantile(&aucs, 0.025).min(auc);
    let hi = quantile(&aucs, 0.975).max(auc);
    Ok(BootstrapAuc {
        auc,
        se,
        ci95: (lo, hi),
    })
}

/// ROC curve plus bootstrap statistics.
pub fn roc_with_bootstrap(
    scores: &[f64],
    labels: &[f64],
    iters: usize,
    seed: u64,
) -> Result<RocResult> {
    let mut roc = roc_auc(scores, labels)?;
    let boot = bootstrap_auc(scores, labels, iters, seed)?;
    roc.bootstrap_se = boot.se;
    roc.ci95 = boot.ci95;
    Ok(roc)
}

/// Paired bootstrap comparison of two scorers on the same samples:
/// `z = mean(AUC_a - AUC_b) / sd(AUC_a - AUC_b)`, `p = 2(1 - Φ(|z|))`.
pub fn compare_auc_z(
    scores_a: &[f64],
    scores_b: &[f64],
    labels: &[f64],
    iters: usize,
    seed: u64,
) -> Result<ZTest> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::DimensionMismatch(format!(
            "paired scores of length {} and {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    if iters < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 bootstrap iterations, got {iters}"
        )));
    }
    let ra = RankedScores::new(scores_a, labels)?;
    let rb = RankedScores::new(scores_b, labels)?;
    let auc_a = ra.weighted_auc(|_| 1).expect("both classes checked");
    let auc_b = rb.weighted_auc(|_| 1).expect("both classes checked");

    let mut diffs = Vec::with_capacity(iters);
    resample(labels.len(), iters, seed, |w| {
        match (ra.weighted_auc(|i| w[i]), rb.weighted_auc(|i| w[i])) {
            (Some(a), Some(b)) => {
                diffs.push(a - b);
                true
            }
            _ => false,
        }
    });
    let (mean_diff, se_diff) = mean_and_sd(&diffs);
    let z = if se_diff > 0.0 {
        mean_diff / se_diff
    } else if mean_diff == 0.0 {
        0.0
    } else {
        mean_diff.signum() * f64::INFINITY
    };
    Ok(ZTest {
        auc_a,
        auc_b,
        mean_diff,
        se_diff,
        z,
        p_two_tailed: two_tailed_p(z),
    })
}

/// `2(1 - Φ(|z|)) = erfc(|z| / √2)`.
pub fn two_tailed_p(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_counting_auc(scores: &[f64], labels: &[f64]) -> f64 {
        let (mut twice, mut pairs) = (0u64, 0u64);
        for (i, li) in labels.iter().enumerate() {
            for (j, lj) in labels.iter().enumerate() {
                if *li > 0.0 && *lj < 0.0 {
                    pairs += 1;
                    twice += match scores[i].total_cmp(&scores[j]) {
                        std::cmp::Ordering::Greater => 2,
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Less => 0,
                    };
                }
            }
        }
        twice as f64 / (2 * pairs) as f64
    }

    #[test]
    fn hand_cases() {
        let l = [1.0, 1.0, -1.0, -1.0];
        assert_eq!(roc_auc(&[0.9, 0.8, 0.3, 0.2], &l).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.9, 0.3, 0.8, 0.2], &l).unwrap().auc, 0.75);
        assert_eq!(roc_auc(&[0.4; 4], &l).unwrap().auc, 0.5);
    }

    #[test]
    fn curve_endpoints_and_order() {
        let roc = roc_auc(&[0.9, 0.3, 0.8, 0.2, 0.3], &[1.0, 1.0, -1.0, -1.0, -1.0]).unwrap();
        let first = roc.points.first().unwrap();
        let last = roc.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        let thresholds: Vec<f64> = roc.points[1..]
            .iter()
            .map(|p| p.threshold.unwrap())
            .collect();
        assert_eq!(thresholds, vec![0.9, 0.8, 0.3, 0.2]);
        assert!(roc.to_csv().starts_with("fpr,tpr,threshold\n0,0,inf\n"));
    }

    #[test]
    fn trapezoid_equals_pair_counting() {
        let mut rng = seeded_rng(5, 0);
        for _ in 0..200 {
            let n = rng.random_range(2..40);
            let mut labels: Vec<f64> = (0..n)
                .map(|_| if rng.random() { 1.0 } else { -1.0 })
                .collect();
            labels[0] = 1.0;
            labels[1] = -1.0;
            // coarse scores force ties
            let scores: Vec<f64> = (0..n)
                .map(|_| rng.random_range(0..6) as f64 / 5.0)
                .collect();
            assert_eq!(
                roc_auc(&scores, &labels).unwrap().auc,
                pair_counting_auc(&scores, &labels)
            );
        }
    }

    #[test]
    fn one_class_input_fails() {
        assert!(matches!(
            roc_auc(&[0.1, 0.2], &[1.0, 1.0]),
            Err(Error::SingleClass(_))
        ));
        assert!(bootstrap_auc(&[0.1, 0.2], &[-1.0, -1.0], 10, 0).is_err());
    }

    #[test]
    fn separated_scores_have_a_degenerate_interval() {
        let scores: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let labels: Vec<f64> = (0..20).map(|i| if i >= 10 { 1.0 } else { -1.0 }).collect();
        let b = bootstrap_auc(&scores, &labels, 500, 1).unwrap();
        assert_eq!(b.auc, 1.0);
        assert_eq!(b.ci95, (1.0, 1.0));
        assert_eq!(b.se, 0.0);
    }

    #[test]
    fn bootstrap_is_seeded() {
        let mut rng = seeded_rng(6, 0);
        let scores: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        let labels: Vec<f64> = (0..50)
            .map(|i| if i % 3 == 0 { 1.0 } else { -1.0 })
            .collect();
        let a = bootstrap_auc(&scores, &labels, 300, 11).unwrap();
        assert_eq!(a, bootstrap_auc(&scores, &labels, 300, 11).unwrap());
        assert_ne!(a.se, bootstrap_auc(&scores, &labels, 300, 12).unwrap().se);
        assert!(a.ci95.0 <= a.auc && a.auc <= a.ci95.1);
    }

    #[test]
    fn bootstrap_se_tracks_hanley_mcneil() {
        let mut rng = seeded_rng(7, 0);
        let scores: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let labels: Vec<f64> = (0..200).map(|i| if i < 100 { 1.0 } else { -1.0 }).collect();
        let b = bootstrap_auc(&scores, &labels, 2000, 3).unwrap();
        let a = b.auc;
        let (np, nn) = (100.0, 100.0);
        let q1 = a / (2.0 - a);
        let q2 = 2.0 * a * a / (1.0 + a);
        let hm = ((a * (1.0 - a) + (np - 1.0) * (q1 - a * a) + (nn - 1.0) * (q2 - a * a))
            / (np * nn))
            .sqrt();
        assert!(
            b.se > 0.5 * hm && b.se < 2.0 * hm,
            "bootstrap {} vs closed form {hm}",
            b.se
        );
    }

    #[test]
    fn z_test_properties() {
        let mut rng = seeded_rng(8, 0);
        let labels: Vec<f64> = (0..200)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let perfect: Vec<f64> = labels
            .iter()
            .map(|l| *l + rng.random_range(-0.1..0.1))
            .collect();
        let random: Vec<f64> = (0..200).map(|_| rng.random()).collect();

        let same = compare_auc_z(&random, &random, &labels, 500, 1).unwrap();
        assert_eq!((same.z, same.p_two_tailed), (0.0, 1.0));

        let ab = compare_auc_z(&perfect, &random, &labels, 500, 1).unwrap();
        assert!(ab.p_two_tailed < 0.001, "{ab:?}");
        let ba = compare_auc_z(&random, &perfect, &labels, 500, 1).unwrap();
        assert_eq!(ab.z, -ba.z);

        assert!(compare_auc_z(&perfect, &random[..10], &labels, 10, 1).is_err());
    }

    #[test]
    fn p_values() {
        assert_eq!(two_tailed_p(0.0), 1.0);
        assert!((two_tailed_p(1.959_963_984_540_054) - 0.05).abs() < 1e-10);
        assert_eq!(two_tailed_p(f64::INFINITY), 0.0);
    }
}
