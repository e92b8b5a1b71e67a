//! Bag-level cross-validated evaluation: confusion metrics, ROC/AUC with
//! bootstrap standard errors, the paired bootstrap Z-test, and the
//! experiment runner for the three pipeline variants.

pub mod experiment;
pub mod folds;
pub mod roc;

pub use experiment::{
    extract_features, run_variant, run_variant_on_features, train_final, BagFeatures, BagOutcome,
    CvUnit, ExperimentConfig, ExperimentReport, FoldSummary, FoldTrace, MilTestRule, TrainedModel,
    Variant,
};
pub use folds::{seeded_rng, stratified_assignment};
pub use roc::{
    bootstrap_auc, compare_auc_z, roc_auc, roc_with_bootstrap, BootstrapAuc, RocPoint, RocResult,
    ZTest,
};

use serde::{Deserialize, Serialize};

use crate::dataset::{Bag, Label};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    /// Tallies `(truth, predicted)` pairs where `true` means thrombus.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (truth, pred) in pairs {
            match (truth, pred) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }
}

/// Sensitivity, specificity and accuracy as fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub se: f64,
    pub sp: f64,
    pub acc: f64,
}

pub fn metrics(c: &Confusion) -> Result<Metrics> {
    let ratio = |num: usize, den: usize, name: &'static str| {
        if den == 0 {
            Err(Error::UndefinedMetric(name))
        } else {
            Ok(num as f64 / den as f64)
        }
    };
    Ok(Metrics {
        se: ratio(c.tp, c.tp + c.fn_, "sensitivity")?,
        sp: ratio(c.tn, c.tn + c.fp, "specificity")?,
        acc: ratio(c.tp + c.tn, c.total(), "accuracy")?,
    })
}

/// Stratified bag folds; each class needs at least `k` bags.
pub fn stratified_kfold(bags: &[Bag], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let classes = bags
        .iter()
        .map(|b| match b.label {
            Label::Thrombus => Ok(0),
            Label::Muscle => Ok(1),
            Label::Unknown => Err(Error::InvalidParameter(format!(
                "bag {} is unlabeled and cannot be cross-validated",
                b.id
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    stratified_assignment(&classes, k, seed)
}
