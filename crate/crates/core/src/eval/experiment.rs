//! Cross-validated evaluation of the three pipeline variants.
//!
//! * `LbpvVote`: each frame is described by its static vector concatenated
//!   with its neighbors' vectors, frames are classified individually and a
//!   bag is called thrombus when a strict majority of its frames is.
//! * `LbpvdVote`: same voting, with dynamic vectors.
//! * `LbpvdMil`: dynamic vectors; training uses one vector per bag (the
//!   farthest-from-muscle-center instance of thrombus bags, the instance
//!   mean of muscle bags) and each test bag is classified once.
//!
//! Within every outer fold the normalizer, the muscle center, the grid search
//! (inner stratified CV over training bags) and the final model see only
//! that fold's training bags. Each fold records which bags reached each of
//! those stages in a [`FoldTrace`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{seeded_rng, stratified_assignment};
use super::roc::{roc_with_bootstrap, RocResult};
use super::{metrics, Confusion};
use crate::dataset::{Dataset, Label};
use crate::enhance::{enhance_frame, EnhanceParams};
use crate::error::{Error, Result};
use crate::features::{
    along_sequence, build_mil_training_set, dynamic_feature, euclidean, fit_normalizer,
    select_thrombus_instance, stacked_feature, static_feature, FeatureVector, InstanceBag,
    Normalizer,
};
use crate::svm::{
    grid_search, grid_search_grouped, sign, smo_train, GridSpec, KernelSpec, SmoConfig, SvmModel,
};
use crate::texture::LbpParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "lbpv-vote")]
    LbpvVote,
    #[serde(rename = "lbpvd-vote")]
    LbpvdVote,
    #[serde(rename = "lbpvd-mil")]
    LbpvdMil,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::LbpvVote, Variant::LbpvdVote, Variant::LbpvdMil];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::LbpvVote => "lbpv-vote",
            Variant::LbpvdVote => "lbpvd-vote",
            Variant::LbpvdMil => "lbpvd-mil",
        }
    }

    /// Per-frame instance vectors of a bag from its static vectors.
    pub fn instances(self, statics: &[FeatureVector]) -> Result<Vec<FeatureVector>> {
        match self {
            Variant::LbpvVote => along_sequence(statics, stacked_feature),
            Variant::LbpvdVote | Variant::LbpvdMil => along_sequence(statics, dynamic_feature),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant {s:?}")))
    }
}

/// How an unlabeled bag is scored by a MIL model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MilTestRule {
    /// Score the instance farthest from the training muscle center.
    #[default]
    Farthest,
    /// Score every instance and keep the maximum.
    AnyPositive,
}

/// Unit of the outer cross-validation split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvUnit {
    /// Whole bags go to one fold.
    #[default]
    Bag,
    /// Individual frames are split, so frames of one bag can sit on both
    /// sides of a split.
    Image,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub enhance: EnhanceParams,
    pub lbp: LbpParams,
    pub folds: usize,
    pub inner_folds: usize,
    pub grid: GridSpec,
    pub mil_test_rule: MilTestRule,
    pub cv_unit: CvUnit,
    pub bootstrap_iters: usize,
    pub smo_tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            enhance: EnhanceParams::default(),
            lbp: LbpParams::default(),
            folds: 10,
            inner_folds: 5,
            grid: GridSpec::default(),
            mil_test_rule: MilTestRule::Farthest,
            cv_unit: CvUnit::Bag,
            bootstrap_iters: 5000,
            smo_tolerance: SmoConfig::default().tolerance,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.enhance.validate()?;
        self.lbp.validate()?;
        self.grid.validate()?;
        if self.folds < 2 || self.inner_folds < 2 {
            return Err(Error::InvalidParameter("fold counts must be >= 2".into()));
        }
        if self.bootstrap_iters < 2 {
            return Err(Error::InvalidParameter(
                "bootstrap_iters must be >= 2".into(),
            ));
        }
        if !(self.smo_tolerance.is_finite() && self.smo_tolerance > 0.0) {
            return Err(Error::InvalidParameter("smo_tolerance must be > 0".into()));
        }
        Ok(())
    }

    fn smo(&self) -> SmoConfig {
        SmoConfig {
            tolerance: self.smo_tolerance,
            ..SmoConfig::default()
        }
    }
}

/// Static vectors of every frame of one bag, computed on enhanced frames.
#[derive(Clone, Debug, PartialEq)]
pub struct BagFeatures {
    pub index: usize,
    pub id: String,
    pub label: Label,
    pub statics: Vec<FeatureVector>,
}

/// Enhances every frame and extracts its static vector.
pub fn extract_features(
    dataset: &Dataset,
    enhance: &EnhanceParams,
    lbp: &LbpParams,
) -> Result<Vec<BagFeatures>> {
    dataset
        .bags
        .par_iter()
        .enumerate()
        .map(|(index, bag)| {
            let statics = bag
                .frames
                .iter()
                .map(|f| static_feature(&enhance_frame(f, enhance)?, lbp))
                .collect::<Result<Vec<_>>>()?;
            Ok(BagFeatures {
                index,
                id: bag.id.clone(),
                label: bag.label,
                statics,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BagOutcome {
    pub bag_id: String,
    pub label: Label,
    /// Continuous score fed to the ROC sweep; positive means thrombus.
    pub score: f64,
    pub predicted: Label,
    /// Frames voting thrombus (voting variants only).
    pub votes: Option<usize>,
    pub fold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub c: f64,
    pub gamma: f64,
    pub inner_cv_accuracy: f64,
    pub train_samples: usize,
    pub support_vectors: usize,
}

/// Bags (dataset indices) that reached each training stage of one fold.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldTrace {
    pub fold: usize,
    pub test_bags: BTreeSet<usize>,
    pub normalizer_bags: BTreeSet<usize>,
    pub center_bags: BTreeSet<usize>,
    pub grid_bags: BTreeSet<usize>,
    pub train_bags: BTreeSet<usize>,
}

impl FoldTrace {
    /// Test bags that also reached a training stage.
    pub fn leaked(&self) -> BTreeSet<usize> {
        let used: BTreeSet<usize> = self
            .normalizer_bags
            .iter()
            .chain(&self.center_bags)
            .chain(&self.grid_bags)
            .chain(&self.train_bags)
            .copied()
            .collect();
        self.test_bags.intersection(&used).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub variant: Variant,
    pub confusion: Confusion,
    /// Sensitivity in percent.
    pub se: f64,
    /// Specificity in percent.
    pub sp: f64,
    /// Accuracy in percent.
    pub acc: f64,
    pub roc: RocResult,
    pub bags: Vec<BagOutcome>,
    pub folds: Vec<FoldSummary>,
    pub audit: Vec<FoldTrace>,
    pub seed: u64,
}

impl ExperimentReport {
    /// Accuracy as a fraction.
    pub fn accuracy(&self) -> f64 {
        (self.confusion.tp + self.confusion.tn) as f64 / self.confusion.total() as f64
    }

    pub fn scores(&self) -> Vec<f64> {
        self.bags.iter().map(|b| b.score).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.bags
            .iter()
            .map(|b| {
                if b.label == Label::Thrombus {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{}: SE {:.2}% SP {:.2}% ACC {:.2}% AUC {:.4} (95% CI {:.4}-{:.4})",
            self.variant,
            self.se,
            self.sp,
            self.acc,
            self.roc.auc,
            self.roc.ci95.0,
            self.roc.ci95.1
        )
    }
}

/// Seed for a sub-task of the run, independent of thread scheduling.
fn sub_seed(seed: u64, fold: usize) -> u64 {
    use rand::RngCore;
    seeded_rng(seed, 1000 + fold as u64).next_u64()
}

/// Full pipeline from a dataset: feature extraction then
/// [`run_variant_on_features`].
pub fn run_variant(
    dataset: &Dataset,
    variant: Variant,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    config.validate()?;
    let features = extract_features(dataset, &config.enhance, &config.lbp)?;
    run_variant_on_features(&features, variant, config, seed)
}

/// One frame's normalized vector with its origin.
struct Sample {
    bag: usize,
    x: FeatureVector,
    y: f64,
}

struct FoldModel {
    model: SvmModel,
    normalizer: Normalizer,
    muscle_center: Option<FeatureVector>,
    summary: FoldSummary,
    trace: FoldTrace,
}

pub fn run_variant_on_features(
    features: &[BagFeatures],
    variant: Variant,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    config.validate()?;
    if let Some(b) = features.iter().find(|b| b.label == Label::Unknown) {
        return Err(Error::InvalidParameter(format!(
            "bag {} is unlabeled and cannot be evaluated",
            b.id
        )));
    }
    let instances: Vec<Vec<FeatureVector>> = features
        .iter()
        .map(|b| variant.instances(&b.statics))
        .collect::<Result<_>>()?;

    let (bags, folds, audit) = match config.cv_unit {
        CvUnit::Bag => bag_level(features, &instances, variant, config, seed)?,
        CvUnit::Image => image_level(features, &instances, variant, config, seed)?,
    };

    let confusion = Confusion::from_pairs(
        bags.iter()
            .map(|b| (b.label == Label::Thrombus, b.predicted == Label::Thrombus)),
    );
    let m = metrics(&confusion)?;
    let scores: Vec<f64> = bags.iter().map(|b| b.score).collect();
    let labels: Vec<f64> = bags
        .iter()
        .map(|b| {
            if b.label == Label::Thrombus {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let roc = roc_with_bootstrap(&scores, &labels, config.bootstrap_iters, seed)?;
    Ok(ExperimentReport {
        variant,
        confusion,
        se: 100.0 * m.se,
        sp: 100.0 * m.sp,
        acc: 100.0 * m.acc,
        roc,
        bags,
        folds,
        audit,
        seed,
    })
}

type Outcome = (Vec<BagOutcome>, Vec<FoldSummary>, Vec<FoldTrace>);

fn bag_level(
    features: &[BagFeatures],
    instances: &[Vec<FeatureVector>],
    variant: Variant,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Outcome> {
    let classes: Vec<usize> = features
        .iter()
        .map(|b| usize::from(b.label == Label::Muscle))
        .collect();
    let folds = stratified_assignment(&classes, config.folds, seed)?;

    let per_fold = folds
        .par_iter()
        .enumerate()
        .map(
            |(f, test)| -> Result<(Vec<BagOutcome>, FoldSummary, FoldTrace)> {
                let train: Vec<(usize, &[FeatureVector])> = (0..features.len())
                    .filter(|i| test.binary_search(i).is_err())
                    .map(|i| (i, instances[i].as_slice()))
                    .collect();
                let mut fm = train_fold(features, &train, variant, config, sub_seed(seed, f))?;
                fm.summary.fold = f;
                fm.trace.fold = f;
                fm.trace.test_bags = test.iter().copied().collect();

                let outcomes = test
                    .iter()
                    .map(|&i| {
                        let normalized = instances[i]
                            .iter()
                            .map(|v| fm.normalizer.apply(v))
                            .collect::<Result<Vec<_>>>()?;
                        let (score, votes) =
                            score_bag(&fm, &normalized, variant, config.mil_test_rule)?;
                        Ok(outcome(&features[i], score, votes, normalized.len(), f))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((outcomes, fm.summary, fm.trace))
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let mut bags: Vec<(usize, BagOutcome)> = Vec::with_capacity(features.len());
    let mut summaries = Vec::new();
    let mut traces = Vec::new();
    for ((outcomes, summary, trace), test) in per_fold.into_iter().zip(&folds) {
        bags.extend(test.iter().copied().zip(outcomes));
        summaries.push(summary);
        traces.push(trace);
    }
    bags.sort_by_key(|(i, _)| *i);
    Ok((
        bags.into_iter().map(|(_, b)| b).collect(),
        summaries,
        traces,
    ))
}

fn outcome(
    bag: &BagFeatures,
    score: f64,
    votes: Option<usize>,
    frames: usize,
    fold: usize,
) -> BagOutcome {
    let positive = match votes {
        Some(v) => 2 * v > frames,
        None => sign(score) > 0.0,
    };
    BagOutcome {
        bag_id: bag.id.clone(),
        label: bag.label,
        score,
        predicted: if positive {
            Label::Thrombus
        } else {
            Label::Muscle
        },
        votes,
        fold,
    }
}

/// Fits the normalizer, builds the training samples, grid-searches and
/// trains on the given `(bag index, instances)` pairs.
fn train_fold(
    features: &[BagFeatures],
    train: &[(usize, &[FeatureVector])],
    variant: Variant,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<FoldModel> {
    let mut trace = FoldTrace::default();
    let smo = config.smo();

    let normalizer = fit_normalizer(train.iter().flat_map(|(_, inst)| inst.iter()))?;
    trace.normalizer_bags = train.iter().map(|(i, _)| *i).collect();

    let normalized: Vec<InstanceBag> = train
        .iter()
        .map(|&(i, inst)| {
            Ok(InstanceBag {
                bag: i,
                label: features[i].label,
                instances: inst
                    .iter()
                    .map(|v| normalizer.apply(v))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<_>>()?;

    let (samples, muscle_center) = match variant {
        Variant::LbpvVote | Variant::LbpvdVote => {
            let samples: Vec<Sample> = normalized
                .iter()
                .flat_map(|b| {
                    let y = if b.label == Label::Thrombus {
                        1.0
                    } else {
                        -1.0
                    };
                    b.instances.iter().map(move |x| Sample {
                        bag: b.bag,
                        x: x.clone(),
                        y,
                    })
                })
                .collect();
            (samples, None)
        }
        Variant::LbpvdMil => {
            let set = build_mil_training_set(&normalized)?;
            trace.center_bags = normalized
                .iter()
                .filter(|b| b.label == Label::Muscle)
                .map(|b| b.bag)
                .collect();
            let samples = set
                .samples
                .into_iter()
                .map(|s| Sample {
                    bag: s.bag,
                    x: s.x,
                    y: s.y,
                })
                .collect();
            (samples, Some(set.muscle_center))
        }
    };

    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.x.values.clone()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let groups: Vec<usize> = samples.iter().map(|s| s.bag).collect();
    let grid = grid_search_grouped(
        &xs,
        &ys,
        &groups,
        &config.grid,
        config.inner_folds,
        seed,
        &smo,
    )
    .or_else(|e| match e {
        // few bags per class: fall back to sample-level folds
        Error::TooFewSamples(_) => {
            grid_search(&xs, &ys, &config.grid, config.inner_folds, seed, &smo)
        }
        other => Err(other),
    })?;
    trace.grid_bags = groups.iter().copied().collect();

    let model = smo_train(&xs, &ys, grid.c, KernelSpec::rbf(grid.gamma), &smo)?;
    trace.train_bags = groups.iter().copied().collect();

    Ok(FoldModel {
        summary: FoldSummary {
            fold: 0,
            c: grid.c,
            gamma: grid.gamma,
            inner_cv_accuracy: grid.cv_accuracy,
            train_samples: xs.len(),
            support_vectors: model.support_vectors.len(),
        },
        model,
        normalizer,
        muscle_center,
        trace,
    })
}

/// Score and (for voting variants) thrombus vote count of a normalized bag.
fn score_bag(
    fm: &FoldModel,
    normalized: &[FeatureVector],
    variant: Variant,
    rule: MilTestRule,
) -> Result<(f64, Option<usize>)> {
    let decisions = || {
        normalized
            .iter()
            .map(|v| fm.model.decision_value(&v.values))
            .collect::<Result<Vec<f64>>>()
    };
    match variant {
        Variant::LbpvVote | Variant::LbpvdVote => {
            let d = decisions()?;
            let votes = d.iter().filter(|v| sign(**v) > 0.0).count();
            Ok((d.iter().sum::<f64>() / d.len() as f64, Some(votes)))
        }
        Variant::LbpvdMil => match rule {
            MilTestRule::Farthest => {
                let center = fm.muscle_center.as_ref().expect("MIL fold has a center");
                let k = select_thrombus_instance(normalized, center)?;
                Ok((fm.model.decision_value(&normalized[k].values)?, None))
            }
            MilTestRule::AnyPositive => {
                let d = decisions()?;
                Ok((d.into_iter().fold(f64::NEG_INFINITY, f64::max), None))
            }
        },
    }
}

/// Held-out frames as `(frame, decision value, distance to the fold's
/// muscle center)`, with the fold's summary and trace.
type ScoredFold = (Vec<(usize, f64, f64)>, FoldSummary, FoldTrace);

/// Frame-level outer split. Each frame is scored by the model of the fold
/// it was held out in; bag scores are then assembled from those frames.
fn image_level(
    features: &[BagFeatures],
    instances: &[Vec<FeatureVector>],
    variant: Variant,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Outcome> {
    let frames: Vec<(usize, usize)> = instances
        .iter()
        .enumerate()
        .flat_map(|(b, inst)| (0..inst.len()).map(move |t| (b, t)))
        .collect();
    let classes: Vec<usize> = frames
        .iter()
        .map(|(b, _)| usize::from(features[*b].label == Label::Muscle))
        .collect();
    let folds = stratified_assignment(&classes, config.folds, seed)?;

    // per held-out frame: (decision value, distance to the fold's center)
    let per_fold = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| -> Result<ScoredFold> {
            let mut kept: Vec<Vec<FeatureVector>> = vec![Vec::new(); features.len()];
            for (k, &(b, t)) in frames.iter().enumerate() {
                if test.binary_search(&k).is_err() {
                    kept[b].push(instances[b][t].clone());
                }
            }
            let train: Vec<(usize, &[FeatureVector])> = kept
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_empty())
                .map(|(b, v)| (b, v.as_slice()))
                .collect();
            let mut fm = train_fold(features, &train, variant, config, sub_seed(seed, f))?;
            fm.summary.fold = f;
            fm.trace.fold = f;
            fm.trace.test_bags = test.iter().map(|&k| frames[k].0).collect();
            let scored = test
                .iter()
                .map(|&k| {
                    let (b, t) = frames[k];
                    let v = fm.normalizer.apply(&instances[b][t])?;
                    let d = fm.model.decision_value(&v.values)?;
                    let dist = fm
                        .muscle_center
                        .as_ref()
                        .map_or(0.0, |c| euclidean(&v.values, &c.values));
                    Ok((k, d, dist))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((scored, fm.summary, fm.trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut decision = vec![(0.0, 0.0, 0usize); frames.len()];
    let mut summaries = Vec::new();
    let mut traces = Vec::new();
    for (scored, summary, trace) in per_fold {
        for (k, d, dist) in scored {
            decision[k] = (d, dist, summary.fold);
        }
        summaries.push(summary);
        traces.push(trace);
    }

    let mut bags = Vec::with_capacity(features.len());
    let mut k = 0;
    for (b, inst) in instances.iter().enumerate() {
        let frame_scores = &decision[k..k + inst.len()];
        k += inst.len();
        let (score, votes) = match (variant, config.mil_test_rule) {
            (Variant::LbpvdMil, MilTestRule::Farthest) => {
                // earliest frame wins ties, as in training-time selection
                let best = frame_scores.iter().enumerate().fold(0, |best, (t, s)| {
                    if s.1 > frame_scores[best].1 {
                        t
                    } else {
                        best
                    }
                });
                (frame_scores[best].0, None)
            }
            (Variant::LbpvdMil, MilTestRule::AnyPositive) => (
                frame_scores
                    .iter()
                    .map(|s| s.0)
                    .fold(f64::NEG_INFINITY, f64::max),
                None,
            ),
            _ => (
                frame_scores.iter().map(|s| s.0).sum::<f64>() / inst.len() as f64,
                Some(frame_scores.iter().filter(|s| sign(s.0) > 0.0).count()),
            ),
        };
        let fold = frame_scores[0].2;
        bags.push(outcome(&features[b], score, votes, inst.len(), fold));
    }
    Ok((bags, summaries, traces))
}

/// A model fitted on every bag of a corpus, with the preprocessing it needs
/// to score new bags.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub variant: Variant,
    pub model: SvmModel,
    pub normalizer: Normalizer,
    /// Muscle center of the MIL training set (MIL only).
    pub muscle_center: Option<FeatureVector>,
    pub c: f64,
    pub gamma: f64,
    pub cv_accuracy: f64,
    pub mil_test_rule: MilTestRule,
}

impl TrainedModel {
    /// Bag score and, for voting variants, the number of thrombus votes.
    pub fn score(&self, statics: &[FeatureVector]) -> Result<(f64, Option<usize>)> {
        let normalized = self
            .variant
            .instances(statics)?
            .iter()
            .map(|v| self.normalizer.apply(v))
            .collect::<Result<Vec<_>>>()?;
        let fm = FoldModel {
            model: self.model.clone(),
            normalizer: self.normalizer.clone(),
            muscle_center: self.muscle_center.clone(),
            summary: FoldSummary {
                fold: 0,
                c: self.c,
                gamma: self.gamma,
                inner_cv_accuracy: self.cv_accuracy,
                train_samples: 0,
                support_vectors: 0,
            },
            trace: FoldTrace::default(),
        };
        score_bag(&fm, &normalized, self.variant, self.mil_test_rule)
    }

    /// Predicted label of a bag.
    pub fn predict(&self, statics: &[FeatureVector]) -> Result<Label> {
        let (score, votes) = self.score(statics)?;
        let positive = match votes {
            Some(v) => 2 * v > statics.len(),
            None => sign(score) > 0.0,
        };
        Ok(if positive {
            Label::Thrombus
        } else {
            Label::Muscle
        })
    }
}

/// Grid-searches and trains one model on all bags.
pub fn train_final(
    features: &[BagFeatures],
    variant: Variant,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<TrainedModel> {
    config.validate()?;
    let instances: Vec<Vec<FeatureVector>> = features
        .iter()
        .map(|b| variant.instances(&b.statics))
        .collect::<Result<_>>()?;
    let train: Vec<(usize, &[FeatureVector])> = instances
        .iter()
        .enumerate()
        .filter(|(i, _)| features[*i].label != Label::Unknown)
        .map(|(i, v)| (i, v.as_slice()))
        .collect();
    let fm = train_fold(features, &train, variant, config, seed)?;
    Ok(TrainedModel {
        variant,
        c: fm.summary.c,
        gamma: fm.summary.gamma,
        cv_accuracy: fm.summary.inner_cv_accuracy,
        model: fm.model,
        normalizer: fm.normalizer,
        muscle_center: fm.muscle_center,
        mil_test_rule: config.mil_test_rule,
    })
}
