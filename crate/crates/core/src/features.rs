//! Per-frame feature vectors, temporal (dynamic) features, min-max
//! normalization and multiple-instance training-set construction.
//!
//! A static vector is `[LBPV bins (P + 2); entropy; mean; std]`, 21 values for
//! `P = 16`. The dynamic vector of frame `t` appends the mean absolute change
//! to its neighbors, `(|F[t+1] - F[t]| + |F[t] - F[t-1]|) / 2`, with the
//! sequence ends using themselves as the missing neighbor.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Bag, Frame, Label};
use crate::error::{Error, Result};
use crate::texture::{lbpv_histogram, roi_stats, LbpParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// One frame: histogram bins and ROI statistics.
    Static,
    /// Static part followed by the mean absolute temporal difference.
    Dynamic,
    /// Static vectors of a frame and its two neighbors, concatenated.
    Stacked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, kind: FeatureKind) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok(Self { values, kind })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Length of a static vector for the given LBP parameters.
pub fn static_len(params: &LbpParams) -> usize {
    params.bins() + 3
}

/// Static features of an (already enhanced) frame.
pub fn static_feature(frame: &Frame, params: &LbpParams) -> Result<FeatureVector> {
    let hist = lbpv_histogram(frame.image(), frame.mask(), params)?;
    let stats = roi_stats(frame.image(), frame.mask())?;
    let mut values = hist.bins;
    values.extend([stats.entropy, stats.mean, stats.std_dev]);
    FeatureVector::new(values, FeatureKind::Static)
}

fn check_same_len(vs: &[&FeatureVector]) -> Result<usize> {
    let n = vs[0].len();
    if let Some(v) = vs.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "feature lengths {n} and {}",
            v.len()
        )));
    }
    Ok(n)
}

pub fn dynamic_feature(
    prev: &FeatureVector,
    cur: &FeatureVector,
    next: &FeatureVector,
) -> Result<FeatureVector> {
    check_same_len(&[prev, cur, next])?;
    let mut values = cur.values.clone();
    values.extend(
        prev.values
            .iter()
            .zip(&cur.values)
            .zip(&next.values)
            .map(|((p, c), n)| ((n - c).abs() + (c - p).abs()) / 2.0),
    );
    FeatureVector::new(values, FeatureKind::Dynamic)
}

/// `[cur; prev; next]`, the neighbor-concatenated static representation.
pub fn stacked_feature(
    prev: &FeatureVector,
    cur: &FeatureVector,
    next: &FeatureVector,
) -> Result<FeatureVector> {
    check_same_len(&[prev, cur, next])?;
    let mut values = Vec::with_capacity(3 * cur.len());
    for v in [cur, prev, next] {
        values.extend_from_slice(&v.values);
    }
    FeatureVector::new(values, FeatureKind::Stacked)
}

/// Applies `f(prev, cur, next)` along a sequence, clamping neighbor indices
/// at both ends.
pub fn along_sequence(
    statics: &[FeatureVector],
    f: impl Fn(&FeatureVector, &FeatureVector, &FeatureVector) -> Result<FeatureVector>,
) -> Result<Vec<FeatureVector>> {
    if statics.len() < 2 {
        return Err(Error::TooFewSamples(format!(
            "sequence of {} frames, need at least 2",
            statics.len()
        )));
    }
    let last = statics.len() - 1;
    (0..=last)
        .map(|t| {
            f(
                &statics[t.saturating_sub(1)],
                &statics[t],
                &statics[(t + 1).min(last)],
            )
        })
        .collect()
}

pub fn bag_static_features(bag: &Bag, params: &LbpParams) -> Result<Vec<FeatureVector>> {
    bag.frames
        .iter()
        .map(|f| static_feature(f, params))
        .collect()
}

/// Dynamic vectors for every frame of an enhanced bag.
pub fn bag_dynamic_features(bag: &Bag, params: &LbpParams) -> Result<Vec<FeatureVector>> {
    along_sequence(&bag_static_features(bag, params)?, dynamic_feature)
}

/// Per-dimension min-max scaling to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_normalizer<'a>(
    vectors: impl IntoIterator<Item = &'a FeatureVector>,
) -> Result<Normalizer> {
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(Error::Empty("normalizer fit set"))?;
    let mut min = first.values.clone();
    let mut max = first.values.clone();
    for v in iter {
        if v.len() != min.len() {
            return Err(Error::DimensionMismatch(format!(
                "normalizer fit on length {}, got {}",
                min.len(),
                v.len()
            )));
        }
        for ((lo, hi), x) in min.iter_mut().zip(&mut max).zip(&v.values) {
            *lo = lo.min(*x);
            *hi = hi.max(*x);
        }
    }
    Ok(Normalizer { min, max })
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Degenerate dimensions (`min == max`) map to 0; everything else is
    /// clamped into `[0, 1]`.
    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "normalizer has {} dimensions, vector has {}",
                self.dim(),
                v.len()
            )));
        }
        let values = v
            .values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(x, (lo, hi))| {
                if hi > lo {
                    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        FeatureVector::new(values, v.kind)
    }

    /// Two rows: minima, then maxima.
    pub fn to_csv(&self) -> String {
        let row = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        format!("{}\n{}\n", row(&self.min), row(&self.max))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("normalizer csv: {m}"));
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|f| {
                        f.trim()
                            .parse::<f64>()
                            .map_err(|_| bad("non-numeric field"))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        match rows.as_slice() {
            [min, max] if min.len() == max.len() => {
                if min.iter().zip(max).any(|(lo, hi)| lo > hi) {
                    return Err(bad("min exceeds max"));
                }
                Ok(Self {
                    min: min.clone(),
                    max: max.clone(),
                })
            }
            _ => Err(bad("expected two rows of equal length")),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn mean_of(vectors: &[FeatureVector], what: &'static str) -> Result<FeatureVector> {
    let first = vectors.first().ok_or(Error::Empty(what))?;
    let refs: Vec<&FeatureVector> = vectors.iter().collect();
    let n = check_same_len(&refs)?;
    let mut sum = vec![0.0; n];
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(&v.values) {
            *s += x;
        }
    }
    let count = vectors.len() as f64;
    FeatureVector::new(sum.into_iter().map(|s| s / count).collect(), first.kind)
}

/// Mean of every muscle instance in the training bags.
pub fn muscle_center(muscle_instances: &[FeatureVector]) -> Result<FeatureVector> {
    mean_of(muscle_instances, "muscle instances")
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Index of the instance farthest from the muscle center; the earliest frame
/// wins ties.
pub fn select_thrombus_instance(instances: &[FeatureVector], m_c: &FeatureVector) -> Result<usize> {
    if instances.is_empty() {
        return Err(Error::Empty("bag instances"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in instances.iter().enumerate() {
        if v.len() != m_c.len() {
            return Err(Error::DimensionMismatch(format!(
                "instance length {}, center length {}",
                v.len(),
                m_c.len()
            )));
        }
        let d = euclidean(&v.values, &m_c.values);
        if d > best.1 {
            best = (k, d);
        }
    }
    Ok(best.0)
}

/// A muscle bag is represented by the mean of its instances.
pub fn muscle_bag_representative(instances: &[FeatureVector]) -> Result<FeatureVector> {
    mean_of(instances, "bag instances")
}

/// Instances of one bag, already normalized. `bag` indexes the dataset and
/// is carried through for provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceBag {
    pub bag: usize,
    pub label: Label,
    pub instances: Vec<FeatureVector>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilSample {
    pub bag: usize,
    /// Selected frame for thrombus bags; `None` for muscle bag means.
    pub frame: Option<usize>,
    pub x: FeatureVector,
    /// `+1` thrombus, `-1` muscle.
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilTrainingSet {
    pub samples: Vec<MilSample>,
    pub muscle_center: FeatureVector,
}

impl MilTrainingSet {
    pub fn xs(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.values.clone()).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }
}

/// One training vector per bag: the farthest-from-center instance of each
/// thrombus bag and the instance mean of each muscle bag.
pub fn build_mil_training_set(bags: &[InstanceBag]) -> Result<MilTrainingSet> {
    let muscle: Vec<FeatureVector> = bags
        .iter()
        .filter(|b| b.label == Label::Muscle)
        .flat_map(|b| b.instances.iter().cloned())
        .collect();
    if !bags.iter().any(|b| b.label == Label::Thrombus) {
        return Err(Error::SingleClass(
            "no thrombus bag in MIL training set".into(),
        ));
    }
    if muscle.is_empty() {
        return Err(Error::SingleClass(
            "no muscle bag in MIL training set".into(),
        ));
    }
    let center = muscle_center(&muscle)?;

    let samples = bags
        .iter()
        .map(|b| match b.label {
            Label::Thrombus => {
                let k = select_thrombus_instance(&b.instances, &center)?;
                Ok(MilSample {
                    bag: b.bag,
                    frame: Some(k),
                    x: b.instances[k].clone(),
                    y: 1.0,
                })
            }
            Label::Muscle => Ok(MilSample {
                bag: b.bag,
                frame: None,
                x: muscle_bag_representative(&b.instances)?,
                y: -1.0,
            }),
            Label::Unknown => Err(Error::InvalidParameter(format!(
                "bag {} has no label and cannot be used for training",
                b.bag
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MilTrainingSet {
        samples,
        muscle_center: center,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Column names for a static vector with the given parameters.
pub fn static_columns(params: &LbpParams) -> Vec<String> {
    (0..params.bins())
        .map(|k| format!("bin_{k}"))
        .chain(["entropy", "mean", "std"].map(String::from))
        .collect()
}

/// Column names for a vector of `kind` built from static vectors.
pub fn feature_columns(kind: FeatureKind, params: &LbpParams) -> Vec<String> {
    let base = static_columns(params);
    let prefixes: &[&str] = match kind {
        FeatureKind::Static => &[""],
        FeatureKind::Dynamic => &["", "diff_"],
        FeatureKind::Stacked => &["", "prev_", "next_"],
    };
    prefixes
        .iter()
        .flat_map(|p| base.iter().map(move |c| format!("{p}{c}")))
        .collect()
}

/// CSV with header `bag_id,frame_index,<columns>` and one row per
/// `(bag_id, frame_index, vector)`.
pub fn feature_csv<'a>(
    columns: &[String],
    rows: impl IntoIterator<Item = (&'a str, usize, &'a FeatureVector)>,
) -> String {
    let mut out = String::from("bag_id,frame_index");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (bag, frame, v) in rows {
        let _ = write!(out, "{},{frame}", csv_field(bag));
        for x in &v.values {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}
