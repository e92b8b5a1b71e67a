//! Synthetic TEE-like sequences with known labels.
//!
//! Each bag is an elliptical ROI over a dim speckled background. Muscle
//! bags fill the ROI with bright multiplicative speckle that is redrawn on
//! every frame. Thrombus bags hold a smooth bright mass (raised-cosine
//! profile) that barely moves between frames; in a `partial_fraction` of
//! them the mass is only visible in one or two frames and the remaining
//! frames look like muscle.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    save_pgm, write_manifest, Bag, BagEntry, Dataset, Frame, FrameEntry, GrayImage, Label,
    Manifest, RoiMask,
};
use crate::error::{Error, Result};
use crate::eval::folds::seeded_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub n_thrombus: usize,
    pub n_muscle: usize,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    /// Amplitude of the multiplicative speckle, in `[0, 1]`.
    pub speckle_strength: f64,
    /// Semi-axes `(horizontal, vertical)` of the thrombus mass in pixels.
    pub blob_axes: (f64, f64),
    /// Relative frame-to-frame variation of intensity and position.
    pub temporal_jitter: f64,
    /// Share of thrombus bags whose mass shows in only some frames.
    pub partial_fraction: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_thrombus: 30,
            n_muscle: 30,
            width: 128,
            height: 128,
            frame_count: 5,
            speckle_strength: 0.25,
            blob_axes: (16.0, 12.0),
            temporal_jitter: 0.1,
            partial_fraction: 0.25,
            seed: 7,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_thrombus == 0 || self.n_muscle == 0 {
            return bad("bag counts must be >= 1");
        }
        if self.width < 32 || self.height < 32 {
            return bad("frame dimensions must be >= 32");
        }
        if self.frame_count < 2 {
            return bad("frame_count must be >= 2");
        }
        if !(0.0..=1.0).contains(&self.speckle_strength) {
            return bad("speckle_strength must lie in [0, 1]");
        }
        let (a, b) = self.blob_axes;
        if !(a >= 2.0 && b >= 2.0 && a.is_finite() && b.is_finite()) {
            return bad("blob_axes must be >= 2 pixels");
        }
        if 2.0 * a > 0.6 * self.width as f64 || 2.0 * b > 0.6 * self.height as f64 {
            return bad("blob_axes do not fit inside the ROI");
        }
        if !(0.0..=0.5).contains(&self.temporal_jitter) {
            return bad("temporal_jitter must lie in [0, 0.5]");
        }
        if !(0.0..=1.0).contains(&self.partial_fraction) {
            return bad("partial_fraction must lie in [0, 1]");
        }
        Ok(())
    }

    fn bag_count(&self) -> usize {
        self.n_thrombus + self.n_muscle
    }

    /// Thrombus bags come first, then muscle bags.
    fn label_of(&self, index: usize) -> Label {
        if index < self.n_thrombus {
            Label::Thrombus
        } else {
            Label::Muscle
        }
    }

    fn id_of(&self, index: usize) -> String {
        match self.label_of(index) {
            Label::Thrombus => format!("thrombus_{index:03}"),
            _ => format!("muscle_{:03}", index - self.n_thrombus),
        }
    }

    /// Number of partial thrombus bags; they are the last thrombus bags.
    fn partial_count(&self) -> usize {
        (self.partial_fraction * self.n_thrombus as f64).round() as usize
    }
}

struct Ellipse {
    row: f64,
    col: f64,
    a: f64,
    b: f64,
}

impl Ellipse {
    /// Normalized radius; 1 on the boundary.
    fn radius(&self, row: usize, col: usize) -> f64 {
        let dr = (row as f64 - self.row) / self.b;
        let dc = (col as f64 - self.col) / self.a;
        (dr * dr + dc * dc).sqrt()
    }
}

fn speckle(rng: &mut ChaCha8Rng, base: f64, strength: f64) -> f64 {
    base * (1.0 + strength * rng.random_range(-1.0..=1.0))
}

fn quantize(w: usize, h: usize, pixels: Vec<f64>) -> Result<GrayImage> {
    GrayImage::from_clamped(w, h, pixels.into_iter().map(f64::round).collect())
}

fn synth_bag(params: &SynthParams, index: usize) -> Result<Bag> {
    let mut rng = seeded_rng(params.seed, 10_000 + index as u64);
    let (w, h) = (params.width, params.height);
    let label = params.label_of(index);
    let jitter = params.temporal_jitter;
    let s = params.speckle_strength;

    let roi = Ellipse {
        row: h as f64 / 2.0 + rng.random_range(-0.05..=0.05) * h as f64,
        col: w as f64 / 2.0 + rng.random_range(-0.05..=0.05) * w as f64,
        a: rng.random_range(0.33..=0.38) * w as f64,
        b: rng.random_range(0.33..=0.38) * h as f64,
    };
    let mask = RoiMask::from_fn(w, h, |r, c| roi.radius(r, c) <= 1.0)?;

    let (ba, bb) = params.blob_axes;
    let blob_base = Ellipse {
        row: roi.row + rng.random_range(-0.2..=0.2) * roi.b,
        col: roi.col + rng.random_range(-0.2..=0.2) * roi.a,
        a: ba * rng.random_range(0.85..=1.15),
        b: bb * rng.random_range(0.85..=1.15),
    };
    let blob_peak = rng.random_range(190.0..=230.0);
    let muscle_base = rng.random_range(95.0..=125.0);

    let visible: Vec<bool> = match label {
        Label::Thrombus if index >= params.n_thrombus - params.partial_count() => {
            let shown = rng.random_range(1..=2usize.min(params.frame_count - 1));
            let start = rng.random_range(0..=params.frame_count - shown);
            (0..params.frame_count)
                .map(|t| t >= start && t < start + shown)
                .collect()
        }
        Label::Thrombus => vec![true; params.frame_count],
        _ => vec![false; params.frame_count],
    };

    let frames = visible
        .iter()
        .map(|&blob| {
            let base = muscle_base * (1.0 + jitter * rng.random_range(-1.0..=1.0));
            let strength = (s * (1.0 + jitter * rng.random_range(-1.0..=1.0))).min(1.0);
            let shift = jitter * bb.min(ba) * 0.5;
            let mass = Ellipse {
                row: blob_base.row + rng.random_range(-shift..=shift),
                col: blob_base.col + rng.random_range(-shift..=shift),
                ..blob_base
            };
            let peak = blob_peak * (1.0 + 0.25 * jitter * rng.random_range(-1.0..=1.0));
            let mut pixels = Vec::with_capacity(w * h);
            for r in 0..h {
                for c in 0..w {
                    let v = if !mask.contains(r, c) {
                        speckle(&mut rng, 35.0, s)
                    } else if blob {
                        // dim blood pool around a smooth mass
                        let bg = speckle(&mut rng, 45.0, s);
                        let rho = mass.radius(r, c);
                        if rho < 1.0 {
                            let profile = 0.5 * (1.0 + (PI * rho).cos());
                            bg + (peak - bg) * profile
                        } else {
                            bg
                        }
                    } else {
                        speckle(&mut rng, base, strength)
                    };
                    pixels.push(v);
                }
            }
            Frame::new(quantize(w, h, pixels)?, mask.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Bag::new(params.id_of(index), label, frames)
}

/// Builds the corpus in memory, exactly as [`generate`] would write it.
pub fn synthesize(params: &SynthParams) -> Result<Dataset> {
    params.validate()?;
    let bags = (0..params.bag_count())
        .into_par_iter()
        .map(|i| synth_bag(params, i))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(bags, params.frame_count, PathBuf::from("<synthetic>"))
}

/// Writes the corpus as PGM frames and masks under `out_dir` and returns
/// the path of its `manifest.json`.
pub fn generate(params: &SynthParams, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    let dataset = synthesize(params)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let entries = dataset
        .bags
        .par_iter()
        .map(|bag| {
            let dir = out_dir.join(&bag.id);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let frames = bag
                .frames
                .iter()
                .enumerate()
                .map(|(t, frame)| {
                    let image = PathBuf::from(&bag.id).join(format!("frame_{t}.pgm"));
                    let mask = PathBuf::from(&bag.id).join(format!("mask_{t}.pgm"));
                    save_pgm(frame.image(), out_dir.join(&image))?;
                    save_pgm(&frame.mask().to_image(), out_dir.join(&mask))?;
                    Ok(FrameEntry { image, mask })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BagEntry {
                id: bag.id.clone(),
                label: bag.label,
                frames,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest_path = out_dir.join("manifest.json");
    write_manifest(
        &Manifest {
            frame_count: params.frame_count,
            bags: entries,
        },
        &manifest_path,
    )?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_manifest;

    fn small() -> SynthParams {
        SynthParams {
            n_thrombus: 3,
            n_muscle: 2,
            width: 48,
            height: 40,
            blob_axes: (8.0, 6.0),
            ..SynthParams::default()
        }
    }

    #[test]
    fn counts_and_labels() {
        let ds = synthesize(&small()).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.count_label(Label::Thrombus), 3);
        assert_eq!(ds.count_label(Label::Muscle), 2);
        assert!(ds.bags.iter().all(|b| b.frames.len() == 5));
    }

    #[test]
    fn written_corpus_reloads_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = generate(&small(), dir.path()).unwrap();
        let loaded = load_manifest(&path).unwrap();
        let direct = synthesize(&small()).unwrap();
        for (a, b) in loaded.bags.iter().zip(&direct.bags) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
            assert_eq!(a.frames, b.frames);
        }
    }

    #[test]
    fn seed_changes_output() {
        let a = synthesize(&small()).unwrap();
        let b = synthesize(&SynthParams { seed: 8, ..small() }).unwrap();
        assert_ne!(a.bags[0].frames, b.bags[0].frames);
        assert_eq!(a.bags, synthesize(&small()).unwrap().bags);
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            SynthParams {
                n_muscle: 0,
                ..small()
            },
            SynthParams {
                width: 31,
                ..small()
            },
            SynthParams {
                speckle_strength: 1.5,
                ..small()
            },
            SynthParams {
                blob_axes: (1.0, 6.0),
                ..small()
            },
            SynthParams {
                blob_axes: (30.0, 6.0),
                ..small()
            },
            SynthParams {
                partial_fraction: -0.1,
                ..small()
            },
        ] {
            assert!(matches!(p.validate(), Err(Error::InvalidParameter(_))));
        }
    }
}
