//! JSON manifest listing bags and their frame/mask files.
//!
//! ```json
//! {"frame_count": 5,
//!  "bags": [{"id": "t000", "label": "thrombus",
//!            "frames": [{"image": "t000/frame_0.pgm", "mask": "t000/mask_0.pgm"}]}]}
//! ```
//!
//! Paths are relative to the directory holding the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_pgm, Bag, Dataset, Frame, Label, RoiMask, DEFAULT_FRAME_COUNT};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_frame_count")]
    pub frame_count: usize,
    pub bags: Vec<BagEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BagEntry {
    pub id: String,
    pub label: Label,
    pub frames: Vec<FrameEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub image: PathBuf,
    pub mask: PathBuf,
}

fn default_frame_count() -> usize {
    DEFAULT_FRAME_COUNT
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    // frame counts are checked before any image is decoded
    for entry in &manifest.bags {
        if entry.frames.len() != manifest.frame_count {
            return Err(Error::BagFrameCount {
                bag: entry.id.clone(),
                expected: manifest.frame_count,
                found: entry.frames.len(),
            });
        }
    }

    let bags = manifest
        .bags
        .par_iter()
        .map(|entry| load_bag(entry, base))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(bags, manifest.frame_count, path.to_path_buf())
}

fn load_bag(entry: &BagEntry, base: &Path) -> Result<Bag> {
    let frames = entry
        .frames
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let image = load_pgm(base.join(&f.image))?;
            let mask_img = load_pgm(base.join(&f.mask))?;
            if mask_img.pixels().iter().all(|v| *v == 0.0) {
                return Err(Error::EmptyRoi {
                    bag: entry.id.clone(),
                    frame: index,
                });
            }
            let mask = RoiMask::from_image(&mask_img)?;
            Frame::new(image, mask).map_err(|e| match e {
                Error::DimensionMismatch(msg) => {
                    Error::DimensionMismatch(format!("bag {} frame {index}: {msg}", entry.id))
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Bag::new(entry.id.clone(), entry.label, frames)
}

pub fn write_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
