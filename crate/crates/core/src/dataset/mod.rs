//! Grayscale images, ROI masks, labeled frame sequences (bags) and the
//! manifest that ties them to files on disk.

mod manifest;
mod pgm;

pub use manifest::{load_manifest, write_manifest, BagEntry, FrameEntry, Manifest};
pub use pgm::{load_pgm, load_pgm_bytes, read_pgm, save_pgm, write_pgm};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest frame side accepted into a [`Dataset`].
pub const MIN_FRAME_SIDE: usize = 8;

/// Default number of frames per sequence.
pub const DEFAULT_FRAME_COUNT: usize = 5;

/// Row-major real-valued intensity raster in gray levels.
///
/// Intensities are finite and lie in `[0, 255]`. Frames in a [`Dataset`]
/// must additionally be at least [`MIN_FRAME_SIDE`] pixels on each side.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(v) = pixels
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0)
        {
            return Err(Error::InvalidImage(format!(
                "intensity {v} outside [0, 255]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from any pixel buffer, clamping into `[0, 255]`.
    /// Non-finite values become 0.
    pub fn from_clamped(width: usize, height: usize, mut pixels: Vec<f64>) -> Result<Self> {
        for v in &mut pixels {
            *v = if v.is_finite() {
                v.clamp(0.0, 255.0)
            } else {
                0.0
            };
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.pixels
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rounds and clamps every pixel to a byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Binary region-of-interest mask; `true` marks pixels inside the ROI.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RoiMask {
    /// Fails if the mask has no set bit.
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} mask bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        if !bits.iter().any(|b| *b) {
            return Err(Error::InvalidImage("empty ROI".into()));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Self::new(width, height, bits)
    }

    /// Any nonzero intensity counts as inside.
    pub fn from_image(img: &GrayImage) -> Result<Self> {
        Self::new(
            img.width(),
            img.height(),
            img.pixels().iter().map(|v| *v != 0.0).collect(),
        )
    }

    /// Mask as a 0/255 image.
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self
                .bits
                .iter()
                .map(|b| if *b { 255.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// One image of a sequence together with its ROI.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    image: GrayImage,
    mask: RoiMask,
}

impl Frame {
    pub fn new(image: GrayImage, mask: RoiMask) -> Result<Self> {
        if image.width() != mask.width() || image.height() != mask.height() {
            return Err(Error::DimensionMismatch(format!(
                "image is {}x{}, mask is {}x{}",
                image.width(),
                image.height(),
                mask.width(),
                mask.height()
            )));
        }
        Ok(Self { image, mask })
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn mask(&self) -> &RoiMask {
        &self.mask
    }

    pub fn with_image(&self, image: GrayImage) -> Result<Self> {
        Self::new(image, self.mask.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Thrombus,
    Muscle,
    Unknown,
}

impl Label {
    /// `+1` for thrombus, `-1` for muscle.
    pub fn sign(self) -> Option<f64> {
        match self {
            Label::Thrombus => Some(1.0),
            Label::Muscle => Some(-1.0),
            Label::Unknown => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Thrombus => "thrombus",
            Label::Muscle => "muscle",
            Label::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "thrombus" => Ok(Label::Thrombus),
            "muscle" => Ok(Label::Muscle),
            "unknown" => Ok(Label::Unknown),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// A labeled sequence of frames in temporal order; the unit of
/// classification.
#[derive(Clone, Debug, PartialEq)]
pub struct Bag {
    pub id: String,
    pub label: Label,
    pub frames: Vec<Frame>,
}

impl Bag {
    pub fn new(id: impl Into<String>, label: Label, frames: Vec<Frame>) -> Result<Self> {
        let id = id.into();
        if frames.len() < 2 {
            return Err(Error::BagFrameCount {
                bag: id,
                expected: 2,
                found: frames.len(),
            });
        }
        Ok(Self { id, label, frames })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub bags: Vec<Bag>,
    pub frame_count: usize,
    pub source: PathBuf,
}

impl Dataset {
    /// Checks bag-id uniqueness, the shared frame count and minimum frame
    /// size.
    pub fn new(bags: Vec<Bag>, frame_count: usize, source: PathBuf) -> Result<Self> {
        if frame_count < 2 {
            return Err(Error::InvalidParameter(format!(
                "frame_count {frame_count} < 2"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for bag in &bags {
            if !seen.insert(bag.id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate bag id {}",
                    bag.id
                )));
            }
            if bag.frames.len() != frame_count {
                return Err(Error::BagFrameCount {
                    bag: bag.id.clone(),
                    expected: frame_count,
                    found: bag.frames.len(),
                });
            }
            for frame in &bag.frames {
                let img = frame.image();
                if img.width() < MIN_FRAME_SIDE || img.height() < MIN_FRAME_SIDE {
                    return Err(Error::InvalidImage(format!(
                        "bag {}: frame {}x{} smaller than {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}",
                        bag.id,
                        img.width(),
                        img.height()
                    )));
                }
            }
        }
        Ok(Self {
            bags,
            frame_count,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.bags.iter().filter(|b| b.label == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_out_of_range() {
        assert!(GrayImage::new(2, 1, vec![0.0, 256.0]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.0, 255.0]).is_ok());
    }

    #[test]
    fn mask_requires_a_set_bit() {
        let err = RoiMask::new(2, 2, vec![false; 4]).unwrap_err();
        assert!(err.to_string().contains("empty ROI"));
    }

    #[test]
    fn frame_dimensions_must_match() {
        let img = GrayImage::filled(8, 8, 1.0).unwrap();
        let mask = RoiMask::full(8, 9);
        assert!(matches!(
            Frame::new(img, mask),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn label_strings_are_exact() {
        assert_eq!("thrombus".parse::<Label>().unwrap(), Label::Thrombus);
        assert_eq!("muscle".parse::<Label>().unwrap(), Label::Muscle);
        assert_eq!("unknown".parse::<Label>().unwrap(), Label::Unknown);
        assert!("Thrombus".parse::<Label>().is_err());
    }

    #[test]
    fn dataset_rejects_duplicate_ids() {
        let frame = Frame::new(GrayImage::filled(8, 8, 3.0).unwrap(), RoiMask::full(8, 8)).unwrap();
        let bag = Bag::new("a", Label::Muscle, vec![frame.clone(), frame]).unwrap();
        let err = Dataset::new(vec![bag.clone(), bag], 2, PathBuf::new()).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }
}
