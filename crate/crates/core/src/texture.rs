//! Rotation-invariant uniform LBP variance (LBPV) histograms and ROI
//! gray-level statistics.
//!
//! For every ROI pixel whose sampling circle fits inside the image, the `P`
//! circular neighbors are thresholded at the center value to get the riu2
//! code (`0..=P` for uniform patterns, `P + 1` otherwise), and the pixel adds
//! the population variance of its neighbors to that code's bin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{GrayImage, RoiMask};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbpParams {
    pub p_neighbors: usize,
    pub radius: f64,
}

impl Default for LbpParams {
    fn default() -> Self {
        Self {
            p_neighbors: 16,
            radius: 2.0,
        }
    }
}

impl LbpParams {
    pub fn validate(&self) -> Result<()> {
        if self.p_neighbors < 4 {
            return Err(Error::InvalidParameter(format!(
                "P must be >= 4, got {}",
                self.p_neighbors
            )));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "R must be > 0, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Histogram length: codes `0..=P` plus the non-uniform bin.
    pub fn bins(&self) -> usize {
        self.p_neighbors + 2
    }

    /// Pixels a center must keep from every border.
    fn margin(&self) -> usize {
        self.radius.ceil() as usize
    }

    /// Neighbor offsets `(d_row, d_col)`; neighbor `p` sits at angle
    /// `2πp/P`, counter-clockwise from the +column axis. Offsets within 1e-9
    /// of an integer are snapped so axial samples read pixels directly.
    pub fn offsets(&self) -> Vec<(f64, f64)> {
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() < 1e-9 {
                r
            } else {
                v
            }
        };
        (0..self.p_neighbors)
            .map(|p| {
                let angle = 2.0 * PI * p as f64 / self.p_neighbors as f64;
                (
                    snap(-self.radius * angle.sin()),
                    snap(self.radius * angle.cos()),
                )
            })
            .collect()
    }
}

/// Bilinear sample of `img - base` at a fractional position inside the
/// image. Interpolating differences from the center pixel keeps the samples
/// bit-identical when a constant is added to an integer-valued image.
#[inline]
fn bilinear_delta(img: &GrayImage, base: f64, row: f64, col: f64) -> f64 {
    let r0 = row.floor();
    let c0 = col.floor();
    let fr = row - r0;
    let fc = col - c0;
    let (r0, c0) = (r0 as usize, c0 as usize);
    let at = |r: usize, c: usize| img.get(r, c) - base;
    let top = if fc == 0.0 {
        at(r0, c0)
    } else {
        (1.0 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)
    };
    if fr == 0.0 {
        return top;
    }
    let bottom = if fc == 0.0 {
        at(r0 + 1, c0)
    } else {
        (1.0 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1)
    };
    (1.0 - fr) * top + fr * bottom
}

fn circle_inside(img: &GrayImage, row: usize, col: usize, params: &LbpParams) -> bool {
    let m = params.margin();
    row >= m && col >= m && row + m < img.height() && col + m < img.width()
}

/// Neighbor values minus the center value.
fn sample_deltas(img: &GrayImage, row: usize, col: usize, offsets: &[(f64, f64)], out: &mut [f64]) {
    let center = img.get(row, col);
    for (slot, (dr, dc)) in out.iter_mut().zip(offsets) {
        *slot = bilinear_delta(img, center, row as f64 + dr, col as f64 + dc);
    }
}

/// Gray values of the `P` circular neighbors of `(row, col)`.
pub fn sample_neighbors(
    img: &GrayImage,
    row: usize,
    col: usize,
    params: &LbpParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    if !circle_inside(img, row, col, params) {
        return Err(Error::InvalidParameter(format!(
            "sampling circle of radius {} around ({row}, {col}) exits the {}x{} image",
            params.radius,
            img.width(),
            img.height()
        )));
    }
    let mut out = vec![0.0; params.p_neighbors];
    sample_deltas(img, row, col, &params.offsets(), &mut out);
    let center = img.get(row, col);
    out.iter_mut().for_each(|d| *d += center);
    Ok(out)
}

/// Rotation-invariant uniform code: number of neighbors `>= center` when the
/// circular pattern has at most two 0/1 transitions, `P + 1` otherwise.
pub fn lbp_riu2(center: f64, neighbors: &[f64]) -> usize {
    let p = neighbors.len();
    let bit = |v: f64| v - center >= 0.0;
    let mut ones = 0;
    let mut transitions = 0;
    let mut prev = bit(neighbors[p - 1]);
    for &g in neighbors {
        let b = bit(g);
        ones += b as usize;
        transitions += (b != prev) as usize;
        prev = b;
    }
    if transitions <= 2 {
        ones
    } else {
        p + 1
    }
}

/// Population variance of the neighbor samples.
pub fn var_pr(neighbors: &[f64]) -> f64 {
    let n = neighbors.len() as f64;
    let mean = neighbors.iter().sum::<f64>() / n;
    neighbors
        .iter()
        .map(|g| (g - mean) * (g - mean))
        .sum::<f64>()
        / n
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbpvHistogram {
    pub bins: Vec<f64>,
}

impl LbpvHistogram {
    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }
}

/// Accumulates VAR into riu2 code bins over ROI pixels whose circle fits in
/// the image. Pixels closer than `ceil(R)` to a border are skipped.
pub fn lbpv_histogram(
    img: &GrayImage,
    mask: &RoiMask,
    params: &LbpParams,
) -> Result<LbpvHistogram> {
    params.validate()?;
    check_dims(img, mask)?;
    let offsets = params.offsets();
    let m = params.margin();
    let mut bins = vec![0.0; params.bins()];
    let mut neighbors = vec![0.0; params.p_neighbors];
    let mut valid = 0usize;

    for row in m..img.height().saturating_sub(m) {
        for col in m..img.width().saturating_sub(m) {
            if !mask.contains(row, col) {
                continue;
            }
            sample_deltas(img, row, col, &offsets, &mut neighbors);
            bins[lbp_riu2(0.0, &neighbors)] += var_pr(&neighbors);
            valid += 1;
        }
    }
    if valid == 0 {
        return Err(Error::NoValidRoiPixel);
    }
    Ok(LbpvHistogram { bins })
}

fn check_dims(img: &GrayImage, mask: &RoiMask) -> Result<()> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{}, mask {}x{}",
            img.width(),
            img.height(),
            mask.width(),
            mask.height()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiStats {
    /// Shannon entropy in bits of the 256-level ROI histogram.
    pub entropy: f64,
    pub mean: f64,
    pub std_dev: f64,
}

pub fn roi_stats(img: &GrayImage, mask: &RoiMask) -> Result<RoiStats> {
    check_dims(img, mask)?;
    let mut hist = [0usize; 256];
    let mut n = 0usize;
    let mut sum = 0.0;
    for (v, inside) in img.pixels().iter().zip(mask.bits()) {
        if *inside {
            hist[v.round().clamp(0.0, 255.0) as usize] += 1;
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("ROI mask"));
    }
    let count = n as f64;
    let mean = sum / count;
    let var = img
        .pixels()
        .iter()
        .zip(mask.bits())
        .filter(|(_, inside)| **inside)
        .map(|(v, _)| (v - mean) * (v - mean))
        .sum::<f64>()
        / count;
    let entropy = hist
        .iter()
        .filter(|c| **c > 0)
        .map(|&c| {
            let p = c as f64 / count;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(RoiStats {
        entropy,
        mean,
        std_dev: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random_range(0.0..255.0)).unwrap()
    }

    #[test]
    fn constant_image_neighbors() {
        let img = GrayImage::filled(9, 9, 37.0).unwrap();
        let n = sample_neighbors(&img, 4, 4, &LbpParams::default()).unwrap();
        assert_eq!(n, vec![37.0; 16]);
    }

    #[test]
    fn axial_neighbors_are_exact_pixels() {
        let img = GrayImage::from_fn(5, 5, |r, c| (10 * r + c) as f64).unwrap();
        let params = LbpParams {
            p_neighbors: 4,
            radius: 1.0,
        };
        let n = sample_neighbors(&img, 2, 2, &params).unwrap();
        // east, north, west, south
        assert_eq!(n, vec![23.0, 12.0, 21.0, 32.0]);
    }

    #[test]
    fn diagonal_neighbor_on_a_ramp() {
        let img = GrayImage::from_fn(9, 9, |r, c| (r + c) as f64).unwrap();
        let params = LbpParams {
            p_neighbors: 8,
            radius: 1.0,
        };
        let n = sample_neighbors(&img, 4, 4, &params).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // direct bilinear weights around (3.29, 4.71): rows 3..4, cols 4..5
        let (fr, fc) = (1.0 - s, s);
        let at = |r: f64, c: f64| r + c;
        let oracle = (1.0 - fr) * (1.0 - fc) * at(3.0, 4.0)
            + (1.0 - fr) * fc * at(3.0, 5.0)
            + fr * (1.0 - fc) * at(4.0, 4.0)
            + fr * fc * at(4.0, 5.0);
        assert!((n[1] - oracle).abs() < 1e-9);
        // the ramp rises along +row, so the north-east neighbor is level
        assert!((n[1] - 8.0).abs() < 1e-9);
        // south-east neighbor: x_c + y_c + R(cos45 + sin45)
        assert!((n[7] - (8.0 + 2.0f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn circle_outside_image_is_an_error() {
        let img = GrayImage::filled(9, 9, 1.0).unwrap();
        assert!(sample_neighbors(&img, 1, 4, &LbpParams::default()).is_err());
        assert!(sample_neighbors(&img, 4, 7, &LbpParams::default()).is_err());
        assert!(sample_neighbors(&img, 2, 6, &LbpParams::default()).is_ok());
    }

    #[test]
    fn riu2_codes() {
        assert_eq!(lbp_riu2(5.0, &[5.0; 8]), 8);
        assert_eq!(lbp_riu2(5.0, &[6.0, 7.0, 5.0, 9.0, 5.0, 5.0, 8.0, 6.0]), 8);
        assert_eq!(lbp_riu2(5.0, &[1.0; 8]), 0);
        assert_eq!(lbp_riu2(5.0, &[6.0, 1.0, 6.0, 1.0, 6.0, 1.0, 6.0, 1.0]), 9);
        assert_eq!(lbp_riu2(5.0, &[6.0, 6.0, 6.0, 1.0, 1.0, 1.0, 1.0, 1.0]), 3);
        assert_eq!(lbp_riu2(5.0, &[6.0, 6.0, 1.0, 1.0, 1.0, 1.0, 1.0, 6.0]), 3);
        assert_eq!(lbp_riu2(5.0, &[1.0, 6.0, 6.0, 1.0, 1.0, 1.0, 1.0, 6.0]), 9);
    }

    #[test]
    fn variance_of_neighbors() {
        assert_eq!(var_pr(&[3.0; 8]), 0.0);
        assert!((var_pr(&[1.0, 2.0, 3.0, 4.0]) - 1.25).abs() < 1e-15);
        assert!((var_pr(&[101.0, 102.0, 103.0, 104.0]) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn constant_image_histogram_is_zero() {
        let img = GrayImage::filled(12, 12, 80.0).unwrap();
        let h = lbpv_histogram(&img, &RoiMask::full(12, 12), &LbpParams::default()).unwrap();
        assert_eq!(h.bins, vec![0.0; 18]);
    }

    #[test]
    fn single_valid_pixel_fills_one_bin() {
        let img = random_image(9, 9, 11);
        let mask = RoiMask::from_fn(9, 9, |r, c| (r, c) == (4, 4) || r == 0).unwrap();
        let params = LbpParams::default();
        let h = lbpv_histogram(&img, &mask, &params).unwrap();
        let n = sample_neighbors(&img, 4, 4, &params).unwrap();
        let code = lbp_riu2(img.get(4, 4), &n);
        for (k, b) in h.bins.iter().enumerate() {
            if k == code {
                assert!((*b - var_pr(&n)).abs() < 1e-9);
            } else {
                assert_eq!(*b, 0.0);
            }
        }
    }

    #[test]
    fn mask_without_interior_pixels_fails() {
        let img = random_image(9, 9, 12);
        let mask = RoiMask::from_fn(9, 9, |r, _| r == 0).unwrap();
        assert!(matches!(
            lbpv_histogram(&img, &mask, &LbpParams::default()),
            Err(Error::NoValidRoiPixel)
        ));
    }

    #[test]
    fn histogram_mass_matches_brute_force() {
        let img = random_image(32, 32, 13);
        let params = LbpParams::default();
        let h = lbpv_histogram(&img, &RoiMask::full(32, 32), &params).unwrap();
        let mut oracle = vec![0.0; 18];
        for r in 0..32 {
            for c in 0..32 {
                if let Ok(n) = sample_neighbors(&img, r, c, &params) {
                    oracle[lbp_riu2(img.get(r, c), &n)] += var_pr(&n);
                }
            }
        }
        let total: f64 = oracle.iter().sum();
        assert!((h.total() - total).abs() <= 1e-9 * total);
        for (a, b) in h.bins.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-9 * total);
        }
    }

    #[test]
    fn stats_of_constant_roi() {
        let img = GrayImage::filled(8, 8, 42.0).unwrap();
        let s = roi_stats(&img, &RoiMask::full(8, 8)).unwrap();
        assert_eq!(
            s,
            RoiStats {
                entropy: 0.0,
                mean: 42.0,
                std_dev: 0.0
            }
        );
    }

    #[test]
    fn stats_of_two_point_roi() {
        let img =
            GrayImage::from_fn(8, 8, |r, c| if (r, c) == (0, 0) { 255.0 } else { 0.0 }).unwrap();
        let mask = RoiMask::from_fn(8, 8, |r, c| r == 0 && c < 2).unwrap();
        let s = roi_stats(&img, &mask).unwrap();
        assert_eq!(s.entropy, 1.0);
        assert_eq!(s.mean, 127.5);
        assert_eq!(s.std_dev, 127.5);
    }

    #[test]
    fn uniform_roi_has_near_eight_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let img = GrayImage::from_fn(100, 100, |_, _| rng.random_range(0..256) as f64).unwrap();
        let s = roi_stats(&img, &RoiMask::full(100, 100)).unwrap();
        // plug-in entropy of 1e4 draws over 256 cells, computed independently
        let mut counts = std::collections::HashMap::new();
        for v in img.pixels() {
            *counts.entry(*v as u32).or_insert(0u32) += 1;
        }
        let oracle: f64 = counts
            .values()
            .map(|&c| {
                let p = f64::from(c) / 1e4;
                -p * p.log2()
            })
            .sum();
        assert!((s.entropy - oracle).abs() < 1e-12);
        assert!((s.entropy - 8.0).abs() < 0.1, "{}", s.entropy);
    }

    #[test]
    fn histogram_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let img = GrayImage::from_fn(20, 20, |_, _| rng.random_range(0..150) as f64).unwrap();
        let shifted = GrayImage::from_fn(20, 20, |r, c| img.get(r, c) + 50.0).unwrap();
        let mask = RoiMask::full(20, 20);
        let params = LbpParams::default();
        assert_eq!(
            lbpv_histogram(&img, &mask, &params).unwrap(),
            lbpv_histogram(&shifted, &mask, &params).unwrap()
        );
    }

    proptest! {
        #[test]
        fn riu2_is_rotation_invariant(
            center in 0.0f64..255.0,
            neighbors in proptest::collection::vec(0.0f64..255.0, 4..24),
            shift in 0usize..24,
        ) {
            let mut rotated = neighbors.clone();
            rotated.rotate_left(shift % neighbors.len());
            prop_assert_eq!(lbp_riu2(center, &neighbors), lbp_riu2(center, &rotated));
        }

        #[test]
        fn riu2_code_range(center in 0.0f64..255.0, neighbors in proptest::collection::vec(0.0f64..255.0, 4..24)) {
            prop_assert!(lbp_riu2(center, &neighbors) <= neighbors.len() + 1);
        }

        #[test]
        fn variance_is_shift_invariant(neighbors in proptest::collection::vec(0.0f64..128.0, 4..24), c in 0.0f64..100.0) {
            let shifted: Vec<f64> = neighbors.iter().map(|v| v + c).collect();
            prop_assert!((var_pr(&neighbors) - var_pr(&shifted)).abs() < 1e-9);
        }
    }
}
