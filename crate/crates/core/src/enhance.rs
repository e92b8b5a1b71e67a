//! Frequency-domain noise removal and nonlinear contrast enhancement.
//!
//! A frame is mirror-padded to twice its size, transformed with a 2-D FFT, multiplied by the
//! Gaussian transfer function `G(u, v) = exp(-D²(u, v) / 2σ²)` where `D` is
//! the distance from the DC term of the centered spectrum, transformed back
//! and cropped. The smoothed image `g` is then multiplied by the gain
//! `T = W · exp(-(g - max g)² / B)`, which leaves the brightest echoes intact
//! and suppresses dim ones.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::{Frame, GrayImage};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceParams {
    /// Spread of the Gaussian transfer function, in frequency-index units.
    pub sigma: f64,
    /// Peak gain `W`.
    pub w_gain: f64,
    /// Width `B` of the gain curve, in squared gray levels.
    pub b_width: f64,
}

impl Default for EnhanceParams {
    fn default() -> Self {
        Self {
            sigma: 15.0,
            w_gain: 1.0,
            b_width: 50.0,
        }
    }
}

impl EnhanceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.w_gain.is_finite() && self.w_gain >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "W must be >= 0, got {}",
                self.w_gain
            )));
        }
        if !(self.b_width.is_finite() && self.b_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "B must be > 0, got {}",
                self.b_width
            )));
        }
        Ok(())
    }
}

/// Row-major complex buffer with its dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

/// In-place 2-D DFT: rows first, then columns. `inverse` includes the
/// `1 / (width·height)` normalization.
pub fn fft_2d(spec: &mut Spectrum, inverse: bool) {
    let (w, h) = (spec.width, spec.height);
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };

    row_fft.process(&mut spec.data);

    let mut column = vec![Complex64::default(); h];
    for col in 0..w {
        for (row, c) in column.iter_mut().enumerate() {
            *c = spec.data[row * w + col];
        }
        col_fft.process(&mut column);
        for (row, c) in column.iter().enumerate() {
            spec.data[row * w + col] = *c;
        }
    }

    if inverse {
        let scale = 1.0 / (w * h) as f64;
        spec.data.iter_mut().for_each(|c| *c *= scale);
    }
}

/// Padded side for a dimension. The image is reflected about its far edge,
/// so the padded buffer is one period of an even extension.
pub fn padded_len(n: usize) -> usize {
    2 * n
}

#[inline]
fn reflect(k: usize, n: usize) -> usize {
    if k < n {
        k
    } else {
        2 * n - 1 - k
    }
}

/// Half-sample symmetric extension of a row-major buffer to `2w × 2h`.
pub fn mirror_pad(pixels: &[f64], width: usize, height: usize) -> Vec<f64> {
    let (pw, ph) = (padded_len(width), padded_len(height));
    let mut out = Vec::with_capacity(pw * ph);
    for row in 0..ph {
        let src = &pixels[reflect(row, height) * width..][..width];
        out.extend((0..pw).map(|col| src[reflect(col, width)]));
    }
    out
}

/// Gaussian transfer value at FFT index `(ku, kv)` of an `nu × nv` spectrum.
/// The index is measured from DC after centering, so index `k` and `n - k`
/// share a distance.
#[inline]
fn transfer(ku: usize, nu: usize, kv: usize, nv: usize, two_sigma_sq: f64) -> f64 {
    let du = ku.min(nu - ku) as f64;
    let dv = kv.min(nv - kv) as f64;
    (-(du * du + dv * dv) / two_sigma_sq).exp()
}

/// Low-pass filters a raw row-major buffer without clamping.
pub fn lowpass_filter(pixels: &[f64], width: usize, height: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be > 0, got {sigma}"
        )));
    }
    if pixels.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{} pixels for {width}x{height}",
            pixels.len()
        )));
    }
    let (pw, ph) = (padded_len(width), padded_len(height));
    let mut spec = Spectrum {
        width: pw,
        height: ph,
        data: mirror_pad(pixels, width, height)
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect(),
    };

    fft_2d(&mut spec, false);
    let two_sigma_sq = 2.0 * sigma * sigma;
    for kv in 0..ph {
        for ku in 0..pw {
            spec.data[kv * pw + ku] *= transfer(ku, pw, kv, ph, two_sigma_sq);
        }
    }
    fft_2d(&mut spec, true);

    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        out.extend(spec.data[row * pw..row * pw + width].iter().map(|c| c.re));
    }
    Ok(out)
}

pub fn gaussian_lowpass(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let out = lowpass_filter(img.pixels(), img.width(), img.height(), sigma)?;
    GrayImage::from_clamped(img.width(), img.height(), out)
}

pub fn nonlinear_enhance(img: &GrayImage, params: &EnhanceParams) -> Result<GrayImage> {
    params.validate()?;
    let g_max = img.max();
    let out = img
        .pixels()
        .iter()
        .map(|&g| {
            let d = g - g_max;
            params.w_gain * (-(d * d) / params.b_width).exp() * g
        })
        .collect();
    GrayImage::from_clamped(img.width(), img.height(), out)
}

/// Smoothing then nonlinear gain; the mask is carried over untouched.
pub fn enhance_frame(frame: &Frame, params: &EnhanceParams) -> Result<Frame> {
    params.validate()?;
    let smoothed = gaussian_lowpass(frame.image(), params.sigma)?;
    frame.with_image(nonlinear_enhance(&smoothed, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RoiMask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.random_range(0.0..255.0)).unwrap()
    }

    #[test]
    fn constant_image_is_a_fixed_point() {
        let img = GrayImage::filled(20, 13, 100.0).unwrap();
        for sigma in [0.5, 15.0, 1e6] {
            let out = gaussian_lowpass(&img, sigma).unwrap();
            for v in out.pixels() {
                assert!((v - 100.0).abs() < 1e-6, "sigma {sigma}: {v}");
            }
        }
    }

    #[test]
    fn huge_sigma_is_identity() {
        let img = random_image(16, 16, 1);
        let out = gaussian_lowpass(&img, 1e6).unwrap();
        for (a, b) in img.pixels().iter().zip(out.pixels()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn non_positive_sigma_is_rejected() {
        let img = random_image(8, 8, 2);
        assert!(gaussian_lowpass(&img, 0.0).is_err());
        assert!(gaussian_lowpass(&img, -1.0).is_err());
    }

    #[test]
    fn gain_is_one_at_the_maximum() {
        let img = GrayImage::new(3, 1, vec![10.0, 200.0, 190.0]).unwrap();
        let out = nonlinear_enhance(&img, &EnhanceParams::default()).unwrap();
        assert_eq!(out.pixels()[1], 200.0);
        let expected = 190.0 * (-100.0f64 / 50.0).exp();
        assert!((out.pixels()[2] - expected).abs() < 1e-12);
        assert!(out.pixels()[0] < 1e-300);
    }

    #[test]
    fn zero_gain_blanks_the_image() {
        let img = random_image(9, 9, 3);
        let params = EnhanceParams {
            w_gain: 0.0,
            ..Default::default()
        };
        let out = nonlinear_enhance(&img, &params).unwrap();
        assert!(out.pixels().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn wide_gain_curve_scales_by_w() {
        let img = random_image(9, 9, 4);
        let params = EnhanceParams {
            w_gain: 0.7,
            b_width: 1e16,
            ..Default::default()
        };
        let out = nonlinear_enhance(&img, &params).unwrap();
        for (a, b) in img.pixels().iter().zip(out.pixels()) {
            assert!((0.7 * a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn non_positive_b_is_rejected() {
        let img = random_image(8, 8, 5);
        let params = EnhanceParams {
            b_width: 0.0,
            ..Default::default()
        };
        assert!(nonlinear_enhance(&img, &params).is_err());
    }

    #[test]
    fn gain_decreases_away_from_the_maximum() {
        let img = GrayImage::from_fn(16, 1, |_, c| 100.0 + 5.0 * c as f64).unwrap();
        let params = EnhanceParams {
            b_width: 1000.0,
            ..Default::default()
        };
        let out = nonlinear_enhance(&img, &params).unwrap();
        let gains: Vec<f64> = img
            .pixels()
            .iter()
            .zip(out.pixels())
            .map(|(g, o)| o / g)
            .collect();
        assert_eq!(gains[15], 1.0);
        assert!(gains.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn frame_identity_limits() {
        let img = random_image(16, 16, 6);
        let frame = Frame::new(img.clone(), RoiMask::full(16, 16)).unwrap();
        let params = EnhanceParams {
            sigma: 1e7,
            w_gain: 1.0,
            b_width: 1e15,
        };
        let out = enhance_frame(&frame, &params).unwrap();
        for (a, b) in img.pixels().iter().zip(out.image().pixels()) {
            assert!((a - b).abs() < 1e-5);
        }
        assert_eq!(out.mask(), frame.mask());
    }

    #[test]
    fn frame_is_the_composition_of_both_stages() {
        let img = random_image(64, 64, 7);
        let frame = Frame::new(img.clone(), RoiMask::full(64, 64)).unwrap();
        let params = EnhanceParams::default();
        let composed =
            nonlinear_enhance(&gaussian_lowpass(&img, params.sigma).unwrap(), &params).unwrap();
        assert_eq!(enhance_frame(&frame, &params).unwrap().image(), &composed);
    }

    #[test]
    fn mirror_padding_layout() {
        let padded = mirror_pad(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 2);
        assert_eq!(padded.len(), 6 * 4);
        assert_eq!(&padded[..6], &[1.0, 2.0, 3.0, 3.0, 2.0, 1.0]);
        assert_eq!(&padded[6..12], &[4.0, 5.0, 6.0, 6.0, 5.0, 4.0]);
        assert_eq!(&padded[12..18], &padded[6..12]);
        assert_eq!(&padded[18..], &padded[..6]);
    }

    #[test]
    fn filtering_never_adds_energy() {
        for seed in 0..5 {
            let img = random_image(24, 17, seed);
            let out = lowpass_filter(img.pixels(), 24, 17, 3.0).unwrap();
            let e_in: f64 = img.pixels().iter().map(|v| v * v).sum();
            let e_out: f64 = out.iter().map(|v| v * v).sum();
            assert!(e_out <= e_in * (1.0 + 1e-12), "{e_out} > {e_in}");
        }
    }
}
