//! Input encoding and preprocessing: Poisson rate coding of grayscale
//! images into per-step spike grids, luminance thresholding for YUV inputs,
//! and Gabor-bank edge extraction with downsampling for high-resolution
//! color inputs.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Single-channel 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    intensities: Vec<u8>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, intensities: Vec<u8>) -> Result<Self> {
        if intensities.len() != height * width {
            return Err(Error::Format(format!(
                "expected {} pixels for a {}x{} image, got {}",
                height * width,
                height,
                width,
                intensities.len()
            )));
        }
        Ok(GrayImage {
            height,
            width,
            intensities,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        GrayImage {
            height,
            width,
            intensities: vec![0; height * width],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.intensities[row * self.width + col]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.intensities
    }

    pub fn num_pixels(&self) -> usize {
        self.intensities.len()
    }
}

/// Interleaved 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::Format(format!(
                "expected {} bytes for a {}x{} RGB image, got {}",
                height * width * 3,
                height,
                width,
                data.len()
            )));
        }
        Ok(RgbImage {
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn rgb(&self, row: usize, col: usize) -> (u8, u8, u8) {
        let i = (row * self.width + col) * 3;
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }

    pub fn bytes(&self) -> &[u8] {
        &self.data
    }
}

/// Rate-coding and presentation-timing constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Firing rate per intensity unit (Hz); 255 maps to 255 * rate_scale Hz.
    pub rate_scale: f64,
    /// Simulation step (ms).
    pub dt: f64,
    /// Duration each image is presented (ms).
    pub presentation_ms: f64,
    /// Blank relaxation period between images (ms).
    pub rest_ms: f64,
    /// Multiplier applied to the firing probability on silent-image retries.
    pub boost_factor: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            rate_scale: 0.25,
            dt: 0.5,
            presentation_ms: 350.0,
            rest_ms: 150.0,
            boost_factor: 1.5,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rate_scale", self.rate_scale),
            ("dt", self.dt),
            ("presentation_ms", self.presentation_ms),
            ("rest_ms", self.rest_ms),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.boost_factor >= 1.0) {
            return Err(Error::Config(format!(
                "boost_factor must be at least 1, got {}",
                self.boost_factor
            )));
        }
        Ok(())
    }

    /// Per-step firing probability for one pixel intensity.
    pub fn spike_probability(&self, intensity: u8, boost: f64) -> f64 {
        (intensity as f64 * self.rate_scale * boost * self.dt / 1000.0).clamp(0.0, 1.0)
    }
}

/// Draw one time-step of Poisson spikes: flat indices of the pixels that
/// fired, in row-major order. Exactly one RNG draw is consumed per pixel,
/// so spike trains are reproducible pixel-for-pixel under a fixed seed.
pub fn poisson_step_indices<R: Rng + ?Sized>(
    image: &GrayImage,
    cfg: &EncoderConfig,
    boost: f64,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if !boost.is_finite() || !cfg.rate_scale.is_finite() || !cfg.dt.is_finite() {
        return Err(Error::NonFinite("poisson spike probability"));
    }
    debug_assert!(boost >= 1.0);
    let mut fired = Vec::new();
    for (i, &intensity) in image.pixels().iter().enumerate() {
        let p = cfg.spike_probability(intensity, boost);
        if rng.gen::<f64>() < p {
            fired.push(i as u32);
        }
    }
    Ok(fired)
}

/// Dense variant of [`poisson_step_indices`]: one boolean per pixel.
pub fn poisson_step<R: Rng + ?Sized>(
    image: &GrayImage,
    cfg: &EncoderConfig,
    boost: f64,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let indices = poisson_step_indices(image, cfg, boost, rng)?;
    let mut grid = vec![false; image.num_pixels()];
    for i in indices {
        grid[i as usize] = true;
    }
    Ok(grid)
}

/// Extract the luminance plane of a planar YUV image and blacken every
/// pixel at or below the threshold (strictly-greater pixels are retained).
pub fn yuv_luma_threshold(
    yuv_planar: &[u8],
    height: usize,
    width: usize,
    pixel_threshold: u8,
) -> Result<GrayImage> {
    let plane = height * width;
    if yuv_planar.len() != 3 * plane {
        return Err(Error::Format(format!(
            "expected 3 planes of {plane} bytes ({} total), got {}",
            3 * plane,
            yuv_planar.len()
        )));
    }
    let luma = yuv_planar[..plane]
        .iter()
        .map(|&y| if y > pixel_threshold { y } else { 0 })
        .collect();
    GrayImage::new(height, width, luma)
}

/// Oriented odd-symmetric Gabor filter bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborBank {
    /// Filter orientations in degrees.
    pub orientations_deg: Vec<f64>,
    /// Carrier wavelength (pixels).
    pub wavelength: f64,
    /// Spatial aspect ratio (elongation across the carrier).
    pub aspect: f64,
    /// Gaussian envelope sigma along the carrier (pixels).
    pub sigma: f64,
    /// Half-extent of the sampled kernel (kernel is (2r+1)^2).
    pub radius: usize,
}

impl Default for GaborBank {
    fn default() -> Self {
        GaborBank {
            orientations_deg: vec![0.0, 45.0, 90.0, 135.0],
            wavelength: 5.0,
            aspect: 0.5,
            sigma: 2.8,
            radius: 7,
        }
    }
}

impl GaborBank {
    /// Sample one oriented kernel. Odd symmetry (sine carrier) makes every
    /// kernel exactly zero-mean, so constant inputs produce zero response.
    fn kernel(&self, theta_deg: f64) -> Vec<f64> {
        let theta = theta_deg.to_radians();
        let (sin_t, cos_t) = theta.sin_cos();
        let size = 2 * self.radius + 1;
        let mut k = Vec::with_capacity(size * size);
        for dy in -(self.radius as isize)..=(self.radius as isize) {
            for dx in -(self.radius as isize)..=(self.radius as isize) {
                let (x, y) = (dx as f64, dy as f64);
                let xr = x * cos_t + y * sin_t;
                let yr = -x * sin_t + y * cos_t;
                let envelope =
                    (-(xr * xr + self.aspect * self.aspect * yr * yr) / (2.0 * self.sigma * self.sigma)).exp();
                let carrier = (2.0 * std::f64::consts::PI * xr / self.wavelength).sin();
                k.push(envelope * carrier);
            }
        }
        k
    }
}

fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Convolve with clamped (edge-replicated) borders; returns |response|.
fn convolve_abs(gray: &[f64], h: usize, w: usize, kernel: &[f64], radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let mut out = vec![0.0; h * w];
    for row in 0..h as isize {
        for col in 0..w as isize {
            let mut acc = 0.0;
            let mut ki = 0;
            for dy in -r..=r {
                let sr = (row + dy).clamp(0, h as isize - 1) as usize;
                for dx in -r..=r {
                    let sc = (col + dx).clamp(0, w as isize - 1) as usize;
                    acc += gray[sr * w + sc] * kernel[ki];
                    ki += 1;
                }
            }
            out[(row as usize) * w + col as usize] = acc.abs();
        }
    }
    out
}

/// Bilinear resample (align-corners) of an f64 grid.
fn bilinear_resize(src: &[f64], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_h * out_w];
    let scale_r = if out_h > 1 {
        (h - 1) as f64 / (out_h - 1) as f64
    } else {
        0.0
    };
    let scale_c = if out_w > 1 {
        (w - 1) as f64 / (out_w - 1) as f64
    } else {
        0.0
    };
    for orow in 0..out_h {
        let sr = orow as f64 * scale_r;
        let r0 = sr.floor() as usize;
        let r1 = (r0 + 1).min(h - 1);
        let fr = sr - r0 as f64;
        for ocol in 0..out_w {
            let sc = ocol as f64 * scale_c;
            let c0 = sc.floor() as usize;
            let c1 = (c0 + 1).min(w - 1);
            let fc = sc - c0 as f64;
            let top = src[r0 * w + c0] * (1.0 - fc) + src[r0 * w + c1] * fc;
            let bot = src[r1 * w + c0] * (1.0 - fc) + src[r1 * w + c1] * fc;
            out[orow * out_w + ocol] = top * (1.0 - fr) + bot * fr;
        }
    }
    out
}

/// Reduce a color image to a single-channel edge-feature map: grayscale
/// conversion, convolution with each oriented Gabor filter, per-pixel
/// maximum across orientations, bilinear resize, and normalization to
/// [0, 255]. A featureless (constant) input yields a valid all-zero image.
pub fn gabor_downsample(
    rgb: &RgbImage,
    bank: &GaborBank,
    out_h: usize,
    out_w: usize,
) -> Result<GrayImage> {
    if out_h > rgb.height || out_w > rgb.width {
        return Err(Error::Domain(format!(
            "output {}x{} exceeds input {}x{}",
            out_h, out_w, rgb.height, rgb.width
        )));
    }
    let (h, w) = (rgb.height, rgb.width);
    let mut gray = vec![0.0; h * w];
    for row in 0..h {
        for col in 0..w {
            let (r, g, b) = rgb.rgb(row, col);
            gray[row * w + col] = luma(r, g, b);
        }
    }

    let mut pooled = vec![0.0; h * w];
    for &theta in &bank.orientations_deg {
        let kernel = bank.kernel(theta);
        let response = convolve_abs(&gray, h, w, &kernel, bank.radius);
        for (p, r) in pooled.iter_mut().zip(&response) {
            *p = f64::max(*p, *r);
        }
    }

    let resized = bilinear_resize(&pooled, h, w, out_h, out_w);
    let max = resized.iter().cloned().fold(0.0f64, f64::max);
    // Responses to real structure are O(intensity); anything at rounding
    // scale is a featureless input.
    let bytes = if max > 1e-6 {
        resized
            .iter()
            .map(|&v| ((v / max) * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    } else {
        vec![0u8; out_h * out_w]
    };
    GrayImage::new(out_h, out_w, bytes)
}

/// Rotate counter-clockwise about the image center with bilinear
/// resampling; pixels mapping outside the source are filled black.
pub fn rotate_about_center(image: &GrayImage, degrees: f64) -> GrayImage {
    let (h, w) = (image.height, image.width);
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let rad = degrees.to_radians();
    let (sin_t, cos_t) = rad.sin_cos();
    // Quarter turns must stay exact; sin/cos of radians(90) carry an
    // epsilon that would shift integer source coordinates off-grid.
    let snap = |x: f64| {
        for v in [-1.0, 0.0, 1.0] {
            if (x - v).abs() < 1e-12 {
                return v;
            }
        }
        x
    };
    let (sin_t, cos_t) = (snap(sin_t), snap(cos_t));
    let mut out = vec![0u8; h * w];
    for row in 0..h {
        for col in 0..w {
            // Inverse mapping: rotate the output coordinate backwards.
            let dy = row as f64 - cy;
            let dx = col as f64 - cx;
            let sr = cy + dy * cos_t - dx * sin_t;
            let sc = cx + dy * sin_t + dx * cos_t;
            if sr < 0.0 || sc < 0.0 || sr > (h - 1) as f64 || sc > (w - 1) as f64 {
                continue;
            }
            let r0 = sr.floor() as usize;
            let c0 = sc.floor() as usize;
            let r1 = (r0 + 1).min(h - 1);
            let c1 = (c0 + 1).min(w - 1);
            let (fr, fc) = (sr - r0 as f64, sc - c0 as f64);
            let top =
                image.get(r0, c0) as f64 * (1.0 - fc) + image.get(r0, c1) as f64 * fc;
            let bot =
                image.get(r1, c0) as f64 * (1.0 - fc) + image.get(r1, c1) as f64 * fc;
            out[row * w + col] = (top * (1.0 - fr) + bot * fr).round().clamp(0.0, 255.0) as u8;
        }
    }
    GrayImage {
        height: h,
        width: w,
        intensities: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_intensity_never_fires() {
        let img = GrayImage::zeros(8, 8);
        let cfg = EncoderConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            assert!(poisson_step_indices(&img, &cfg, 1.0, &mut rng)
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn empirical_rate_within_three_sigma() {
        // One saturated pixel: p = 255 * 0.25 Hz * 0.5 ms = 0.031875/step.
        let img = GrayImage::new(1, 1, vec![255]).unwrap();
        let cfg = EncoderConfig::default();
        let p = cfg.spike_probability(255, 1.0);
        assert!((p - 0.031875).abs() < 1e-15);

        let n = 20_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut count = 0usize;
        for _ in 0..n {
            count += poisson_step_indices(&img, &cfg, 1.0, &mut rng).unwrap().len();
        }
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (count as f64 - mean).abs() <= 3.0 * sigma,
            "count {count}, mean {mean}, sigma {sigma}"
        );
    }

    #[test]
    fn spikes_deterministic_under_fixed_seed() {
        let img = GrayImage::new(4, 4, (0..16).map(|i| (i * 16) as u8).collect()).unwrap();
        let cfg = EncoderConfig::default();
        let a: Vec<_> = (0..50)
            .scan(ChaCha8Rng::seed_from_u64(7), |rng, _| {
                Some(poisson_step(&img, &cfg, 2.0, rng).unwrap())
            })
            .collect();
        let b: Vec<_> = (0..50)
            .scan(ChaCha8Rng::seed_from_u64(7), |rng, _| {
                Some(poisson_step(&img, &cfg, 2.0, rng).unwrap())
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn boost_raises_probability() {
        let cfg = EncoderConfig::default();
        assert!(cfg.spike_probability(100, 3.0) > cfg.spike_probability(100, 1.0));
        // Saturation clamps at 1.
        assert_eq!(cfg.spike_probability(255, 1e9), 1.0);
    }

    #[test]
    fn luma_threshold_rules() {
        let plane = 4usize;
        let all_zero = vec![0u8; 3 * plane];
        let out = yuv_luma_threshold(&all_zero, 2, 2, 120).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 0));

        let mut yuv = vec![0u8; 12];
        yuv[0] = 130; // above threshold: retained
        yuv[1] = 120; // equal: blackened (strictly greater required)
        yuv[2] = 121;
        let out = yuv_luma_threshold(&yuv, 2, 2, 120).unwrap();
        assert_eq!(out.pixels()[0], 130);
        assert_eq!(out.pixels()[1], 0);
        assert_eq!(out.pixels()[2], 121);
    }

    #[test]
    fn luma_threshold_rejects_malformed_input() {
        assert!(yuv_luma_threshold(&[0u8; 11], 2, 2, 120).is_err());
    }

    #[test]
    fn constant_input_gives_zero_gabor_response() {
        let rgb = RgbImage::new(16, 16, vec![137u8; 16 * 16 * 3]).unwrap();
        let out = gabor_downsample(&rgb, &GaborBank::default(), 16, 16).unwrap();
        assert_eq!(out.pixels(), GrayImage::zeros(16, 16).pixels());
    }

    #[test]
    fn vertical_edge_peaks_on_edge_band_under_zero_orientation() {
        // 16x16 toy image: left half black, right half white.
        let mut data = Vec::with_capacity(16 * 16 * 3);
        for _r in 0..16 {
            for c in 0..16 {
                let v = if c >= 8 { 255u8 } else { 0u8 };
                data.extend_from_slice(&[v, v, v]);
            }
        }
        let rgb = RgbImage::new(16, 16, data).unwrap();
        let bank = GaborBank::default();
        let out = gabor_downsample(&rgb, &bank, 16, 16).unwrap();

        // Independent direct-convolution oracle for the 0-degree filter.
        let gray: Vec<f64> = rgb
            .bytes()
            .chunks(3)
            .map(|p| luma(p[0], p[1], p[2]))
            .collect();
        let zero_deg = convolve_abs(&gray, 16, 16, &bank.kernel(0.0), bank.radius);
        let oracle_max = zero_deg
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let oracle_col = oracle_max % 16;
        assert!((6..=9).contains(&oracle_col), "oracle col {oracle_col}");

        // The module's pooled output peaks in the same column band.
        let out_max = out
            .pixels()
            .iter()
            .enumerate()
            .max_by_key(|&(_, &v)| v)
            .unwrap()
            .0;
        let out_col = out_max % 16;
        assert!((6..=9).contains(&out_col), "output col {out_col}");
        assert_eq!(out.pixels()[out_max], 255);

        // 0-degree orientation dominates 90-degree at the peak.
        let ninety = convolve_abs(&gray, 16, 16, &bank.kernel(90.0), bank.radius);
        assert!(zero_deg[oracle_max] > 10.0 * ninety[oracle_max].max(1e-12));
    }

    #[test]
    fn gabor_output_dims_and_range() {
        let mut data = vec![0u8; 40 * 40 * 3];
        for (i, b) in data.iter_mut().enumerate() {
            *b = (i % 251) as u8;
        }
        let rgb = RgbImage::new(40, 40, data).unwrap();
        let out = gabor_downsample(&rgb, &GaborBank::default(), 32, 32).unwrap();
        assert_eq!((out.height, out.width), (32, 32));
        assert!(gabor_downsample(&rgb, &GaborBank::default(), 41, 32).is_err());
    }

    #[test]
    fn rotation_by_quarter_turns_is_exact() {
        let img = GrayImage::new(
            8,
            8,
            (0..64).map(|i| (i * 3 % 256) as u8).collect(),
        )
        .unwrap();
        let r90 = rotate_about_center(&img, 90.0);
        let r180 = rotate_about_center(&r90, 90.0);
        let r270 = rotate_about_center(&r180, 90.0);
        let r360 = rotate_about_center(&r270, 90.0);
        assert_eq!(r360, img);

        // 180 degrees flips both axes.
        let direct180 = rotate_about_center(&img, 180.0);
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(direct180.get(r, c), img.get(7 - r, 7 - c));
            }
        }
        assert_eq!(direct180, r180);
    }
}
