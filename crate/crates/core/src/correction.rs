//! Gray-reference color correction.
//!
//! The background of a face image is assumed to be a neutral studio backdrop.
//! Its per-channel mean is pulled to 18% gray, RGB (119, 119, 119), by one
//! multiplicative factor per channel, and the same factors are applied to
//! every pixel of the image.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::colorspace::Rgb8;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RgbImage};

/// 18% gray in 8-bit sRGB.
pub const TARGET_GRAY: f64 = 119.0;

/// Default per-channel tolerance for [`segment_background_fallback`].
pub const DEFAULT_FLOOD_TOLERANCE: u8 = 12;

/// Fallback masks outside this coverage band are rejected.
pub const MIN_BACKGROUND_COVERAGE: f64 = 0.01;
pub const MAX_BACKGROUND_COVERAGE: f64 = 0.95;

/// Unquantized per-channel means on the 0..=255 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeans {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ChannelMeans {
    pub fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

/// Per-channel multipliers, all strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionFactors {
    pub r_const: f64,
    pub g_const: f64,
    pub b_const: f64,
}

impl CorrectionFactors {
    pub const IDENTITY: Self = Self {
        r_const: 1.0,
        g_const: 1.0,
        b_const: 1.0,
    };

    /// Returns `None` unless every factor is strictly positive and finite.
    pub fn new(r_const: f64, g_const: f64, b_const: f64) -> Option<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        (ok(r_const) && ok(g_const) && ok(b_const)).then_some(Self {
            r_const,
            g_const,
            b_const,
        })
    }

    pub fn apply(&self, p: Rgb8) -> Rgb8 {
        // f64::round rounds half away from zero; `as u8` after the clamp is exact.
        let scale = |f: f64, c: u8| (f * c as f64).round().min(255.0) as u8;
        Rgb8::new(
            scale(self.r_const, p.r),
            scale(self.g_const, p.g),
            scale(self.b_const, p.b),
        )
    }
}

/// Arithmetic mean of each channel over the masked pixels.
pub fn background_mean(img: &RgbImage, bg: &BinaryMask) -> Result<ChannelMeans> {
    bg.ensure_matches(img)?;
    let mut sum = [0u64; 3];
    let mut n = 0u64;
    for p in bg.select(img) {
        sum[0] += p.r as u64;
        sum[1] += p.g as u64;
        sum[2] += p.b as u64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let n = n as f64;
    Ok(ChannelMeans::new(
        sum[0] as f64 / n,
        sum[1] as f64 / n,
        sum[2] as f64 / n,
    ))
}

/// `119 / mean` for each channel.
pub fn correction_factors(means: ChannelMeans) -> Result<CorrectionFactors> {
    for (channel, v) in [('R', means.r), ('G', means.g), ('B', means.b)] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::ZeroChannelMean { channel });
        }
    }
    Ok(CorrectionFactors {
        r_const: TARGET_GRAY / means.r,
        g_const: TARGET_GRAY / means.g,
        b_const: TARGET_GRAY / means.b,
    })
}

/// Scales every pixel by `f`, saturating at 255.
pub fn apply_correction(img: &RgbImage, f: &CorrectionFactors) -> RgbImage {
    img.map(|p| f.apply(p))
}

/// Background mask by flood fill from the four image corners.
///
/// Each corner grows a 4-connected region of pixels whose channels all lie
/// within `tolerance` of that corner's color; the mask is the union of the
/// four regions. Masks covering less than 1% or more than 95% of the image are
/// rejected as [`Error::DegenerateSegmentation`].
pub fn segment_background_fallback(img: &RgbImage, tolerance: u8) -> Result<BinaryMask> {
    let (w, h) = img.dimensions();
    if w < 8 || h < 8 {
        return Err(Error::ImageTooSmall { width: w, height: h });
    }
    let mut mask = BinaryMask::empty(w, h)?;
    let mut queue = VecDeque::new();
    for (sx, sy) in [(0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1)] {
        let seed = img.get(sx, sy);
        let near = |p: Rgb8| {
            p.r.abs_diff(seed.r) <= tolerance && p.g.abs_diff(seed.g) <= tolerance && p.b.abs_diff(seed.b) <= tolerance
        };
        // Visited state is per seed, so a region already claimed by another
        // corner does not block this one.
        let mut seen = vec![false; w as usize * h as usize];
        seen[(sy * w + sx) as usize] = true;
        queue.push_back((sx, sy));
        while let Some((x, y)) = queue.pop_front() {
            mask.set(x, y, true);
            let neighbours = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
            for (nx, ny) in neighbours {
                if nx >= w || ny >= h {
                    continue;
                }
                let i = (ny * w + nx) as usize;
                if !seen[i] && near(img.get(nx, ny)) {
                    seen[i] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    let coverage = mask.coverage();
    if !(MIN_BACKGROUND_COVERAGE..=MAX_BACKGROUND_COVERAGE).contains(&coverage) {
        return Err(Error::DegenerateSegmentation {
            coverage: coverage * 100.0,
        });
    }
    Ok(mask)
}

/// Outcome of [`correct_image`].
#[derive(Debug, Clone)]
pub struct Correction {
    pub image: RgbImage,
    pub background_mean: ChannelMeans,
    pub factors: CorrectionFactors,
    pub background_pixels: usize,
}

/// Background mean, factors and full-image rescale in one step.
pub fn correct_image(img: &RgbImage, bg: &BinaryMask) -> Result<Correction> {
    let means = background_mean(img, bg)?;
    let factors = correction_factors(means)?;
    Ok(Correction {
        image: apply_correction(img, &factors),
        background_mean: means,
        factors,
        background_pixels: bg.count(),
    })
}
