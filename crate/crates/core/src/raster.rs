//! Minimal row-major rasters: 8-bit RGB images and boolean masks.

use crate::colorspace::Rgb8;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, color: Rgb8) -> Result<Self> {
        Self::new(width, height, vec![color; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb8 {
        self.pixels[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, p: Rgb8) {
        let i = self.index(x, y);
        self.pixels[i] = p;
    }

    pub fn map(&self, f: impl Fn(Rgb8) -> Rgb8) -> Self {
        Self {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    fn index(&self, x: u32, y: u32) -> usize {
        assert!(x < self.width && y < self.height, "({x}, {y}) out of bounds");
        y as usize * self.width as usize + x as usize
    }
}

impl From<image::RgbImage> for RgbImage {
    fn from(img: image::RgbImage) -> Self {
        let (width, height) = img.dimensions();
        let pixels = img.pixels().map(|p| Rgb8::from(p.0)).collect();
        Self { width, height, pixels }
    }
}

impl From<&RgbImage> for image::RgbImage {
    fn from(img: &RgbImage) -> Self {
        let raw = img.pixels.iter().flat_map(|p| p.to_array()).collect();
        image::RgbImage::from_raw(img.width, img.height, raw).expect("buffer sized from dimensions")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width as usize * height as usize {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: bits.len(),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    pub fn full(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![true; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let i = y as usize * self.width as usize + x as usize;
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of selected pixels in `[0, 1]`.
    pub fn coverage(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    pub fn invert(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub(crate) fn ensure_matches(&self, img: &RgbImage) -> Result<()> {
        if self.dimensions() != img.dimensions() {
            return Err(Error::DimensionMismatch {
                image: img.dimensions(),
                mask: self.dimensions(),
            });
        }
        Ok(())
    }

    /// Selected pixels of `img`, in row-major order.
    pub(crate) fn select<'a>(&'a self, img: &'a RgbImage) -> impl Iterator<Item = Rgb8> + 'a {
        img.pixels()
            .iter()
            .zip(&self.bits)
            .filter_map(|(&p, &keep)| keep.then_some(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(RgbImage::new(0, 4, vec![]).is_err());
        assert!(RgbImage::new(2, 2, vec![Rgb8::gray(0); 3]).is_err());
        assert!(BinaryMask::new(2, 2, vec![true; 5]).is_err());
    }

    #[test]
    fn row_major_layout() {
        let img = RgbImage::from_fn(3, 2, |x, y| Rgb8::new(x as u8, y as u8, 0)).unwrap();
        assert_eq!(img.pixels()[4], Rgb8::new(1, 1, 0));
        assert_eq!(img.get(2, 1), Rgb8::new(2, 1, 0));
    }

    #[test]
    fn image_crate_round_trip() {
        let img = RgbImage::from_fn(5, 3, |x, y| Rgb8::new(x as u8 * 40, y as u8 * 70, 9)).unwrap();
        let back = RgbImage::from(image::RgbImage::from(&img));
        assert_eq!(back, img);
    }

    #[test]
    fn mask_counts() {
        let m = BinaryMask::from_fn(4, 4, |x, _| x < 1).unwrap();
        assert_eq!(m.count(), 4);
        assert_eq!(m.coverage(), 0.25);
        assert_eq!(m.invert().count(), 12);
    }
}
