//! Color-space conversions used throughout the crate: sRGB transfer
//! functions, full-range BT.601 YCbCr, sRGB/D65 CIELab and the individual
//! typology angle.
//!
//! All functions are pure and work in `f64`; only conversions back to
//! [`Rgb8`] quantize.

use serde::{Deserialize, Serialize};

/// Full-range ("JPEG") BT.601 luma weights.
pub const BT601_KR: f64 = 0.299;
pub const BT601_KG: f64 = 0.587;
pub const BT601_KB: f64 = 0.114;

/// Linear sRGB to CIE XYZ, D65 white, 2° observer.
pub const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// Inverse of [`SRGB_TO_XYZ`].
pub const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

/// D65 reference white: the image of linear (1, 1, 1) under [`SRGB_TO_XYZ`].
pub const D65_WHITE: [f64; 3] = [
    SRGB_TO_XYZ[0][0] + SRGB_TO_XYZ[0][1] + SRGB_TO_XYZ[0][2],
    SRGB_TO_XYZ[1][0] + SRGB_TO_XYZ[1][1] + SRGB_TO_XYZ[1][2],
    SRGB_TO_XYZ[2][0] + SRGB_TO_XYZ[2][1] + SRGB_TO_XYZ[2][2],
];

const LAB_EPSILON: f64 = 216.0 / 24389.0; // (6/29)^3
const LAB_KAPPA: f64 = 24389.0 / 27.0; // (29/3)^3

/// An 8-bit sRGB pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Rgb8 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb8 {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub const fn gray(v: u8) -> Self {
        Self { r: v, g: v, b: v }
    }

    pub fn to_array(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.r as f64, self.g as f64, self.b as f64]
    }

    /// Quantizes a real-valued triple on the 0..=255 scale, rounding half away
    /// from zero and saturating at both ends.
    pub fn from_f64(rgb: [f64; 3]) -> Self {
        let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
        Self::new(q(rgb[0]), q(rgb[1]), q(rgb[2]))
    }
}

impl From<[u8; 3]> for Rgb8 {
    fn from(v: [u8; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Full-range YCbCr, every component on the 0..=255 scale, neutral chroma at 128.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YCbCr {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
}

/// CIELab relative to [`D65_WHITE`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }
}

/// Individual typology angle in degrees, always within `[-90, 90]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ItaDegrees(f64);

impl ItaDegrees {
    pub fn new(value: f64) -> Option<Self> {
        (value.is_finite() && (-90.0..=90.0).contains(&value)).then_some(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ItaDegrees {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v).ok_or_else(|| format!("ITA {v} outside [-90, 90]"))
    }
}

impl From<ItaDegrees> for f64 {
    fn from(v: ItaDegrees) -> f64 {
        v.0
    }
}

impl std::fmt::Display for ItaDegrees {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2}°", self.0)
    }
}

/// sRGB electro-optical transfer function on a `[0, 1]` channel value.
pub fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`srgb_to_linear`].
pub fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn rgb_to_ycbcr(p: Rgb8) -> YCbCr {
    rgb_f64_to_ycbcr(p.to_f64())
}

/// [`rgb_to_ycbcr`] on an unquantized 0..=255 triple; results are clamped to
/// `[0, 255]`.
pub fn rgb_f64_to_ycbcr([r, g, b]: [f64; 3]) -> YCbCr {
    let y = BT601_KR * r + BT601_KG * g + BT601_KB * b;
    let cb = 128.0 + (b - y) / (2.0 * (1.0 - BT601_KB));
    let cr = 128.0 + (r - y) / (2.0 * (1.0 - BT601_KR));
    YCbCr {
        y: y.clamp(0.0, 255.0),
        cb: cb.clamp(0.0, 255.0),
        cr: cr.clamp(0.0, 255.0),
    }
}

pub fn rgb_to_lab(p: Rgb8) -> Lab {
    rgb_f64_to_lab(p.to_f64())
}

/// [`rgb_to_lab`] on an unquantized 0..=255 triple, e.g. a mean pixel.
pub fn rgb_f64_to_lab(rgb: [f64; 3]) -> Lab {
    let lin = rgb.map(|c| srgb_to_linear((c / 255.0).clamp(0.0, 1.0)));
    let xyz = mat_vec(&SRGB_TO_XYZ, lin);
    xyz_to_lab(xyz)
}

fn xyz_to_lab(xyz: [f64; 3]) -> Lab {
    let f = |t: f64| {
        if t > LAB_EPSILON {
            t.cbrt()
        } else {
            (LAB_KAPPA * t + 16.0) / 116.0
        }
    };
    let fx = f(xyz[0] / D65_WHITE[0]);
    let fy = f(xyz[1] / D65_WHITE[1]);
    let fz = f(xyz[2] / D65_WHITE[2]);
    Lab {
        l: (116.0 * fy - 16.0).clamp(0.0, 100.0),
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// CIELab back to unquantized sRGB on the 0..=255 scale (may fall outside the
/// gamut).
pub fn lab_to_rgb_f64(lab: Lab) -> [f64; 3] {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let inv = |f: f64| {
        let f3 = f * f * f;
        if f3 > LAB_EPSILON {
            f3
        } else {
            (116.0 * f - 16.0) / LAB_KAPPA
        }
    };
    let xyz = [inv(fx) * D65_WHITE[0], inv(fy) * D65_WHITE[1], inv(fz) * D65_WHITE[2]];
    let lin = mat_vec(&XYZ_TO_SRGB, xyz);
    lin.map(|c| linear_to_srgb(c.clamp(0.0, 1.0)) * 255.0)
}

/// CIELab to the nearest in-gamut [`Rgb8`].
pub fn lab_to_rgb(lab: Lab) -> Rgb8 {
    Rgb8::from_f64(lab_to_rgb_f64(lab))
}

/// Individual typology angle, `atan2(L - 50, b)` in degrees.
///
/// For `b >= 0` this is exactly `arctan((L - 50) / b)` extended to ±90° at
/// `b = 0` (and 0° at the origin). Points with `b < 0` lie outside the skin
/// model; they are reflected about the ±90° axis so the result stays in
/// `[-90, 90]` and keeps the sign of `L - 50`. Use [`ita_in_model`] to detect
/// them.
pub fn ita(p: Lab) -> ItaDegrees {
    let mut deg = (p.l - 50.0).atan2(p.b).to_degrees();
    if deg > 90.0 {
        deg = 180.0 - deg;
    } else if deg < -90.0 {
        deg = -180.0 - deg;
    }
    ItaDegrees(deg.clamp(-90.0, 90.0))
}

/// Whether `p` lies in the half-plane (`b >= 0`) where the typology angle is
/// defined without reflection.
pub fn ita_in_model(p: Lab) -> bool {
    p.b >= 0.0
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}
