//! # skintone
//!
//! Skin tone measurement from face images and analysis of manual
//! Fitzpatrick skin type ratings.
//!
//! The automated path:
//!
//! 1. [`correction`]: pull the backdrop of each image to 18% gray, RGB
//!    (119, 119, 119), with one multiplicative factor per channel.
//! 2. [`skin`]: keep face-skin pixels whose full-range BT.601 chroma lies in
//!    `136 <= Cr <= 173`, `77 <= Cb <= 127`, average them, convert the mean to
//!    CIELab and compute the individual typology angle
//!    `ITA = atan2(L - 50, b)` in degrees.
//! 3. Map the angle to one of six groups, very light (I) to dark (VI), using
//!    an [`skin::ItaRangeTable`].
//!
//! The manual path ([`ratings`]) fuses three raters per image (majority,
//! else the middle rating), tallies pairwise agreement matrices and compares
//! consensus labels with automated ones. [`service`] is the HTTP backend of
//! the exemplar-guided rating tool that produces those ratings, and
//! [`batch`] wires everything into reproducible file-to-file commands.
//!
//! ```
//! use skintone::colorspace::{rgb_to_lab, ita, Rgb8};
//! use skintone::skin::{classify_ita, ItaRangeTable, SkinTypeLabel};
//!
//! let lab = rgb_to_lab(Rgb8::new(198, 134, 103));
//! let angle = ita(lab);
//! let label = classify_ita(angle, &ItaRangeTable::standard());
//! assert_eq!(label, SkinTypeLabel::Tan);
//! ```

pub mod batch;
pub mod colorspace;
pub mod correction;
pub mod error;
pub mod io;
pub mod raster;
pub mod ratings;
pub mod service;
pub mod skin;

pub use colorspace::{ItaDegrees, Lab, Rgb8, YCbCr};
pub use error::{Error, Result};
pub use raster::{BinaryMask, RgbImage};
pub use ratings::{RatingRecord, ToolVariant};
pub use skin::{ItaRangeTable, SkinToneResult, SkinTypeLabel};
