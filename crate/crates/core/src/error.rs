use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("raster dimensions must be at least 1x1 and match the pixel count (got {width}x{height}, {len} pixels)")]
    InvalidDimensions { width: u32, height: u32, len: usize },

    #[error("dimension mismatch: image is {image:?}, mask is {mask:?}")]
    DimensionMismatch { image: (u32, u32), mask: (u32, u32) },

    #[error("mask selects no pixels")]
    EmptyMask,

    #[error("{channel} channel mean is zero; cannot derive a correction factor")]
    ZeroChannelMean { channel: char },

    #[error("fallback background segmentation covers {coverage:.1}% of the image")]
    DegenerateSegmentation { coverage: f64 },

    #[error("image too small for fallback segmentation ({width}x{height}, need at least 8x8)")]
    ImageTooSmall { width: u32, height: u32 },

    #[error("no pixels survive the YCbCr skin filter")]
    NoSkinPixels,

    #[error("invalid Fitzpatrick rating {0} (expected 1-6)")]
    InvalidRating(i64),

    #[error("rating sets share no images")]
    NoOverlap,

    #[error("invalid ITA range table: {0}")]
    InvalidTable(String),

    #[error("invalid mask {path}: {reason}")]
    InvalidMask { path: PathBuf, reason: String },

    #[error("unknown rater {0:?}")]
    UnknownRater(String),

    #[error("unknown image {0:?}")]
    UnknownImage(String),

    #[error("invalid exemplar set: {0}")]
    InvalidExemplars(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind, used as a status column in batch outputs.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDimensions { .. } => "invalid_dimensions",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::EmptyMask => "empty_mask",
            Error::ZeroChannelMean { .. } => "zero_channel_mean",
            Error::DegenerateSegmentation { .. } => "degenerate_segmentation",
            Error::ImageTooSmall { .. } => "image_too_small",
            Error::NoSkinPixels => "no_skin_pixels",
            Error::InvalidRating(_) => "invalid_rating",
            Error::NoOverlap => "no_overlap",
            Error::InvalidTable(_) => "invalid_table",
            Error::InvalidMask { .. } => "invalid_mask",
            Error::UnknownRater(_) => "unknown_rater",
            Error::UnknownImage(_) => "unknown_image",
            Error::InvalidExemplars(_) => "invalid_exemplars",
            Error::Parse { .. } => "parse_error",
            Error::Io { .. } => "io_error",
            Error::Image { .. } => "image_error",
            Error::Csv(_) => "csv_error",
            Error::Json(_) => "json_error",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
