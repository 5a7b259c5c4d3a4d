//! On-disk formats: image manifests, PNG images and masks, rating logs and
//! automated-rating CSVs.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, RgbImage};
use crate::ratings::{validate_fst, AutoRating, RatingRecord};
use crate::skin::{ItaRangeTable, SkinToneResult, SkinTypeLabel};

/// One row of an image manifest. Relative paths are resolved against the
/// manifest's directory when read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub image_id: String,
    pub face_path: PathBuf,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub skin_mask_path: Option<PathBuf>,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub bg_mask_path: Option<PathBuf>,
}

fn empty_as_none<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<PathBuf>, D::Error> {
    let s: Option<String> = Option::deserialize(d)?;
    Ok(s.filter(|s| !s.trim().is_empty()).map(PathBuf::from))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_context(path, e))?;
    let mut rows = Vec::new();
    for (i, row) in rdr.deserialize::<ManifestRow>().enumerate() {
        let mut row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?;
        if row.image_id.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: "empty image_id".into(),
            });
        }
        row.face_path = base.join(&row.face_path);
        row.skin_mask_path = row.skin_mask_path.map(|p| base.join(p));
        row.bg_mask_path = row.bg_mask_path.map(|p| base.join(p));
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_context(path, e))?;
    w.write_record(["image_id", "face_path", "skin_mask_path", "bg_mask_path"])?;
    let s = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.image_id.clone(),
            r.face_path.display().to_string(),
            s(&r.skin_mask_path),
            s(&r.bg_mask_path),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_context(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(RgbImage::from(img.to_rgb8()))
}

pub fn save_png(path: &Path, img: &RgbImage) -> Result<()> {
    image::RgbImage::from(img)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// PNG-encoded bytes of `img`.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    image::RgbImage::from(img)
        .write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: PathBuf::from("<memory>"),
            source,
        })?;
    Ok(buf.into_inner())
}

/// Loads a grayscale mask: 0 is unselected, 255 selected, anything else is
/// rejected. 1-bit PNGs decode to exactly these two levels.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let invalid = |reason: String| Error::InvalidMask {
        path: path.to_path_buf(),
        reason,
    };
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(invalid(format!(
                "expected 8-bit (or 1-bit) grayscale, got {:?}",
                other.color()
            )))
        }
    };
    let (w, h) = gray.dimensions();
    let mut bits = Vec::with_capacity(w as usize * h as usize);
    for (i, p) in gray.pixels().enumerate() {
        match p.0[0] {
            0 => bits.push(false),
            255 => bits.push(true),
            v => {
                return Err(invalid(format!(
                    "pixel ({}, {}) has value {v}; only 0 and 255 are allowed",
                    i as u32 % w,
                    i as u32 / w
                )))
            }
        }
    }
    BinaryMask::new(w, h, bits)
}

/// Loads a mask and checks it against the image it annotates.
pub fn load_mask_for(path: &Path, img: &RgbImage) -> Result<BinaryMask> {
    let mask = load_mask(path)?;
    if mask.dimensions() != img.dimensions() {
        return Err(Error::InvalidMask {
            path: path.to_path_buf(),
            reason: format!(
                "mask is {}x{} but image is {}x{}",
                mask.width(),
                mask.height(),
                img.width(),
                img.height()
            ),
        });
    }
    Ok(mask)
}

pub fn save_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    image::GrayImage::from_raw(mask.width(), mask.height(), raw)
        .expect("buffer sized from dimensions")
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

pub fn load_ita_table(path: &Path) -> Result<ItaRangeTable> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ItaRangeTable::from_json(&s).map_err(|e| match e {
        Error::InvalidTable(m) => Error::InvalidTable(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses a JSON-lines rating log. Blank lines are skipped; every record's
/// rating must be 1-6.
pub fn parse_ratings_jsonl(reader: impl BufRead, path: &Path) -> Result<Vec<RatingRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ctx = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: RatingRecord = serde_json::from_str(&line).map_err(|e| ctx(e.to_string()))?;
        validate_fst(rec.fst as i64).map_err(|e| ctx(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_ratings_jsonl(path: &Path) -> Result<Vec<RatingRecord>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ratings_jsonl(BufReader::new(f), path)
}

pub fn write_ratings_jsonl(mut w: impl Write, records: &[RatingRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}

/// One row of the automated-rating CSV. Failed images carry a non-`ok`
/// status and empty measurement columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoRateRow {
    pub image_id: String,
    pub ita_degrees: String,
    pub label_ordinal: String,
    pub label_name: String,
    pub skin_pixel_count: String,
    pub flags: String,
    pub status: String,
}

pub const STATUS_OK: &str = "ok";

impl AutoRateRow {
    pub fn from_result(r: &SkinToneResult) -> Self {
        Self {
            image_id: r.image_id.clone(),
            ita_degrees: format!("{:.2}", r.ita.value()),
            label_ordinal: r.label.ordinal().to_string(),
            label_name: r.label.name().to_owned(),
            skin_pixel_count: r.skin_pixel_count.to_string(),
            flags: r.flags_string(),
            status: STATUS_OK.to_owned(),
        }
    }

    pub fn failure(image_id: &str, status: &str) -> Self {
        Self {
            image_id: image_id.to_owned(),
            ita_degrees: String::new(),
            label_ordinal: String::new(),
            label_name: String::new(),
            skin_pixel_count: String::new(),
            flags: String::new(),
            status: status.to_owned(),
        }
    }

    pub fn to_auto_rating(&self) -> AutoRating {
        let label = (self.status == STATUS_OK)
            .then(|| self.label_ordinal.parse().ok().and_then(SkinTypeLabel::from_ordinal))
            .flatten();
        AutoRating {
            image_id: self.image_id.clone(),
            label,
        }
    }
}

pub fn write_auto_rate_csv(path: &Path, rows: &[AutoRateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_context(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "image_id",
            "ita_degrees",
            "label_ordinal",
            "label_name",
            "skin_pixel_count",
            "flags",
            "status",
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_auto_rate_csv(path: &Path) -> Result<Vec<AutoRateRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_context(path, e))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}
