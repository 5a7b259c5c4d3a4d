//! HTTP backend for exemplar-guided manual rating.
//!
//! Each registered rater walks a fixed, rater-specific ordering of the image
//! set. Ratings go to an append-only JSON-lines log; a rating is acknowledged
//! only after its line has been synced to disk, and the log is replayed on
//! startup.
//!
//! Routes:
//!
//! | method | path                           | response                                  |
//! |--------|--------------------------------|-------------------------------------------|
//! | GET    | `/api/next?rater=&variant=`    | `{image_id, url, position, total}` or `{done: true, total}` |
//! | GET    | `/api/images/{id}?corrected=`  | PNG                                       |
//! | GET    | `/api/exemplars`               | `[{label, name, url, source}]` (six)      |
//! | GET    | `/api/exemplars/{ordinal}/image` | PNG                                     |
//! | POST   | `/api/ratings`                 | stored `RatingRecord`, 201                |
//! | GET    | `/api/export?variant=`         | JSON lines, verbatim from the log         |
//! | GET    | `/*`                           | static UI bundle                          |

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correction::{correct_image, segment_background_fallback, DEFAULT_FLOOD_TOLERANCE};
use crate::error::{Error, Result};
use crate::io::{self, ManifestRow};
use crate::ratings::{validate_fst, RatingRecord, ToolVariant};
use crate::skin::SkinTypeLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub label: SkinTypeLabel,
    pub path: PathBuf,
    pub source: String,
}

/// Exactly one reference image per skin type, ordered I..VI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarSet {
    exemplars: Vec<Exemplar>,
}

#[derive(Deserialize)]
struct ExemplarRow {
    label_ordinal: u8,
    path: PathBuf,
    #[serde(default)]
    source: String,
}

impl ExemplarSet {
    pub fn new(mut exemplars: Vec<Exemplar>) -> Result<Self> {
        exemplars.sort_by_key(|e| e.label);
        let labels: Vec<_> = exemplars.iter().map(|e| e.label).collect();
        if labels != SkinTypeLabel::ALL {
            return Err(Error::InvalidExemplars(format!(
                "need exactly one exemplar per skin type I-VI, got {:?}",
                labels.iter().map(|l| l.ordinal()).collect::<Vec<_>>()
            )));
        }
        Ok(Self { exemplars })
    }

    /// CSV with columns `label_ordinal,path,source`; relative paths resolve
    /// against the CSV's directory.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::InvalidExemplars(format!("{}: {e}", path.display())))?;
        let mut out = Vec::new();
        for row in rdr.deserialize::<ExemplarRow>() {
            let row = row?;
            let label = SkinTypeLabel::from_ordinal(row.label_ordinal)
                .ok_or_else(|| Error::InvalidExemplars(format!("label {} outside 1-6", row.label_ordinal)))?;
            out.push(Exemplar {
                label,
                path: base.join(row.path),
                source: row.source,
            });
        }
        Self::new(out)
    }

    pub fn get(&self, label: SkinTypeLabel) -> &Exemplar {
        &self.exemplars[label as usize - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Exemplar> {
        self.exemplars.iter()
    }
}

/// Append-only rating log. Lines are kept verbatim for export.
#[derive(Debug)]
pub struct RatingLog {
    path: PathBuf,
    file: File,
    entries: Vec<(RatingRecord, String)>,
}

impl RatingLog {
    /// Opens (or creates) the log and replays it. A final line without a
    /// trailing newline is an unacknowledged torn write: if it does not parse
    /// it is cut off, otherwise it is terminated. Any other malformed line is
    /// an error.
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(|e| Error::io(path, e))?;
        let complete = text.is_empty() || text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        let mut entries = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<RatingRecord>(line)
                .map_err(|e| e.to_string())
                .and_then(|r| r.validate().map(|_| r).map_err(|e| e.to_string()));
            match parsed {
                Ok(r) => entries.push((r, line.to_string())),
                Err(_) if i + 1 == lines.len() && !complete => {
                    log::warn!("{}: skipping torn final line", path.display());
                }
                Err(message) => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message,
                    })
                }
            }
        }
        if !complete {
            let torn_tail_kept = entries.last().is_some_and(|(_, l)| text.ends_with(l.as_str()));
            if torn_tail_kept {
                file.seek(SeekFrom::End(0)).map_err(|e| Error::io(path, e))?;
                file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            } else {
                let keep = text.rfind('\n').map_or(0, |i| i + 1);
                file.set_len(keep as u64).map_err(|e| Error::io(path, e))?;
            }
            file.sync_data().map_err(|e| Error::io(path, e))?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            file,
            entries,
        })
    }

    /// Writes and syncs one line; the record is visible only afterwards.
    pub fn append(&mut self, record: RatingRecord) -> Result<()> {
        let line = serde_json::to_string(&record)?;
        let mut buf = line.clone().into_bytes();
        buf.push(b'\n');
        self.file.write_all(&buf).map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))?;
        self.entries.push((record, line));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &RatingRecord> {
        self.entries.iter().map(|(r, _)| r)
    }

    /// Log lines for `variant` (all variants when `None`), newline-terminated.
    pub fn export(&self, variant: Option<ToolVariant>) -> String {
        let mut out = String::new();
        for (r, line) in &self.entries {
            if variant.is_none_or(|v| v == r.tool_variant) {
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub images: Vec<ManifestRow>,
    pub exemplars: ExemplarSet,
    pub raters: Vec<String>,
    pub log_path: PathBuf,
    /// Directory with the built UI bundle, served at `/`.
    pub ui_dir: Option<PathBuf>,
    pub tolerance: u8,
}

impl ServiceConfig {
    pub fn new(images: Vec<ManifestRow>, exemplars: ExemplarSet, raters: Vec<String>, log_path: PathBuf) -> Self {
        Self {
            images,
            exemplars,
            raters,
            log_path,
            ui_dir: None,
            tolerance: DEFAULT_FLOOD_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextImage {
    Image {
        image_id: String,
        url: String,
        /// Images already rated by this rater under this variant.
        position: usize,
        total: usize,
    },
    Done {
        done: bool,
        total: usize,
    },
}

/// Body of `POST /api/ratings`. The server stamps the time when it is absent.
#[derive(Debug, Clone, Deserialize)]
pub struct RatingSubmission {
    pub image_id: String,
    pub rater_id: String,
    pub fst: i64,
    pub tool_variant: ToolVariant,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarDescriptor {
    pub label: u8,
    pub name: String,
    pub url: String,
    pub source: String,
}

pub struct RatingService {
    images: BTreeMap<String, ManifestRow>,
    exemplars: ExemplarSet,
    raters: BTreeSet<String>,
    ui_dir: Option<PathBuf>,
    tolerance: u8,
    log: Mutex<RatingLog>,
}

/// Image ids in a fixed order derived from the rater id alone.
pub fn rater_queue(rater_id: &str, image_ids: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut ids: Vec<String> = image_ids.into_iter().collect();
    ids.sort();
    ids.dedup();
    let digest = Sha256::digest(rater_id.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ids.shuffle(&mut ChaCha8Rng::from_seed(seed));
    ids
}

impl RatingService {
    pub fn new(config: ServiceConfig) -> Result<Self> {
        let mut images = BTreeMap::new();
        for row in config.images {
            if images.contains_key(&row.image_id) {
                return Err(Error::Parse {
                    path: PathBuf::from("<images>"),
                    line: 0,
                    message: format!("duplicate image_id {:?}", row.image_id),
                });
            }
            images.insert(row.image_id.clone(), row);
        }
        Ok(Self {
            images,
            exemplars: config.exemplars,
            raters: config.raters.into_iter().collect(),
            ui_dir: config.ui_dir,
            tolerance: config.tolerance,
            log: Mutex::new(RatingLog::open(&config.log_path)?),
        })
    }

    fn log(&self) -> std::sync::MutexGuard<'_, RatingLog> {
        self.log.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn check_rater(&self, rater_id: &str) -> Result<()> {
        if self.raters.contains(rater_id) {
            Ok(())
        } else {
            Err(Error::UnknownRater(rater_id.to_owned()))
        }
    }

    pub fn queue(&self, rater_id: &str) -> Result<Vec<String>> {
        self.check_rater(rater_id)?;
        Ok(rater_queue(rater_id, self.images.keys().cloned()))
    }

    pub fn next_image(&self, rater_id: &str, variant: ToolVariant) -> Result<NextImage> {
        let queue = self.queue(rater_id)?;
        let rated: BTreeSet<String> = self
            .log()
            .records()
            .filter(|r| r.rater_id == rater_id && r.tool_variant == variant)
            .map(|r| r.image_id.clone())
            .collect();
        let total = queue.len();
        let position = queue.iter().filter(|id| rated.contains(*id)).count();
        Ok(match queue.into_iter().find(|id| !rated.contains(id)) {
            Some(image_id) => NextImage::Image {
                url: image_url(&image_id, variant),
                image_id,
                position,
                total,
            },
            None => NextImage::Done { done: true, total },
        })
    }

    /// Validates and durably appends a rating. Resubmissions append a new
    /// record that supersedes earlier ones.
    pub fn submit_rating(&self, s: RatingSubmission) -> Result<RatingRecord> {
        let fst = validate_fst(s.fst)?;
        self.check_rater(&s.rater_id)?;
        if !self.images.contains_key(&s.image_id) {
            return Err(Error::UnknownImage(s.image_id));
        }
        let record = RatingRecord {
            image_id: s.image_id,
            rater_id: s.rater_id,
            fst,
            tool_variant: s.tool_variant,
            timestamp: s.timestamp.unwrap_or_else(Utc::now),
        };
        self.log().append(record.clone())?;
        Ok(record)
    }

    pub fn export_ratings(&self, variant: Option<ToolVariant>) -> String {
        self.log().export(variant)
    }

    pub fn log_len(&self) -> usize {
        self.log().len()
    }

    /// The image as PNG, optionally gray-reference corrected.
    pub fn image_png(&self, image_id: &str, corrected: bool) -> Result<Vec<u8>> {
        let row = self
            .images
            .get(image_id)
            .ok_or_else(|| Error::UnknownImage(image_id.to_owned()))?;
        let img = io::load_rgb(&row.face_path)?;
        if !corrected {
            return io::encode_png(&img);
        }
        let bg = match &row.bg_mask_path {
            Some(p) => io::load_mask_for(p, &img)?,
            None => segment_background_fallback(&img, self.tolerance)?,
        };
        io::encode_png(&correct_image(&img, &bg)?.image)
    }

    pub fn exemplar_descriptors(&self) -> Vec<ExemplarDescriptor> {
        self.exemplars
            .iter()
            .map(|e| ExemplarDescriptor {
                label: e.label.ordinal(),
                name: e.label.name().to_owned(),
                url: format!("/api/exemplars/{}/image", e.label.ordinal()),
                source: e.source.clone(),
            })
            .collect()
    }

    pub fn exemplar_png(&self, ordinal: u8) -> Result<Vec<u8>> {
        let label =
            SkinTypeLabel::from_ordinal(ordinal).ok_or_else(|| Error::UnknownImage(format!("exemplar {ordinal}")))?;
        io::encode_png(&io::load_rgb(&self.exemplars.get(label).path)?)
    }
}

fn image_url(image_id: &str, variant: ToolVariant) -> String {
    let id: String = image_id
        .bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect();
    let corrected = variant == ToolVariant::ExemplarCorrected;
    format!("/api/images/{id}?corrected={corrected}")
}

/// Error body: `{"error": message, "code": kind}`.
pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::UnknownRater(_) | Error::UnknownImage(_) => StatusCode::NOT_FOUND,
            Error::InvalidRating(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        let body = serde_json::json!({ "error": self.0.to_string(), "code": self.0.code() });
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<RatingService>;

#[derive(Deserialize)]
struct NextQuery {
    rater: String,
    variant: ToolVariant,
}

#[derive(Deserialize)]
struct ImageQuery {
    #[serde(default)]
    corrected: bool,
}

#[derive(Deserialize)]
struct ExportQuery {
    variant: Option<ToolVariant>,
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn next_handler(
    State(s): State<Shared>,
    Query(q): Query<NextQuery>,
) -> std::result::Result<Json<NextImage>, ApiError> {
    Ok(Json(s.next_image(&q.rater, q.variant)?))
}

async fn image_handler(
    State(s): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ImageQuery>,
) -> std::result::Result<Response, ApiError> {
    let bytes = tokio::task::spawn_blocking(move || s.image_png(&id, q.corrected))
        .await
        .expect("image task panicked")?;
    Ok(png(bytes))
}

async fn exemplars_handler(State(s): State<Shared>) -> Json<Vec<ExemplarDescriptor>> {
    Json(s.exemplar_descriptors())
}

async fn exemplar_image_handler(
    State(s): State<Shared>,
    UrlPath(ordinal): UrlPath<u8>,
) -> std::result::Result<Response, ApiError> {
    let bytes = tokio::task::spawn_blocking(move || s.exemplar_png(ordinal))
        .await
        .expect("exemplar task panicked")?;
    Ok(png(bytes))
}

async fn submit_handler(
    State(s): State<Shared>,
    Json(body): Json<RatingSubmission>,
) -> std::result::Result<(StatusCode, Json<RatingRecord>), ApiError> {
    let record = tokio::task::spawn_blocking(move || s.submit_rating(body))
        .await
        .expect("submit task panicked")?;
    Ok((StatusCode::CREATED, Json(record)))
}

async fn export_handler(State(s): State<Shared>, Query(q): Query<ExportQuery>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        s.export_ratings(q.variant),
    )
        .into_response()
}

async fn no_ui() -> (StatusCode, &'static str) {
    (StatusCode::NOT_FOUND, "rating UI bundle not configured")
}

pub fn router(service: Shared) -> Router {
    let ui_dir = service.ui_dir.clone();
    let api = Router::new()
        .route("/api/next", get(next_handler))
        .route("/api/images/{id}", get(image_handler))
        .route("/api/exemplars", get(exemplars_handler))
        .route("/api/exemplars/{ordinal}/image", get(exemplar_image_handler))
        .route("/api/ratings", post(submit_handler))
        .route("/api/export", get(export_handler))
        .with_state(service);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(no_ui),
    }
}

/// Serves until Ctrl-C.
pub async fn serve(service: RatingService, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("rating service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
