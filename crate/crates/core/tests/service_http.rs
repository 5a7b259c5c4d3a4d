mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use common::*;
use skintone::colorspace::Rgb8;
use skintone::io::{self, ManifestRow};
use skintone::ratings::{self, ToolVariant};
use skintone::service::{rater_queue, router, Exemplar, ExemplarSet, RatingService, ServiceConfig};
use skintone::skin::SkinTypeLabel;

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(n_images: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..n_images {
            let img = cast_face_crop(48, skin_l60_b20(), [100.0, 110.0, 130.0]);
            save(dir.path(), &format!("img{i}.png"), &img);
        }
        for o in 1..=6u8 {
            save(
                dir.path(),
                &format!("ex{o}.png"),
                &skintone::RgbImage::filled(8, 8, Rgb8::gray(40 * o)).unwrap(),
            );
        }
        Self { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn config(&self, n_images: usize) -> ServiceConfig {
        let images = (0..n_images)
            .map(|i| ManifestRow {
                image_id: format!("img{i}"),
                face_path: self.path().join(format!("img{i}.png")),
                skin_mask_path: None,
                bg_mask_path: None,
            })
            .collect();
        let exemplars = ExemplarSet::new(
            (1..=6u8)
                .map(|o| Exemplar {
                    label: SkinTypeLabel::from_ordinal(o).unwrap(),
                    path: self.path().join(format!("ex{o}.png")),
                    source: format!("operator set #{o}"),
                })
                .collect(),
        )
        .unwrap();
        ServiceConfig::new(
            images,
            exemplars,
            vec!["alice".into(), "bob".into(), "carol".into()],
            self.path().join("ratings.jsonl"),
        )
    }

    fn service(&self, n_images: usize) -> Arc<RatingService> {
        Arc::new(RatingService::new(self.config(n_images)).unwrap())
    }
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn get(app: &axum::Router, uri: &str) -> (StatusCode, Vec<u8>) {
    call(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn get_json(app: &axum::Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (s, b) = get(app, uri).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn post_rating(app: &axum::Router, body: serde_json::Value) -> (StatusCode, serde_json::Value) {
    let req = Request::post("/api/ratings")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, b) = call(app, req).await;
    (s, serde_json::from_slice(&b).unwrap_or(serde_json::Value::Null))
}

fn rating(image: &str, rater: &str, fst: i64) -> serde_json::Value {
    serde_json::json!({
        "image_id": image,
        "rater_id": rater,
        "fst": fst,
        "tool_variant": "exemplar_corrected",
    })
}

const NEXT_ALICE: &str = "/api/next?rater=alice&variant=exemplar_corrected";

#[tokio::test]
async fn next_image_walks_the_rater_queue() {
    let fx = Fixture::new(3);
    let app = router(fx.service(3));
    let queue = rater_queue("alice", (0..3).map(|i| format!("img{i}")));

    let (s, v) = get_json(&app, NEXT_ALICE).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["image_id"], queue[0].as_str());
    assert_eq!(v["position"], 0);
    assert_eq!(v["total"], 3);
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["image_id", "position", "total", "url"]);

    // Rate something other than the head of the queue.
    let (s, _) = post_rating(&app, rating(&queue[1], "alice", 4)).await;
    assert_eq!(s, StatusCode::CREATED);
    for _ in 0..3 {
        let (_, v) = get_json(&app, NEXT_ALICE).await;
        assert_eq!(v["image_id"], queue[0].as_str());
        assert_eq!(v["position"], 1);
    }
    post_rating(&app, rating(&queue[0], "alice", 4)).await;
    let (_, v) = get_json(&app, NEXT_ALICE).await;
    assert_eq!(v["image_id"], queue[2].as_str());
    post_rating(&app, rating(&queue[2], "alice", 2)).await;
    let (_, v) = get_json(&app, NEXT_ALICE).await;
    assert_eq!(v, serde_json::json!({"done": true, "total": 3}));

    // Other raters and other variants are unaffected.
    let (_, v) = get_json(&app, "/api/next?rater=bob&variant=exemplar_corrected").await;
    assert_eq!(v["position"], 0);
    let (_, v) = get_json(&app, "/api/next?rater=alice&variant=baseline").await;
    assert_eq!(v["position"], 0);
    assert!(v["url"].as_str().unwrap().ends_with("corrected=false"));
}

#[tokio::test]
async fn unknown_rater_image_and_bad_rating() {
    let fx = Fixture::new(2);
    let service = fx.service(2);
    let app = router(service.clone());
    let (s, v) = get_json(&app, "/api/next?rater=mallory&variant=exemplar").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_rater");

    let (s, v) = post_rating(&app, rating("img0", "alice", 7)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "invalid_rating");
    let (s, _) = post_rating(&app, rating("img0", "alice", 0)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, v) = post_rating(&app, rating("nope", "alice", 3)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_image");
    let (s, _) = post_rating(&app, rating("img0", "mallory", 3)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(service.log_len(), 0);
    assert_eq!(std::fs::read_to_string(fx.path().join("ratings.jsonl")).unwrap(), "");

    let (s, _) = get(&app, "/api/next?rater=alice&variant=fancy").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn submit_export_and_resubmission() {
    let fx = Fixture::new(2);
    let service = fx.service(2);
    let app = router(service.clone());

    let (s, body) = get(&app, "/api/export?variant=exemplar_corrected").await;
    assert_eq!(s, StatusCode::OK);
    assert!(body.is_empty());

    let (s, ack) = post_rating(&app, rating("img0", "alice", 3)).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(ack["fst"], 3);
    assert!(ack["timestamp"].is_string());
    assert_eq!(service.log_len(), 1);

    let mut with_ts = rating("img1", "alice", 5);
    with_ts["timestamp"] = "2030-01-01T00:00:00Z".into();
    post_rating(&app, with_ts).await;
    let mut other = rating("img1", "bob", 1);
    other["tool_variant"] = "baseline".into();
    post_rating(&app, other).await;

    let log_text = std::fs::read_to_string(fx.path().join("ratings.jsonl")).unwrap();
    let lines: Vec<_> = log_text.lines().collect();
    assert_eq!(lines.len(), 3);
    let (_, body) = get(&app, "/api/export?variant=exemplar_corrected").await;
    assert_eq!(
        String::from_utf8(body).unwrap(),
        format!("{}\n{}\n", lines[0], lines[1])
    );
    let (_, all) = get(&app, "/api/export").await;
    assert_eq!(String::from_utf8(all).unwrap(), log_text);

    // Resubmission appends; analysis sees the latest.
    let mut again = rating("img1", "alice", 2);
    again["timestamp"] = "2030-01-02T00:00:00Z".into();
    post_rating(&app, again).await;
    let (_, body) = get(&app, "/api/export?variant=exemplar_corrected").await;
    let recs = io::parse_ratings_jsonl(&body[..], Path::new("export")).unwrap();
    assert_eq!(recs.len(), 3);
    let latest = ratings::latest_ratings(&recs);
    assert_eq!(latest.len(), 2);
    assert_eq!(latest.iter().find(|r| r.image_id == "img1").unwrap().fst, 2);
}

#[tokio::test]
async fn export_feeds_agreement() {
    let fx = Fixture::new(6);
    let service = fx.service(6);
    let app = router(service.clone());
    let a = [1, 2, 3, 4, 5, 6];
    let b = [1, 3, 3, 4, 6, 6];
    for i in 0..6 {
        post_rating(&app, rating(&format!("img{i}"), "alice", a[i])).await;
        post_rating(&app, rating(&format!("img{i}"), "bob", b[i])).await;
    }
    let (_, body) = get(&app, "/api/export?variant=exemplar_corrected").await;
    let recs = io::parse_ratings_jsonl(&body[..], Path::new("export")).unwrap();
    let matrices = ratings::pairwise_agreement(&recs, ToolVariant::ExemplarCorrected).unwrap();
    assert_eq!(matrices.len(), 1);
    let m = &matrices[0];
    assert_eq!((m.exact(), m.within_one(), m.total()), (4, 6, 6));
    let mut want = [[0u64; 6]; 6];
    for i in 0..6 {
        want[a[i] as usize - 1][b[i] as usize - 1] += 1;
    }
    assert_eq!(m.counts, want);
}

#[tokio::test]
async fn images_and_exemplars() {
    let fx = Fixture::new(1);
    let app = router(fx.service(1));
    let (s, raw) = get(&app, "/api/images/img0").await;
    assert_eq!(s, StatusCode::OK);
    let raw = skintone::RgbImage::from(image::load_from_memory(&raw).unwrap().to_rgb8());
    assert_eq!(raw.get(0, 0), Rgb8::new(100, 110, 130));
    let (_, fixed) = get(&app, "/api/images/img0?corrected=true").await;
    let fixed = skintone::RgbImage::from(image::load_from_memory(&fixed).unwrap().to_rgb8());
    assert_eq!(fixed.get(0, 0), Rgb8::gray(119));
    let (s, _) = get(&app, "/api/images/zzz").await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, v) = get_json(&app, "/api/exemplars").await;
    assert_eq!(s, StatusCode::OK);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 6);
    for (i, e) in list.iter().enumerate() {
        assert_eq!(e["label"], i + 1);
        assert_eq!(e["url"], format!("/api/exemplars/{}/image", i + 1));
    }
    assert_eq!(list[5]["name"], "dark");
    let (s, png) = get(&app, "/api/exemplars/3/image").await;
    assert_eq!(s, StatusCode::OK);
    let img = image::load_from_memory(&png).unwrap().to_rgb8();
    assert_eq!(img.get_pixel(0, 0).0, [120, 120, 120]);
    let (s, _) = get(&app, "/api/exemplars/7/image").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn static_ui_hosting() {
    let fx = Fixture::new(1);
    let (s, _) = get(&router(fx.service(1)), "/").await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let ui: PathBuf = fx.path().join("ui");
    std::fs::create_dir(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<!doctype html><title>rate</title>").unwrap();
    let mut cfg = fx.config(1);
    cfg.ui_dir = Some(ui);
    let app = router(Arc::new(RatingService::new(cfg).unwrap()));
    let (s, body) = get(&app, "/").await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("<title>rate</title>"));
    let (s, _) = get_json(&app, "/api/exemplars").await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn ratings_survive_restart() {
    let fx = Fixture::new(3);
    {
        let app = router(fx.service(3));
        for i in 0..2 {
            let (s, _) = post_rating(&app, rating(&format!("img{i}"), "carol", 4)).await;
            assert_eq!(s, StatusCode::CREATED);
        }
    }
    let service = fx.service(3);
    assert_eq!(service.log_len(), 2);
    let app = router(service);
    let (_, v) = get_json(&app, "/api/next?rater=carol&variant=exemplar_corrected").await;
    assert_eq!(v["image_id"], "img2");
    assert_eq!(v["position"], 2);
    post_rating(&app, rating("img2", "carol", 5)).await;
    let (_, body) = get(&app, "/api/export").await;
    assert_eq!(body.iter().filter(|&&b| b == b'\n').count(), 3);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_are_serialized() {
    let fx = Fixture::new(10);
    let service = fx.service(10);
    let app = router(service.clone());
    let mut tasks = Vec::new();
    for i in 0..30 {
        let app = app.clone();
        let rater = ["alice", "bob", "carol"][i % 3];
        tasks.push(tokio::spawn(async move {
            post_rating(&app, rating(&format!("img{}", i % 10), rater, (i % 6 + 1) as i64))
                .await
                .0
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::CREATED);
    }
    let recs = io::read_ratings_jsonl(&fx.path().join("ratings.jsonl")).unwrap();
    assert_eq!(recs.len(), 30);
    assert_eq!(service.log_len(), 30);
}
