//! The read-only HTTP surface.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use alp_core::assets::{resolve_variant, Access, AssetRecord, DenialReason, VariantRequest};
use alp_core::comparison::{author_frequency, compare, CompareError, Level};
use alp_core::geo::{export_geojson, FeatureCollection, MEDIA_TYPE};
use alp_core::oai::{handle_oai, OaiConfig};
use alp_core::query::{Mode, SearchIndex};
use alp_core::{ArtistLibrary, BibRecord, Snapshot, Store, StoreError};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{ApiError, ErrorCode};
use crate::search::{load_index, run_search};
use crate::SCHEMA_VERSION;

pub const DEFAULT_PER_PAGE: usize = 20;
pub const MAX_PER_PAGE: usize = 100;

pub struct AppState {
    pub snapshot: Snapshot,
    pub index: SearchIndex,
    pub oai: OaiConfig,
    /// Asset variant paths are relative to this directory.
    pub store_root: PathBuf,
}

impl AppState {
    /// Load and validate the store; any corruption aborts with the full report.
    pub fn load(store: &Store, oai: OaiConfig) -> Result<AppState, StoreError> {
        let snapshot = store.load_snapshot()?;
        let index = load_index(store, &snapshot);
        Ok(AppState { snapshot, index, oai, store_root: store.root().to_path_buf() })
    }
}

type Shared = State<Arc<AppState>>;
type ApiResult = Result<Response, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/libraries", get(libraries))
        .route("/api/libraries/{slug}", get(library))
        .route("/api/records/{record_id}", get(record))
        .route("/api/search", get(search))
        .route("/api/compare", get(compare_libraries))
        .route("/api/authors", get(authors))
        .route("/api/map.geojson", get(map))
        .route("/api/assets/{asset_id}", get(asset))
        .route("/oai", get(oai_get).post(oai_post))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

/// Query arguments in request order, repeats included.
struct Params(Vec<(String, String)>);

impl Params {
    fn parse(raw: &[u8]) -> Params {
        Params(url::form_urlencoded::parse(raw).into_owned().collect())
    }

    fn from_query(raw: Option<String>) -> Params {
        Params::parse(raw.unwrap_or_default().as_bytes())
    }

    fn get(&self, key: &str) -> Result<Option<&str>, ApiError> {
        let mut values = self.0.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let first = values.next();
        if values.next().is_some() {
            return Err(ApiError::bad_query(format!("parameter {key:?} given more than once")));
        }
        Ok(first)
    }

    fn positive(&self, key: &str, default: usize, max: usize) -> Result<usize, ApiError> {
        match self.get(key)? {
            None => Ok(default),
            Some(raw) => match raw.parse::<usize>() {
                Ok(n) if (1..=max).contains(&n) => Ok(n),
                _ => Err(ApiError::bad_query(format!("{key} must be an integer between 1 and {max}"))),
            },
        }
    }

    /// Comma-separated list; empty items are dropped.
    fn list(&self, key: &str) -> Result<Vec<String>, ApiError> {
        Ok(self
            .get(key)?
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect())
            .unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Page {
    page: usize,
    per_page: usize,
    total: usize,
}

impl Page {
    fn from_params(p: &Params, total: usize) -> Result<Page, ApiError> {
        Ok(Page {
            page: p.positive("page", 1, usize::MAX)?,
            per_page: p.positive("per_page", DEFAULT_PER_PAGE, MAX_PER_PAGE)?,
            total,
        })
    }

    fn slice<'a, T>(&self, items: &'a [T]) -> &'a [T] {
        let start = (self.page - 1).saturating_mul(self.per_page).min(items.len());
        let end = start.saturating_add(self.per_page).min(items.len());
        &items[start..end]
    }
}

fn ok(body: Value) -> ApiResult {
    let mut body = body;
    if let Value::Object(map) = &mut body {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    Ok(Json(body).into_response())
}

fn record_count(state: &AppState, slug: &str) -> usize {
    state.snapshot.records_of(slug).count()
}

fn library_json(state: &AppState, lib: &ArtistLibrary) -> Value {
    let mut v = json!(lib);
    v["record_count"] = json!(record_count(state, &lib.slug));
    v
}

async fn libraries(State(state): Shared, RawQuery(q): RawQuery) -> ApiResult {
    let params = Params::from_query(q);
    let all = state.snapshot.libraries();
    let page = Page::from_params(&params, all.len())?;
    let items: Vec<Value> = page.slice(all).iter().map(|l| library_json(&state, l)).collect();
    ok(json!({ "page": page, "libraries": items }))
}

async fn library(State(state): Shared, UrlPath(slug): UrlPath<String>) -> ApiResult {
    let lib = state.snapshot.library(&slug).ok_or_else(|| ApiError::not_found(format!("no library {slug:?}")))?;
    ok(json!({ "library": library_json(&state, lib) }))
}

fn asset_json(asset: &AssetRecord) -> Value {
    let mut urls = serde_json::Map::new();
    for (name, variant) in [("derivative", VariantRequest::Derivative), ("original", VariantRequest::Original)] {
        if matches!(resolve_variant(asset, variant), Access::Allowed(_)) {
            urls.insert(name.into(), json!(format!("/api/assets/{}?variant={name}", asset.asset_id)));
        }
    }
    json!({
        "asset_id": asset.asset_id,
        "kind": asset.kind,
        "rights": asset.rights,
        "urls": urls,
    })
}

async fn record(State(state): Shared, UrlPath(record_id): UrlPath<String>) -> ApiResult {
    let record =
        state.snapshot.record(&record_id).ok_or_else(|| ApiError::not_found(format!("no record {record_id:?}")))?;
    let lib = state.snapshot.library(&record.library_slug);
    let assets: Vec<Value> =
        state.snapshot.assets().iter().filter(|a| a.record_id == record.record_id).map(asset_json).collect();
    ok(json!({
        "record": record,
        "library": lib.map(|l| json!({ "slug": l.slug, "artist_name": l.artist_name, "provenance": l.provenance })),
        "assets": assets,
    }))
}

fn summary(r: &BibRecord) -> Value {
    use alp_core::DcName;
    json!({
        "record_id": r.record_id,
        "library_slug": r.library_slug,
        "title": r.main_title(),
        "creator": r.first(DcName::Creator),
        "date": r.first(DcName::Date),
        "year": r.year(),
        "surrogate_levels": r.surrogates.iter().map(|s| s.match_level).collect::<Vec<_>>(),
    })
}

async fn search(State(state): Shared, RawQuery(q): RawQuery) -> ApiResult {
    let params = Params::from_query(q);
    let text = params.get("q")?.ok_or_else(|| ApiError::bad_query("missing parameter q"))?;
    let mode: Mode = params.get("mode")?.unwrap_or("simple").parse().map_err(ApiError::bad_query)?;
    let libraries = params.list("library")?;
    if let Some(unknown) = libraries.iter().find(|l| state.snapshot.library(l).is_none()) {
        return Err(ApiError::bad_query(format!("unknown library {unknown:?}")));
    }
    let outcome = run_search(&state.snapshot, &state.index, text, mode, &libraries).map_err(|e| {
        let detail = json!({ "offset": e.offset() });
        ApiError::bad_query(e.to_string()).with_detail(detail)
    })?;
    let page = Page::from_params(&params, outcome.hits.len())?;
    let results: Vec<Value> = page
        .slice(&outcome.hits)
        .iter()
        .filter_map(|h| {
            let r = state.snapshot.record(&h.record_id)?;
            let mut v = summary(r);
            v["score"] = json!(h.score);
            Some(v)
        })
        .collect();
    ok(json!({
        "query": text,
        "mode": mode,
        "parsed": outcome.ast.to_string(),
        "page": page,
        "results": results,
        "facets": outcome.facets,
    }))
}

fn compare_error(e: CompareError) -> ApiError {
    match e {
        CompareError::UnknownSlug(_) => ApiError::not_found(e.to_string()),
        _ => ApiError::bad_query(e.to_string()),
    }
}

async fn compare_libraries(State(state): Shared, RawQuery(q): RawQuery) -> ApiResult {
    let params = Params::from_query(q);
    let libs = params.list("libs")?;
    let level: Level = params.get("level")?.unwrap_or("work").parse().map_err(ApiError::bad_query)?;
    let report = compare(&state.snapshot, &libs, level).map_err(compare_error)?;
    ok(json!(report))
}

async fn authors(State(state): Shared, RawQuery(q): RawQuery) -> ApiResult {
    let params = Params::from_query(q);
    let mut libs = params.list("libs")?;
    if libs.is_empty() {
        libs = state.snapshot.libraries().iter().map(|l| l.slug.clone()).collect();
    }
    let authors = author_frequency(&state.snapshot, &libs).map_err(compare_error)?;
    ok(json!({ "libraries": libs, "authors": authors }))
}

#[derive(Serialize)]
struct VersionedGeoJson<'a> {
    #[serde(flatten)]
    collection: &'a FeatureCollection,
    schema_version: u32,
}

/// The map export as served: the GeoJSON document with `schema_version`
/// added as a foreign member.
pub fn map_document(snapshot: &Snapshot) -> String {
    let fc = export_geojson(snapshot.libraries());
    serde_json::to_string(&VersionedGeoJson { collection: &fc, schema_version: SCHEMA_VERSION })
        .expect("geojson serializes")
}

async fn map(State(state): Shared) -> ApiResult {
    Ok(([(header::CONTENT_TYPE, MEDIA_TYPE)], map_document(&state.snapshot)).into_response())
}

fn content_type(path: &str) -> &'static str {
    let ext = Path::new(path).extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "jpg" | "jpeg" => "image/jpeg",
        "png" => "image/png",
        "tif" | "tiff" => "image/tiff",
        "webp" => "image/webp",
        "gif" => "image/gif",
        _ => "application/octet-stream",
    }
}

fn is_store_relative(path: &str) -> bool {
    let p = Path::new(path);
    !path.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

async fn asset(State(state): Shared, UrlPath(asset_id): UrlPath<String>, RawQuery(q): RawQuery) -> ApiResult {
    let params = Params::from_query(q);
    let variant: VariantRequest =
        params.get("variant")?.unwrap_or("derivative").parse().map_err(ApiError::bad_query)?;
    let asset =
        state.snapshot.asset(&asset_id).ok_or_else(|| ApiError::not_found(format!("no asset {asset_id:?}")))?;
    let rel = match resolve_variant(asset, variant) {
        Access::Allowed(rel) => rel,
        Access::Denied(reason) => {
            let message = match reason {
                DenialReason::Rights => "the original of a work not in the public domain is not downloadable",
                DenialReason::NoDerivative => "no derivative exists for this asset",
            };
            return Err(ApiError { code: ErrorCode::AccessDenied, message: message.into(), detail: None }
                .with_detail(json!({ "reason": reason.as_str() })));
        }
    };
    if !is_store_relative(rel) {
        return Err(ApiError::internal(format!("asset {asset_id} has a non-relative path")));
    }
    let bytes = tokio::fs::read(state.store_root.join(rel)).await.map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, content_type(rel))], bytes).into_response())
}

fn oai_response(state: &AppState, params: Params) -> Response {
    let xml = handle_oai(&state.snapshot, &state.oai, &params.0, chrono::Utc::now());
    (StatusCode::OK, [(header::CONTENT_TYPE, "text/xml; charset=utf-8")], xml).into_response()
}

async fn oai_get(State(state): Shared, RawQuery(q): RawQuery) -> Response {
    oai_response(&state, Params::from_query(q))
}

async fn oai_post(State(state): Shared, body: Bytes) -> Response {
    oai_response(&state, Params::parse(&body))
}
