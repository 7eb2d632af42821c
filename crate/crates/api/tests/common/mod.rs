#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use alp_api::server::{router, AppState};
use alp_core::assets::{register_asset, AssetKind, AssetRegistration, Rights};
use alp_core::intake::ingest_csv;
use alp_core::oai::OaiConfig;
use alp_core::{ArtistLibrary, Provenance, Store};
use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use serde_json::Value;
use tower::ServiceExt;

pub const DATESTAMP: &str = "2024-03-01T09:00:00Z";

/// Pompidou centre, home of two libraries.
pub const KANDINSKY_SITE: (f64, f64) = (48.8607, 2.3522);

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn library(slug: &str, name: &str, provenance: Provenance, site: &str, coords: Option<(f64, f64)>) -> ArtistLibrary {
    ArtistLibrary {
        slug: slug.into(),
        artist_name: name.into(),
        birth_year: None,
        death_year: None,
        provenance,
        holding_site: site.into(),
        latitude: coords.map(|c| c.0),
        longitude: coords.map(|c| c.1),
        description: String::new(),
    }
}

pub fn libraries() -> Vec<ArtistLibrary> {
    vec![
        library("monet", "Claude Monet", Provenance::MaterialFonds, "Giverny", Some((49.0753, 1.5336))),
        library("kandinsky", "Wassily Kandinsky", Provenance::MaterialFonds, "Bibliothèque Kandinsky", Some(KANDINSKY_SITE)),
        library("brancusi", "Constantin Brancusi", Provenance::Reconstituted, "Bibliothèque Kandinsky", Some(KANDINSKY_SITE)),
        library("degas", "Edgar Degas", Provenance::SalesCatalog, "Paris", None),
    ]
}

pub const HEADER: &str = "library_slug,title,creator,date,publisher,language,shelf_mark,subjects,marks,rights\n";

/// monet-000001..5 are the matcher fixture library, in match_library.json order.
pub const CATALOG: &str = "\
monet,Fables,\"La Fontaine, Jean de\",1868,Hachette,fre,A-1,,Dedication:flyleaf:À Claude Monet,public_domain
monet,Salammbô,\"Flaubert, Gustave\",1863,Michel Lévy frères,fre,A-2,,,
monet,Les Misérables,\"Hugo, Victor\",1862,\"A. Lacroix, Verboeckhoven et Cie\",fre,A-3,,DogEar:p. 12,
monet,Les Contes de Perrault,\"Perrault, Charles\",1862,J. Hetzel,fre,A-4,,,
monet,De la loi du contraste simultané des couleurs,\"Chevreul, Michel-Eugène\",1839,Pitois-Levrault,fre,A-5,Couleur -- Perception,Annotation:p. 40:voir Delacroix,
kandinsky,Fables,\"La Fontaine, Jean de\",1868,Hachette,fre,K-1,,,
kandinsky,\"Les Contes drolatiques, illustrés par Gustave Doré\",\"Balzac, Honoré de\",1855,Société générale de librairie,fre,K-2,,Dedication:title page:pour W. K.,
kandinsky,La Légende dorée,\"Jacques de Voragine\",1843,Gosselin,fre,K-3,,,
brancusi,Fables choisies,\"La Fontaine, Jean de\",1890,Garnier,fre,B-1,,,
degas,L'Enfer de Dante Alighieri avec les dessins de Gustave Doré,\"Dante Alighieri\",1861,Hachette,fre,D-1,,,
degas,Londres,\"Doré, Gustave\",1876,Grant,eng,D-2,,,
";

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub store: Store,
    /// asset id -> bytes of its original file
    pub originals: Vec<(String, Vec<u8>)>,
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, bytes).unwrap();
    p
}

/// A store holding [`libraries`], [`CATALOG`] and four photographs covering
/// every rights value.
pub fn fixture_store() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::init(dir.path().join("store")).unwrap();
    let lock = store.lock_writer().unwrap();
    store.write_libraries(&lock, &libraries()).unwrap();
    let csv = format!("{HEADER}{CATALOG}");
    let report = ingest_csv(&store, &lock, csv.as_bytes(), DATESTAMP).unwrap();
    assert!(report.rejected.is_empty(), "{:?}", report.rejected);

    let files = dir.path().join("incoming");
    std::fs::create_dir_all(&files).unwrap();
    let photos = [
        ("monet-000001", AssetKind::DedicationPhoto, Rights::PublicDomain, false, Some(0)),
        ("monet-000005", AssetKind::AnnotationPhoto, Rights::Unknown, true, Some(0)),
        ("kandinsky-000002", AssetKind::DedicationPhoto, Rights::InCopyright, true, Some(0)),
        ("monet-000003", AssetKind::OtherMarkPhoto, Rights::PublicDomain, true, None),
    ];
    let mut originals = Vec::new();
    for (i, (record_id, kind, rights, with_derivative, mark)) in photos.into_iter().enumerate() {
        let original_bytes = format!("ORIGINAL {i} {record_id} full resolution").into_bytes();
        let original = write(&files, &format!("o{i}.jpg"), &original_bytes);
        let derivative = with_derivative.then(|| write(&files, &format!("d{i}.jpg"), format!("DERIVATIVE {i}").as_bytes()));
        let asset = register_asset(
            &store,
            &lock,
            AssetRegistration {
                record_id,
                kind,
                rights,
                original: &original,
                derivative: derivative.as_deref(),
                mark_index: mark,
            },
        )
        .unwrap();
        originals.push((asset.asset_id, original_bytes));
    }
    drop(lock);
    Fixture { dir, store, originals }
}

pub fn app(store: &Store) -> Router {
    router(Arc::new(AppState::load(store, OaiConfig::default()).unwrap()))
}

pub struct Resp {
    pub status: StatusCode,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl Resp {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.text()))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

pub async fn send(app: &Router, req: Request<Body>) -> Resp {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_owned())
        .unwrap_or_default();
    let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec();
    Resp { status, content_type, body }
}

pub async fn get(app: &Router, uri: &str) -> Resp {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn post_form(app: &Router, uri: &str, form: &str) -> Resp {
    let req = Request::post(uri)
        .header(header::CONTENT_TYPE, "application/x-www-form-urlencoded")
        .body(Body::from(form.to_owned()))
        .unwrap();
    send(app, req).await
}

/// Contents of every file under `root`, by relative path.
pub fn tree_digest(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
