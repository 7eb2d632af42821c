//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are the constants below.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use alp_api::matching::{match_library, BatchRow};
use alp_api::search::{load_index, run_search, write_index};
use alp_api::server::{router, AppState};
use alp_core::assets::{resolve_variant, Access, Rights, VariantRequest};
use alp_core::catalog::{BibRecord, DcElement, DcName, Provenance};
use alp_core::intake::ingest_csv;
use alp_core::matcher::{classify, MatchConfig, ProviderRecord, Verdict};
use alp_core::oai::{parse_harvest_page, OaiConfig};
use alp_core::textnorm::tokenize;
use alp_core::query::{Mode, QueryNode, SearchIndex};
use alp_core::Store;
use alp_providers::{ReplayTransport, RetryPolicy, SearchProvider, SruClient};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::Deserialize;
use serde_json::Value;

const E2E_ROWS: usize = 900;
const E2E_PROBES: usize = 50;
const BUILD_LIMIT: Duration = Duration::from_secs(5);
const QUERY_LIMIT: Duration = Duration::from_millis(50);
const SCORE_TOL: f64 = 1e-9;
const SHUFFLES: usize = 100;
const JACCARD_TOL: f64 = 1e-12;
const OAI_PAGE_SIZE: usize = 100;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const WORDS: &[&str] = &[
    "fables", "Doré", "Quichotte", "ingénieur", "Hidalgo", "Manche", "Misérables", "peinture", "Salammbô", "voyage",
    "Orient", "Émaux", "camées", "jardin", "Giverny", "japonais", "estampes", "Hokusai", "mer", "l'été", "Noël",
    "œuvres", "ÉTUDES", "cœur", "Bretagne", "Normandie", "cathédrale", "nymphéas", "lumière", "Venise",
];
const CREATORS: &[&str] = &["La Fontaine, Jean de", "Hugo, Victor", "Flaubert, Gustave", "Gautier, Théophile", "Zola, Émile"];

fn e2e_csv(rng: &mut StdRng) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(common::HEADER.trim_end().split(',')).unwrap();
    let slugs = ["monet", "kandinsky", "brancusi", "degas"];
    for i in 0..E2E_ROWS {
        let n = rng.gen_range(2..7);
        let title: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
        let subjects = if i % 3 == 0 { "Peinture -- France -- 19e siècle||Estampes japonaises" } else { "" };
        w.write_record([
            slugs[i % slugs.len()],
            &title.join(" "),
            CREATORS.choose(rng).unwrap(),
            &rng.gen_range(1800..1900).to_string(),
            if i % 2 == 0 { "Hachette" } else { "" },
            "fre",
            &format!("S-{i}"),
            subjects,
            "",
            if i % 5 == 0 { "public_domain" } else { "" },
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// A store filled through the CSV ingest path with [`E2E_ROWS`] records.
fn e2e_store(dir: &std::path::Path) -> Store {
    let store = Store::init(dir.join("store")).unwrap();
    let lock = store.lock_writer().unwrap();
    store.write_libraries(&lock, &common::libraries()).unwrap();
    let csv = e2e_csv(&mut StdRng::seed_from_u64(1));
    let report = ingest_csv(&store, &lock, csv.as_bytes(), common::DATESTAMP).unwrap();
    assert!(report.rejected.is_empty(), "{:?}", report.rejected);
    store
}

fn c1_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let store = e2e_store(dir.path());
    let snapshot = store.load_snapshot().map_err(|e| e.to_string())?;
    ensure(snapshot.records().len() == E2E_ROWS, || format!("{} records stored", snapshot.records().len()))?;

    let started = Instant::now();
    {
        let lock = store.lock_writer().unwrap();
        write_index(&store, &lock, &snapshot).map_err(|e| e.to_string())?;
    }
    let build = started.elapsed();
    let index = load_index(&store, &snapshot);

    let mut rng = StdRng::seed_from_u64(2);
    let mut slowest = Duration::ZERO;
    for _ in 0..E2E_PROBES {
        let record = snapshot.records().choose(&mut rng).unwrap();
        let words: Vec<&str> = record.main_title().unwrap().split_whitespace().collect();
        let probe = words.choose(&mut rng).unwrap();
        let t = Instant::now();
        let outcome = run_search(&snapshot, &index, probe, Mode::Simple, &[]).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed());
        ensure(outcome.hits.iter().any(|h| h.record_id == record.record_id), || {
            format!("probe {probe:?} missed {}", record.record_id)
        })?;
    }
    ensure(build < BUILD_LIMIT, || format!("index build took {build:?}"))?;
    ensure(slowest < QUERY_LIMIT, || format!("slowest query took {slowest:?}"))?;
    Ok(format!("{E2E_PROBES}/{E2E_PROBES} probes found their record; build {build:?}, slowest query {slowest:?}"))
}

fn c2_index_completeness() -> Outcome {
    let mut checked = 0;
    for seed in 0..20 {
        let mut rng = StdRng::seed_from_u64(seed);
        let corpus: Vec<BibRecord> = (1..=100)
            .map(|i| {
                let n = rng.gen_range(1..6);
                let title: Vec<&str> = (0..n).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
                BibRecord {
                    record_id: format!("monet-{i:06}"),
                    library_slug: "monet".into(),
                    datestamp: common::DATESTAMP.into(),
                    elements: vec![DcElement::new(DcName::Title, title.join(" "))],
                    shelf_mark: None,
                    marks: vec![],
                    surrogates: vec![],
                }
            })
            .collect();
        let index = SearchIndex::build(&corpus);
        for r in &corpus {
            for token in tokenize(r.main_title().unwrap()) {
                checked += 1;
                let hits = index.execute(&QueryNode::Term(token.clone()));
                ensure(hits.iter().any(|h| h.record_id == r.record_id), || {
                    format!("seed {seed}: term {token:?} misses {}", r.record_id)
                })?;
            }
        }
    }
    Ok(format!("{checked} title-token lookups over 20 seeds x 100 records"))
}

#[derive(Deserialize)]
struct GoldenInput {
    title: String,
    creator: Option<String>,
    date: Option<String>,
    publisher: Option<String>,
}

#[derive(Deserialize)]
struct GoldenPair {
    name: String,
    record: GoldenInput,
    candidates: Vec<ProviderRecord>,
}

#[derive(Deserialize)]
struct GoldenExpected {
    scores: Vec<BTreeMap<String, f64>>,
    chosen: Option<String>,
    verdict: Verdict,
}

fn c3_matcher_oracle() -> Outcome {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures");
    let read = |f: &str| std::fs::read_to_string(format!("{dir}/{f}")).unwrap();
    let pairs: Vec<GoldenPair> = serde_json::from_str(&read("matcher_pairs.json")).unwrap();
    let expected: Vec<GoldenExpected> = serde_json::from_str(&read("matcher_expected.json")).unwrap();
    ensure(pairs.len() == 20 && expected.len() == 20, || "expected 20 golden pairs".into())?;
    let config = MatchConfig::default();
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for (pair, exp) in pairs.iter().zip(&expected) {
        let i = &pair.record;
        let mut elements = vec![DcElement::new(DcName::Title, &i.title)];
        elements.extend(i.creator.as_deref().map(|v| DcElement::new(DcName::Creator, v)));
        elements.extend(i.date.as_deref().map(|v| DcElement::new(DcName::Date, v)));
        elements.extend(i.publisher.as_deref().map(|v| DcElement::new(DcName::Publisher, v)));
        let record = BibRecord {
            record_id: "golden-000001".into(),
            library_slug: "golden".into(),
            datestamp: common::DATESTAMP.into(),
            elements,
            shelf_mark: None,
            marks: vec![],
            surrogates: vec![],
        };
        let report = classify(&record, &pair.candidates, &config);
        ensure(report.verdict == exp.verdict, || format!("{}: verdict {:?}", pair.name, report.verdict))?;
        let chosen = |r: &alp_core::matcher::MatchReport| r.chosen().map(|c| c.candidate.provider_record_id.clone());
        ensure(chosen(&report) == exp.chosen, || format!("{}: chose {:?}", pair.name, chosen(&report)))?;
        for (got, want) in report.candidates.iter().map(|c| c.scores).zip(&exp.scores) {
            for (g, key) in [
                (got.title_sim, "title_sim"),
                (got.creator_sim, "creator_sim"),
                (got.year_score, "year_score"),
                (got.publisher_sim, "publisher_sim"),
                (got.total, "total"),
            ] {
                worst = worst.max((g - want[key]).abs());
            }
        }
        let mut cands = pair.candidates.clone();
        for _ in 0..SHUFFLES {
            cands.shuffle(&mut rng);
            let r = classify(&record, &cands, &config);
            ensure(chosen(&r) == exp.chosen && r.verdict == exp.verdict, || format!("{}: shuffle changed the choice", pair.name))?;
        }
    }
    ensure(worst <= SCORE_TOL, || format!("max score deviation {worst:e}"))?;
    Ok(format!("20 pairs, max deviation {worst:e}, {SHUFFLES} shuffles each stable"))
}

async fn c4_provenance() -> Outcome {
    let fixture = common::fixture_store();
    let provider: Box<dyn SearchProvider> = Box::new(SruClient::new(
        "https://gallica.example.org/SRU".parse().unwrap(),
        Arc::new(ReplayTransport::new(common::fixtures_dir().join("providers/gallica"))),
        RetryPolicy::immediate(1),
    ));
    let outcome = {
        let lock = fixture.store.lock_writer().unwrap();
        match_library(&fixture.store, &lock, "monet", &[("gallica".into(), provider)], &MatchConfig::default(), 10)
            .map_err(|e| e.to_string())?
    };
    let report = outcome
        .rows
        .iter()
        .find_map(|r| match r {
            BatchRow::Report(m) if m.record_id == "monet-000003" => Some(m),
            _ => None,
        })
        .ok_or("no report for monet-000003")?;
    let snapshot = fixture.store.load_snapshot().unwrap();
    let year = snapshot.record("monet-000003").unwrap().year();
    ensure(report.candidates.len() == 1, || format!("{} candidates", report.candidates.len()))?;
    let hit_year = report.candidates[0].candidate.date.clone();
    ensure(hit_year.as_deref().and_then(|d| d.get(..4)?.parse().ok()) != year, || "hit has the same year".into())?;

    let app = common::app(&fixture.store);
    let resp = common::get(&app, "/api/records/monet-000003").await;
    let level = resp.json()["record"]["surrogates"][0]["match_level"].clone();
    ensure(level == "approximate_edition", || format!("match_level {level}"))?;
    Ok(format!("{year:?} record, {} reissue: match_level {level}", hit_year.unwrap_or_default()))
}

type Multiset = BTreeMap<(String, Option<String>, String, Option<String>), usize>;

fn multiset(elements: &[DcElement]) -> Multiset {
    let mut m = BTreeMap::new();
    for e in elements {
        *m.entry((e.element.clone(), e.qualifier.clone(), e.value.clone(), e.lang.clone())).or_default() += 1;
    }
    m
}

async fn c5_oai_harvest() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let store = e2e_store(dir.path());
    let oai = OaiConfig { page_size: OAI_PAGE_SIZE, ..OaiConfig::default() };
    let state = AppState::load(&store, oai.clone()).unwrap();
    let snapshot = store.load_snapshot().unwrap();
    let app = router(Arc::new(state));
    let schema = alp_xsd::oai_pmh_schema();

    let mut uri = "/oai?verb=ListRecords&metadataPrefix=oai_dc".to_owned();
    let mut harvested = Vec::new();
    let mut pages = 0;
    loop {
        let resp = common::get(&app, &uri).await;
        let xml = resp.text();
        let violations = schema.validate(&xml).map_err(|e| e.to_string())?;
        ensure(violations.is_empty(), || format!("page {pages}: {violations:?}"))?;
        let page = parse_harvest_page(&xml).map_err(|e| e.to_string())?;
        ensure(page.errors.is_empty(), || format!("{:?}", page.errors))?;
        pages += 1;
        harvested.extend(page.records);
        match page.resumption_token {
            Some(t) => uri = format!("/oai?verb=ListRecords&resumptionToken={t}"),
            None => break,
        }
    }
    ensure(harvested.len() == snapshot.records().len(), || format!("harvested {}", harvested.len()))?;
    for (h, r) in harvested.iter().zip(snapshot.records()) {
        ensure(h.identifier == format!("oai:{}:{}", oai.repository_id, r.record_id), || h.identifier.clone())?;
        ensure(multiset(&h.elements) == multiset(&r.elements), || format!("{} differs", r.record_id))?;
    }
    Ok(format!("{} records over {pages} pages, all schema-valid", harvested.len()))
}

async fn result_ids(app: &axum::Router, q: &str, mode: &str) -> BTreeSet<String> {
    let resp = common::get(app, &format!("/api/search?q={q}&mode={mode}&per_page=100")).await;
    resp.json()["results"].as_array().unwrap().iter().map(|r| r["record_id"].as_str().unwrap().to_owned()).collect()
}

async fn c6_diacritics() -> Outcome {
    let fixture = common::fixture_store();
    let app = common::app(&fixture.store);
    let want: BTreeSet<String> = ["degas-000001", "degas-000002", "kandinsky-000002"].iter().map(|s| s.to_string()).collect();
    for mode in ["simple", "advanced"] {
        let plain = result_ids(&app, "dore", mode).await;
        let accented = result_ids(&app, "Dor%C3%A9", mode).await;
        ensure(plain == accented, || format!("{mode}: {plain:?} vs {accented:?}"))?;
        ensure(plain == want, || format!("{mode}: {plain:?}"))?;
    }
    Ok(format!("both spellings return {want:?}"))
}

async fn c7_rights() -> Outcome {
    let fixture = common::fixture_store();
    let app = common::app(&fixture.store);
    let snapshot = fixture.store.load_snapshot().unwrap();
    let mut probes = 0;
    let mut denied = 0;
    for asset in snapshot.assets() {
        let original = &fixture.originals.iter().find(|(id, _)| *id == asset.asset_id).unwrap().1;
        for (variant, request) in [("original", VariantRequest::Original), ("derivative", VariantRequest::Derivative)] {
            probes += 1;
            let resp = common::get(&app, &format!("/api/assets/{}?variant={variant}", asset.asset_id)).await;
            let protected = asset.rights != Rights::PublicDomain;
            if protected {
                ensure(resp.body != *original, || format!("{} {variant}: original served", asset.asset_id))?;
            }
            match resolve_variant(asset, request) {
                Access::Allowed(_) => ensure(resp.status == 200, || format!("{} {variant}: {}", asset.asset_id, resp.status))?,
                Access::Denied(reason) => {
                    denied += 1;
                    ensure(resp.status == 403, || format!("{} {variant}: {}", asset.asset_id, resp.status))?;
                    let got = resp.json()["error"]["detail"]["reason"].clone();
                    ensure(got == reason.as_str(), || format!("{} {variant}: reason {got}", asset.asset_id))?;
                }
            }
            if protected && request == VariantRequest::Original {
                let got = resp.json()["error"]["detail"]["reason"].clone();
                ensure(resp.status == 403 && got == "rights", || format!("{} original: {got}", asset.asset_id))?;
            }
        }
    }
    Ok(format!("{probes} probes, {denied} denied, no protected original served"))
}

async fn c8_comparison() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::init(dir.path().join("store")).unwrap();
    {
        let lock = store.lock_writer().unwrap();
        let libs: Vec<_> =
            ["a", "b", "c"].iter().map(|s| common::library(s, s, Provenance::Inventory, "Paris", None)).collect();
        store.write_libraries(&lock, &libs).unwrap();
        let rec = |slug: &str, seq: u32, title: &str, creator: &str, year: &str| BibRecord {
            record_id: format!("{slug}-{seq:06}"),
            library_slug: slug.into(),
            datestamp: common::DATESTAMP.into(),
            elements: vec![
                DcElement::new(DcName::Title, title),
                DcElement::new(DcName::Creator, creator),
                DcElement::new(DcName::Date, year),
                DcElement::new(DcName::Publisher, "Hachette"),
            ],
            shelf_mark: None,
            marks: vec![],
            surrogates: vec![],
        };
        let fables = "Fables. Avec les dessins de Gustave Doré";
        let lf = "La Fontaine, Jean de";
        store.write_collection(&lock, "a", &[rec("a", 1, fables, lf, "1868"), rec("a", 2, "Salammbô", "Flaubert, Gustave", "1863")]).unwrap();
        store.write_collection(&lock, "b", &[rec("b", 1, fables, lf, "1868")]).unwrap();
        store.write_collection(&lock, "c", &[rec("c", 1, fables, lf, "1890"), rec("c", 2, "Les Misérables", "Hugo, Victor", "1862")]).unwrap();
    }
    let app = common::app(&store);
    // a = {F1868, S1863}, b = {F1868}, c = {F1890, M1862}
    let cases = [
        ("edition", vec![vec!["a", "b"]], [1.0 / 2.0, 0.0, 0.0]),
        ("work", vec![vec!["a", "b", "c"]], [1.0 / 2.0, 1.0 / 3.0, 1.0 / 2.0]),
    ];
    for (level, groups, jaccard) in cases {
        let v = common::get(&app, &format!("/api/compare?libs=a,b,c&level={level}")).await.json();
        let got: Vec<Vec<String>> = v["groups"]
            .as_array()
            .unwrap()
            .iter()
            .map(|g| g["holdings"].as_object().unwrap().keys().cloned().collect())
            .collect();
        ensure(got == groups, || format!("{level}: groups {got:?}"))?;
        let pairs = v["pairs"].as_array().unwrap();
        for (p, want) in pairs.iter().zip(jaccard) {
            let j = p["jaccard"].as_f64().unwrap();
            ensure((j - want).abs() <= JACCARD_TOL, || format!("{level} {}-{}: {j} vs {want}", p["a"], p["b"]))?;
        }
        ensure(pairs.len() == 3, || format!("{level}: {} pairs", pairs.len()))?;
    }
    Ok("edition groups [[a,b]], work groups [[a,b,c]], Jaccard = 1/2,0,0 and 1/2,1/3,1/2".into())
}

/// Structural GeoJSON check for a FeatureCollection of Points.
fn check_geojson(v: &Value) -> Result<(), String> {
    ensure(v["type"] == "FeatureCollection", || "root type".into())?;
    let features = v["features"].as_array().ok_or("features must be an array")?;
    for (i, f) in features.iter().enumerate() {
        ensure(f["type"] == "Feature", || format!("feature {i}: type"))?;
        ensure(f["properties"].is_object() || f["properties"].is_null(), || format!("feature {i}: properties"))?;
        ensure(f["geometry"]["type"] == "Point", || format!("feature {i}: geometry"))?;
        let c = f["geometry"]["coordinates"].as_array().ok_or(format!("feature {i}: coordinates"))?;
        ensure(c.len() >= 2 && c.iter().all(Value::is_number), || format!("feature {i}: position"))?;
        let (lon, lat) = (c[0].as_f64().unwrap(), c[1].as_f64().unwrap());
        ensure((-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat), || format!("feature {i}: range"))?;
    }
    Ok(())
}

async fn c9_geojson() -> Outcome {
    let fixture = common::fixture_store();
    let app = common::app(&fixture.store);
    let resp = common::get(&app, "/api/map.geojson").await;
    ensure(resp.content_type.starts_with("application/geo+json"), || resp.content_type.clone())?;
    let v = resp.json();
    check_geojson(&v)?;
    let distinct: BTreeSet<(u64, u64)> = common::libraries()
        .iter()
        .filter_map(|l| Some((l.latitude?.to_bits(), l.longitude?.to_bits())))
        .collect();
    let features = v["features"].as_array().unwrap();
    ensure(features.len() == distinct.len(), || format!("{} features for {} sites", features.len(), distinct.len()))?;
    let (lat, lon) = common::KANDINSKY_SITE;
    let shared = features
        .iter()
        .find(|f| f["geometry"]["coordinates"] == serde_json::json!([lon, lat]))
        .ok_or("no feature at the shared site")?;
    let n = shared["properties"]["libraries"].as_array().map_or(0, Vec::len);
    ensure(n == 2, || format!("shared site lists {n} libraries"))?;
    Ok(format!("{} features, shared site lists 2 libraries", features.len()))
}

fn main() {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let results: Vec<(&str, Outcome)> = vec![
        ("C1 end-to-end ingest, index, probe", c1_end_to_end()),
        ("C2 index completeness", c2_index_completeness()),
        ("C3 matcher against reference scorer", c3_matcher_oracle()),
        ("C4 approximate edition provenance", rt.block_on(c4_provenance())),
        ("C5 OAI-PMH self-harvest", rt.block_on(c5_oai_harvest())),
        ("C6 diacritic-insensitive search", rt.block_on(c6_diacritics())),
        ("C7 rights gate", rt.block_on(c7_rights())),
        ("C8 cross-library comparison", rt.block_on(c8_comparison())),
        ("C9 GeoJSON co-location", rt.block_on(c9_geojson())),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
