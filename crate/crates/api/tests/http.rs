mod common;

use std::collections::BTreeSet;

use axum::http::StatusCode;
use common::{app, fixture_store, get, post_form, tree_digest};
use serde_json::Value;

fn ids(v: &Value) -> BTreeSet<String> {
    v["results"].as_array().unwrap().iter().map(|r| r["record_id"].as_str().unwrap().to_owned()).collect()
}

#[tokio::test]
async fn libraries_list_and_detail() {
    let f = fixture_store();
    let app = app(&f.store);
    let r = get(&app, "/api/libraries").await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["page"]["total"], 4);
    let slugs: Vec<&str> = v["libraries"].as_array().unwrap().iter().map(|l| l["slug"].as_str().unwrap()).collect();
    assert_eq!(slugs, ["brancusi", "degas", "kandinsky", "monet"]);

    let v = get(&app, "/api/libraries/monet").await.json();
    assert_eq!(v["library"]["provenance"], "material_fonds");
    assert_eq!(v["library"]["latitude"], 49.0753);
    assert_eq!(v["library"]["longitude"], 1.5336);
    assert_eq!(v["library"]["record_count"], 5);

    let v = get(&app, "/api/libraries?page=2&per_page=3").await.json();
    assert_eq!(v["libraries"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn record_detail_and_not_found() {
    let f = fixture_store();
    let app = app(&f.store);
    let v = get(&app, "/api/records/monet-000001").await.json();
    assert_eq!(v["record"]["shelf_mark"], "A-1");
    assert_eq!(v["record"]["marks"][0]["kind"], "dedication");
    assert_eq!(v["library"]["artist_name"], "Claude Monet");
    let assets = v["assets"].as_array().unwrap();
    assert_eq!(assets.len(), 1);
    assert!(assets[0]["urls"]["original"].is_string());

    let v = get(&app, "/api/records/kandinsky-000002").await.json();
    let urls = &v["assets"][0]["urls"];
    assert!(urls["derivative"].is_string());
    assert!(urls.get("original").is_none(), "original offered for an in-copyright asset: {urls}");

    let r = get(&app, "/api/records/unknown-000001").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"]["code"], "NotFound");
    assert_eq!(r.json()["schema_version"], 1);
}

#[tokio::test]
async fn simple_search_finds_both_dore_illustrated_books() {
    let f = fixture_store();
    let app = app(&f.store);
    let v = get(&app, "/api/search?q=dore&mode=simple").await.json();
    let found = ids(&v);
    assert!(found.contains("kandinsky-000002"), "{found:?}");
    assert!(found.contains("degas-000001"), "{found:?}");
    assert!(found.contains("degas-000002"), "{found:?}");
    assert!(!found.contains("kandinsky-000003"), "dorée must not fold to doré");
    assert_eq!(v["facets"]["library"]["degas"], 2);
}

#[tokio::test]
async fn advanced_search_library_filter_and_paging() {
    let f = fixture_store();
    let app = app(&f.store);
    let v = get(&app, "/api/search?q=creator%3A%22La%20Fontaine%22%20AND%20date%3A%5B1860%20TO%201870%5D&mode=advanced").await.json();
    assert_eq!(ids(&v), ["kandinsky-000001", "monet-000001"].map(String::from).into());

    let v = get(&app, "/api/search?q=fables&library=brancusi").await.json();
    assert_eq!(ids(&v), ["brancusi-000001".to_owned()].into());
    assert_eq!(v["page"]["total"], 1);

    let v = get(&app, "/api/search?q=fables&per_page=1&page=2").await.json();
    assert_eq!(v["page"]["total"], 3);
    assert_eq!(v["results"].as_array().unwrap().len(), 1);

    let v = get(&app, "/api/search?q=marktype%3Adedication&mode=advanced").await.json();
    assert_eq!(ids(&v), ["kandinsky-000002", "monet-000001"].map(String::from).into());
}

#[tokio::test]
async fn bad_queries_are_reported_with_offsets() {
    let f = fixture_store();
    let app = app(&f.store);
    let r = get(&app, "/api/search?q=title%3A%28fables&mode=advanced").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let v = r.json();
    assert_eq!(v["error"]["code"], "BadQuery");
    assert!(v["error"]["detail"]["offset"].is_u64(), "{v}");

    for uri in [
        "/api/search",
        "/api/search?q=x&mode=fuzzy",
        "/api/search?q=x&per_page=101",
        "/api/search?q=x&page=0",
        "/api/search?q=x&library=nobody",
        "/api/search?q=x&q=y",
        "/api/compare?libs=monet",
        "/api/compare?libs=monet,kandinsky&level=shelf",
    ] {
        let r = get(&app, uri).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{uri}");
        assert_eq!(r.json()["error"]["code"], "BadQuery", "{uri}");
    }
}

#[tokio::test]
async fn compare_and_authors() {
    let f = fixture_store();
    let app = app(&f.store);
    let v = get(&app, "/api/compare?libs=monet,kandinsky,brancusi&level=edition").await.json();
    assert_eq!(v["schema_version"], 1);
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0]["holdings"]["monet"][0], "monet-000001");
    assert_eq!(groups[0]["holdings"]["kandinsky"][0], "kandinsky-000001");

    let v = get(&app, "/api/compare?libs=monet,kandinsky,brancusi&level=work").await.json();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 1, "{v}");
    assert_eq!(groups[0]["holdings"].as_object().unwrap().len(), 2);

    let r = get(&app, "/api/compare?libs=monet,nobody").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let v = get(&app, "/api/authors").await.json();
    let top = &v["authors"][0];
    assert_eq!(top["surname"], "la fontaine");
    assert_eq!(top["total"], 3);
}

#[tokio::test]
async fn map_is_geojson() {
    let f = fixture_store();
    let app = app(&f.store);
    let r = get(&app, "/api/map.geojson").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "application/geo+json");
    let v = r.json();
    assert_eq!(v["type"], "FeatureCollection");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["features"].as_array().unwrap().len(), 2);
    assert_eq!(v["unlocated"][0]["slug"], "degas");
}

#[tokio::test]
async fn assets_respect_rights() {
    let f = fixture_store();
    let app = app(&f.store);
    let pd = "monet-000001-a1";
    let r = get(&app, &format!("/api/assets/{pd}?variant=original")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "image/jpeg");
    assert_eq!(r.body, f.originals[0].1);

    let r = get(&app, "/api/assets/kandinsky-000002-a1?variant=original").await;
    assert_eq!(r.status, StatusCode::FORBIDDEN);
    let v = r.json();
    assert_eq!(v["error"]["code"], "AccessDenied");
    assert_eq!(v["error"]["detail"]["reason"], "rights");

    let r = get(&app, "/api/assets/kandinsky-000002-a1").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.text(), "DERIVATIVE 2");

    assert_eq!(get(&app, "/api/assets/nope-000001-a1").await.status, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/api/assets/monet-000001-a1?variant=thumbnail").await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn oai_get_and_post_agree() {
    let f = fixture_store();
    let app = app(&f.store);
    let r = get(&app, "/oai?verb=ListIdentifiers&metadataPrefix=oai_dc&set=degas").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.content_type, "text/xml; charset=utf-8");
    let posted = post_form(&app, "/oai", "verb=ListIdentifiers&metadataPrefix=oai_dc&set=degas").await;
    let strip = |s: String| s.lines().filter(|l| !l.contains("responseDate")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(r.text()), strip(posted.text()));
    assert!(r.text().contains("oai:artist-libraries.example.org:degas-000002"));
}

#[tokio::test]
async fn unknown_routes_are_json_not_found() {
    let f = fixture_store();
    let app = app(&f.store);
    let r = get(&app, "/api/nothing").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"]["code"], "NotFound");
}

#[tokio::test]
async fn sweep_leaves_store_untouched_and_every_body_is_versioned_json() {
    let f = fixture_store();
    let root = f.store.root().to_path_buf();
    let before = tree_digest(&root);
    let app = app(&f.store);
    let json_uris = [
        "/api/libraries",
        "/api/libraries/kandinsky",
        "/api/libraries/nobody",
        "/api/records/monet-000003",
        "/api/records/x",
        "/api/search?q=fables",
        "/api/search?q=%22",
        "/api/compare?libs=monet,kandinsky",
        "/api/authors?libs=degas",
        "/api/map.geojson",
        "/api/assets/monet-000005-a1?variant=original",
        "/api/assets/monet-000005-a1?variant=derivative&variant=original",
    ];
    let root_text = root.display().to_string();
    for uri in json_uris {
        let r = get(&app, uri).await;
        let v = r.json();
        assert_eq!(v["schema_version"], 1, "{uri}");
        assert!(!r.text().contains(&root_text), "{uri} leaks a path");
    }
    for uri in ["/oai?verb=Identify", "/oai?verb=ListRecords&metadataPrefix=oai_dc", "/api/assets/monet-000003-a1"] {
        assert_eq!(get(&app, uri).await.status, StatusCode::OK, "{uri}");
    }
    assert_eq!(before, tree_digest(&root));
}
