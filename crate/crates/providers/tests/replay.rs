use std::path::PathBuf;
use std::sync::Arc;

use alp_core::Provider;
use alp_providers::{
    ProviderError, ProviderQuery, ReplayTransport, RestClient, RetryPolicy, SearchProvider, SruClient, TransportError,
};
use url::Url;

fn fixtures(provider: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/providers").join(provider)
}

fn gallica() -> SruClient {
    SruClient::new(
        Url::parse("https://gallica.example.org/SRU").unwrap(),
        Arc::new(ReplayTransport::new(fixtures("gallica"))),
        RetryPolicy::immediate(3),
    )
}

fn openlibrary() -> RestClient {
    RestClient::new(
        Url::parse("https://openlibrary.example.org/search.json").unwrap(),
        Arc::new(ReplayTransport::new(fixtures("openlibrary"))),
        RetryPolicy::immediate(3),
    )
}

fn fables(max: usize) -> ProviderQuery {
    ProviderQuery::new(Some("Fables"), Some("La Fontaine"), max).unwrap()
}

#[test]
fn sru_two_records() {
    let records = gallica().search(&fables(10)).unwrap();
    assert_eq!(records.len(), 2);
    let first = &records[0];
    assert_eq!(first.provider, Provider::GallicaLike);
    assert_eq!(first.provider_record_id, "ark:/12148/bpt6k5400563q");
    assert_eq!(first.title.as_deref(), Some("Fables de La Fontaine / illustrations par Gustave Doré"));
    assert_eq!(first.creator.as_deref(), Some("La Fontaine, Jean de (1621-1695). Auteur du texte"));
    assert_eq!(first.publisher.as_deref(), Some("L. Hachette (Paris)"));
    assert_eq!(first.date.as_deref(), Some("1868"));
    assert_eq!(first.access_url, "https://gallica.example.org/ark:/12148/bpt6k5400563q");

    let second = &records[1];
    assert_eq!(second.title.as_deref(), Some("Fables de La Fontaine & notices"));
    assert_eq!(second.publisher, None);
    assert_eq!(second.access_url, "https://gallica.example.org/ark:/12148/bpt6k6365489s");
}

#[test]
fn sru_truncates_to_max_results() {
    let records = gallica().search(&fables(1)).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].provider_record_id, "ark:/12148/bpt6k5400563q");
}

#[test]
fn empty_query_is_rejected_before_any_request() {
    let q = ProviderQuery { title: None, creator: None, year: Some("1868".into()), max_results: 10 };
    assert_eq!(gallica().search(&q), Err(ProviderError::EmptyQuery));
    assert_eq!(openlibrary().search(&q), Err(ProviderError::EmptyQuery));
}

#[test]
fn timeout_gives_network_error_after_three_attempts() {
    let q = ProviderQuery::new(Some("Timeout"), None, 10).unwrap();
    match gallica().search(&q) {
        Err(ProviderError::Network { attempts, source, .. }) => {
            assert_eq!(attempts, 3);
            assert_eq!(source, TransportError::Timeout);
        }
        other => panic!("expected network error, got {other:?}"),
    }
}

#[test]
fn sru_diagnostic_and_status_errors() {
    let q = ProviderQuery::new(Some("(("), None, 10).unwrap();
    assert!(matches!(gallica().search(&q), Err(ProviderError::Diagnostic { message, .. }) if message == "Query syntax error"));
    let q = ProviderQuery::new(Some("Broken"), None, 10).unwrap();
    assert!(matches!(gallica().search(&q), Err(ProviderError::Status { status: 503, .. })));
}

#[test]
fn missing_fixture_is_not_retried_as_network() {
    let q = ProviderQuery::new(Some("Never recorded"), None, 10).unwrap();
    assert!(matches!(
        gallica().search(&q),
        Err(ProviderError::Transport { source: TransportError::MissingFixture { .. }, .. })
    ));
}

#[test]
fn rest_zero_hits() {
    let q = ProviderQuery::new(Some("Nothing here"), None, 10).unwrap();
    assert_eq!(openlibrary().search(&q).unwrap(), vec![]);
}

#[test]
fn rest_missing_publisher_stays_absent() {
    let q = ProviderQuery::new(Some("Salammbô"), Some("Flaubert"), 10).unwrap();
    let records = openlibrary().search(&q).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].provider, Provider::OpenLibraryLike);
    assert_eq!(records[0].publisher.as_deref(), Some("Michel Lévy frères"));
    assert_eq!(records[0].creator.as_deref(), Some("Gustave Flaubert"));
    assert_eq!(records[0].date.as_deref(), Some("1863"));
    assert_eq!(records[0].access_url, "https://openlibrary.example.org/works/OL1102438W");
    assert_eq!(records[1].publisher, None);
}

#[test]
fn rest_sixty_hits_truncated_to_fifty() {
    let q = ProviderQuery::new(Some("Contes"), None, 50).unwrap();
    let records = openlibrary().search(&q).unwrap();
    assert_eq!(records.len(), 50);
    assert_eq!(records[0].title.as_deref(), Some("Contes, volume 1"));
    assert_eq!(records[49].title.as_deref(), Some("Contes, volume 50"));
}

#[test]
fn rest_non_json_is_malformed() {
    let q = ProviderQuery::new(Some("Fragment"), None, 10).unwrap();
    assert!(matches!(openlibrary().search(&q), Err(ProviderError::Malformed { .. })));
}

#[test]
fn replay_is_deterministic() {
    let render = |c: &dyn SearchProvider, q: &ProviderQuery| serde_json::to_vec(&c.search(q).unwrap()).unwrap();
    let q = fables(10);
    let a = render(&gallica(), &q);
    let b = render(&gallica(), &q);
    assert_eq!(a, b);
    let q = ProviderQuery::new(Some("Contes"), None, 50).unwrap();
    assert_eq!(render(&openlibrary(), &q), render(&openlibrary(), &q));
}

#[test]
fn concurrent_calls_share_one_client() {
    let client = Arc::new(gallica());
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let c = Arc::clone(&client);
            std::thread::spawn(move || c.search(&fables(10)).unwrap().len())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), 2);
    }
}
