//! Open Library style `search.json` client.

use std::sync::Arc;

use alp_core::matcher::ProviderRecord;
use alp_core::Provider;
use serde::Deserialize;
use url::Url;

use crate::{ProviderError, ProviderQuery, RetryPolicy, SearchProvider, Transport};

#[derive(Debug, Deserialize)]
struct SearchJson {
    docs: Vec<Doc>,
}

#[derive(Debug, Deserialize)]
struct Doc {
    key: String,
    title: Option<String>,
    #[serde(default)]
    author_name: Vec<String>,
    first_publish_year: Option<i64>,
    #[serde(default)]
    publisher: Vec<String>,
}

pub fn request_url(endpoint: &Url, q: &ProviderQuery) -> Url {
    let mut url = endpoint.clone();
    {
        let mut pairs = url.query_pairs_mut();
        if let Some(t) = &q.title {
            pairs.append_pair("title", t);
        }
        if let Some(c) = &q.creator {
            pairs.append_pair("author", c);
        }
        pairs.append_pair("limit", &q.max_results.to_string());
    }
    url
}

/// Document keys are resolved against `endpoint` to form access URLs.
pub fn parse_response(endpoint: &Url, body: &str) -> Result<Vec<ProviderRecord>, String> {
    let parsed: SearchJson = serde_json::from_str(body).map_err(|e| e.to_string())?;
    parsed
        .docs
        .into_iter()
        .map(|d| {
            let access_url = endpoint.join(&d.key).map_err(|e| format!("bad key {:?}: {e}", d.key))?;
            Ok(ProviderRecord {
                provider: Provider::OpenLibraryLike,
                provider_record_id: d.key,
                title: d.title,
                creator: d.author_name.into_iter().next(),
                date: d.first_publish_year.map(|y| y.to_string()),
                publisher: d.publisher.into_iter().next(),
                access_url: access_url.to_string(),
            })
        })
        .collect()
}

pub struct RestClient {
    endpoint: Url,
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
}

impl RestClient {
    pub fn new(endpoint: Url, transport: Arc<dyn Transport>, retry: RetryPolicy) -> Self {
        RestClient { endpoint, transport, retry }
    }
}

impl SearchProvider for RestClient {
    fn provider(&self) -> Provider {
        Provider::OpenLibraryLike
    }

    fn search(&self, q: &ProviderQuery) -> Result<Vec<ProviderRecord>, ProviderError> {
        q.validate()?;
        let url = request_url(&self.endpoint, q);
        let body = self.retry.fetch(self.transport.as_ref(), &url)?;
        let mut records = parse_response(&self.endpoint, &body)
            .map_err(|message| ProviderError::Malformed { url: url.to_string(), message })?;
        records.truncate(q.max_results);
        Ok(records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_and_parse() {
        let endpoint = Url::parse("https://books.example.org/search.json").unwrap();
        let q = ProviderQuery::new(Some("Fables"), Some("La Fontaine"), 5).unwrap();
        assert_eq!(
            request_url(&endpoint, &q).as_str(),
            "https://books.example.org/search.json?title=Fables&author=La+Fontaine&limit=5"
        );
        let body = r#"{"numFound":1,"docs":[{"key":"/works/OL1W","title":"Fables","author_name":["Jean de La Fontaine"],"first_publish_year":1868}]}"#;
        let r = parse_response(&endpoint, body).unwrap();
        assert_eq!(r[0].access_url, "https://books.example.org/works/OL1W");
        assert_eq!(r[0].date.as_deref(), Some("1868"));
        assert_eq!(r[0].publisher, None);
    }

    #[test]
    fn not_json_is_error() {
        let endpoint = Url::parse("https://books.example.org/search.json").unwrap();
        assert!(parse_response(&endpoint, "<html/>").is_err());
    }
}
