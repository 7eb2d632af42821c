//! SRU 1.2 `searchRetrieve` with `oai_dc` records (Gallica-like).

use std::sync::Arc;

use alp_core::matcher::ProviderRecord;
use alp_core::Provider;
use quick_xml::events::Event;
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;
use url::Url;

use crate::{ProviderError, ProviderQuery, RetryPolicy, SearchProvider, Transport};

const SRW_NS: &[u8] = b"http://www.loc.gov/zing/srw/";
const DIAG_NS: &[u8] = b"http://www.loc.gov/zing/srw/diagnostic/";
const DC_NS: &[u8] = b"http://purl.org/dc/elements/1.1/";

/// Quote a CQL term, escaping `"` and `\`.
fn cql_term(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// `dc.title all "..." and dc.creator all "..."`
pub fn build_cql(q: &ProviderQuery) -> String {
    let mut clauses = Vec::new();
    if let Some(t) = &q.title {
        clauses.push(format!("dc.title all {}", cql_term(t)));
    }
    if let Some(c) = &q.creator {
        clauses.push(format!("dc.creator all {}", cql_term(c)));
    }
    clauses.join(" and ")
}

pub fn request_url(endpoint: &Url, q: &ProviderQuery) -> Url {
    let mut url = endpoint.clone();
    url.query_pairs_mut()
        .append_pair("version", "1.2")
        .append_pair("operation", "searchRetrieve")
        .append_pair("query", &build_cql(q))
        .append_pair("maximumRecords", &q.max_results.to_string())
        .append_pair("recordSchema", "dc")
        .append_pair("recordPacking", "xml");
    url
}

#[derive(Default)]
struct Acc {
    record_identifier: Option<String>,
    title: Option<String>,
    creator: Option<String>,
    date: Option<String>,
    publisher: Option<String>,
    identifiers: Vec<String>,
}

impl Acc {
    fn finish(self) -> Option<ProviderRecord> {
        let access_url = self.identifiers.iter().find(|i| i.starts_with("http://") || i.starts_with("https://"))?;
        Some(ProviderRecord {
            provider: Provider::GallicaLike,
            provider_record_id: self.record_identifier.unwrap_or_else(|| access_url.clone()),
            title: self.title,
            creator: self.creator,
            date: self.date,
            publisher: self.publisher,
            access_url: access_url.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SruParseError {
    Diagnostic(String),
    Malformed(String),
}

/// Parse a `searchRetrieveResponse`. Records without an http(s)
/// `dc:identifier` cannot be linked and are dropped.
pub fn parse_response(xml: &str) -> Result<Vec<ProviderRecord>, SruParseError> {
    parse(xml).map_err(SruParseError::Malformed)?
}

fn parse(xml: &str) -> Result<Result<Vec<ProviderRecord>, SruParseError>, String> {
    let mut reader = NsReader::from_str(xml);
    let mut path: Vec<(bool, Vec<u8>)> = Vec::new();
    let mut text = String::new();
    let mut current: Option<Acc> = None;
    let mut out = Vec::new();
    let mut diag_uri: Option<String> = None;
    let mut diag_message: Option<String> = None;
    let mut saw_root = false;

    loop {
        let (ns, event) = reader.read_resolved_event().map_err(|e| e.to_string())?;
        let ns = match ns {
            ResolveResult::Bound(n) => n.as_ref().to_vec(),
            _ => Vec::new(),
        };
        match event {
            Event::Start(s) => {
                let local = s.local_name().as_ref().to_vec();
                if path.is_empty() {
                    if ns != SRW_NS || local != b"searchRetrieveResponse" {
                        return Err("root is not an SRU searchRetrieveResponse".into());
                    }
                    saw_root = true;
                }
                if ns == SRW_NS && local == b"record" && path.last().is_some_and(|(_, l)| l == b"records") {
                    current = Some(Acc::default());
                }
                path.push((ns == DC_NS, local));
                text.clear();
            }
            Event::Empty(_) if path.is_empty() => {
                return Err("root is not an SRU searchRetrieveResponse".into());
            }
            Event::Text(t) => text.push_str(&t.unescape().map_err(|e| e.to_string())?),
            Event::CData(c) => text.push_str(&String::from_utf8_lossy(&c.into_inner())),
            Event::End(_) => {
                let (is_dc, local) = path.pop().ok_or("unbalanced end tag")?;
                let value = text.trim().to_owned();
                text.clear();
                if ns == DIAG_NS && local == b"message" {
                    diag_message.get_or_insert(value);
                } else if ns == DIAG_NS && local == b"uri" {
                    diag_uri.get_or_insert(value);
                } else if ns == SRW_NS && local == b"record" && current.is_some() && path.last().is_some_and(|(_, l)| l == b"records") {
                    if let Some(r) = current.take().and_then(Acc::finish) {
                        out.push(r);
                    }
                } else if let Some(acc) = current.as_mut() {
                    if ns == SRW_NS && local == b"recordIdentifier" && !value.is_empty() {
                        acc.record_identifier = Some(value);
                    } else if is_dc && !value.is_empty() {
                        let slot = match local.as_slice() {
                            b"title" => Some(&mut acc.title),
                            b"creator" => Some(&mut acc.creator),
                            b"date" => Some(&mut acc.date),
                            b"publisher" => Some(&mut acc.publisher),
                            b"identifier" => {
                                acc.identifiers.push(value.clone());
                                None
                            }
                            _ => None,
                        };
                        if let Some(slot) = slot {
                            slot.get_or_insert(value);
                        }
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_root {
        return Err("empty document".into());
    }
    if !path.is_empty() {
        return Err("unclosed element".into());
    }
    match diag_message.filter(|m| !m.is_empty()).or(diag_uri) {
        Some(d) if out.is_empty() => Ok(Err(SruParseError::Diagnostic(d))),
        _ => Ok(Ok(out)),
    }
}

pub struct SruClient {
    endpoint: Url,
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
}

impl SruClient {
    pub fn new(endpoint: Url, transport: Arc<dyn Transport>, retry: RetryPolicy) -> Self {
        SruClient { endpoint, transport, retry }
    }
}

impl SearchProvider for SruClient {
    fn provider(&self) -> Provider {
        Provider::GallicaLike
    }

    fn search(&self, q: &ProviderQuery) -> Result<Vec<ProviderRecord>, ProviderError> {
        q.validate()?;
        let url = request_url(&self.endpoint, q);
        let body = self.retry.fetch(self.transport.as_ref(), &url)?;
        let mut records = parse_response(&body).map_err(|e| match e {
            SruParseError::Diagnostic(message) => ProviderError::Diagnostic { url: url.to_string(), message },
            SruParseError::Malformed(message) => ProviderError::Malformed { url: url.to_string(), message },
        })?;
        records.truncate(q.max_results);
        Ok(records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cql_conjoins_and_escapes() {
        let q = ProviderQuery::new(Some("Les \"Fables\""), Some("La Fontaine"), 10).unwrap();
        assert_eq!(build_cql(&q), r#"dc.title all "Les \"Fables\"" and dc.creator all "La Fontaine""#);
        let q = ProviderQuery::new(None, Some("Doré"), 10).unwrap();
        assert_eq!(build_cql(&q), r#"dc.creator all "Doré""#);
    }

    #[test]
    fn request_url_is_encoded() {
        let q = ProviderQuery::new(Some("a b"), None, 7).unwrap();
        let url = request_url(&Url::parse("https://sru.example.org/SRU").unwrap(), &q);
        assert_eq!(
            url.as_str(),
            "https://sru.example.org/SRU?version=1.2&operation=searchRetrieve&query=dc.title+all+%22a+b%22&maximumRecords=7&recordSchema=dc&recordPacking=xml"
        );
    }

    #[test]
    fn diagnostic_without_records_is_an_error() {
        let xml = r#"<srw:searchRetrieveResponse xmlns:srw="http://www.loc.gov/zing/srw/"><srw:version>1.2</srw:version>
<srw:diagnostics><diag:diagnostic xmlns:diag="http://www.loc.gov/zing/srw/diagnostic/"><diag:uri>info:srw/diagnostic/1/10</diag:uri><diag:message>Query syntax error</diag:message></diag:diagnostic></srw:diagnostics></srw:searchRetrieveResponse>"#;
        assert_eq!(parse_response(xml), Err(SruParseError::Diagnostic("Query syntax error".into())));
    }

    #[test]
    fn wrong_root_is_malformed() {
        assert!(parse_response("<html><body/></html>").is_err());
        assert!(parse_response("").is_err());
    }
}
