//! OAI-PMH 2.0 data provider over a [`Snapshot`], plus a reader for the
//! `ListRecords`/`GetRecord` responses it produces.
//!
//! Every library is a set. Identifiers are `oai:<repository_id>:<record_id>`.
//! Protocol errors come back as `<error>` elements inside a normal response.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, NaiveDate, Utc};
use quick_xml::events::Event;
use quick_xml::name::{Namespace, ResolveResult};
use quick_xml::NsReader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{is_valid_datestamp, BibRecord, DcElement};
use crate::dc::xml::{escape, read_dc_body, to_oai_dc_xml, DcXmlError, OAI_DC_NS, OAI_DC_SCHEMA};
use crate::store::Snapshot;

pub const OAI_NS: &str = "http://www.openarchives.org/OAI/2.0/";
pub const OAI_SCHEMA: &str = "http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd";
pub const METADATA_PREFIX: &str = "oai_dc";
pub const DEFAULT_PAGE_SIZE: usize = 100;
const EPOCH: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OaiConfig {
    pub repository_id: String,
    pub repository_name: String,
    pub base_url: String,
    pub admin_email: String,
    pub page_size: usize,
}

impl Default for OaiConfig {
    fn default() -> Self {
        OaiConfig {
            repository_id: "artist-libraries.example.org".into(),
            repository_name: "Artist Libraries".into(),
            base_url: "http://localhost:8080/oai".into(),
            admin_email: "admin@example.org".into(),
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    BadArgument,
    BadResumptionToken,
    BadVerb,
    CannotDisseminateFormat,
    IdDoesNotExist,
    NoRecordsMatch,
    NoMetadataFormats,
    NoSetHierarchy,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadArgument => "badArgument",
            ErrorCode::BadResumptionToken => "badResumptionToken",
            ErrorCode::BadVerb => "badVerb",
            ErrorCode::CannotDisseminateFormat => "cannotDisseminateFormat",
            ErrorCode::IdDoesNotExist => "idDoesNotExist",
            ErrorCode::NoRecordsMatch => "noRecordsMatch",
            ErrorCode::NoMetadataFormats => "noMetadataFormats",
            ErrorCode::NoSetHierarchy => "noSetHierarchy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct OaiError {
    code: ErrorCode,
    message: String,
}

fn err(code: ErrorCode, message: impl Into<String>) -> OaiError {
    OaiError { code, message: message.into() }
}

/// Continuation state of a list request. Opaque on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResumptionToken {
    pub metadata_prefix: String,
    pub set_spec: Option<String>,
    pub from: Option<String>,
    pub until: Option<String>,
    pub offset: usize,
    pub snapshot_id: String,
}

impl ResumptionToken {
    pub fn encode(&self) -> String {
        URL_SAFE_NO_PAD.encode(serde_json::to_vec(self).expect("token serializes"))
    }

    pub fn decode(s: &str) -> Option<ResumptionToken> {
        let bytes = URL_SAFE_NO_PAD.decode(s).ok()?;
        let token: ResumptionToken = serde_json::from_slice(&bytes).ok()?;
        // only the canonical spelling is accepted
        (token.encode() == s).then_some(token)
    }
}

const VERBS: [&str; 6] = ["GetRecord", "Identify", "ListIdentifiers", "ListMetadataFormats", "ListRecords", "ListSets"];
const ARGS: [&str; 6] = ["identifier", "metadataPrefix", "from", "until", "set", "resumptionToken"];

struct Request<'a> {
    verb: &'a str,
    args: BTreeMap<&'a str, &'a str>,
}

impl Request<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.args.get(key).copied()
    }
}

fn parse_request(params: &[(String, String)]) -> Result<Request<'_>, OaiError> {
    let verbs: Vec<&str> = params.iter().filter(|(k, _)| k == "verb").map(|(_, v)| v.as_str()).collect();
    let verb = match verbs.as_slice() {
        [] => return Err(err(ErrorCode::BadVerb, "missing verb argument")),
        [v] if VERBS.contains(v) => *v,
        [v] => return Err(err(ErrorCode::BadVerb, format!("illegal verb {v:?}"))),
        _ => return Err(err(ErrorCode::BadVerb, "verb argument repeated")),
    };
    let mut args = BTreeMap::new();
    for (k, v) in params.iter().filter(|(k, _)| k != "verb") {
        if !ARGS.contains(&k.as_str()) {
            return Err(err(ErrorCode::BadArgument, format!("illegal argument {k:?}")));
        }
        if args.insert(k.as_str(), v.as_str()).is_some() {
            return Err(err(ErrorCode::BadArgument, format!("argument {k:?} repeated")));
        }
    }
    let (required, optional): (&[&str], &[&str]) = match verb {
        "Identify" => (&[], &[]),
        "ListMetadataFormats" => (&[], &["identifier"]),
        "ListSets" => (&[], &["resumptionToken"]),
        "GetRecord" => (&["identifier", "metadataPrefix"], &[]),
        _ => (&["metadataPrefix"], &["from", "until", "set"]),
    };
    let is_list = matches!(verb, "ListIdentifiers" | "ListRecords");
    if is_list && args.contains_key("resumptionToken") {
        if args.len() > 1 {
            return Err(err(ErrorCode::BadArgument, "resumptionToken is an exclusive argument"));
        }
        return Ok(Request { verb, args });
    }
    for k in args.keys() {
        if !required.contains(k) && !optional.contains(k) {
            return Err(err(ErrorCode::BadArgument, format!("argument {k:?} is not allowed with {verb}")));
        }
    }
    if let Some(missing) = required.iter().find(|k| !args.contains_key(*k)) {
        return Err(err(ErrorCode::BadArgument, format!("missing required argument {missing:?}")));
    }
    Ok(Request { verb, args })
}

#[derive(Clone, Copy, PartialEq)]
enum Granularity {
    Day,
    Seconds,
}

/// Normalize a from/until argument to a full datestamp.
fn parse_bound(value: &str, upper: bool) -> Option<(String, Granularity)> {
    if is_valid_datestamp(value) {
        return Some((value.to_owned(), Granularity::Seconds));
    }
    if value.len() == 10 && NaiveDate::parse_from_str(value, "%Y-%m-%d").is_ok() {
        let time = if upper { "23:59:59" } else { "00:00:00" };
        return Some((format!("{value}T{time}Z"), Granularity::Day));
    }
    None
}

struct ListQuery {
    metadata_prefix: String,
    set_spec: Option<String>,
    from: Option<String>,
    until: Option<String>,
    offset: usize,
}

fn list_query(snapshot: &Snapshot, req: &Request<'_>) -> Result<ListQuery, OaiError> {
    if let Some(raw) = req.get("resumptionToken") {
        let token = ResumptionToken::decode(raw)
            .ok_or_else(|| err(ErrorCode::BadResumptionToken, "the resumption token is not valid"))?;
        if token.snapshot_id != snapshot.snapshot_id() {
            return Err(err(ErrorCode::BadResumptionToken, "the resumption token has expired"));
        }
        return Ok(ListQuery {
            metadata_prefix: token.metadata_prefix,
            set_spec: token.set_spec,
            from: token.from,
            until: token.until,
            offset: token.offset,
        });
    }
    let mut from = None;
    let mut until = None;
    if let Some(v) = req.get("from") {
        from = Some(parse_bound(v, false).ok_or_else(|| err(ErrorCode::BadArgument, format!("bad from date {v:?}")))?);
    }
    if let Some(v) = req.get("until") {
        until = Some(parse_bound(v, true).ok_or_else(|| err(ErrorCode::BadArgument, format!("bad until date {v:?}")))?);
    }
    if let (Some((f, gf)), Some((u, gu))) = (&from, &until) {
        if gf != gu {
            return Err(err(ErrorCode::BadArgument, "from and until have different granularities"));
        }
        if f > u {
            return Err(err(ErrorCode::BadArgument, "from is later than until"));
        }
    }
    Ok(ListQuery {
        metadata_prefix: req.get("metadataPrefix").unwrap_or_default().to_owned(),
        set_spec: req.get("set").map(str::to_owned),
        from: from.map(|(s, _)| s),
        until: until.map(|(s, _)| s),
        offset: 0,
    })
}

fn check_prefix(prefix: &str) -> Result<(), OaiError> {
    if prefix == METADATA_PREFIX {
        Ok(())
    } else {
        Err(err(ErrorCode::CannotDisseminateFormat, format!("metadata format {prefix:?} is not supported")))
    }
}

fn record_identifier(config: &OaiConfig, record_id: &str) -> String {
    format!("oai:{}:{}", config.repository_id, record_id)
}

fn lookup<'s>(snapshot: &'s Snapshot, config: &OaiConfig, identifier: &str) -> Result<&'s BibRecord, OaiError> {
    let prefix = format!("oai:{}:", config.repository_id);
    identifier
        .strip_prefix(&prefix)
        .and_then(|id| snapshot.record(id))
        .ok_or_else(|| err(ErrorCode::IdDoesNotExist, format!("no item {identifier:?}")))
}

fn write_header(out: &mut String, config: &OaiConfig, record: &BibRecord) {
    let _ = write!(
        out,
        "<header><identifier>{}</identifier><datestamp>{}</datestamp><setSpec>{}</setSpec></header>",
        escape(&record_identifier(config, &record.record_id)),
        record.datestamp,
        escape(&record.library_slug),
    );
}

fn write_record(out: &mut String, config: &OaiConfig, record: &BibRecord) {
    out.push_str("<record>");
    write_header(out, config, record);
    out.push_str("<metadata>");
    out.push_str(&to_oai_dc_xml(&record.elements));
    out.push_str("</metadata></record>");
}

fn identify(snapshot: &Snapshot, config: &OaiConfig) -> String {
    let earliest = snapshot.records().iter().map(|r| r.datestamp.as_str()).min().unwrap_or(EPOCH);
    format!(
        "<Identify><repositoryName>{}</repositoryName><baseURL>{}</baseURL>\
         <protocolVersion>2.0</protocolVersion><adminEmail>{}</adminEmail>\
         <earliestDatestamp>{earliest}</earliestDatestamp><deletedRecord>no</deletedRecord>\
         <granularity>YYYY-MM-DDThh:mm:ssZ</granularity></Identify>",
        escape(&config.repository_name),
        escape(&config.base_url),
        escape(&config.admin_email),
    )
}

fn list_metadata_formats(snapshot: &Snapshot, config: &OaiConfig, req: &Request<'_>) -> Result<String, OaiError> {
    if let Some(id) = req.get("identifier") {
        lookup(snapshot, config, id)?;
    }
    Ok(format!(
        "<ListMetadataFormats><metadataFormat><metadataPrefix>{METADATA_PREFIX}</metadataPrefix>\
         <schema>{OAI_DC_SCHEMA}</schema><metadataNamespace>{OAI_DC_NS}</metadataNamespace>\
         </metadataFormat></ListMetadataFormats>"
    ))
}

fn list_sets(snapshot: &Snapshot, req: &Request<'_>) -> Result<String, OaiError> {
    if req.get("resumptionToken").is_some() {
        return Err(err(ErrorCode::BadResumptionToken, "ListSets is never paged"));
    }
    if snapshot.libraries().is_empty() {
        return Err(err(ErrorCode::NoSetHierarchy, "the repository has no libraries"));
    }
    let mut out = String::from("<ListSets>");
    for lib in snapshot.libraries() {
        let _ = write!(
            out,
            "<set><setSpec>{}</setSpec><setName>{}</setName></set>",
            escape(&lib.slug),
            escape(&lib.artist_name)
        );
    }
    out.push_str("</ListSets>");
    Ok(out)
}

fn list(snapshot: &Snapshot, config: &OaiConfig, req: &Request<'_>, with_metadata: bool) -> Result<String, OaiError> {
    let q = list_query(snapshot, req)?;
    check_prefix(&q.metadata_prefix)?;
    let matching: Vec<&BibRecord> = snapshot
        .records()
        .iter()
        .filter(|r| q.set_spec.as_ref().is_none_or(|s| &r.library_slug == s))
        .filter(|r| q.from.as_ref().is_none_or(|f| r.datestamp.as_str() >= f.as_str()))
        .filter(|r| q.until.as_ref().is_none_or(|u| r.datestamp.as_str() <= u.as_str()))
        .collect();
    if matching.is_empty() {
        return Err(err(ErrorCode::NoRecordsMatch, "no records match the request"));
    }
    if q.offset >= matching.len() {
        return Err(err(ErrorCode::BadResumptionToken, "the resumption token is out of range"));
    }

    let page_size = config.page_size.max(1);
    let end = (q.offset + page_size).min(matching.len());
    let tag = if with_metadata { "ListRecords" } else { "ListIdentifiers" };
    let mut out = format!("<{tag}>");
    for record in &matching[q.offset..end] {
        if with_metadata {
            write_record(&mut out, config, record);
        } else {
            write_header(&mut out, config, record);
        }
    }
    let size = matching.len();
    if end < size {
        let token = ResumptionToken {
            metadata_prefix: q.metadata_prefix,
            set_spec: q.set_spec,
            from: q.from,
            until: q.until,
            offset: end,
            snapshot_id: snapshot.snapshot_id().to_owned(),
        };
        let _ = write!(
            out,
            "<resumptionToken completeListSize=\"{size}\" cursor=\"{}\">{}</resumptionToken>",
            q.offset,
            token.encode()
        );
    } else if q.offset > 0 {
        let _ = write!(out, "<resumptionToken completeListSize=\"{size}\" cursor=\"{}\"/>", q.offset);
    }
    let _ = write!(out, "</{tag}>");
    Ok(out)
}

fn get_record(snapshot: &Snapshot, config: &OaiConfig, req: &Request<'_>) -> Result<String, OaiError> {
    let record = lookup(snapshot, config, req.get("identifier").unwrap_or_default())?;
    check_prefix(req.get("metadataPrefix").unwrap_or_default())?;
    let mut out = String::from("<GetRecord>");
    write_record(&mut out, config, record);
    out.push_str("</GetRecord>");
    Ok(out)
}

/// Answer one OAI-PMH request. `params` are the decoded query or form pairs
/// in arrival order. The result is a complete XML document.
pub fn handle_oai(snapshot: &Snapshot, config: &OaiConfig, params: &[(String, String)], now: DateTime<Utc>) -> String {
    let parsed = parse_request(params);
    let body = parsed.as_ref().map_err(Clone::clone).and_then(|req| match req.verb {
        "Identify" => Ok(identify(snapshot, config)),
        "ListMetadataFormats" => list_metadata_formats(snapshot, config, req),
        "ListSets" => list_sets(snapshot, req),
        "ListIdentifiers" => list(snapshot, config, req, false),
        "ListRecords" => list(snapshot, config, req, true),
        _ => get_record(snapshot, config, req),
    });

    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = write!(
        out,
        "<OAI-PMH xmlns=\"{OAI_NS}\" xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"{OAI_NS} {OAI_SCHEMA}\">"
    );
    let _ = write!(out, "<responseDate>{}</responseDate>", now.format("%Y-%m-%dT%H:%M:%SZ"));

    // The request element only echoes arguments when the request was well formed.
    out.push_str("<request");
    if let Ok(req) = &parsed {
        let _ = write!(out, " verb=\"{}\"", req.verb);
        for (k, v) in &req.args {
            let _ = write!(out, " {k}=\"{}\"", escape(v));
        }
    }
    let _ = write!(out, ">{}</request>", escape(&config.base_url));

    match body {
        Ok(body) => out.push_str(&body),
        Err(e) => {
            let _ = write!(out, "<error code=\"{}\">{}</error>", e.code.as_str(), escape(&e.message));
        }
    }
    out.push_str("</OAI-PMH>\n");
    out
}

/// One record read back from a harvest response.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestedRecord {
    pub identifier: String,
    pub datestamp: String,
    pub set_specs: Vec<String>,
    pub elements: Vec<DcElement>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HarvestPage {
    pub records: Vec<HarvestedRecord>,
    /// Non-empty token text, when more pages follow.
    pub resumption_token: Option<String>,
    /// `(code, message)` pairs.
    pub errors: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Metadata(#[from] DcXmlError),
}

impl From<quick_xml::Error> for HarvestError {
    fn from(e: quick_xml::Error) -> Self {
        HarvestError::Malformed(e.to_string())
    }
}

fn in_ns(res: &ResolveResult<'_>, ns: &str) -> bool {
    matches!(res, ResolveResult::Bound(Namespace(n)) if *n == ns.as_bytes())
}

fn read_text(reader: &mut NsReader<&[u8]>) -> Result<String, HarvestError> {
    let mut text = String::new();
    loop {
        match reader.read_event()? {
            Event::Text(t) => text.push_str(&t.unescape().map_err(|e| HarvestError::Malformed(e.to_string()))?),
            Event::CData(c) => text.push_str(&String::from_utf8_lossy(&c)),
            Event::End(_) => return Ok(text),
            Event::Eof => return Err(HarvestError::Malformed("unexpected end of document".into())),
            Event::Start(_) | Event::Empty(_) => {
                return Err(HarvestError::Malformed("unexpected markup in text element".into()))
            }
            _ => {}
        }
    }
}

/// Parse a `ListRecords` or `GetRecord` response.
pub fn parse_harvest_page(xml: &str) -> Result<HarvestPage, HarvestError> {
    let mut reader = NsReader::from_str(xml);
    let mut page = HarvestPage::default();
    let mut current: Option<HarvestedRecord> = None;
    loop {
        let (res, event) = reader.read_resolved_event()?;
        match event {
            Event::Start(start) => {
                let start = start.into_owned();
                let local = start.local_name();
                if in_ns(&res, OAI_DC_NS) && local.as_ref() == b"dc" {
                    let elements = read_dc_body(&mut reader, &start)?;
                    if let Some(r) = current.as_mut() {
                        r.elements = elements;
                    }
                    continue;
                }
                if !in_ns(&res, OAI_NS) {
                    continue;
                }
                match local.as_ref() {
                    b"record" => {
                        current = Some(HarvestedRecord {
                            identifier: String::new(),
                            datestamp: String::new(),
                            set_specs: vec![],
                            elements: vec![],
                        })
                    }
                    b"identifier" | b"datestamp" | b"setSpec" if current.is_some() => {
                        let text = read_text(&mut reader)?;
                        let r = current.as_mut().expect("checked");
                        match local.as_ref() {
                            b"identifier" => r.identifier = text,
                            b"datestamp" => r.datestamp = text,
                            _ => r.set_specs.push(text),
                        }
                    }
                    b"resumptionToken" => {
                        let text = read_text(&mut reader)?;
                        if !text.is_empty() {
                            page.resumption_token = Some(text);
                        }
                    }
                    b"error" => {
                        let code = start
                            .try_get_attribute("code")
                            .map_err(|e| HarvestError::Malformed(e.to_string()))?
                            .map(|a| String::from_utf8_lossy(&a.value).into_owned())
                            .unwrap_or_default();
                        page.errors.push((code, read_text(&mut reader)?));
                    }
                    _ => {}
                }
            }
            Event::Empty(start) if in_ns(&res, OAI_NS) && start.local_name().as_ref() == b"error" => {
                let code = start
                    .try_get_attribute("code")
                    .map_err(|e| HarvestError::Malformed(e.to_string()))?
                    .map(|a| String::from_utf8_lossy(&a.value).into_owned())
                    .unwrap_or_default();
                page.errors.push((code, String::new()));
            }
            Event::End(end) if in_ns(&res, OAI_NS) && end.local_name().as_ref() == b"record" => {
                page.records.extend(current.take());
            }
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(page)
}
