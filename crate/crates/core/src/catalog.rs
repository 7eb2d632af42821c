//! Domain types for artist libraries and their bibliographic records.
//!
//! A [`BibRecord`] is one book in one artist's library. Its descriptive
//! metadata is an ordered list of qualified Dublin Core triples
//! ([`DcElement`]); copy-level facts that Dublin Core cannot express (shelf
//! placement, reading marks, links to digitized surrogates) are first-class
//! fields on the record.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The fifteen elements of the Dublin Core Metadata Element Set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcName {
    Contributor,
    Coverage,
    Creator,
    Date,
    Description,
    Format,
    Identifier,
    Language,
    Publisher,
    Relation,
    Rights,
    Source,
    Subject,
    Title,
    Type,
}

impl DcName {
    pub const ALL: [DcName; 15] = [
        DcName::Contributor,
        DcName::Coverage,
        DcName::Creator,
        DcName::Date,
        DcName::Description,
        DcName::Format,
        DcName::Identifier,
        DcName::Language,
        DcName::Publisher,
        DcName::Relation,
        DcName::Rights,
        DcName::Source,
        DcName::Subject,
        DcName::Title,
        DcName::Type,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DcName::Contributor => "contributor",
            DcName::Coverage => "coverage",
            DcName::Creator => "creator",
            DcName::Date => "date",
            DcName::Description => "description",
            DcName::Format => "format",
            DcName::Identifier => "identifier",
            DcName::Language => "language",
            DcName::Publisher => "publisher",
            DcName::Relation => "relation",
            DcName::Rights => "rights",
            DcName::Source => "source",
            DcName::Subject => "subject",
            DcName::Title => "title",
            DcName::Type => "type",
        }
    }
}

impl fmt::Display for DcName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal Dublin Core element name {0:?}")]
pub struct IllegalElement(pub String);

impl FromStr for DcName {
    type Err = IllegalElement;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DcName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| IllegalElement(s.to_owned()))
    }
}

/// One qualified Dublin Core statement.
///
/// `element` is kept as the raw name so that records carrying an illegal
/// name can still be loaded and reported by [`validate_record`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcElement {
    pub element: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl DcElement {
    pub fn new(element: DcName, value: impl Into<String>) -> Self {
        DcElement {
            element: element.as_str().to_owned(),
            qualifier: None,
            value: value.into(),
            lang: None,
        }
    }

    pub fn qualified(element: DcName, qualifier: &str, value: impl Into<String>) -> Self {
        DcElement {
            qualifier: Some(qualifier.to_owned()),
            ..DcElement::new(element, value)
        }
    }

    pub fn with_lang(mut self, lang: &str) -> Self {
        self.lang = Some(lang.to_owned());
        self
    }

    pub fn name(&self) -> Option<DcName> {
        self.element.parse().ok()
    }

    pub fn is(&self, name: DcName) -> bool {
        self.element == name.as_str()
    }
}

/// The physical trace that individualizes a copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkKind {
    Dedication,
    Annotation,
    PriceAnnotation,
    DogEar,
    Bookmark,
    Erasure,
}

impl MarkKind {
    pub const ALL: [MarkKind; 6] = [
        MarkKind::Dedication,
        MarkKind::Annotation,
        MarkKind::PriceAnnotation,
        MarkKind::DogEar,
        MarkKind::Bookmark,
        MarkKind::Erasure,
    ];

    /// Snake-case name, also used as the `marktype` search facet value.
    pub fn as_str(self) -> &'static str {
        match self {
            MarkKind::Dedication => "dedication",
            MarkKind::Annotation => "annotation",
            MarkKind::PriceAnnotation => "price_annotation",
            MarkKind::DogEar => "dog_ear",
            MarkKind::Bookmark => "bookmark",
            MarkKind::Erasure => "erasure",
        }
    }
}

impl fmt::Display for MarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown reading mark kind {0:?}")]
pub struct UnknownMarkKind(pub String);

impl FromStr for MarkKind {
    type Err = UnknownMarkKind;

    /// Accepts `DogEar`, `dog_ear`, `dogear` and other case variants.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        MarkKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().replace('_', "") == squashed)
            .ok_or_else(|| UnknownMarkKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadingMark {
    pub kind: MarkKind,
    /// Page or position in the book, free text.
    pub locus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcription: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub asset_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    GallicaLike,
    OpenLibraryLike,
    Fixture,
}

impl Provider {
    pub fn as_str(self) -> &'static str {
        match self {
            Provider::GallicaLike => "gallica_like",
            Provider::OpenLibraryLike => "open_library_like",
            Provider::Fixture => "fixture",
        }
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How closely a digitized surrogate reproduces the artist's copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLevel {
    ExactEdition,
    ApproximateEdition,
}

impl MatchLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchLevel::ExactEdition => "exact_edition",
            MatchLevel::ApproximateEdition => "approximate_edition",
        }
    }
}

/// Link from a record to a provider's digitized edition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalSurrogate {
    pub provider: Provider,
    pub provider_record_id: String,
    pub access_url: String,
    pub match_level: MatchLevel,
    pub total_score: f64,
}

/// One book in one artist's library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BibRecord {
    pub record_id: String,
    pub library_slug: String,
    /// Ingest timestamp, `YYYY-MM-DDThh:mm:ssZ`. Serves as the OAI-PMH datestamp.
    pub datestamp: String,
    pub elements: Vec<DcElement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shelf_mark: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub marks: Vec<ReadingMark>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub surrogates: Vec<DigitalSurrogate>,
}

impl BibRecord {
    /// Values of every element with the given name, in stored order.
    pub fn values(&self, name: DcName) -> impl Iterator<Item = &str> {
        self.elements
            .iter()
            .filter(move |e| e.is(name))
            .map(|e| e.value.as_str())
    }

    pub fn first(&self, name: DcName) -> Option<&str> {
        self.values(name).next()
    }

    /// The main title: first unqualified title, else the first title at all.
    pub fn main_title(&self) -> Option<&str> {
        self.elements
            .iter()
            .find(|e| e.is(DcName::Title) && e.qualifier.is_none())
            .or_else(|| self.elements.iter().find(|e| e.is(DcName::Title)))
            .map(|e| e.value.as_str())
    }

    /// Year extracted from the first date element that carries one.
    pub fn year(&self) -> Option<u16> {
        self.values(DcName::Date).find_map(crate::textnorm::extract_year)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The books themselves are physically preserved.
    MaterialFonds,
    Reconstituted,
    Inventory,
    SalesCatalog,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::MaterialFonds => "material_fonds",
            Provenance::Reconstituted => "reconstituted",
            Provenance::Inventory => "inventory",
            Provenance::SalesCatalog => "sales_catalog",
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Provenance::MaterialFonds,
            Provenance::Reconstituted,
            Provenance::Inventory,
            Provenance::SalesCatalog,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or_else(|| format!("unknown provenance type {s:?}"))
    }
}

/// An artist's collection and where it is held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtistLibrary {
    pub slug: String,
    pub artist_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub death_year: Option<i32>,
    pub provenance: Provenance,
    pub holding_site: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    #[serde(default)]
    pub description: String,
}

/// A broken invariant: which field, and which rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", content = "detail", rename_all = "snake_case")]
pub enum Rule {
    IllegalElementName(String),
    EmptyValue,
    IllegalCharacter,
    BadQualifier(String),
    BadLanguageTag(String),
    MissingTitle,
    BadRecordId(String),
    RecordIdLibraryMismatch,
    UnknownLibrary(String),
    BadDatestamp(String),
    UnknownAsset(String),
    BadSlug(String),
    HalfCoordinates,
    LatitudeOutOfRange,
    LongitudeOutOfRange,
    LifeYears,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::IllegalElementName(n) => write!(f, "illegal element name {n:?}"),
            Rule::EmptyValue => f.write_str("value is empty"),
            Rule::IllegalCharacter => f.write_str("value contains a character not allowed in XML"),
            Rule::BadQualifier(q) => write!(f, "qualifier {q:?} does not match [a-z][a-z0-9_]*"),
            Rule::BadLanguageTag(t) => write!(f, "malformed language tag {t:?}"),
            Rule::MissingTitle => f.write_str("missing title"),
            Rule::BadRecordId(id) => write!(f, "record id {id:?} does not match <slug>-<6 digits>"),
            Rule::RecordIdLibraryMismatch => f.write_str("record id does not start with the library slug"),
            Rule::UnknownLibrary(s) => write!(f, "unknown library {s:?}"),
            Rule::BadDatestamp(d) => write!(f, "datestamp {d:?} is not YYYY-MM-DDThh:mm:ssZ"),
            Rule::UnknownAsset(a) => write!(f, "asset {a:?} does not exist"),
            Rule::BadSlug(s) => write!(f, "slug {s:?} does not match [a-z0-9_]+"),
            Rule::HalfCoordinates => f.write_str("latitude and longitude must be given together"),
            Rule::LatitudeOutOfRange => f.write_str("latitude outside [-90, 90]"),
            Rule::LongitudeOutOfRange => f.write_str("longitude outside [-180, 180]"),
            Rule::LifeYears => f.write_str("birth year must precede death year"),
        }
    }
}

fn violation(field: impl Into<String>, rule: Rule) -> Violation {
    Violation { field: field.into(), rule }
}

pub fn is_valid_slug(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

pub fn is_valid_qualifier(q: &str) -> bool {
    let mut bytes = q.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_lowercase())
        && bytes.all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

/// Shallow BCP-47 shape check: alphabetic primary subtag, then alphanumeric
/// subtags of at most eight characters.
pub fn is_valid_lang_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let primary_ok = matches!(parts.next(), Some(p) if (1..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_alphabetic()));
    primary_ok && parts.all(|p| (1..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}

/// Characters allowed in an XML 1.0 document.
pub fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

/// Splits `monet-000042` into `("monet", 42)`.
pub fn parse_record_id(id: &str) -> Option<(&str, u32)> {
    let (slug, seq) = id.rsplit_once('-')?;
    if !is_valid_slug(slug) || seq.len() != 6 || !seq.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((slug, seq.parse().ok()?))
}

pub fn is_valid_datestamp(s: &str) -> bool {
    s.len() == 20 && chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%SZ").is_ok()
}

/// Check every record invariant. Never fails; an empty list means valid.
pub fn validate_record(record: &BibRecord, known_libraries: &BTreeSet<String>) -> Vec<Violation> {
    let mut out = Vec::new();

    match parse_record_id(&record.record_id) {
        None => out.push(violation("record_id", Rule::BadRecordId(record.record_id.clone()))),
        Some((slug, _)) if slug != record.library_slug => {
            out.push(violation("record_id", Rule::RecordIdLibraryMismatch))
        }
        Some(_) => {}
    }
    if !known_libraries.contains(&record.library_slug) {
        out.push(violation("library_slug", Rule::UnknownLibrary(record.library_slug.clone())));
    }
    if !is_valid_datestamp(&record.datestamp) {
        out.push(violation("datestamp", Rule::BadDatestamp(record.datestamp.clone())));
    }

    let mut has_title = false;
    for (i, e) in record.elements.iter().enumerate() {
        let field = format!("elements[{i}]");
        match e.name() {
            None => out.push(violation(&field, Rule::IllegalElementName(e.element.clone()))),
            Some(DcName::Title) => has_title = true,
            Some(_) => {}
        }
        if e.value.trim().is_empty() {
            out.push(violation(format!("{field}.value"), Rule::EmptyValue));
        }
        if !e.value.chars().all(is_xml_char) {
            out.push(violation(format!("{field}.value"), Rule::IllegalCharacter));
        }
        if let Some(q) = &e.qualifier {
            if !is_valid_qualifier(q) {
                out.push(violation(format!("{field}.qualifier"), Rule::BadQualifier(q.clone())));
            }
        }
        if let Some(lang) = &e.lang {
            if !is_valid_lang_tag(lang) {
                out.push(violation(format!("{field}.lang"), Rule::BadLanguageTag(lang.clone())));
            }
        }
    }
    if !has_title {
        out.push(violation("elements", Rule::MissingTitle));
    }
    out
}

/// Every asset id referenced from a reading mark must be registered.
pub fn validate_mark_assets(record: &BibRecord, known_assets: &BTreeSet<String>) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, mark) in record.marks.iter().enumerate() {
        for id in &mark.asset_ids {
            if !known_assets.contains(id) {
                out.push(violation(format!("marks[{i}].asset_ids"), Rule::UnknownAsset(id.clone())));
            }
        }
    }
    out
}

pub fn validate_library(library: &ArtistLibrary) -> Vec<Violation> {
    let mut out = Vec::new();
    if !is_valid_slug(&library.slug) {
        out.push(violation("slug", Rule::BadSlug(library.slug.clone())));
    }
    match (library.latitude, library.longitude) {
        (Some(lat), Some(lon)) => {
            if !(-90.0..=90.0).contains(&lat) {
                out.push(violation("latitude", Rule::LatitudeOutOfRange));
            }
            if !(-180.0..=180.0).contains(&lon) {
                out.push(violation("longitude", Rule::LongitudeOutOfRange));
            }
        }
        (None, None) => {}
        _ => out.push(violation("latitude", Rule::HalfCoordinates)),
    }
    if let (Some(b), Some(d)) = (library.birth_year, library.death_year) {
        if b >= d {
            out.push(violation("birth_year", Rule::LifeYears));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("record sequence for {slug:?} would exceed 999999")]
    Overflow { slug: String },
    #[error("invalid library slug {0:?}")]
    BadSlug(String),
}

pub const MAX_SEQUENCE: u32 = 999_999;

/// Next record id after `existing_max_seq` in a library.
pub fn assign_id(library_slug: &str, existing_max_seq: u32) -> Result<String, IdError> {
    if !is_valid_slug(library_slug) {
        return Err(IdError::BadSlug(library_slug.to_owned()));
    }
    if existing_max_seq >= MAX_SEQUENCE {
        return Err(IdError::Overflow { slug: library_slug.to_owned() });
    }
    Ok(format!("{library_slug}-{:06}", existing_max_seq + 1))
}
