//! The curator intake format: one CSV row per book.
//!
//! The header is fixed and ordered:
//!
//! ```text
//! library_slug,title,creator,date,publisher,language,shelf_mark,subjects,marks,rights
//! ```
//!
//! `subjects` holds RAMEAU headings separated by `||`. `marks` holds reading
//! mark descriptors `kind:locus[:transcription]` separated by `;`. `rights`
//! is empty or one of `public_domain`, `in_copyright`, `unknown`.
//!
//! Row problems never abort the parse: each data row yields exactly one
//! [`IngestRow`] or one [`RowError`].

use serde::Serialize;
use thiserror::Error;

use super::rameau::{parse_rameau, RameauHeading};
use crate::assets::Rights;
use crate::catalog::{is_valid_slug, BibRecord, DcElement, DcName, MarkKind, ReadingMark};

pub const INGEST_HEADER: [&str; 10] = [
    "library_slug",
    "title",
    "creator",
    "date",
    "publisher",
    "language",
    "shelf_mark",
    "subjects",
    "marks",
    "rights",
];

pub const SUBJECT_SEPARATOR: &str = "||";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkDescriptor {
    pub kind: MarkKind,
    pub locus: String,
    pub transcription: Option<String>,
}

impl MarkDescriptor {
    pub fn into_mark(self) -> ReadingMark {
        ReadingMark {
            kind: self.kind,
            locus: self.locus,
            transcription: self.transcription,
            asset_ids: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestRow {
    /// 1-based line in the source file where the row starts.
    pub line: u64,
    pub library_slug: String,
    pub title: String,
    pub creator: Option<String>,
    pub date: Option<String>,
    pub publisher: Option<String>,
    pub language: Option<String>,
    pub shelf_mark: Option<String>,
    pub subjects: Vec<RameauHeading>,
    pub marks: Vec<MarkDescriptor>,
    pub rights: Option<Rights>,
}

impl IngestRow {
    pub fn into_record(self, record_id: String, datestamp: String) -> BibRecord {
        let mut elements = vec![DcElement::new(DcName::Title, self.title)];
        let optional = [
            (DcName::Creator, self.creator),
            (DcName::Date, self.date),
            (DcName::Publisher, self.publisher),
            (DcName::Language, self.language),
        ];
        elements.extend(optional.into_iter().filter_map(|(n, v)| v.map(|v| DcElement::new(n, v))));
        elements.extend(self.subjects.iter().map(|s| DcElement::new(DcName::Subject, s.to_string())));
        if let Some(r) = self.rights {
            elements.push(DcElement::new(DcName::Rights, r.as_str()));
        }
        BibRecord {
            record_id,
            library_slug: self.library_slug,
            datestamp,
            elements,
            shelf_mark: self.shelf_mark,
            marks: self.marks.into_iter().map(MarkDescriptor::into_mark).collect(),
            surrogates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestParse {
    pub rows: Vec<IngestRow>,
    pub errors: Vec<RowError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeaderError {
    #[error("input is empty; expected header {}", INGEST_HEADER.join(","))]
    Empty,
    #[error("header is missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("header must be exactly {}; found {}", INGEST_HEADER.join(","), .0)]
    Mismatch(String),
}

/// Parse one mark descriptor list, e.g. `Dedication:flyleaf:À Claude Monet;DogEar:p. 12`.
pub fn parse_marks(cell: &str) -> Result<Vec<MarkDescriptor>, String> {
    let mut out = Vec::new();
    for (i, item) in cell.split(';').map(str::trim).enumerate() {
        if item.is_empty() {
            continue;
        }
        let mut parts = item.splitn(3, ':');
        let kind = parts.next().unwrap_or_default().trim();
        let kind: MarkKind = kind.parse().map_err(|e| format!("mark {}: {e}", i + 1))?;
        let locus = parts
            .next()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .ok_or_else(|| format!("mark {}: expected kind:locus[:transcription]", i + 1))?;
        let transcription = parts.next().map(str::trim).filter(|t| !t.is_empty()).map(str::to_owned);
        out.push(MarkDescriptor { kind, locus: locus.to_owned(), transcription });
    }
    Ok(out)
}

pub fn parse_subjects(cell: &str) -> Result<Vec<RameauHeading>, String> {
    cell.split(SUBJECT_SEPARATOR)
        .filter(|s| !s.trim().is_empty())
        .enumerate()
        .map(|(i, s)| parse_rameau(s).map_err(|e| format!("subject {}: {e}", i + 1)))
        .collect()
}

fn optional(cell: &str) -> Option<String> {
    let t = cell.trim();
    (!t.is_empty()).then(|| t.to_owned())
}

fn parse_row(line: u64, fields: &[&str]) -> Result<IngestRow, String> {
    if fields.len() != INGEST_HEADER.len() {
        return Err(format!("expected {} fields, found {}", INGEST_HEADER.len(), fields.len()));
    }
    let library_slug = fields[0].trim();
    if library_slug.is_empty() {
        return Err("library_slug mandatory".into());
    }
    if !is_valid_slug(library_slug) {
        return Err(format!("invalid library_slug {library_slug:?}"));
    }
    let title = fields[1].trim();
    if title.is_empty() {
        return Err("title mandatory".into());
    }
    let rights = match fields[9].trim() {
        "" => None,
        r => Some(r.parse::<Rights>()?),
    };
    Ok(IngestRow {
        line,
        library_slug: library_slug.to_owned(),
        title: title.to_owned(),
        creator: optional(fields[2]),
        date: optional(fields[3]),
        publisher: optional(fields[4]),
        language: optional(fields[5]),
        shelf_mark: optional(fields[6]),
        subjects: parse_subjects(fields[7])?,
        marks: parse_marks(fields[8])?,
        rights,
    })
}

/// Parse an ingest CSV. Only a bad header fails the whole file.
pub fn parse_ingest_csv(bytes: &[u8]) -> Result<IngestParse, HeaderError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.byte_records();

    let header = match records.next() {
        None => return Err(HeaderError::Empty),
        Some(Err(e)) => return Err(HeaderError::Mismatch(e.to_string())),
        Some(Ok(h)) => h,
    };
    let found: Vec<String> = header.iter().map(|c| String::from_utf8_lossy(c).trim().to_owned()).collect();
    if found != INGEST_HEADER {
        let missing: Vec<String> = INGEST_HEADER
            .iter()
            .filter(|c| !found.iter().any(|f| f == *c))
            .map(|c| c.to_string())
            .collect();
        return Err(if missing.is_empty() {
            HeaderError::Mismatch(found.join(","))
        } else {
            HeaderError::MissingColumns(missing)
        });
    }

    let mut out = IngestParse::default();
    for result in records {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.errors.push(RowError { line, reason: format!("unreadable row: {e}") });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fields: Result<Vec<&str>, _> = record.iter().map(std::str::from_utf8).collect();
        let parsed = fields
            .map_err(|_| "row is not valid UTF-8".to_owned())
            .and_then(|f| parse_row(line, &f));
        match parsed {
            Ok(row) => out.rows.push(row),
            Err(reason) => out.errors.push(RowError { line, reason }),
        }
    }
    Ok(out)
}
