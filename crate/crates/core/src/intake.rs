//! CSV intake into the store: parse, assign ids, validate, append.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{assign_id, validate_record, BibRecord};
use crate::dc::ingest::{parse_ingest_csv, HeaderError, IngestRow, RowError};
use crate::store::{Store, StoreError, WriterLock};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    /// Ids of the records written, in input order.
    pub written: Vec<String>,
    pub rejected: Vec<RowError>,
}

#[derive(Debug, Error)]
pub enum IntakeError {
    #[error(transparent)]
    Header(#[from] HeaderError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Ingest a CSV file. Bad rows are reported and skipped; the good rows of
/// each library are appended in one write.
pub fn ingest_csv(
    store: &Store,
    lock: &WriterLock,
    bytes: &[u8],
    datestamp: &str,
) -> Result<IngestReport, IntakeError> {
    let parsed = parse_ingest_csv(bytes)?;
    let mut report = IngestReport { written: Vec::new(), rejected: parsed.errors };
    let known: BTreeSet<String> = store.read_libraries()?.into_iter().map(|l| l.slug).collect();

    let mut by_slug: BTreeMap<String, Vec<IngestRow>> = BTreeMap::new();
    for row in parsed.rows {
        if known.contains(&row.library_slug) {
            by_slug.entry(row.library_slug.clone()).or_default().push(row);
        } else {
            report.rejected.push(RowError {
                line: row.line,
                reason: format!("unknown library {:?}", row.library_slug),
            });
        }
    }

    let mut written: Vec<(u64, String)> = Vec::new();
    for (slug, rows) in by_slug {
        let mut max = store.max_sequence(&slug)?;
        let mut batch: Vec<BibRecord> = Vec::with_capacity(rows.len());
        let mut lines = Vec::with_capacity(rows.len());
        for row in rows {
            let line = row.line;
            let id = match assign_id(&slug, max) {
                Ok(id) => id,
                Err(e) => {
                    report.rejected.push(RowError { line, reason: e.to_string() });
                    continue;
                }
            };
            let record = row.into_record(id, datestamp.to_owned());
            let violations = validate_record(&record, &known);
            if violations.is_empty() {
                max += 1;
                lines.push(line);
                batch.push(record);
            } else {
                let reason = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
                report.rejected.push(RowError { line, reason });
            }
        }
        if !batch.is_empty() {
            store.append_records(lock, &slug, &batch)?;
            written.extend(lines.into_iter().zip(batch.into_iter().map(|r| r.record_id)));
        }
    }
    written.sort();
    report.written = written.into_iter().map(|(_, id)| id).collect();
    report.rejected.sort_by_key(|e| e.line);
    Ok(report)
}
