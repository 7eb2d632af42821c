//! Batch edition matching of one library against the configured providers.

use alp_core::catalog::{BibRecord, DcName};
use alp_core::matcher::{attach_surrogate, classify, report_row, MatchConfig, MatchReport, REPORT_CSV_HEADER};
use alp_core::store::WriterLock;
use alp_core::{Store, StoreError};
use alp_providers::{ProviderError, ProviderQuery, SearchProvider};

/// Verdict column value for a record whose provider lookup failed.
pub const PROVIDER_ERROR: &str = "provider_error";

#[derive(Debug, Clone, PartialEq)]
pub enum BatchRow {
    Report(MatchReport),
    ProviderError { record_id: String, provider: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutcome {
    pub rows: Vec<BatchRow>,
    /// Surrogates newly attached by this run.
    pub attached: usize,
    pub provider_errors: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("unknown library {0:?}")]
    UnknownLibrary(String),
    #[error("no providers are configured")]
    NoProviders,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// The provider query for a record: main title, creator surname, year.
pub fn query_for(record: &BibRecord, max_results: usize) -> Result<ProviderQuery, ProviderError> {
    let creator = record.first(DcName::Creator).map(|c| c.split(',').next().unwrap_or(c).trim());
    let year = record.year().map(|y| y.to_string());
    Ok(ProviderQuery::new(record.main_title(), creator, max_results)?.with_year(year.as_deref()))
}

fn lookup(
    record: &BibRecord,
    providers: &[(String, Box<dyn SearchProvider>)],
    max_results: usize,
) -> Result<Vec<alp_core::matcher::ProviderRecord>, (String, ProviderError)> {
    let q = query_for(record, max_results).map_err(|e| (String::new(), e))?;
    let mut candidates = Vec::new();
    for (name, provider) in providers {
        candidates.extend(provider.search(&q).map_err(|e| (name.clone(), e))?);
    }
    Ok(candidates)
}

/// Match every record of `slug` that has no surrogate yet and attach the
/// chosen candidate unless the verdict is no-match. Provider failures are
/// reported per record; such records are left untouched for a later run.
pub fn match_library(
    store: &Store,
    lock: &WriterLock,
    slug: &str,
    providers: &[(String, Box<dyn SearchProvider>)],
    config: &MatchConfig,
    max_results: usize,
) -> Result<BatchOutcome, BatchError> {
    if providers.is_empty() {
        return Err(BatchError::NoProviders);
    }
    if !store.read_libraries()?.iter().any(|l| l.slug == slug) {
        return Err(BatchError::UnknownLibrary(slug.to_owned()));
    }
    let mut records = store.read_collection(slug)?;
    let mut outcome = BatchOutcome::default();
    for record in records.iter_mut().filter(|r| r.surrogates.is_empty()) {
        match lookup(record, providers, max_results) {
            Ok(candidates) => {
                let report = classify(record, &candidates, config);
                if report.verdict.level().is_some() && attach_surrogate(record, &report).unwrap_or(false) {
                    outcome.attached += 1;
                }
                outcome.rows.push(BatchRow::Report(report));
            }
            Err((provider, e)) => {
                log::warn!("{}: {e}", record.record_id);
                outcome.provider_errors += 1;
                outcome.rows.push(BatchRow::ProviderError {
                    record_id: record.record_id.clone(),
                    provider,
                    message: e.to_string(),
                });
            }
        }
    }
    if outcome.attached > 0 {
        store.write_collection(lock, slug, &records)?;
    }
    Ok(outcome)
}

/// The review sheet: matcher rows, plus `provider_error` rows naming the
/// provider that failed.
pub fn write_batch_csv<W: std::io::Write>(out: W, rows: &[BatchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER)?;
    for row in rows {
        match row {
            BatchRow::Report(r) => w.write_record(report_row(r))?,
            BatchRow::ProviderError { record_id, provider, .. } => {
                w.write_record([record_id.as_str(), provider, "", "", "", "", "", "", PROVIDER_ERROR])?
            }
        }
    }
    w.flush()?;
    Ok(())
}
