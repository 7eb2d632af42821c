//! Search over a snapshot, and the derived index file.

use std::path::PathBuf;

use alp_core::query::{parse_query, Facets, Mode, QueryError, QueryNode, SearchHit, SearchIndex};
use alp_core::store::{atomic_write, WriterLock};
use alp_core::{Snapshot, Store, StoreError};
use serde::{Deserialize, Serialize};

pub const INDEX_FILE: &str = "index.json";

#[derive(Serialize, Deserialize)]
struct PersistedIndex {
    snapshot_id: String,
    index: SearchIndex,
}

pub fn index_path(store: &Store) -> PathBuf {
    store.root().join(INDEX_FILE)
}

/// Build the index for `snapshot` and replace the index file atomically.
pub fn write_index(store: &Store, _lock: &WriterLock, snapshot: &Snapshot) -> Result<SearchIndex, StoreError> {
    let persisted = PersistedIndex {
        snapshot_id: snapshot.snapshot_id().to_owned(),
        index: SearchIndex::build(snapshot.records()),
    };
    let bytes = serde_json::to_vec(&persisted).expect("index serializes");
    atomic_write(&index_path(store), &bytes)?;
    Ok(persisted.index)
}

/// The stored index when it was built from this exact snapshot, otherwise a
/// fresh one. The file is never trusted across store changes.
pub fn load_index(store: &Store, snapshot: &Snapshot) -> SearchIndex {
    let stored = std::fs::read(index_path(store))
        .ok()
        .and_then(|bytes| serde_json::from_slice::<PersistedIndex>(&bytes).ok())
        .filter(|p| p.snapshot_id == snapshot.snapshot_id());
    match stored {
        Some(p) => p.index,
        None => {
            log::info!("index missing or stale; rebuilding in memory");
            SearchIndex::build(snapshot.records())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub ast: QueryNode,
    /// Every match after the library filter, best first.
    pub hits: Vec<SearchHit>,
    pub facets: Facets,
}

/// Parse and run `q`. A non-empty `libraries` keeps only hits from those
/// libraries; facets describe the kept hits.
pub fn run_search(
    snapshot: &Snapshot,
    index: &SearchIndex,
    q: &str,
    mode: Mode,
    libraries: &[String],
) -> Result<SearchOutcome, QueryError> {
    let ast = parse_query(q, mode)?;
    let mut hits = index.execute(&ast);
    if !libraries.is_empty() {
        hits.retain(|h| {
            snapshot.record(&h.record_id).is_some_and(|r| libraries.contains(&r.library_slug))
        });
    }
    let facets = index.facet_counts(&hits);
    Ok(SearchOutcome { ast, hits, facets })
}
