//! Cross-library analytics over a snapshot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{BibRecord, DcName};
use crate::store::Snapshot;
use crate::textnorm::{fold, jaccard, token_set};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkKey {
    pub title_tokens: Vec<String>,
    pub creator_surname: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EditionKey {
    pub work: WorkKey,
    pub year: Option<u16>,
    pub publisher_tokens: Vec<String>,
}

/// Folded text before the first comma of the first creator.
pub fn surname(creator: &str) -> String {
    let head = creator.split(',').next().unwrap_or("");
    fold(head).split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn work_key(record: &BibRecord) -> WorkKey {
    WorkKey {
        title_tokens: token_set(record.main_title().unwrap_or("")).into_iter().collect(),
        creator_surname: record.first(DcName::Creator).map(surname).unwrap_or_default(),
    }
}

pub fn edition_key(record: &BibRecord) -> EditionKey {
    let publishers: BTreeSet<String> =
        record.values(DcName::Publisher).flat_map(token_set).collect();
    EditionKey {
        work: work_key(record),
        year: record.year(),
        publisher_tokens: publishers.into_iter().collect(),
    }
}

impl fmt::Display for WorkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.creator_surname, self.title_tokens.join(" "))
    }
}

impl fmt::Display for EditionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let year = self.year.map(|y| format!("{y:04}")).unwrap_or_default();
        write!(f, "{}|{}|{}", self.work, year, self.publisher_tokens.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Work,
    Edition,
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "work" => Ok(Level::Work),
            "edition" => Ok(Level::Edition),
            _ => Err(format!("unknown comparison level {s:?}")),
        }
    }
}

impl Level {
    /// Canonical key string for a record at this level.
    pub fn key(self, record: &BibRecord) -> String {
        match self {
            Level::Work => work_key(record).to_string(),
            Level::Edition => edition_key(record).to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("library {0:?} listed twice")]
    DuplicateSlug(String),
    #[error("unknown library {0:?}")]
    UnknownSlug(String),
    #[error("comparison needs at least two libraries")]
    TooFewLibraries,
    #[error("at least one library is required")]
    NoLibraries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedGroup {
    pub key: String,
    /// slug -> record ids, both sorted
    pub holdings: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub a: String,
    pub b: String,
    pub shared: usize,
    pub union: usize,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub level: Level,
    pub libraries: Vec<String>,
    pub groups: Vec<SharedGroup>,
    pub pairs: Vec<PairOverlap>,
}

fn check_slugs(snapshot: &Snapshot, slugs: &[String]) -> Result<(), CompareError> {
    let mut seen = BTreeSet::new();
    for slug in slugs {
        if !seen.insert(slug) {
            return Err(CompareError::DuplicateSlug(slug.clone()));
        }
        if snapshot.library(slug).is_none() {
            return Err(CompareError::UnknownSlug(slug.clone()));
        }
    }
    Ok(())
}

pub fn compare(snapshot: &Snapshot, slugs: &[String], level: Level) -> Result<ComparisonReport, CompareError> {
    check_slugs(snapshot, slugs)?;
    if slugs.len() < 2 {
        return Err(CompareError::TooFewLibraries);
    }

    // key -> slug -> record ids
    let mut by_key: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
    let mut key_sets: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for slug in slugs {
        let keys = key_sets.entry(slug.as_str()).or_default();
        for record in snapshot.records_of(slug) {
            let key = level.key(record);
            keys.insert(key.clone());
            by_key.entry(key).or_default().entry(slug.clone()).or_default().push(record.record_id.clone());
        }
    }

    let groups = by_key
        .into_iter()
        .filter(|(_, holdings)| holdings.len() >= 2)
        .map(|(key, mut holdings)| {
            holdings.values_mut().for_each(|ids| ids.sort());
            SharedGroup { key, holdings }
        })
        .collect();

    let mut pairs = Vec::new();
    for (i, a) in slugs.iter().enumerate() {
        for b in &slugs[i + 1..] {
            let (ka, kb) = (&key_sets[a.as_str()], &key_sets[b.as_str()]);
            pairs.push(PairOverlap {
                a: a.clone(),
                b: b.clone(),
                shared: ka.intersection(kb).count(),
                union: ka.union(kb).count(),
                jaccard: jaccard(ka, kb),
            });
        }
    }

    Ok(ComparisonReport { level, libraries: slugs.to_vec(), groups, pairs })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorCount {
    pub surname: String,
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
}

/// Records per creator surname. Records without a creator are skipped.
pub fn author_frequency(snapshot: &Snapshot, slugs: &[String]) -> Result<Vec<AuthorCount>, CompareError> {
    if slugs.is_empty() {
        return Err(CompareError::NoLibraries);
    }
    check_slugs(snapshot, slugs)?;
    let mut table: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for slug in slugs {
        for record in snapshot.records_of(slug) {
            let name = work_key(record).creator_surname;
            if name.is_empty() {
                continue;
            }
            *table.entry(name).or_default().entry(slug.clone()).or_default() += 1;
        }
    }
    let mut out: Vec<AuthorCount> = table
        .into_iter()
        .map(|(surname, counts)| AuthorCount { total: counts.values().sum(), surname, counts })
        .collect();
    out.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.surname.cmp(&b.surname)));
    Ok(out)
}
