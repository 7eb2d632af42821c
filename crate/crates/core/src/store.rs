//! File-backed document store.
//!
//! Layout under the store root:
//!
//! ```text
//! libraries.json                          array of ArtistLibrary
//! collections/<slug>/records.jsonl        one BibRecord per line
//! collections/<slug>/assets.jsonl         one AssetRecord per line
//! collections/<slug>/assets/<asset_id>/   asset files
//! .writer.lock                            present while a writer runs
//! ```
//!
//! Every mutation goes through a [`WriterLock`]. Files are rewritten whole via
//! a temp file and rename, so readers never observe a half-written file.
//! Readers load an immutable [`Snapshot`].

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assets::{AssetRecord, Rights};
use crate::catalog::{
    parse_record_id, validate_library, validate_mark_assets, validate_record, ArtistLibrary,
    BibRecord, Violation,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("record {record_id:?} is invalid: {}", join(violations))]
    Invalid { record_id: String, violations: Vec<Violation> },
    #[error("record {record_id:?} does not belong to library {library:?}")]
    WrongLibrary { record_id: String, library: String },
    #[error("writer lock {} is held; another writer is running", .0.display())]
    LockHeld(PathBuf),
    #[error("store failed validation:\n{}", join(.0))]
    Corrupt(Vec<LoadIssue>),
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

/// One problem found while loading a snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadIssue {
    /// Store-relative file.
    pub file: String,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for LoadIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{line}: {}", self.file, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    /// Create the directory skeleton and an empty library registry if absent.
    pub fn init(root: impl Into<PathBuf>) -> Result<Self> {
        let store = Store::new(root);
        let collections = store.root.join("collections");
        fs::create_dir_all(&collections).map_err(io_err(&collections))?;
        if !store.libraries_path().exists() {
            store.write_libraries_unlocked(&[])?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn libraries_path(&self) -> PathBuf {
        self.root.join("libraries.json")
    }

    pub fn collection_dir(&self, slug: &str) -> PathBuf {
        self.root.join("collections").join(slug)
    }

    pub fn records_path(&self, slug: &str) -> PathBuf {
        self.collection_dir(slug).join("records.jsonl")
    }

    pub fn assets_path(&self, slug: &str) -> PathBuf {
        self.collection_dir(slug).join("assets.jsonl")
    }

    pub fn lock_path(&self) -> PathBuf {
        self.root.join(".writer.lock")
    }

    /// Take the single-writer role. Fails if another writer holds it.
    pub fn lock_writer(&self) -> Result<WriterLock> {
        let path = self.lock_path();
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WriterLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::LockHeld(path)),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    pub fn read_libraries(&self) -> Result<Vec<ArtistLibrary>> {
        let path = self.libraries_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| StoreError::Parse {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn write_libraries(&self, _lock: &WriterLock, libraries: &[ArtistLibrary]) -> Result<()> {
        self.write_libraries_unlocked(libraries)
    }

    fn write_libraries_unlocked(&self, libraries: &[ArtistLibrary]) -> Result<()> {
        let mut sorted = libraries.to_vec();
        sorted.sort_by(|a, b| a.slug.cmp(&b.slug));
        let mut text = serde_json::to_string_pretty(&sorted).expect("libraries serialize");
        text.push('\n');
        atomic_write(&self.libraries_path(), text.as_bytes())
    }

    /// Records of one collection in file order. A missing file is an empty collection.
    pub fn read_collection(&self, slug: &str) -> Result<Vec<BibRecord>> {
        read_jsonl(&self.records_path(slug))
    }

    /// Replace a collection with `records`, written in record-id order.
    pub fn write_collection(&self, _lock: &WriterLock, slug: &str, records: &[BibRecord]) -> Result<()> {
        let known: BTreeSet<String> = [slug.to_owned()].into();
        let mut seen = BTreeSet::new();
        for r in records {
            if r.library_slug != slug {
                return Err(StoreError::WrongLibrary {
                    record_id: r.record_id.clone(),
                    library: slug.to_owned(),
                });
            }
            if !seen.insert(r.record_id.as_str()) {
                return Err(StoreError::DuplicateId(r.record_id.clone()));
            }
            let violations = validate_record(r, &known);
            if !violations.is_empty() {
                return Err(StoreError::Invalid { record_id: r.record_id.clone(), violations });
            }
        }
        let mut sorted: Vec<&BibRecord> = records.iter().collect();
        sorted.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        write_jsonl(&self.records_path(slug), &sorted)
    }

    /// Add new records to a collection; ids already stored are rejected.
    pub fn append_records(&self, lock: &WriterLock, slug: &str, records: &[BibRecord]) -> Result<()> {
        let mut all = self.read_collection(slug)?;
        let existing: BTreeSet<&str> = all.iter().map(|r| r.record_id.as_str()).collect();
        if let Some(dup) = records.iter().find(|r| existing.contains(r.record_id.as_str())) {
            return Err(StoreError::DuplicateId(dup.record_id.clone()));
        }
        all.extend_from_slice(records);
        self.write_collection(lock, slug, &all)
    }

    /// Highest record sequence number used in a collection, 0 if empty.
    pub fn max_sequence(&self, slug: &str) -> Result<u32> {
        Ok(self
            .read_collection(slug)?
            .iter()
            .filter_map(|r| parse_record_id(&r.record_id).map(|(_, n)| n))
            .max()
            .unwrap_or(0))
    }

    pub fn read_assets(&self, slug: &str) -> Result<Vec<AssetRecord>> {
        read_jsonl(&self.assets_path(slug))
    }

    pub fn write_assets(&self, _lock: &WriterLock, slug: &str, assets: &[AssetRecord]) -> Result<()> {
        let mut sorted: Vec<&AssetRecord> = assets.iter().collect();
        sorted.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
        write_jsonl(&self.assets_path(slug), &sorted)
    }

    /// Load and validate the whole store. All problems are reported together.
    pub fn load_snapshot(&self) -> Result<Snapshot> {
        let mut issues = Vec::new();
        let libraries = match self.read_libraries() {
            Ok(l) => l,
            Err(e) => return Err(StoreError::Corrupt(vec![self.issue_from(e)])),
        };
        let mut records = Vec::new();
        let mut assets = Vec::new();
        for lib in &libraries {
            match self.read_collection(&lib.slug) {
                Ok(r) => records.extend(r),
                Err(e) => issues.push(self.issue_from(e)),
            }
            match self.read_assets(&lib.slug) {
                Ok(a) => assets.extend(a),
                Err(e) => issues.push(self.issue_from(e)),
            }
        }
        let known: BTreeSet<&str> = libraries.iter().map(|l| l.slug.as_str()).collect();
        if let Ok(entries) = fs::read_dir(self.root.join("collections")) {
            for entry in entries.flatten() {
                let name = entry.file_name().to_string_lossy().into_owned();
                if entry.path().is_dir() && !known.contains(name.as_str()) {
                    issues.push(LoadIssue {
                        file: format!("collections/{name}"),
                        line: None,
                        message: "collection has no entry in libraries.json".into(),
                    });
                }
            }
        }
        for a in &assets {
            if !self.root.join(&a.variants.original).is_file() {
                issues.push(LoadIssue {
                    file: a.variants.original.clone(),
                    line: None,
                    message: format!("asset {} original file is missing", a.asset_id),
                });
            }
        }
        if !issues.is_empty() {
            return Err(StoreError::Corrupt(issues));
        }
        Snapshot::from_parts(libraries, records, assets).map_err(StoreError::Corrupt)
    }

    fn issue_from(&self, e: StoreError) -> LoadIssue {
        let rel = |p: &Path| p.strip_prefix(&self.root).unwrap_or(p).display().to_string();
        match e {
            StoreError::Parse { path, line, message } => LoadIssue { file: rel(&path), line: Some(line), message },
            StoreError::Io { path, source } => LoadIssue { file: rel(&path), line: None, message: source.to_string() },
            other => LoadIssue { file: String::new(), line: None, message: other.to_string() },
        }
    }
}

/// Held while a process owns the writer role; released on drop.
#[derive(Debug)]
pub struct WriterLock {
    path: PathBuf,
}

impl Drop for WriterLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("record serializes");
        buf.push(b'\n');
    }
    atomic_write(path, &buf)
}

/// Replace `path` with `bytes` via a temp file and rename. The file ends up
/// world-readable like any other file, not with the temp file's 0600.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// An immutable, validated view of the whole store.
#[derive(Debug, Clone)]
pub struct Snapshot {
    libraries: Vec<ArtistLibrary>,
    records: Vec<BibRecord>,
    assets: Vec<AssetRecord>,
    snapshot_id: String,
    record_pos: HashMap<String, usize>,
    asset_pos: HashMap<String, usize>,
}

impl Snapshot {
    /// Validate and index in-memory parts. `snapshot_id` is a content hash.
    pub fn from_parts(
        mut libraries: Vec<ArtistLibrary>,
        mut records: Vec<BibRecord>,
        mut assets: Vec<AssetRecord>,
    ) -> std::result::Result<Self, Vec<LoadIssue>> {
        libraries.sort_by(|a, b| a.slug.cmp(&b.slug));
        records.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        assets.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));

        let mut issues = Vec::new();
        let mut push = |file: String, message: String| issues.push(LoadIssue { file, line: None, message });

        let mut slugs = BTreeSet::new();
        for lib in &libraries {
            if !slugs.insert(lib.slug.clone()) {
                push("libraries.json".into(), format!("duplicate library slug {:?}", lib.slug));
            }
            for v in validate_library(lib) {
                push("libraries.json".into(), format!("library {:?}: {v}", lib.slug));
            }
        }
        let asset_ids: BTreeSet<String> = assets.iter().map(|a| a.asset_id.clone()).collect();
        for pair in records.windows(2) {
            if pair[0].record_id == pair[1].record_id {
                push(
                    format!("collections/{}/records.jsonl", pair[1].library_slug),
                    format!("duplicate record id {:?}", pair[1].record_id),
                );
            }
        }
        for r in &records {
            let file = format!("collections/{}/records.jsonl", r.library_slug);
            for v in validate_record(r, &slugs).into_iter().chain(validate_mark_assets(r, &asset_ids)) {
                push(file.clone(), format!("record {:?}: {v}", r.record_id));
            }
        }
        let record_ids: BTreeSet<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
        for a in &assets {
            let slug = parse_record_id(&a.record_id).map(|(s, _)| s).unwrap_or("?");
            let file = format!("collections/{slug}/assets.jsonl");
            if !record_ids.contains(a.record_id.as_str()) {
                push(file.clone(), format!("asset {:?} refers to unknown record {:?}", a.asset_id, a.record_id));
            }
            if a.rights != Rights::PublicDomain && a.variants.derivative.is_none() {
                push(file, format!("asset {:?} is not public domain and has no derivative", a.asset_id));
            }
        }
        if !issues.is_empty() {
            return Err(issues);
        }

        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&libraries).expect("serialize"));
        hasher.update(serde_json::to_vec(&records).expect("serialize"));
        hasher.update(serde_json::to_vec(&assets).expect("serialize"));
        let digest = hasher.finalize();
        let snapshot_id = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

        let record_pos = records.iter().enumerate().map(|(i, r)| (r.record_id.clone(), i)).collect();
        let asset_pos = assets.iter().enumerate().map(|(i, a)| (a.asset_id.clone(), i)).collect();
        Ok(Snapshot { libraries, records, assets, snapshot_id, record_pos, asset_pos })
    }

    pub fn snapshot_id(&self) -> &str {
        &self.snapshot_id
    }

    /// Libraries sorted by slug.
    pub fn libraries(&self) -> &[ArtistLibrary] {
        &self.libraries
    }

    pub fn library(&self, slug: &str) -> Option<&ArtistLibrary> {
        self.libraries.iter().find(|l| l.slug == slug)
    }

    /// Records sorted by record id.
    pub fn records(&self) -> &[BibRecord] {
        &self.records
    }

    pub fn record(&self, record_id: &str) -> Option<&BibRecord> {
        self.record_pos.get(record_id).map(|&i| &self.records[i])
    }

    pub fn records_of<'a>(&'a self, slug: &'a str) -> impl Iterator<Item = &'a BibRecord> + 'a {
        self.records.iter().filter(move |r| r.library_slug == slug)
    }

    pub fn assets(&self) -> &[AssetRecord] {
        &self.assets
    }

    pub fn asset(&self, asset_id: &str) -> Option<&AssetRecord> {
        self.asset_pos.get(asset_id).map(|&i| &self.assets[i])
    }
}
