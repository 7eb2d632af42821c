//! The curator CLI. Every store mutation in the system goes through here.
//!
//! Exit codes: 0 success, 1 partial (rejected rows, per-record provider
//! errors, validation findings), 2 fatal.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use alp_core::assets::{register_asset, AssetKind, AssetRegistration, Rights};
use alp_core::catalog::{is_valid_datestamp, validate_library};
use alp_core::comparison::{compare, Level};
use alp_core::geo::export_geojson;
use alp_core::intake::ingest_csv;
use alp_core::query::Mode;
use alp_core::{ArtistLibrary, DcName, Provenance, Store, StoreError};
use alp_providers::{build_provider, RetryPolicy, SearchProvider};
use clap::{Args, Parser, Subcommand};

use crate::config::{self, Config};
use crate::matching::{match_library, write_batch_csv};
use crate::search::{load_index, run_search, write_index};
use crate::server::{router, AppState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Partial = 1,
    Fatal = 2,
}

#[derive(Debug, Parser)]
#[command(name = "alp", version, about = "Catalog of artists' libraries")]
pub struct Cli {
    /// Config file (default: ./alp.toml when present)
    #[arg(long, global = true, env = "ALP_CONFIG")]
    pub config: Option<PathBuf>,
    /// Store directory, overriding the config
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append the rows of a curator CSV to the store
    Ingest {
        csv: PathBuf,
        /// Where to write rejected rows (default: <csv>.errors.csv)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Datestamp for the new records (default: now)
        #[arg(long)]
        datestamp: Option<String>,
    },
    /// Check every file of the store
    Validate,
    /// Build the search index file
    Index,
    /// Run a query against the store
    Search {
        query: String,
        #[arg(long, default_value = "simple")]
        mode: Mode,
        /// Restrict to these libraries
        #[arg(long, value_delimiter = ',')]
        library: Vec<String>,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Shared works or editions between libraries, as JSON
    Compare {
        #[arg(required = true, num_args = 2..)]
        libraries: Vec<String>,
        #[arg(long, default_value = "work")]
        level: Level,
    },
    /// Look for digitized editions of a library's books
    Match {
        library: String,
        /// Review CSV destination (default: stdout)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Library locations and the map export
    #[command(subcommand)]
    Geo(GeoCommand),
    /// Photographs of reading marks
    #[command(subcommand)]
    Asset(AssetCommand),
    /// Library descriptions
    #[command(subcommand)]
    Library(LibraryCommand),
    /// Serve the read-only HTTP API
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GeoCommand {
    /// Set where a library is held
    Set {
        library: String,
        #[arg(long, allow_negative_numbers = true)]
        lat: f64,
        #[arg(long, allow_negative_numbers = true)]
        lon: f64,
        #[arg(long)]
        site: Option<String>,
    },
    /// Remove a library's coordinates
    Clear { library: String },
    /// Print the map GeoJSON
    Export,
}

#[derive(Debug, Subcommand)]
pub enum AssetCommand {
    /// Attach a reading-mark photograph to a record
    Register {
        record_id: String,
        #[arg(long)]
        kind: AssetKind,
        #[arg(long)]
        rights: Rights,
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        derivative: Option<PathBuf>,
        /// Index of the reading mark the photograph shows
        #[arg(long)]
        mark: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LibraryCommand {
    /// Register a library, creating the store if needed
    Add(LibraryArgs),
}

#[derive(Debug, Args)]
pub struct LibraryArgs {
    pub slug: String,
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub provenance: Provenance,
    #[arg(long)]
    pub site: String,
    #[arg(long, allow_negative_numbers = true)]
    pub lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lon: Option<f64>,
    #[arg(long)]
    pub born: Option<i32>,
    #[arg(long)]
    pub died: Option<i32>,
    #[arg(long, default_value = "")]
    pub description: String,
}

/// A failure that ends the command with [`Exit::Fatal`].
#[derive(Debug)]
pub struct Fatal(pub String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type CmdResult = Result<Exit, Fatal>;

pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

/// Run a parsed command line, reporting fatal errors on `io.err`.
pub fn run(cli: Cli, io: &mut Io<'_>) -> Exit {
    let result = config::load(cli.config.as_deref()).map_err(Fatal::from).and_then(|mut config| {
        if let Some(store) = cli.store {
            config.store = store;
        }
        dispatch(cli.command, &config, io)
    });
    match result {
        Ok(code) => code,
        Err(Fatal(message)) => {
            let _ = writeln!(io.err, "error: {message}");
            Exit::Fatal
        }
    }
}

fn dispatch(command: Command, config: &Config, io: &mut Io<'_>) -> CmdResult {
    let store = Store::new(&config.store);
    match command {
        Command::Ingest { csv, report, datestamp } => ingest(&store, &csv, report, datestamp, io),
        Command::Validate => validate(&store, io),
        Command::Index => index(&store, io),
        Command::Search { query, mode, library, limit } => search(&store, &query, mode, &library, limit, io),
        Command::Compare { libraries, level } => {
            let snapshot = store.load_snapshot()?;
            let report = compare(&snapshot, &libraries, level)?;
            writeln!(io.out, "{}", serde_json::to_string_pretty(&report)?)?;
            Ok(Exit::Success)
        }
        Command::Match { library, report } => run_match(&store, config, &library, report, io),
        Command::Geo(cmd) => geo(&store, cmd, io),
        Command::Asset(AssetCommand::Register { record_id, kind, rights, original, derivative, mark }) => {
            let lock = store.lock_writer()?;
            let asset = register_asset(
                &store,
                &lock,
                AssetRegistration {
                    record_id: &record_id,
                    kind,
                    rights,
                    original: &original,
                    derivative: derivative.as_deref(),
                    mark_index: mark,
                },
            )?;
            writeln!(io.out, "{}", serde_json::to_string(&asset)?)?;
            Ok(Exit::Success)
        }
        Command::Library(LibraryCommand::Add(args)) => library_add(&config.store, args, io),
        Command::Serve { bind } => serve(&store, config, bind.unwrap_or_else(|| config.server.bind.clone()), io),
    }
}

fn ingest(store: &Store, csv: &Path, report: Option<PathBuf>, datestamp: Option<String>, io: &mut Io<'_>) -> CmdResult {
    let datestamp = match datestamp {
        Some(d) if is_valid_datestamp(&d) => d,
        Some(d) => return Err(Fatal(format!("datestamp {d:?} is not YYYY-MM-DDThh:mm:ssZ"))),
        None => chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
    };
    let bytes = std::fs::read(csv).map_err(|e| Fatal(format!("reading {}: {e}", csv.display())))?;
    let lock = store.lock_writer()?;
    let result = ingest_csv(store, &lock, &bytes, &datestamp)?;
    drop(lock);

    let report_path = if result.rejected.is_empty() {
        None
    } else {
        let path = report.unwrap_or_else(|| PathBuf::from(format!("{}.errors.csv", csv.display())));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["line", "reason"])?;
        for e in &result.rejected {
            w.write_record([e.line.to_string(), e.reason.clone()])?;
        }
        w.flush()?;
        Some(path)
    };
    let summary = serde_json::json!({
        "rows": result.written.len() + result.rejected.len(),
        "accepted": result.written.len(),
        "rejected": result.rejected.len(),
        "report_path": report_path.map(|p| p.display().to_string()),
    });
    writeln!(io.out, "{summary}")?;
    Ok(if result.rejected.is_empty() { Exit::Success } else { Exit::Partial })
}

fn validate(store: &Store, io: &mut Io<'_>) -> CmdResult {
    match store.load_snapshot() {
        Ok(s) => {
            writeln!(
                io.out,
                "ok: {} libraries, {} records, {} assets (snapshot {})",
                s.libraries().len(),
                s.records().len(),
                s.assets().len(),
                s.snapshot_id()
            )?;
            Ok(Exit::Success)
        }
        Err(StoreError::Corrupt(issues)) => {
            for issue in &issues {
                writeln!(io.out, "{issue}")?;
            }
            writeln!(io.err, "{} problem(s) found", issues.len())?;
            Ok(Exit::Partial)
        }
        Err(e) => Err(e.into()),
    }
}

fn index(store: &Store, io: &mut Io<'_>) -> CmdResult {
    let lock = store.lock_writer()?;
    let snapshot = store.load_snapshot()?;
    let started = Instant::now();
    let index = write_index(store, &lock, &snapshot)?;
    writeln!(io.out, "indexed {} records in {} ms", index.len(), started.elapsed().as_millis())?;
    Ok(Exit::Success)
}

fn search(store: &Store, query: &str, mode: Mode, libraries: &[String], limit: usize, io: &mut Io<'_>) -> CmdResult {
    let snapshot = store.load_snapshot()?;
    let index = load_index(store, &snapshot);
    let outcome = match run_search(&snapshot, &index, query, mode, libraries) {
        Ok(o) => o,
        Err(e) => {
            if let Some(offset) = e.offset() {
                writeln!(io.err, "{query}\n{}^", " ".repeat(query[..offset.min(query.len())].chars().count()))?;
            }
            return Err(e.into());
        }
    };
    for hit in outcome.hits.iter().take(limit) {
        let title = snapshot.record(&hit.record_id).and_then(|r| r.first(DcName::Title)).unwrap_or("");
        writeln!(io.out, "{}\t{}\t{}", hit.score, hit.record_id, title)?;
    }
    writeln!(io.err, "{} match(es)", outcome.hits.len())?;
    Ok(Exit::Success)
}

fn run_match(store: &Store, config: &Config, library: &str, report: Option<PathBuf>, io: &mut Io<'_>) -> CmdResult {
    let m = &config.matching;
    let retry = RetryPolicy { attempts: m.retry_attempts, base_delay: Duration::from_millis(m.retry_base_delay_ms) };
    let providers: Vec<(String, Box<dyn SearchProvider>)> = config
        .providers
        .iter()
        .map(|(name, settings)| (name.clone(), build_provider(name, settings, &m.fixtures_dir, retry)))
        .collect();
    let lock = store.lock_writer()?;
    let outcome = match_library(store, &lock, library, &providers, &config.matcher, m.max_results)?;
    drop(lock);
    match report {
        Some(path) => write_batch_csv(std::fs::File::create(&path)?, &outcome.rows)?,
        None => write_batch_csv(&mut *io.out, &outcome.rows)?,
    }
    writeln!(
        io.err,
        "{} record(s) examined, {} surrogate(s) attached, {} provider error(s)",
        outcome.rows.len(),
        outcome.attached,
        outcome.provider_errors
    )?;
    Ok(if outcome.provider_errors > 0 { Exit::Partial } else { Exit::Success })
}

fn update_library(store: &Store, slug: &str, f: impl FnOnce(&mut ArtistLibrary)) -> Result<(), Fatal> {
    let lock = store.lock_writer()?;
    let mut libraries = store.read_libraries()?;
    let lib = libraries.iter_mut().find(|l| l.slug == slug).ok_or_else(|| Fatal(format!("unknown library {slug:?}")))?;
    f(lib);
    let violations = validate_library(lib);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Fatal(list.join("; ")));
    }
    store.write_libraries(&lock, &libraries)?;
    Ok(())
}

fn geo(store: &Store, cmd: GeoCommand, io: &mut Io<'_>) -> CmdResult {
    match cmd {
        GeoCommand::Set { library, lat, lon, site } => update_library(store, &library, |l| {
            l.latitude = Some(lat);
            l.longitude = Some(lon);
            if let Some(site) = site {
                l.holding_site = site;
            }
        })?,
        GeoCommand::Clear { library } => update_library(store, &library, |l| {
            l.latitude = None;
            l.longitude = None;
        })?,
        GeoCommand::Export => {
            let snapshot = store.load_snapshot()?;
            writeln!(io.out, "{}", export_geojson(snapshot.libraries()).to_json())?;
        }
    }
    Ok(Exit::Success)
}

fn library_add(root: &Path, a: LibraryArgs, io: &mut Io<'_>) -> CmdResult {
    let store = Store::init(root)?;
    let lock = store.lock_writer()?;
    let mut libraries = store.read_libraries()?;
    if libraries.iter().any(|l| l.slug == a.slug) {
        return Err(Fatal(format!("library {:?} already exists", a.slug)));
    }
    let lib = ArtistLibrary {
        slug: a.slug,
        artist_name: a.name,
        birth_year: a.born,
        death_year: a.died,
        provenance: a.provenance,
        holding_site: a.site,
        latitude: a.lat,
        longitude: a.lon,
        description: a.description,
    };
    let violations = validate_library(&lib);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Fatal(list.join("; ")));
    }
    writeln!(io.out, "added {}", lib.slug)?;
    libraries.push(lib);
    store.write_libraries(&lock, &libraries)?;
    Ok(Exit::Success)
}

fn serve(store: &Store, config: &Config, bind: String, io: &mut Io<'_>) -> CmdResult {
    let state = match AppState::load(store, config.oai.clone()) {
        Ok(s) => s,
        Err(StoreError::Corrupt(issues)) => {
            for issue in &issues {
                writeln!(io.err, "{issue}")?;
            }
            return Err(Fatal("store failed validation; not serving".into()));
        }
        Err(e) => return Err(e.into()),
    };
    let app = router(Arc::new(state));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&bind).await?;
        log::info!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    Ok(Exit::Success)
}
