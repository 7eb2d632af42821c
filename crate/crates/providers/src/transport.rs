//! HTTP GET transports: live, replay from fixtures, and record-while-live.
//!
//! A fixture file is named `<sha256("GET " + url)>.resp` and reads
//!
//! ```text
//! 200 https://example.org/sru?version=1.2&...
//!
//! <body bytes>
//! ```
//!
//! The first token is the HTTP status, or `TIMEOUT` to replay a transient
//! network failure. The URL must equal the request URL.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
    #[error("no fixture {file} for {url}")]
    MissingFixture { url: String, file: String },
    #[error("fixture {file}: {message}")]
    BadFixture { file: String, message: String },
}

impl TransportError {
    /// Worth retrying.
    pub fn is_transient(&self) -> bool {
        matches!(self, TransportError::Timeout | TransportError::Network(_))
    }
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &Url) -> Result<HttpResponse, TransportError>;
}

/// File stem of the fixture for a GET of `url`.
pub fn fixture_key(url: &Url) -> String {
    hex::encode(Sha256::digest(format!("GET {}", url.as_str()).as_bytes()))
}

pub fn fixture_path(dir: &Path, url: &Url) -> PathBuf {
    dir.join(format!("{}.resp", fixture_key(url)))
}

pub fn render_fixture(url: &Url, outcome: &Result<HttpResponse, TransportError>) -> Option<String> {
    match outcome {
        Ok(r) => Some(format!("{} {}\n\n{}", r.status, url, r.body)),
        Err(TransportError::Timeout) => Some(format!("TIMEOUT {url}\n\n")),
        Err(_) => None,
    }
}

fn parse_fixture(file: &str, url: &Url, text: &str) -> Result<HttpResponse, TransportError> {
    let bad = |message: &str| TransportError::BadFixture { file: file.to_owned(), message: message.to_owned() };
    let (head, rest) = text.split_once('\n').ok_or_else(|| bad("missing status line"))?;
    let body = rest.strip_prefix('\n').or_else(|| rest.strip_prefix("\r\n")).ok_or_else(|| bad("missing blank line"))?;
    let (status, fixture_url) = head.trim_end().split_once(' ').ok_or_else(|| bad("status line needs a URL"))?;
    if fixture_url != url.as_str() {
        return Err(bad(&format!("recorded for {fixture_url}")));
    }
    if status == "TIMEOUT" {
        return Err(TransportError::Timeout);
    }
    let status = status.parse().map_err(|_| bad("status is not a number"))?;
    Ok(HttpResponse { status, body: body.to_owned() })
}

/// Serves responses from a fixture directory; never touches the network.
#[derive(Debug, Clone)]
pub struct ReplayTransport {
    dir: PathBuf,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayTransport { dir: dir.into() }
    }
}

impl Transport for ReplayTransport {
    fn get(&self, url: &Url) -> Result<HttpResponse, TransportError> {
        let path = fixture_path(&self.dir, url);
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        match std::fs::read_to_string(&path) {
            Ok(text) => parse_fixture(&file, url, &text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Err(TransportError::MissingFixture { url: url.to_string(), file })
            }
            Err(e) => Err(TransportError::BadFixture { file, message: e.to_string() }),
        }
    }
}

/// Spaces out calls so at most `per_second` start each second.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(per_second: f64) -> Self {
        let interval = if per_second > 0.0 { Duration::from_secs_f64(1.0 / per_second) } else { Duration::ZERO };
        RateLimiter { interval, next: Mutex::new(None) }
    }

    /// Blocks until the caller may issue a request.
    pub fn acquire(&self) {
        let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
        let now = Instant::now();
        let start = match *next {
            Some(t) if t > now => {
                std::thread::sleep(t - now);
                t
            }
            _ => now,
        };
        *next = Some(start + self.interval);
    }
}

pub const DEFAULT_RATE_LIMIT_PER_S: f64 = 2.0;

pub struct LiveTransport {
    agent: ureq::Agent,
    limiter: RateLimiter,
}

impl LiveTransport {
    pub fn new(rate_limit_per_s: f64, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("alp/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        LiveTransport { agent, limiter: RateLimiter::new(rate_limit_per_s) }
    }
}

impl Transport for LiveTransport {
    fn get(&self, url: &Url) -> Result<HttpResponse, TransportError> {
        self.limiter.acquire();
        log::debug!("GET {url}");
        let mut resp = self.agent.get(url.as_str()).call().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Network(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Live requests whose outcomes are saved as fixtures for later replay.
pub struct RecordTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: Transport> RecordTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Self {
        RecordTransport { inner, dir: dir.into() }
    }
}

impl<T: Transport> Transport for RecordTransport<T> {
    fn get(&self, url: &Url) -> Result<HttpResponse, TransportError> {
        let outcome = self.inner.get(url);
        if let Some(text) = render_fixture(url, &outcome) {
            let path = fixture_path(&self.dir, url);
            let written = std::fs::create_dir_all(&self.dir).and_then(|_| std::fs::write(&path, text));
            if let Err(e) = written {
                log::warn!("could not record fixture {}: {e}", path.display());
            }
        }
        outcome
    }
}
