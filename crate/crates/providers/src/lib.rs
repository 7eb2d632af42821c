//! Search clients for digitization providers.
//!
//! Two protocol shapes sit behind [`SearchProvider`]: SRU 1.2 returning
//! `oai_dc` ([`SruClient`]) and an Open Library style JSON search
//! ([`RestClient`]). Both talk through a [`Transport`], so tests replay
//! committed fixtures instead of reaching the network.

pub mod config;
pub mod rest;
pub mod sru;
pub mod transport;

use std::time::Duration;

use alp_core::matcher::ProviderRecord;
use alp_core::Provider;
use thiserror::Error;

pub use config::{build_provider, Mode, ProviderSettings, Protocol};
pub use rest::RestClient;
pub use sru::SruClient;
pub use transport::{HttpResponse, LiveTransport, RecordTransport, ReplayTransport, Transport, TransportError};

pub const MAX_RESULTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderQuery {
    pub title: Option<String>,
    pub creator: Option<String>,
    pub year: Option<String>,
    pub max_results: usize,
}

impl ProviderQuery {
    pub fn new(title: Option<&str>, creator: Option<&str>, max_results: usize) -> Result<Self, ProviderError> {
        let clean = |s: Option<&str>| s.map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned);
        let q = ProviderQuery { title: clean(title), creator: clean(creator), year: None, max_results };
        q.validate()?;
        Ok(q)
    }

    pub fn with_year(mut self, year: Option<&str>) -> Self {
        self.year = year.map(str::to_owned);
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.title.is_none() && self.creator.is_none() {
            return Err(ProviderError::EmptyQuery);
        }
        if self.max_results == 0 || self.max_results > MAX_RESULTS {
            return Err(ProviderError::MaxResults(self.max_results));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("query needs a title or a creator")]
    EmptyQuery,
    #[error("max_results must be between 1 and {MAX_RESULTS}, got {0}")]
    MaxResults(usize),
    #[error("{url}: gave up after {attempts} attempts: {source}")]
    Network { url: String, attempts: u32, source: TransportError },
    #[error("{url}: {source}")]
    Transport { url: String, source: TransportError },
    #[error("{url}: HTTP status {status}")]
    Status { url: String, status: u16 },
    #[error("{url}: malformed response: {message}")]
    Malformed { url: String, message: String },
    #[error("{url}: provider reported: {message}")]
    Diagnostic { url: String, message: String },
}

/// Exponential backoff for transient transport errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        RetryPolicy { attempts, base_delay: Duration::ZERO }
    }

    /// GET `url`, retrying transient failures; a non-200 status is an error.
    pub fn fetch(&self, transport: &dyn Transport, url: &url::Url) -> Result<String, ProviderError> {
        let attempts = self.attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match transport.get(url) {
                Ok(r) if r.status == 200 => return Ok(r.body),
                Ok(r) => return Err(ProviderError::Status { url: url.to_string(), status: r.status }),
                Err(e) if e.is_transient() && attempt < attempts => {
                    let delay = self.base_delay * 2u32.pow(attempt - 1);
                    log::warn!("{url}: {e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
                Err(e) if e.is_transient() => {
                    return Err(ProviderError::Network { url: url.to_string(), attempts, source: e })
                }
                Err(e) => return Err(ProviderError::Transport { url: url.to_string(), source: e }),
            }
        }
    }
}

pub trait SearchProvider: Send + Sync {
    fn provider(&self) -> Provider;

    /// At most `q.max_results` records, in the provider's order.
    fn search(&self, q: &ProviderQuery) -> Result<Vec<ProviderRecord>, ProviderError>;
}
