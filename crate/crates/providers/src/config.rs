//! Per-provider settings, as found under `[providers.<name>]`.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::transport::{LiveTransport, RecordTransport, ReplayTransport, Transport, DEFAULT_RATE_LIMIT_PER_S};
use crate::{RestClient, RetryPolicy, SearchProvider, SruClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Replay,
    /// Live, saving every response as a fixture.
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Sru,
    Rest,
}

fn default_rate() -> f64 {
    DEFAULT_RATE_LIMIT_PER_S
}

fn default_mode() -> Mode {
    Mode::Replay
}

fn default_timeout() -> u64 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSettings {
    pub protocol: Protocol,
    pub endpoint: Url,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_rate")]
    pub rate_limit_per_s: f64,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
}

/// Fixtures for provider `name` live in `<fixtures_root>/<name>/`.
pub fn build_provider(
    name: &str,
    settings: &ProviderSettings,
    fixtures_root: &Path,
    retry: RetryPolicy,
) -> Box<dyn SearchProvider> {
    let dir = fixtures_root.join(name);
    let live = || LiveTransport::new(settings.rate_limit_per_s, Duration::from_secs(settings.timeout_s));
    let transport: Arc<dyn Transport> = match settings.mode {
        Mode::Replay => Arc::new(ReplayTransport::new(dir)),
        Mode::Live => Arc::new(live()),
        Mode::Record => Arc::new(RecordTransport::new(live(), dir)),
    };
    let endpoint = settings.endpoint.clone();
    match settings.protocol {
        Protocol::Sru => Box::new(SruClient::new(endpoint, transport, retry)),
        Protocol::Rest => Box::new(RestClient::new(endpoint, transport, retry)),
    }
}
