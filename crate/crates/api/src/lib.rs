//! HTTP read API and curator CLI over an `alp-core` store.
//!
//! The server only ever reads: it loads one validated snapshot at start-up
//! and answers from it until restarted. Mutation is the CLI's job, under the
//! store's writer lock.

pub mod cli;
pub mod config;
pub mod error;
pub mod matching;
pub mod search;
pub mod server;

/// Carried by every JSON response body as `schema_version`.
pub const SCHEMA_VERSION: u32 = 1;
