//! Catalog engine for artists' personal libraries.
//!
//! Records are qualified Dublin Core descriptions of the books an artist
//! owned, grouped per library and kept in a JSON-Lines [`store`]. On top of
//! the store sit a two-level [`query`] engine, cross-library [`comparison`],
//! an edition [`matcher`] for linking digitized surrogates, an OAI-PMH data
//! provider ([`oai`]), the [`geo`] map export, and the rights gate for
//! reading-mark photographs ([`assets`]).

pub mod assets;
pub mod catalog;
pub mod comparison;
pub mod dc;
pub mod geo;
pub mod intake;
pub mod matcher;
pub mod oai;
pub mod query;
pub mod store;
pub mod textnorm;

pub use catalog::{
    ArtistLibrary, BibRecord, DcElement, DcName, DigitalSurrogate, MarkKind, MatchLevel, Provenance,
    Provider, ReadingMark,
};
pub use store::{Snapshot, Store, StoreError};
