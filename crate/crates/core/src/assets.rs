//! Reading-mark photographs and the rights gate in front of them.
//!
//! Originals of anything not in the public domain are never served; such
//! assets are only servable through a derivative, which must exist at
//! registration time. `Unknown` rights are treated like `InCopyright`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::parse_record_id;
use crate::store::{Store, StoreError, WriterLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    DedicationPhoto,
    AnnotationPhoto,
    OtherMarkPhoto,
}

impl FromStr for AssetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dedication_photo" => Ok(AssetKind::DedicationPhoto),
            "annotation_photo" => Ok(AssetKind::AnnotationPhoto),
            "other_mark_photo" => Ok(AssetKind::OtherMarkPhoto),
            _ => Err(format!("unknown asset kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rights {
    PublicDomain,
    InCopyright,
    Unknown,
}

impl Rights {
    pub fn as_str(self) -> &'static str {
        match self {
            Rights::PublicDomain => "public_domain",
            Rights::InCopyright => "in_copyright",
            Rights::Unknown => "unknown",
        }
    }
}

impl FromStr for Rights {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "public_domain" => Ok(Rights::PublicDomain),
            "in_copyright" => Ok(Rights::InCopyright),
            "unknown" => Ok(Rights::Unknown),
            _ => Err(format!("unknown rights value {s:?}")),
        }
    }
}

/// Store-relative file paths of an asset's variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variants {
    pub original: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub asset_id: String,
    pub record_id: String,
    pub kind: AssetKind,
    pub rights: Rights,
    pub variants: Variants,
}

impl AssetRecord {
    /// Non-public assets need a derivative before they can be served at all.
    pub fn is_servable(&self) -> bool {
        self.rights == Rights::PublicDomain || self.variants.derivative.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantRequest {
    Original,
    Derivative,
}

impl FromStr for VariantRequest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(VariantRequest::Original),
            "derivative" => Ok(VariantRequest::Derivative),
            _ => Err(format!("unknown variant {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenialReason {
    Rights,
    NoDerivative,
}

impl DenialReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DenialReason::Rights => "rights",
            DenialReason::NoDerivative => "no derivative",
        }
    }
}

impl fmt::Display for DenialReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Access<'a> {
    Allowed(&'a str),
    Denied(DenialReason),
}

/// The serving decision, as a pure function of rights, request and variants.
pub fn resolve_variant(asset: &AssetRecord, requested: VariantRequest) -> Access<'_> {
    let derivative = asset.variants.derivative.as_deref();
    match (asset.rights, requested) {
        (Rights::PublicDomain, VariantRequest::Original) => Access::Allowed(&asset.variants.original),
        // A public-domain asset without a derivative falls back to its original.
        (Rights::PublicDomain, VariantRequest::Derivative) => {
            Access::Allowed(derivative.unwrap_or(&asset.variants.original))
        }
        (Rights::InCopyright | Rights::Unknown, VariantRequest::Original) => {
            Access::Denied(DenialReason::Rights)
        }
        (Rights::InCopyright | Rights::Unknown, VariantRequest::Derivative) => match derivative {
            Some(p) => Access::Allowed(p),
            None => Access::Denied(DenialReason::NoDerivative),
        },
    }
}

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("record {0:?} does not exist")]
    UnknownRecord(String),
    #[error("original file {0:?} does not exist")]
    MissingOriginal(PathBuf),
    #[error("derivative file {0:?} does not exist")]
    MissingDerivative(PathBuf),
    #[error("{0} assets need a derivative variant")]
    DerivativeRequired(&'static str),
    #[error("record {record_id:?} has no reading mark #{index}")]
    NoSuchMark { record_id: String, index: usize },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("copying asset file: {0}")]
    Io(#[from] std::io::Error),
}

pub struct AssetRegistration<'a> {
    pub record_id: &'a str,
    pub kind: AssetKind,
    pub rights: Rights,
    pub original: &'a Path,
    pub derivative: Option<&'a Path>,
    /// Index into the record's reading marks to link the asset from.
    pub mark_index: Option<usize>,
}

/// Register a photograph against a stored record.
///
/// Files are copied under `collections/<slug>/assets/<asset_id>/` and the
/// asset id is `<record_id>-a<n>` with `n` one more than the number of
/// assets the record already has.
pub fn register_asset(
    store: &Store,
    lock: &WriterLock,
    req: AssetRegistration<'_>,
) -> Result<AssetRecord, AssetError> {
    let slug = parse_record_id(req.record_id)
        .map(|(s, _)| s.to_owned())
        .ok_or_else(|| AssetError::UnknownRecord(req.record_id.to_owned()))?;
    let mut records = store.read_collection(&slug)?;
    let record = records
        .iter_mut()
        .find(|r| r.record_id == req.record_id)
        .ok_or_else(|| AssetError::UnknownRecord(req.record_id.to_owned()))?;
    if !req.original.is_file() {
        return Err(AssetError::MissingOriginal(req.original.to_owned()));
    }
    if let Some(d) = req.derivative {
        if !d.is_file() {
            return Err(AssetError::MissingDerivative(d.to_owned()));
        }
    }
    if req.rights != Rights::PublicDomain && req.derivative.is_none() {
        return Err(AssetError::DerivativeRequired(req.rights.as_str()));
    }
    if let Some(index) = req.mark_index {
        if index >= record.marks.len() {
            return Err(AssetError::NoSuchMark { record_id: req.record_id.to_owned(), index });
        }
    }

    let mut assets = store.read_assets(&slug)?;
    let seq = assets.iter().filter(|a| a.record_id == req.record_id).count() + 1;
    let asset_id = format!("{}-a{seq}", req.record_id);

    let rel_dir = format!("collections/{slug}/assets/{asset_id}");
    fs::create_dir_all(store.root().join(&rel_dir))?;
    let copy = |src: &Path, stem: &str| -> std::io::Result<String> {
        let name = match src.extension().and_then(|e| e.to_str()) {
            Some(ext) => format!("{stem}.{}", ext.to_ascii_lowercase()),
            None => stem.to_owned(),
        };
        let rel = format!("{rel_dir}/{name}");
        fs::copy(src, store.root().join(&rel))?;
        Ok(rel)
    };
    let variants = Variants {
        original: copy(req.original, "original")?,
        derivative: req.derivative.map(|d| copy(d, "derivative")).transpose()?,
    };

    let asset = AssetRecord {
        asset_id: asset_id.clone(),
        record_id: req.record_id.to_owned(),
        kind: req.kind,
        rights: req.rights,
        variants,
    };
    assets.push(asset.clone());
    store.write_assets(lock, &slug, &assets)?;

    if let Some(index) = req.mark_index {
        record.marks[index].asset_ids.push(asset_id);
        store.write_collection(lock, &slug, &records)?;
    }
    Ok(asset)
}
