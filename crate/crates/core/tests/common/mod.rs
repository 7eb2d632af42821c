#![allow(dead_code)]

use alp_core::catalog::{ArtistLibrary, BibRecord, DcElement, DcName, Provenance};

pub fn library(slug: &str) -> ArtistLibrary {
    ArtistLibrary {
        slug: slug.into(),
        artist_name: slug.to_uppercase(),
        birth_year: None,
        death_year: None,
        provenance: Provenance::MaterialFonds,
        holding_site: "Paris".into(),
        latitude: None,
        longitude: None,
        description: String::new(),
    }
}

pub fn record(slug: &str, seq: u32, fields: &[(DcName, &str)]) -> BibRecord {
    BibRecord {
        record_id: format!("{slug}-{seq:06}"),
        library_slug: slug.into(),
        datestamp: "2019-01-01T00:00:00Z".into(),
        elements: fields.iter().map(|(n, v)| DcElement::new(*n, *v)).collect(),
        shelf_mark: None,
        marks: vec![],
        surrogates: vec![],
    }
}
