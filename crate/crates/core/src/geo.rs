//! Map export: libraries grouped by location as a GeoJSON FeatureCollection.

use std::cmp::Ordering;

use serde::Serialize;

use crate::catalog::{ArtistLibrary, Provenance};

pub const MEDIA_TYPE: &str = "application/geo+json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapLibrary {
    pub slug: String,
    pub artist_name: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    #[serde(rename = "type")]
    kind: &'static str,
    /// `[longitude, latitude]`
    pub coordinates: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureProperties {
    pub site_name: String,
    pub libraries: Vec<MapLibrary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feature {
    #[serde(rename = "type")]
    kind: &'static str,
    pub geometry: Point,
    pub properties: FeatureProperties,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureCollection {
    #[serde(rename = "type")]
    kind: &'static str,
    pub features: Vec<Feature>,
    /// Libraries with no recorded location.
    pub unlocated: Vec<MapLibrary>,
}

impl FeatureCollection {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geojson serializes")
    }
}

fn entry(lib: &ArtistLibrary) -> MapLibrary {
    MapLibrary { slug: lib.slug.clone(), artist_name: lib.artist_name.clone(), provenance: lib.provenance }
}

fn cmp_coords(a: (f64, f64), b: (f64, f64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

/// Groups libraries sharing an exact coordinate pair into one Point feature.
/// Features are ordered by (latitude, longitude); libraries within a feature
/// and the `unlocated` list by slug.
pub fn export_geojson(libraries: &[ArtistLibrary]) -> FeatureCollection {
    let mut sorted: Vec<&ArtistLibrary> = libraries.iter().collect();
    sorted.sort_by(|a, b| a.slug.cmp(&b.slug));

    let mut located: Vec<((f64, f64), &ArtistLibrary)> = Vec::new();
    let mut unlocated = Vec::new();
    for lib in sorted {
        match (lib.latitude, lib.longitude) {
            // + 0.0 folds -0.0 into 0.0 so the two compare equal
            (Some(lat), Some(lon)) => located.push(((lat + 0.0, lon + 0.0), lib)),
            _ => unlocated.push(entry(lib)),
        }
    }
    // stable: slug order survives inside each coordinate group
    located.sort_by(|a, b| cmp_coords(a.0, b.0));

    let mut features: Vec<Feature> = Vec::new();
    let mut sites: Vec<Vec<&str>> = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (coords, lib) in located {
        if last.is_some_and(|l| cmp_coords(l, coords) == Ordering::Equal) {
            let i = features.len() - 1;
            features[i].properties.libraries.push(entry(lib));
            if !sites[i].contains(&lib.holding_site.as_str()) {
                sites[i].push(&lib.holding_site);
            }
        } else {
            features.push(Feature {
                kind: "Feature",
                geometry: Point { kind: "Point", coordinates: [coords.1, coords.0] },
                properties: FeatureProperties { site_name: String::new(), libraries: vec![entry(lib)] },
            });
            sites.push(vec![&lib.holding_site]);
        }
        last = Some(coords);
    }
    for (feature, names) in features.iter_mut().zip(sites) {
        feature.properties.site_name = names.join(" / ");
    }

    FeatureCollection { kind: "FeatureCollection", features, unlocated }
}
