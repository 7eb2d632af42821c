use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Subdivision delimiter, spaces included. Hyphens inside a segment are data.
pub const SUBDIVISION_DELIMITER: &str = " -- ";

/// A RAMEAU subject heading: a head term and its ordered subdivisions,
/// e.g. `Peinture -- France -- 19e siècle`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RameauHeading {
    pub head: String,
    pub subdivisions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RameauError {
    #[error("empty heading")]
    EmptyHeading,
    #[error("segment {index} of the heading is empty")]
    EmptySegment { index: usize },
}

pub fn parse_rameau(raw: &str) -> Result<RameauHeading, RameauError> {
    if raw.trim().is_empty() {
        return Err(RameauError::EmptyHeading);
    }
    let mut segments = Vec::new();
    for (index, seg) in raw.split(SUBDIVISION_DELIMITER).enumerate() {
        let seg = seg.trim();
        if seg.is_empty() {
            return Err(RameauError::EmptySegment { index });
        }
        segments.push(seg.to_owned());
    }
    let head = segments.remove(0);
    Ok(RameauHeading { head, subdivisions: segments })
}

impl FromStr for RameauHeading {
    type Err = RameauError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rameau(s)
    }
}

impl fmt::Display for RameauHeading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head)?;
        for sub in &self.subdivisions {
            f.write_str(SUBDIVISION_DELIMITER)?;
            f.write_str(sub)?;
        }
        Ok(())
    }
}
