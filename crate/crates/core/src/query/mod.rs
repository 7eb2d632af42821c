//! Two-level search: keyword mode and a fielded boolean query language.
//!
//! Advanced grammar (the public contract, also emitted by the portal's
//! query builder):
//!
//! ```text
//! or      := and ("OR" and)*
//! and     := not (("AND")? not)*          juxtaposition means AND
//! not     := "NOT" not | primary
//! primary := "(" or ")"
//!          | FIELD ":" (word | quoted | "[" YEAR "TO" YEAR "]")
//!          | word | quoted
//! ```
//!
//! Fields: `title creator date publisher subject language library marktype any`,
//! case-insensitive. Keywords are uppercase. Quoted phrases match as ordered
//! token sequences after folding. `date` matches the extracted year only.

mod index;
mod parser;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{Facets, SearchHit, SearchIndex};
pub use parser::parse_query;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simple,
    Advanced,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(Mode::Simple),
            "advanced" => Ok(Mode::Advanced),
            _ => Err(format!("unknown search mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Creator,
    Date,
    Publisher,
    Subject,
    Language,
    Library,
    MarkType,
    Any,
}

impl Field {
    pub const ALL: [Field; 9] = [
        Field::Title,
        Field::Creator,
        Field::Date,
        Field::Publisher,
        Field::Subject,
        Field::Language,
        Field::Library,
        Field::MarkType,
        Field::Any,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Title => "title",
            Field::Creator => "creator",
            Field::Date => "date",
            Field::Publisher => "publisher",
            Field::Subject => "subject",
            Field::Language => "language",
            Field::Library => "library",
            Field::MarkType => "marktype",
            Field::Any => "any",
        }
    }

    pub fn parse_name(name: &str) -> Option<Field> {
        let lower = name.to_ascii_lowercase();
        Field::ALL.into_iter().find(|f| f.as_str() == lower)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum FieldValue {
    Term(String),
    Phrase(Vec<String>),
    Year(u16),
    Range { lo: u16, hi: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryNode {
    Or(Vec<QueryNode>),
    And(Vec<QueryNode>),
    Not(Box<QueryNode>),
    /// A single folded token searched in every field.
    Term(String),
    Fielded(Field, FieldValue),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query is empty")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown field {field:?} at byte {offset}")]
    UnknownField { offset: usize, field: String },
    #[error("a query cannot consist only of negations")]
    PureNegation,
    #[error("inverted date range [{lo} TO {hi}] at byte {offset}")]
    InvertedRange { offset: usize, lo: u16, hi: u16 },
}

impl QueryError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            QueryError::Syntax { offset, .. }
            | QueryError::UnknownField { offset, .. }
            | QueryError::InvertedRange { offset, .. } => Some(*offset),
            QueryError::Empty | QueryError::PureNegation => None,
        }
    }
}

impl QueryNode {
    /// Rejects And groups whose members are all negations.
    pub fn check_negations(&self) -> Result<(), QueryError> {
        match self {
            QueryNode::And(items) => {
                if !items.iter().any(|n| !matches!(n, QueryNode::Not(_))) {
                    return Err(QueryError::PureNegation);
                }
                items.iter().try_for_each(QueryNode::check_negations)
            }
            QueryNode::Or(items) => items.iter().try_for_each(QueryNode::check_negations),
            QueryNode::Not(inner) => inner.check_negations(),
            QueryNode::Term(_) | QueryNode::Fielded(..) => Ok(()),
        }
    }
}

fn write_phrase(f: &mut fmt::Formatter<'_>, tokens: &[String]) -> fmt::Result {
    write!(f, "\"{}\"", tokens.join(" "))
}

fn write_grouped(f: &mut fmt::Formatter<'_>, node: &QueryNode) -> fmt::Result {
    match node {
        QueryNode::And(_) | QueryNode::Or(_) => write!(f, "({node})"),
        _ => write!(f, "{node}"),
    }
}

/// Prints in the advanced grammar; the output re-parses to an equal tree.
impl fmt::Display for QueryNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryNode::Term(t) => f.write_str(t),
            QueryNode::Fielded(Field::Any, FieldValue::Phrase(ts)) => write_phrase(f, ts),
            QueryNode::Fielded(field, value) => {
                write!(f, "{}:", field.as_str())?;
                match value {
                    FieldValue::Term(t) => f.write_str(t),
                    FieldValue::Phrase(ts) => write_phrase(f, ts),
                    FieldValue::Year(y) => write!(f, "{y}"),
                    FieldValue::Range { lo, hi } => write!(f, "[{lo} TO {hi}]"),
                }
            }
            QueryNode::Not(inner) => {
                f.write_str("NOT ")?;
                write_grouped(f, inner)
            }
            QueryNode::And(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    write_grouped(f, item)?;
                }
                Ok(())
            }
            QueryNode::Or(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    match item {
                        QueryNode::And(_) => write!(f, "{item}")?,
                        other => write_grouped(f, other)?,
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing() {
        let q = QueryNode::And(vec![
            QueryNode::Fielded(Field::Creator, FieldValue::Phrase(vec!["la".into(), "fontaine".into()])),
            QueryNode::Fielded(Field::Date, FieldValue::Range { lo: 1860, hi: 1870 }),
            QueryNode::Not(Box::new(QueryNode::Term("hugo".into()))),
        ]);
        assert_eq!(q.to_string(), "creator:\"la fontaine\" AND date:[1860 TO 1870] AND NOT hugo");
    }

    #[test]
    fn pure_negation_detection() {
        let neg = QueryNode::Not(Box::new(QueryNode::Term("a".into())));
        assert_eq!(QueryNode::And(vec![neg.clone()]).check_negations(), Err(QueryError::PureNegation));
        let ok = QueryNode::And(vec![QueryNode::Term("b".into()), neg.clone()]);
        assert!(ok.check_negations().is_ok());
        let nested = QueryNode::Or(vec![ok, QueryNode::And(vec![neg])]);
        assert_eq!(nested.check_negations(), Err(QueryError::PureNegation));
    }

    #[test]
    fn field_names_are_case_insensitive() {
        assert_eq!(Field::parse_name("CREATOR"), Some(Field::Creator));
        assert_eq!(Field::parse_name("MarkType"), Some(Field::MarkType));
        assert_eq!(Field::parse_name("author"), None);
    }
}
