use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{BibRecord, DcName};
use crate::textnorm::tokenize;

use super::{Field, FieldValue, QueryNode};

/// Which part of a record a token came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Source {
    Title,
    Creator,
    Date,
    Publisher,
    Subject,
    Language,
    /// Other DC elements, shelf mark and mark transcriptions; reachable via `any`.
    Other,
}

impl Source {
    fn of(name: Option<DcName>) -> Source {
        match name {
            Some(DcName::Title) => Source::Title,
            Some(DcName::Creator) => Source::Creator,
            Some(DcName::Date) => Source::Date,
            Some(DcName::Publisher) => Source::Publisher,
            Some(DcName::Subject) => Source::Subject,
            Some(DcName::Language) => Source::Language,
            _ => Source::Other,
        }
    }

    fn matches(self, field: Field) -> bool {
        match field {
            Field::Any => true,
            Field::Title => self == Source::Title,
            Field::Creator => self == Source::Creator,
            Field::Date => self == Source::Date,
            Field::Publisher => self == Source::Publisher,
            Field::Subject => self == Source::Subject,
            Field::Language => self == Source::Language,
            Field::Library | Field::MarkType => false,
        }
    }
}

type DocSet = BTreeSet<u32>;

/// One ranked result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub record_id: String,
    /// Number of distinct query tokens the record matched.
    pub score: u32,
}

/// Inverted index over a set of records. Immutable once built.
///
/// Documents are numbered by position in record-id order, so ascending
/// document number is ascending record id.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchIndex {
    record_ids: Vec<String>,
    libraries: Vec<String>,
    /// token -> sorted (doc, source) pairs
    postings: BTreeMap<String, Vec<(u32, Source)>>,
    /// Per doc, the token sequence of every indexed value, for phrase checks.
    sequences: Vec<Vec<(Source, Vec<String>)>>,
    years: Vec<Option<u16>>,
    library_facet: BTreeMap<String, Vec<u32>>,
    marktype_facet: BTreeMap<String, Vec<u32>>,
}

impl SearchIndex {
    pub fn build<'a>(records: impl IntoIterator<Item = &'a BibRecord>) -> SearchIndex {
        let mut sorted: Vec<&BibRecord> = records.into_iter().collect();
        sorted.sort_by(|a, b| a.record_id.cmp(&b.record_id));

        let mut index = SearchIndex::default();
        let mut postings: BTreeMap<String, BTreeSet<(u32, Source)>> = BTreeMap::new();
        for (doc, record) in sorted.iter().enumerate() {
            let doc = doc as u32;
            let mut values: Vec<(Source, &str)> = record
                .elements
                .iter()
                .map(|e| (Source::of(e.name()), e.value.as_str()))
                .collect();
            values.extend(record.shelf_mark.as_deref().map(|s| (Source::Other, s)));
            values.extend(record.marks.iter().filter_map(|m| m.transcription.as_deref().map(|t| (Source::Other, t))));

            let mut sequences = Vec::with_capacity(values.len());
            for (source, value) in values {
                let tokens = tokenize(value);
                for t in &tokens {
                    postings.entry(t.clone()).or_default().insert((doc, source));
                }
                sequences.push((source, tokens));
            }
            index.sequences.push(sequences);
            index.years.push(record.year());
            index.record_ids.push(record.record_id.clone());
            index.libraries.push(record.library_slug.clone());
            index.library_facet.entry(record.library_slug.clone()).or_default().push(doc);
            let kinds: BTreeSet<&str> = record.marks.iter().map(|m| m.kind.as_str()).collect();
            for kind in kinds {
                index.marktype_facet.entry(kind.to_owned()).or_default().push(doc);
            }
        }
        index.postings = postings.into_iter().map(|(t, set)| (t, set.into_iter().collect())).collect();
        index
    }

    pub fn len(&self) -> usize {
        self.record_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record_ids.is_empty()
    }

    pub fn record_id(&self, doc: u32) -> &str {
        &self.record_ids[doc as usize]
    }

    /// Evaluate a validated query and rank the matches: descending number of
    /// distinct query tokens matched, then ascending record id.
    pub fn execute(&self, ast: &QueryNode) -> Vec<SearchHit> {
        let docs = self.eval(ast);
        let mut leaves = Vec::new();
        positive_text_leaves(ast, &mut leaves);
        let distinct: BTreeSet<&str> = leaves.iter().map(|(_, t)| t.as_str()).collect();

        let mut hits: Vec<SearchHit> = docs
            .into_iter()
            .map(|doc| {
                let score = distinct
                    .iter()
                    .filter(|&&t| leaves.iter().any(|(f, lt)| lt == t && self.has_token(doc, t, *f)))
                    .count() as u32;
                SearchHit { record_id: self.record_id(doc).to_owned(), score }
            })
            .collect();
        // docs arrive in ascending record-id order; the stable sort keeps it for ties
        hits.sort_by_key(|h| std::cmp::Reverse(h.score));
        hits
    }

    fn has_token(&self, doc: u32, token: &str, field: Field) -> bool {
        self.postings.get(token).is_some_and(|list| {
            let start = list.partition_point(|(d, _)| *d < doc);
            list[start..].iter().take_while(|(d, _)| *d == doc).any(|(_, s)| s.matches(field))
        })
    }

    fn all_docs(&self) -> DocSet {
        (0..self.record_ids.len() as u32).collect()
    }

    fn token_docs(&self, token: &str, field: Field) -> DocSet {
        self.postings
            .get(token)
            .map(|list| list.iter().filter(|(_, s)| s.matches(field)).map(|(d, _)| *d).collect())
            .unwrap_or_default()
    }

    fn phrase_docs(&self, tokens: &[String], field: Field) -> DocSet {
        let mut candidates: Option<DocSet> = None;
        for t in tokens {
            let docs = self.token_docs(t, field);
            candidates = Some(match candidates {
                None => docs,
                Some(c) => c.intersection(&docs).copied().collect(),
            });
        }
        candidates
            .unwrap_or_default()
            .into_iter()
            .filter(|&doc| {
                self.sequences[doc as usize]
                    .iter()
                    .filter(|(s, _)| s.matches(field))
                    .any(|(_, seq)| seq.windows(tokens.len()).any(|w| w == tokens))
            })
            .collect()
    }

    fn year_docs(&self, lo: u16, hi: u16) -> DocSet {
        self.years
            .iter()
            .enumerate()
            .filter(|(_, y)| y.is_some_and(|y| (lo..=hi).contains(&y)))
            .map(|(d, _)| d as u32)
            .collect()
    }

    fn facet_docs(facet: &BTreeMap<String, Vec<u32>>, key: &str) -> DocSet {
        facet.get(key).map(|v| v.iter().copied().collect()).unwrap_or_default()
    }

    fn eval(&self, node: &QueryNode) -> DocSet {
        match node {
            QueryNode::Term(t) => self.token_docs(t, Field::Any),
            QueryNode::Fielded(field, value) => match (field, value) {
                (Field::Library, FieldValue::Term(slug)) => Self::facet_docs(&self.library_facet, slug),
                (Field::MarkType, FieldValue::Term(kind)) => Self::facet_docs(&self.marktype_facet, kind),
                (_, FieldValue::Year(y)) => self.year_docs(*y, *y),
                (_, FieldValue::Range { lo, hi }) => self.year_docs(*lo, *hi),
                (f, FieldValue::Term(t)) => self.token_docs(t, *f),
                (f, FieldValue::Phrase(ts)) => self.phrase_docs(ts, *f),
            },
            QueryNode::Or(items) => items.iter().flat_map(|n| self.eval(n)).collect(),
            QueryNode::And(items) => {
                let mut result: Option<DocSet> = None;
                for item in items.iter().filter(|n| !matches!(n, QueryNode::Not(_))) {
                    let docs = self.eval(item);
                    result = Some(match result {
                        None => docs,
                        Some(r) => r.intersection(&docs).copied().collect(),
                    });
                }
                let mut result = result.unwrap_or_default();
                for item in items {
                    if let QueryNode::Not(inner) = item {
                        for doc in self.eval(inner) {
                            result.remove(&doc);
                        }
                    }
                }
                result
            }
            // Only reachable for hand-built trees; complement against everything.
            QueryNode::Not(inner) => {
                let excluded = self.eval(inner);
                self.all_docs().difference(&excluded).copied().collect()
            }
        }
    }

    /// Library and mark-type counts over a result list.
    pub fn facet_counts(&self, hits: &[SearchHit]) -> Facets {
        let wanted: BTreeSet<&str> = hits.iter().map(|h| h.record_id.as_str()).collect();
        let docs: Vec<u32> = (0..self.record_ids.len() as u32)
            .filter(|&d| wanted.contains(self.record_id(d)))
            .collect();
        let mut facets = Facets::default();
        for &doc in &docs {
            *facets.library.entry(self.libraries[doc as usize].clone()).or_default() += 1;
        }
        for (kind, list) in &self.marktype_facet {
            let n = docs.iter().filter(|d| list.binary_search(d).is_ok()).count();
            if n > 0 {
                facets.marktype.insert(kind.clone(), n);
            }
        }
        facets
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facets {
    pub library: BTreeMap<String, usize>,
    pub marktype: BTreeMap<String, usize>,
}

/// Text leaves outside any negation, as (field, token).
fn positive_text_leaves(node: &QueryNode, out: &mut Vec<(Field, String)>) {
    match node {
        QueryNode::Term(t) => out.push((Field::Any, t.clone())),
        QueryNode::Fielded(f @ (Field::Library | Field::MarkType), _) => {
            let _ = f;
        }
        QueryNode::Fielded(f, FieldValue::Term(t)) => out.push((*f, t.clone())),
        QueryNode::Fielded(f, FieldValue::Phrase(ts)) => out.extend(ts.iter().map(|t| (*f, t.clone()))),
        QueryNode::Fielded(..) | QueryNode::Not(_) => {}
        QueryNode::And(items) | QueryNode::Or(items) => {
            items.iter().for_each(|n| positive_text_leaves(n, out))
        }
    }
}
