//! Edition matching: score provider candidates against a catalog record and
//! decide whether the best one is the same edition, an approximate one, or
//! no match at all.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{BibRecord, DcName, DigitalSurrogate, MatchLevel, Provider};
use crate::comparison::surname;
use crate::textnorm::{extract_year, jaccard, token_set};

/// A bibliographic hit returned by a digitization provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRecord {
    pub provider: Provider,
    pub provider_record_id: String,
    pub title: Option<String>,
    pub creator: Option<String>,
    pub date: Option<String>,
    pub publisher: Option<String>,
    pub access_url: String,
}

/// Weights and thresholds. `Default` is the shipped calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub w_title: f64,
    pub w_creator: f64,
    pub w_year: f64,
    pub w_publisher: f64,
    pub exact_title: f64,
    pub exact_creator: f64,
    pub exact_publisher: f64,
    pub approx_total: f64,
    pub approx_title: f64,
    /// Score for a component when either side lacks the field.
    pub missing: f64,
    /// Year gap still scored as `missing` rather than zero.
    pub year_slack: u16,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            w_title: 0.45,
            w_creator: 0.25,
            w_year: 0.20,
            w_publisher: 0.10,
            exact_title: 0.9,
            exact_creator: 0.9,
            exact_publisher: 0.6,
            approx_total: 0.55,
            approx_title: 0.5,
            missing: 0.5,
            year_slack: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ExactEdition,
    ApproximateEdition,
    NoMatch,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ExactEdition => "exact_edition",
            Verdict::ApproximateEdition => "approximate_edition",
            Verdict::NoMatch => "no_match",
        }
    }

    pub fn level(self) -> Option<MatchLevel> {
        match self {
            Verdict::ExactEdition => Some(MatchLevel::ExactEdition),
            Verdict::ApproximateEdition => Some(MatchLevel::ApproximateEdition),
            Verdict::NoMatch => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub title_sim: f64,
    pub creator_sim: f64,
    pub year_score: f64,
    pub publisher_sim: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate: ProviderRecord,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub record_id: String,
    /// In input order.
    pub candidates: Vec<ScoredCandidate>,
    pub verdict: Verdict,
    /// Index into `candidates` of the best one, if any.
    pub chosen: Option<usize>,
}

impl MatchReport {
    pub fn chosen(&self) -> Option<&ScoredCandidate> {
        self.chosen.map(|i| &self.candidates[i])
    }
}

fn optional_jaccard(a: Option<&str>, b: Option<&str>, missing: f64) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => jaccard(&token_set(a), &token_set(b)),
        _ => missing,
    }
}

pub fn score_candidate(record: &BibRecord, cand: &ProviderRecord, config: &MatchConfig) -> Scores {
    let title_sim = match (record.main_title(), cand.title.as_deref()) {
        (Some(a), Some(b)) => jaccard(&token_set(a), &token_set(b)),
        _ => 0.0,
    };

    let creator_sim = match (record.first(DcName::Creator), cand.creator.as_deref()) {
        (Some(a), Some(b)) if surname(a) == surname(b) => 1.0,
        (a, b) => optional_jaccard(a, b, config.missing),
    };

    let year_score = match (record.year(), cand.date.as_deref().and_then(extract_year)) {
        (Some(a), Some(b)) if a == b => 1.0,
        (Some(a), Some(b)) if a.abs_diff(b) <= config.year_slack => config.missing,
        (Some(_), Some(_)) => 0.0,
        _ => config.missing,
    };

    let publisher: Option<String> = {
        let values: Vec<&str> = record.values(DcName::Publisher).collect();
        (!values.is_empty()).then(|| values.join(" "))
    };
    let publisher_sim = optional_jaccard(publisher.as_deref(), cand.publisher.as_deref(), config.missing);

    let total = config.w_title * title_sim
        + config.w_creator * creator_sim
        + config.w_year * year_score
        + config.w_publisher * publisher_sim;
    Scores { title_sim, creator_sim, year_score, publisher_sim, total }
}

fn approximate_ok(s: &Scores, config: &MatchConfig) -> bool {
    s.total >= config.approx_total && s.title_sim >= config.approx_title
}

/// Verdict for one scored candidate. `years_equal` must be true only when
/// both sides carry a year and they coincide.
fn verdict_for(s: &Scores, years_equal: bool, config: &MatchConfig) -> Verdict {
    if !approximate_ok(s, config) {
        return Verdict::NoMatch;
    }
    if s.title_sim >= config.exact_title
        && s.creator_sim >= config.exact_creator
        && years_equal
        && s.publisher_sim >= config.exact_publisher
    {
        Verdict::ExactEdition
    } else {
        Verdict::ApproximateEdition
    }
}

pub fn classify(record: &BibRecord, candidates: &[ProviderRecord], config: &MatchConfig) -> MatchReport {
    let scored: Vec<ScoredCandidate> = candidates
        .iter()
        .map(|c| ScoredCandidate { scores: score_candidate(record, c, config), candidate: c.clone() })
        .collect();

    let chosen = (0..scored.len()).min_by(|&i, &j| {
        let (a, b) = (&scored[i], &scored[j]);
        b.scores
            .total
            .total_cmp(&a.scores.total)
            .then_with(|| a.candidate.provider.cmp(&b.candidate.provider))
            .then_with(|| a.candidate.provider_record_id.cmp(&b.candidate.provider_record_id))
    });

    let verdict = match chosen {
        None => Verdict::NoMatch,
        Some(i) => {
            let c = &scored[i];
            let years_equal = matches!(
                (record.year(), c.candidate.date.as_deref().and_then(extract_year)),
                (Some(a), Some(b)) if a == b
            );
            verdict_for(&c.scores, years_equal, config)
        }
    };

    MatchReport { record_id: record.record_id.clone(), candidates: scored, verdict, chosen }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttachError {
    #[error("no matching candidate to attach")]
    NoMatch,
    #[error("report is for {report}, not {record}")]
    WrongRecord { report: String, record: String },
}

/// Adds the chosen candidate as a surrogate. Returns false when an identical
/// surrogate is already present.
pub fn attach_surrogate(record: &mut BibRecord, report: &MatchReport) -> Result<bool, AttachError> {
    if report.record_id != record.record_id {
        return Err(AttachError::WrongRecord { report: report.record_id.clone(), record: record.record_id.clone() });
    }
    let (Some(level), Some(chosen)) = (report.verdict.level(), report.chosen()) else {
        return Err(AttachError::NoMatch);
    };
    let c = &chosen.candidate;
    let exists = record.surrogates.iter().any(|s| {
        s.provider == c.provider && s.provider_record_id == c.provider_record_id && s.match_level == level
    });
    if exists {
        return Ok(false);
    }
    record.surrogates.push(DigitalSurrogate {
        provider: c.provider,
        provider_record_id: c.provider_record_id.clone(),
        access_url: c.access_url.clone(),
        match_level: level,
        total_score: chosen.scores.total,
    });
    Ok(true)
}

pub const REPORT_CSV_HEADER: [&str; 9] = [
    "record_id",
    "provider",
    "provider_record_id",
    "title_sim",
    "creator_sim",
    "year_score",
    "publisher_sim",
    "total",
    "verdict",
];

/// One review-sheet row describing the chosen candidate (empty provider
/// columns when there is none).
pub fn report_row(r: &MatchReport) -> [String; 9] {
    let num = |x: f64| format!("{x:.6}");
    match r.chosen() {
        Some(c) => [
            r.record_id.clone(),
            c.candidate.provider.as_str().to_owned(),
            c.candidate.provider_record_id.clone(),
            num(c.scores.title_sim),
            num(c.scores.creator_sim),
            num(c.scores.year_score),
            num(c.scores.publisher_sim),
            num(c.scores.total),
            r.verdict.to_string(),
        ],
        None => {
            let mut row: [String; 9] = Default::default();
            row[0] = r.record_id.clone();
            row[8] = r.verdict.to_string();
            row
        }
    }
}

/// Curator review sheet: [`REPORT_CSV_HEADER`] then one [`report_row`] per report.
pub fn write_report_csv<W: std::io::Write>(out: W, reports: &[MatchReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_CSV_HEADER)?;
    for r in reports {
        w.write_record(report_row(r))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::DcElement;

    fn record(title: &str, creator: &str, date: &str, publisher: Option<&str>) -> BibRecord {
        let mut elements = vec![
            DcElement::new(DcName::Title, title),
            DcElement::new(DcName::Creator, creator),
            DcElement::new(DcName::Date, date),
        ];
        elements.extend(publisher.map(|p| DcElement::new(DcName::Publisher, p)));
        BibRecord {
            record_id: "monet-000001".into(),
            library_slug: "monet".into(),
            datestamp: "2019-01-01T00:00:00Z".into(),
            elements,
            shelf_mark: None,
            marks: vec![],
            surrogates: vec![],
        }
    }

    fn cand(id: &str, title: &str, creator: &str, date: &str, publisher: Option<&str>) -> ProviderRecord {
        ProviderRecord {
            provider: Provider::Fixture,
            provider_record_id: id.into(),
            title: Some(title.into()),
            creator: Some(creator.into()),
            date: Some(date.into()),
            publisher: publisher.map(Into::into),
            access_url: format!("https://example.org/{id}"),
        }
    }

    #[test]
    fn quixote_title_similarity() {
        let r = record("L'ingénieur Hidalgo Don Quichotte de la Manche", "Cervantes", "1869", None);
        let c = cand("q", "Don Quichotte de la Manche", "Cervantes", "1869", None);
        let s = score_candidate(&r, &c, &MatchConfig::default());
        assert_eq!(s.title_sim, 5.0 / 8.0);
    }

    #[test]
    fn identity_scores_one() {
        let r = record("Fables", "La Fontaine, Jean de", "1868", Some("Hachette"));
        let c = cand("f", "Fables", "La Fontaine, Jean de", "1868", Some("Hachette"));
        let s = score_candidate(&r, &c, &MatchConfig::default());
        assert_eq!((s.title_sim, s.creator_sim, s.year_score, s.publisher_sim), (1.0, 1.0, 1.0, 1.0));
        assert!((s.total - 1.0).abs() < 1e-12);
        let report = classify(&r, &[c], &MatchConfig::default());
        assert_eq!(report.verdict, Verdict::ExactEdition);
    }

    #[test]
    fn near_year_is_half() {
        let r = record("Fables", "La Fontaine", "1869", None);
        let c = cand("f", "Fables", "La Fontaine", "1870", None);
        assert_eq!(score_candidate(&r, &c, &MatchConfig::default()).year_score, 0.5);
    }

    #[test]
    fn empty_candidates() {
        let r = record("Fables", "La Fontaine", "1869", None);
        let report = classify(&r, &[], &MatchConfig::default());
        assert_eq!(report.verdict, Verdict::NoMatch);
        assert!(report.chosen.is_none());
    }

    #[test]
    fn reissue_is_approximate() {
        let r = record("Fables. Avec les dessins de Gustave Doré", "La Fontaine, Jean de", "1868", Some("Hachette"));
        let c = cand("r", "Fables. Avec les dessins de Gustave Doré", "La Fontaine, Jean de", "1890", Some("Hachette"));
        let report = classify(&r, &[c], &MatchConfig::default());
        assert_eq!(report.verdict, Verdict::ApproximateEdition);
    }

    #[test]
    fn attach_is_idempotent_and_rejects_no_match() {
        let mut r = record("Fables", "La Fontaine", "1868", Some("Hachette"));
        let c = cand("f", "Fables", "La Fontaine", "1868", Some("Hachette"));
        let report = classify(&r, &[c], &MatchConfig::default());
        assert_eq!(attach_surrogate(&mut r, &report), Ok(true));
        assert_eq!(attach_surrogate(&mut r, &report), Ok(false));
        assert_eq!(r.surrogates.len(), 1);
        assert_eq!(r.surrogates[0].match_level, MatchLevel::ExactEdition);

        let none = classify(&r, &[], &MatchConfig::default());
        assert_eq!(attach_surrogate(&mut r, &none), Err(AttachError::NoMatch));
    }

    #[test]
    fn csv_report() {
        let r = record("Fables", "La Fontaine", "1868", None);
        let reports = vec![
            classify(&r, &[cand("f", "Fables", "La Fontaine", "1868", None)], &MatchConfig::default()),
            classify(&r, &[], &MatchConfig::default()),
        ];
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_CSV_HEADER.join(","));
        assert_eq!(lines[1], "monet-000001,fixture,f,1.000000,1.000000,1.000000,0.500000,0.950000,approximate_edition");
        assert_eq!(lines[2], "monet-000001,,,,,,,,no_match");
    }
}
