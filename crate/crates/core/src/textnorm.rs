//! Accent- and case-insensitive text normalization.
//!
//! Everything that compares text (the search index, work/edition keys, the
//! edition matcher) goes through [`fold`] and [`tokenize`], so a hand-computed
//! score over folded tokens is always reproducible.
//!
//! Folding is compatibility decomposition, lowercasing, and removal of every
//! combining mark. Tokenization splits the folded string on every character
//! that is not alphanumeric. Apostrophes are separators, so French elisions
//! come out as standalone tokens: `"L'ingénieur"` gives `["l", "ingenieur"]`.
//! There is no stopword list and no stemming.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Decompose, lowercase and strip combining marks. Idempotent.
pub fn fold(s: &str) -> String {
    // Lowercasing can produce new decomposable sequences (e.g. U+0130), so
    // decompose a second time before dropping marks.
    s.nfkd()
        .flat_map(char::to_lowercase)
        .nfkd()
        .filter(|c| !is_combining_mark(*c))
        .collect()
}

/// Split `fold(s)` into non-empty runs of letters and digits.
pub fn tokenize(s: &str) -> Vec<String> {
    tokens_of_folded(&fold(s))
}

fn tokens_of_folded(folded: &str) -> Vec<String> {
    folded
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Sorted, deduplicated token set of `s`.
pub fn token_set(s: &str) -> std::collections::BTreeSet<String> {
    tokenize(s).into_iter().collect()
}

/// First run of four consecutive ASCII digits, read as a year.
///
/// `"c. 1869-1870"` gives 1869; `"s.d."` gives `None`.
pub fn extract_year(s: &str) -> Option<u16> {
    let bytes = s.as_bytes();
    bytes
        .windows(4)
        .find(|w| w.iter().all(u8::is_ascii_digit))
        .map(|w| w.iter().fold(0u16, |acc, d| acc * 10 + u16::from(d - b'0')))
}

/// Jaccard similarity |A ∩ B| / |A ∪ B| of two sets; 0 when both are empty.
pub fn jaccard<T: Ord>(a: &std::collections::BTreeSet<T>, b: &std::collections::BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}
