mod common;

use std::collections::BTreeSet;

use alp_core::catalog::{BibRecord, DcName};
use alp_core::query::{parse_query, Mode, QueryNode, SearchIndex};
use alp_core::textnorm::tokenize;
use common::record;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const VOCAB: &[&str] = &[
    "fables", "Doré", "Quichotte", "ingénieur", "Hidalgo", "Manche", "Misérables", "peinture", "Salammbô",
    "voyage", "Orient", "Émaux", "camées", "jardin", "Giverny", "japonais", "estampes", "Hokusai", "mer",
    "l'été", "Noël", "œuvres", "ÉTUDES", "cœur",
];

fn random_corpus(rng: &mut StdRng, n: u32) -> Vec<BibRecord> {
    (1..=n)
        .map(|i| {
            let words = rng.gen_range(1..6);
            let title: Vec<&str> = (0..words).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect();
            let slug = ["monet", "degas", "manet"][rng.gen_range(0..3)];
            record(slug, i, &[(DcName::Title, &title.join(" ")), (DcName::Date, &format!("{}", rng.gen_range(1800..1900)))])
        })
        .collect()
}

fn ids(index: &SearchIndex, q: &QueryNode) -> BTreeSet<String> {
    index.execute(q).into_iter().map(|h| h.record_id).collect()
}

#[test]
fn every_title_token_finds_its_record() {
    let mut failures = 0;
    for seed in 0..20 {
        let mut rng = StdRng::seed_from_u64(seed);
        let corpus = random_corpus(&mut rng, 100);
        let index = SearchIndex::build(&corpus);
        for r in &corpus {
            for token in tokenize(r.main_title().unwrap()) {
                if !ids(&index, &QueryNode::Term(token)).contains(&r.record_id) {
                    failures += 1;
                }
            }
        }
    }
    assert_eq!(failures, 0);
}

#[test]
fn and_not_is_set_difference() {
    let mut rng = StdRng::seed_from_u64(99);
    let corpus = random_corpus(&mut rng, 200);
    let index = SearchIndex::build(&corpus);
    for a in ["fables", "dore", "manche"] {
        for b in ["giverny", "library:monet", "date:[1850 TO 1870]"] {
            let pa = ids(&index, &parse_query(a, Mode::Advanced).unwrap());
            let pb = ids(&index, &parse_query(b, Mode::Advanced).unwrap());
            let both = ids(&index, &parse_query(&format!("{a} NOT {b}"), Mode::Advanced).unwrap());
            assert_eq!(both, pa.difference(&pb).cloned().collect());
            let union = ids(&index, &parse_query(&format!("{a} OR {b}"), Mode::Advanced).unwrap());
            assert_eq!(union, pa.union(&pb).cloned().collect());
            let inter = ids(&index, &parse_query(&format!("{a} AND {b}"), Mode::Advanced).unwrap());
            assert_eq!(inter, pa.intersection(&pb).cloned().collect());
            // a AND NOT (b OR c) == (a NOT b) NOT c
            let dm = ids(&index, &parse_query(&format!("{a} NOT ({b} OR estampes)"), Mode::Advanced).unwrap());
            let chain = ids(&index, &parse_query(&format!("{a} NOT {b} NOT estampes"), Mode::Advanced).unwrap());
            assert_eq!(dm, chain);
        }
    }
}

#[test]
fn simple_mode_is_and_of_keywords() {
    let mut rng = StdRng::seed_from_u64(5);
    let corpus = random_corpus(&mut rng, 150);
    let index = SearchIndex::build(&corpus);
    let simple = ids(&index, &parse_query("Fables Doré", Mode::Simple).unwrap());
    let adv = ids(&index, &parse_query("fables AND dore", Mode::Advanced).unwrap());
    assert_eq!(simple, adv);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_serializes_losslessly(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let corpus = random_corpus(&mut rng, 20);
        let index = SearchIndex::build(&corpus);
        let back: SearchIndex = serde_json::from_str(&serde_json::to_string(&index).unwrap()).unwrap();
        let q = parse_query("fables OR dore OR date:[1800 TO 1850]", Mode::Advanced).unwrap();
        prop_assert_eq!(index.execute(&q), back.execute(&q));
    }

    #[test]
    fn results_are_ranked(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let corpus = random_corpus(&mut rng, 40);
        let index = SearchIndex::build(&corpus);
        let hits = index.execute(&parse_query("fables OR dore OR manche OR giverny", Mode::Advanced).unwrap());
        for w in hits.windows(2) {
            prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].record_id < w[1].record_id));
        }
    }
}
