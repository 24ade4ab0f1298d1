//! Deterministic synthetic corpora: paradigm-shaped lexicons with injected
//! irregulars and compounds, plus matching token streams.
//!
//! These back the randomized test suites and the benchmarks. Everything is
//! a pure function of the seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::lexicon::{LexiconEntry, TrainingSet};

const ONSETS: &[&str] = &["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "þ", "hr", "st", "kl"];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "á", "é", "í", "ó", "ú", "æ", "ö", "au", "ei"];
const LEMMA_SUFFIXES: &[&str] = &["ur", "i", "a", "ó", "ll", "nn", "ir", ""];
const FORM_SUFFIXES: &[&str] = &["ar", "um", "a", "s", "u", "ið", "in", "inn", "num", "anna", "ið", "ri", "ust", "ðu"];

#[derive(Debug, Clone)]
pub struct SynthSpec {
    /// Approximate number of entries to produce (exact unless collisions
    /// exhaust the attempt budget).
    pub target_entries: usize,
    /// Number of inflection paradigms to invent.
    pub paradigms: usize,
    /// Fraction of words replaced by one-off suppletive pairs, which can
    /// only be learned as exceptions.
    pub irregular_ratio: f64,
    /// Fraction of words given compound prefixes with recorded boundaries.
    pub compound_ratio: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            target_entries: 500,
            paradigms: 12,
            irregular_ratio: 0.04,
            compound_ratio: 0.15,
            seed: 0x6e65666e,
        }
    }
}

struct Paradigm {
    lemma_suffix: String,
    /// (tag, form suffix) per inflection slot.
    slots: Vec<(String, String)>,
}

fn stem(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(1..=3);
    let mut s = String::new();
    for _ in 0..syllables {
        s.push_str(ONSETS.choose(rng).unwrap());
        s.push_str(NUCLEI.choose(rng).unwrap());
    }
    s
}

fn paradigms(rng: &mut ChaCha8Rng, count: usize) -> Vec<Paradigm> {
    let tag_pool: Vec<String> = (0..(count * 2).max(6)).map(|i| format!("t{i:02}")).collect();
    (0..count)
        .map(|_| {
            let lemma_suffix = LEMMA_SUFFIXES.choose(rng).unwrap().to_string();
            let slot_count = rng.gen_range(2..=5);
            let slots = (0..slot_count)
                .map(|_| {
                    let tag = tag_pool.choose(rng).unwrap().clone();
                    let form_suffix = FORM_SUFFIXES.choose(rng).unwrap().to_string();
                    (tag, form_suffix)
                })
                .collect();
            Paradigm { lemma_suffix, slots }
        })
        .collect()
}

/// Generates a paradigm-shaped lexicon. Every regular word contributes one
/// entry per inflection slot; irregulars contribute a single unique pair.
pub fn lexicon(spec: &SynthSpec) -> TrainingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tables = paradigms(&mut rng, spec.paradigms.max(1));
    let mut seen = std::collections::HashSet::new();
    let mut entries: Vec<LexiconEntry> = Vec::with_capacity(spec.target_entries);
    let mut attempts = 0usize;
    let budget = spec.target_entries.saturating_mul(40) + 4_000;

    while entries.len() < spec.target_entries && attempts < budget {
        attempts += 1;
        if rng.gen_bool(spec.irregular_ratio) {
            let form = stem(&mut rng);
            let lemma = stem(&mut rng);
            let tag = format!("t{:02}", rng.gen_range(0..spec.paradigms.max(1) * 2));
            if form != lemma && seen.insert((form.clone(), tag.clone())) {
                entries.push(LexiconEntry::new(form, tag, lemma, vec![]).unwrap());
            }
            continue;
        }

        let paradigm = tables.choose(&mut rng).unwrap();
        let base = stem(&mut rng);
        let (prefix, boundaries) = if rng.gen_bool(spec.compound_ratio) {
            let parts = rng.gen_range(1..=2);
            let mut prefix = String::new();
            let mut bounds = Vec::new();
            for _ in 0..parts {
                prefix.push_str(&stem(&mut rng));
                bounds.push(prefix.chars().count());
            }
            (prefix, bounds)
        } else {
            (String::new(), Vec::new())
        };
        let lemma = format!("{prefix}{base}{}", paradigm.lemma_suffix);
        for (tag, form_suffix) in &paradigm.slots {
            if entries.len() >= spec.target_entries {
                break;
            }
            let form = format!("{prefix}{base}{form_suffix}");
            if form.chars().count() <= *boundaries.last().unwrap_or(&0) {
                continue;
            }
            if seen.insert((form.clone(), tag.clone())) {
                entries
                    .push(LexiconEntry::new(form, tag.clone(), lemma.clone(), boundaries.clone()).unwrap());
            }
        }
    }
    TrainingSet::from_entries(entries).expect("generator deduplicates (form, tag)")
}

/// Renders a training set back to lexicon TSV, compound markers included.
pub fn lexicon_tsv(set: &TrainingSet) -> String {
    let mut out = String::new();
    for e in set.entries() {
        out.push_str(&e.marked_form());
        out.push('\t');
        out.push_str(&e.tag);
        out.push('\t');
        out.push_str(&e.lemma);
        out.push('\n');
    }
    out
}

/// A `form TAB tag` token stream sampled from the lexicon, with the given
/// share of out-of-vocabulary tokens and a blank line every ~12 tokens.
pub fn token_stream(set: &TrainingSet, tokens: usize, oov_ratio: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let entries = set.entries();
    for i in 0..tokens {
        if entries.is_empty() || rng.gen_bool(oov_ratio) {
            let form = format!("{}{}", stem(&mut rng), FORM_SUFFIXES.choose(&mut rng).unwrap());
            let tag = format!("t{:02}", rng.gen_range(0..24));
            out.push_str(&form);
            out.push('\t');
            out.push_str(&tag);
        } else {
            let e = &entries[rng.gen_range(0..entries.len())];
            out.push_str(&e.form);
            out.push('\t');
            out.push_str(&e.tag);
        }
        out.push('\n');
        if i % 12 == 11 {
            out.push('\n');
        }
    }
    out
}
