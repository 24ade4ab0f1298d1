//! Shared test support: a brute-force reference trainer and random lexicon
//! generators.
//!
//! The reference trainer re-derives everything from scratch each iteration —
//! its own transform computation, suffix enumeration, set-wide support
//! counts and full rescoring — so it shares no machinery with the
//! production trainer beyond the output types it is compared on.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use nefnir::{LexiconEntry, Rule, TrainingSet, Transform};

pub struct OracleOutcome {
    /// Accepted rules in acceptance order.
    pub rules: Vec<Rule>,
    pub exceptions: BTreeMap<(String, String), String>,
    /// Error count before training and after each accepted rule.
    pub error_curve: Vec<usize>,
}

fn split_point(form: &[char], lemma: &[char]) -> usize {
    let mut p = 0;
    while p < form.len() && p < lemma.len() && form[p] == lemma[p] {
        p += 1;
    }
    p
}

fn suffix_lengths(form_len: usize, bounds: &[usize], min_len: usize) -> Vec<usize> {
    let mut lens = Vec::new();
    let final_start = bounds.last().copied().unwrap_or(0);
    for k in min_len..=(form_len - final_start) {
        lens.push(k);
    }
    if !bounds.is_empty() {
        for &b in bounds.iter().rev().skip(1) {
            if form_len - b >= min_len {
                lens.push(form_len - b);
            }
        }
        lens.push(form_len);
    }
    lens
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CandKey {
    tag: String,
    suffix: Vec<char>,
    source: Vec<char>,
    replacement: Vec<char>,
}

struct Row {
    form: Vec<char>,
    tag: String,
    lemma: Vec<char>,
    bounds: Vec<usize>,
    pred: Vec<char>,
    spec: i64,
}

impl Row {
    fn wrong(&self) -> bool {
        self.pred != self.lemma
    }
}

fn applies(row: &Row, cand: &CandKey) -> bool {
    row.tag == cand.tag && row.form.ends_with(&cand.suffix)
}

fn rewrite(form: &[char], cand: &CandKey) -> Vec<char> {
    let stem = form.len() - cand.source.len();
    let mut out = form[..stem].to_vec();
    out.extend_from_slice(&cand.replacement);
    out
}

/// Exhaustive reference implementation of the training loop.
pub fn oracle_train(set: &TrainingSet, min_support: usize) -> OracleOutcome {
    let mut rows: Vec<Row> = set
        .entries()
        .iter()
        .map(|e| {
            let form: Vec<char> = e.form.chars().collect();
            let lemma: Vec<char> = e.lemma.chars().collect();
            Row {
                pred: form.clone(),
                form,
                tag: e.tag.clone(),
                lemma,
                bounds: e.part_boundaries.clone(),
                spec: -1,
            }
        })
        .collect();

    let mut accepted_keys: HashSet<(Vec<char>, String)> = HashSet::new();
    let mut rules = Vec::new();
    let errors = |rows: &[Row]| rows.iter().filter(|r| r.wrong()).count();
    let mut error_curve = vec![errors(&rows)];

    loop {
        let mut candidates: BTreeSet<CandKey> = BTreeSet::new();
        for row in rows.iter().filter(|r| r.wrong()) {
            let split = split_point(&row.form, &row.lemma);
            let source = row.form[split..].to_vec();
            let replacement = row.lemma[split..].to_vec();
            for len in suffix_lengths(row.form.len(), &row.bounds, source.len()) {
                let suffix = row.form[row.form.len() - len..].to_vec();
                if accepted_keys.contains(&(suffix.clone(), row.tag.clone())) {
                    continue;
                }
                candidates.insert(CandKey {
                    tag: row.tag.clone(),
                    suffix,
                    source: source.clone(),
                    replacement: replacement.clone(),
                });
            }
        }

        let mut best: Option<(i64, usize, CandKey)> = None;
        for cand in candidates {
            let mut support = 0usize;
            let mut gain = 0i64;
            for row in &rows {
                if !applies(row, &cand) {
                    continue;
                }
                let fixes = rewrite(&row.form, &cand) == row.lemma;
                if fixes {
                    support += 1;
                }
                if (cand.suffix.len() as i64) > row.spec {
                    if row.wrong() && fixes {
                        gain += 1;
                    } else if !row.wrong() && !fixes {
                        gain -= 1;
                    }
                }
            }
            if support < min_support || gain <= 0 {
                continue;
            }
            let challenger = (gain, support, cand);
            // Rank: gain, then support, then shorter suffix, then smaller
            // (tag, suffix, source, replacement).
            let wins = match &best {
                None => true,
                Some((g, s, c)) => {
                    (
                        challenger.0,
                        challenger.1,
                        Reverse(challenger.2.suffix.len()),
                        Reverse(challenger.2.clone()),
                    ) > (*g, *s, Reverse(c.suffix.len()), Reverse(c.clone()))
                }
            };
            if wins {
                best = Some(challenger);
            }
        }

        let Some((_, _, winner)) = best else { break };
        for row in rows.iter_mut() {
            if applies(row, &winner) && row.spec < winner.suffix.len() as i64 {
                row.pred = rewrite(&row.form, &winner);
                row.spec = winner.suffix.len() as i64;
            }
        }
        accepted_keys.insert((winner.suffix.clone(), winner.tag.clone()));
        rules.push(
            Rule::new(
                winner.suffix.iter().collect::<String>(),
                winner.tag.clone(),
                Transform::new(
                    winner.source.iter().collect::<String>(),
                    winner.replacement.iter().collect::<String>(),
                ),
            )
            .expect("oracle candidates are well-formed"),
        );
        error_curve.push(errors(&rows));
    }

    let exceptions = rows
        .iter()
        .filter(|r| r.wrong())
        .map(|r| {
            (
                (r.form.iter().collect::<String>(), r.tag.clone()),
                r.lemma.iter().collect::<String>(),
            )
        })
        .collect();
    OracleOutcome { rules, exceptions, error_curve }
}

/// A fully random lexicon over a tiny alphabet, the adversarial counterpart
/// to the paradigm-shaped generator in `nefnir::synth`.
pub fn random_lexicon(rng: &mut ChaCha8Rng, max_entries: usize) -> TrainingSet {
    const ALPHABET: [char; 4] = ['a', 'b', 'ð', 'ö'];
    const TAGS: [&str; 2] = ["t1", "t2"];
    let n = rng.gen_range(1..=max_entries);
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    let word = |rng: &mut ChaCha8Rng| -> String {
        (0..rng.gen_range(1..=5)).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
    };
    for _ in 0..n {
        let form = word(rng);
        // A healthy share of identity entries makes accepted rules break
        // previously-correct words, exercising the recovery paths.
        let lemma = if rng.gen_bool(0.25) { form.clone() } else { word(rng) };
        let tag = TAGS.choose(rng).unwrap().to_string();
        if !seen.insert((form.clone(), tag.clone())) {
            continue;
        }
        let len = form.chars().count();
        let bounds = if len >= 2 && rng.gen_bool(0.3) {
            (1..len).filter(|_| rng.gen_bool(0.4)).take(2).collect()
        } else {
            Vec::new()
        };
        entries.push(LexiconEntry::new(form, tag, lemma, bounds).unwrap());
    }
    TrainingSet::from_entries(entries).expect("keys deduplicated above")
}

/// Collects a model's exceptions into an ordered map for comparison.
pub fn exceptions_of(model: &nefnir::Model) -> BTreeMap<(String, String), String> {
    model
        .exceptions()
        .iter()
        .map(|(f, t, l)| ((f.to_string(), t.to_string()), l.to_string()))
        .collect()
}
