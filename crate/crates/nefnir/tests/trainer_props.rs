//! Trainer-level properties: agreement with the brute-force reference,
//! training-set closure, monotone progress, set-wide support at acceptance,
//! and byte-level determinism across runs and threading modes.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Cursor;

use common::{exceptions_of, oracle_train, random_lexicon};
use nefnir::synth::{lexicon, lexicon_tsv, SynthSpec};
use nefnir::trainer::{train, TrainConfig};
use nefnir::{parse_lexicon, serialize_model_to_string, TagMap, Threading, TrainingSet};

fn assert_matches_oracle(set: &TrainingSet, min_support: usize) {
    let config = TrainConfig { min_support, ..TrainConfig::default() };
    let outcome = train(set, &config).expect("training succeeds");
    let oracle = oracle_train(set, min_support);

    assert_eq!(
        outcome.model.rules(),
        oracle.rules.as_slice(),
        "accepted rule sequence diverged from the reference"
    );
    assert_eq!(exceptions_of(&outcome.model), oracle.exceptions);
    assert_eq!(outcome.stats.error_curve, oracle.error_curve);
}

#[test]
fn agrees_with_reference_on_random_lexicons() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbdb);
    for round in 0..60 {
        let set = random_lexicon(&mut rng, 30);
        let min_support = if round % 3 == 0 { 1 } else { 2 };
        assert_matches_oracle(&set, min_support);
    }
}

#[test]
fn agrees_with_reference_on_paradigm_lexicons() {
    for seed in 0..12 {
        let set = lexicon(&SynthSpec {
            target_entries: 45,
            paradigms: 4,
            seed,
            ..SynthSpec::default()
        });
        assert_matches_oracle(&set, 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_agreement_holds_under_shrinking(seed in 0u64..1 << 48, max in 2usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_lexicon(&mut rng, max);
        assert_matches_oracle(&set, 2);
    }
}

#[test]
fn closure_and_strict_progress_on_synthetic_lexicons() {
    for seed in 0..8 {
        let set = lexicon(&SynthSpec { target_entries: 400, seed, ..SynthSpec::default() });
        let outcome = train(&set, &TrainConfig::default()).unwrap();

        for entry in set.entries() {
            let got = outcome.model.lemmatize(&entry.form, &entry.tag);
            assert_eq!(
                got.lemma, entry.lemma,
                "closure violated for ({}, {})",
                entry.form, entry.tag
            );
        }

        let curve = &outcome.stats.error_curve;
        assert!(curve.windows(2).all(|w| w[1] < w[0]), "non-decreasing step in {curve:?}");
        assert_eq!(outcome.stats.iterations, curve.len() - 1);
        assert_eq!(outcome.stats.final_errors, outcome.model.exceptions().len());
    }
}

#[test]
fn accepted_rules_keep_set_wide_support() {
    let set = lexicon(&SynthSpec { target_entries: 500, seed: 99, ..SynthSpec::default() });
    let outcome = train(&set, &TrainConfig::default()).unwrap();
    assert!(!outcome.model.rules().is_empty());
    for rule in outcome.model.rules() {
        let support = set
            .entries()
            .iter()
            .filter(|e| {
                e.tag == rule.tag()
                    && e.form.ends_with(rule.match_suffix())
                    && rule.apply(&e.form).unwrap() == e.lemma
            })
            .count();
        assert!(
            support >= 2,
            "rule ({}, {}) has support {support}",
            rule.match_suffix(),
            rule.tag()
        );
    }
}

#[test]
fn training_is_deterministic_across_runs_and_modes() {
    let set = lexicon(&SynthSpec { target_entries: 600, seed: 5, ..SynthSpec::default() });
    let run = |mode: Threading| {
        let config = TrainConfig { threading: mode, ..TrainConfig::default() };
        serialize_model_to_string(&train(&set, &config).unwrap().model)
    };
    let first = run(Threading::default());
    let second = run(Threading::default());
    assert_eq!(first, second, "same-mode retraining must be byte-identical");
    let sequential = run(Threading::Sequential);
    assert_eq!(first, sequential, "threading mode must not change the model");
    let parallel = run(Threading::Parallel);
    assert_eq!(first, parallel);
}

#[test]
fn rule_tags_stay_inside_the_mapped_tag_space() {
    let set = lexicon(&SynthSpec { target_entries: 300, seed: 3, ..SynthSpec::default() });
    let map = TagMap::load(Cursor::new("t00\tn\nt01\tn\nt02\tl\n")).unwrap();
    let tsv = lexicon_tsv(&set);
    let mapped = parse_lexicon(Cursor::new(tsv), Some(&map)).unwrap();

    let tag_space: std::collections::HashSet<&str> =
        mapped.entries().iter().map(|e| e.tag.as_str()).collect();
    assert!(tag_space.contains("n"), "map should have applied");

    let outcome = train(&mapped, &TrainConfig::default()).unwrap();
    for rule in outcome.model.rules() {
        assert!(
            tag_space.contains(rule.tag()),
            "rule tag {} escaped the training tag space",
            rule.tag()
        );
    }
}
