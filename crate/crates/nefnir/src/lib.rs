//! A trainable lemmatizer for PoS-tagged text.
//!
//! The model is learned from a morphological lexicon of (form, tag, lemma)
//! triples: suffix substitution rules such as (`ngar`, `nkfn`, `ar`→`ur`)
//! are generated greedily, each accepted rule reducing the number of
//! training errors, and whatever the rules cannot reproduce goes into an
//! exception table. At lookup time the exception table wins, then the rule
//! with the longest suffix shared with the query form under the same tag,
//! then the form itself.
//!
//! The crate exposes the pipeline as a library — [`lexicon`] parsing,
//! [`tagmap`] translation, [`trainer`], the runtime [`ruleset`] model with a
//! versioned text [`mod@format`], and corpus [`eval`] — plus a `nefnir`
//! binary wiring them into `train`, `lemmatize` and `eval` subcommands.
//!
//! Batch-shaped stages (candidate scoring, batch lemmatization, evaluation)
//! run data-parallel on rayon when the default `parallel` feature is on and
//! fall back to sequential code otherwise, with identical results either
//! way.

pub mod cli;
pub mod eval;
pub mod format;
pub mod lexicon;
pub mod par;
pub mod rules;
pub mod ruleset;
pub mod synth;
pub mod tagmap;
pub mod trainer;

pub use eval::{accuracy, evaluate, tag_accuracy, EvalError, EvalReport, Percent, TokenRecord};
pub use format::{load_model, serialize_model, serialize_model_to_string};
pub use lexicon::{parse_entry_line, parse_lexicon, LexiconEntry, LexiconError, TrainingSet};
pub use par::Threading;
pub use rules::{minimal_transform, Rule, RuleError, Transform};
pub use ruleset::{
    ExceptionTable, LemmaResult, LemmatizeOptions, Model, ModelError, Provenance, RuleSet,
};
pub use tagmap::{TagMap, TagMapError};
pub use trainer::{candidate_suffixes, train, TrainConfig, TrainError, TrainOutcome, TrainStats};
