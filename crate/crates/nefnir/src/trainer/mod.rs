//! Greedy error-driven rule learning.
//!
//! Training starts from the assumption that every form is its own lemma,
//! then repeatedly generates candidate suffix rules from the remaining
//! errors, accepts the candidate with the best net error reduction, and
//! applies it. When no candidate helps any more, every still-wrong entry
//! goes into the exception table, so the finished model reproduces the
//! training set exactly.

use thiserror::Error;

use crate::lexicon::{LexiconEntry, TrainingSet};
use crate::par::Threading;
use crate::rules::Transform;
use crate::ruleset::{Model, ModelError};

mod pool;

use pool::Session;

/// Deterministic tie-break among candidates with equal net gain: prefer
/// greater support, then the shorter (more general) match suffix, then the
/// lexicographically least (tag, suffix, source, replacement).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    SupportLengthLexical,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// A candidate must lemmatize at least this many training entries
    /// correctly, counted over every entry it applies to.
    pub min_support: usize,
    /// Safety cap on accepted rules; strict error decrease makes hitting it
    /// unreachable in practice.
    pub max_iterations: Option<usize>,
    pub tie_break: TieBreak,
    pub threading: Threading,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            min_support: 2,
            max_iterations: None,
            tie_break: TieBreak::default(),
            threading: Threading::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("iteration cap {limit} reached with {remaining_errors} training errors left")]
    IterationLimit { limit: usize, remaining_errors: usize },
    #[error("failed to assemble model: {0}")]
    Model(#[from] ModelError),
}

/// Per-run diagnostics.
#[derive(Debug, Clone)]
pub struct TrainStats {
    pub entries: usize,
    /// Number of accepted rules; one per loop iteration.
    pub iterations: usize,
    pub initial_errors: usize,
    /// Entries left to the exception table.
    pub final_errors: usize,
    /// Training-set error count before training and after each accepted
    /// rule; strictly decreasing after the first element.
    pub error_curve: Vec<usize>,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub stats: TrainStats,
}

/// Byte offsets into `form` where candidate suffixes start, shortest suffix
/// first. For base words that is every suffix of at least `min_suffix_cp`
/// code points; for compounds, every such suffix of the final part, then
/// whole-part extensions at the recorded boundaries up to the full form.
pub(crate) fn suffix_byte_starts(
    form: &str,
    boundaries: &[usize],
    min_suffix_cp: usize,
) -> Vec<usize> {
    let mut cp_to_byte: Vec<usize> = form.char_indices().map(|(b, _)| b).collect();
    cp_to_byte.push(form.len());
    let cp_len = cp_to_byte.len() - 1;
    debug_assert!(min_suffix_cp <= cp_len, "transform source longer than the form");
    let max_start = cp_len - min_suffix_cp;
    let final_start = boundaries.last().copied().unwrap_or(0);

    let mut out = Vec::with_capacity(max_start.saturating_sub(final_start) + boundaries.len() + 2);
    let mut start = max_start;
    while start >= final_start {
        out.push(cp_to_byte[start]);
        if start == 0 {
            break;
        }
        start -= 1;
    }
    if !boundaries.is_empty() {
        for &b in boundaries[..boundaries.len() - 1].iter().rev() {
            if b <= max_start {
                out.push(cp_to_byte[b]);
            }
        }
        // The full form qualifies whenever the transform fits in it.
        out.push(0);
    }
    out
}

/// The suffixes a rule may be generated for, shortest first. `transform`
/// must be the minimal transform of the entry; suffixes shorter than its
/// source are never produced.
pub fn candidate_suffixes(entry: &LexiconEntry, transform: &Transform) -> Vec<String> {
    suffix_byte_starts(&entry.form, &entry.part_boundaries, transform.source_len())
        .into_iter()
        .map(|off| entry.form[off..].to_string())
        .collect()
}

/// Learns a model from the training set. Entry tags must already live in
/// the intermediate tagset; the returned model carries no tag-map digest.
pub fn train(set: &TrainingSet, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if config.min_support < 1 {
        return Err(TrainError::InvalidConfig("min_support must be at least 1".into()));
    }
    let mut session = Session::new(set, config);
    session.run(config.max_iterations)?;
    let entries = set.len();
    let (rules, exceptions, error_curve) = session.into_parts();
    let stats = TrainStats {
        entries,
        iterations: rules.len(),
        initial_errors: error_curve[0],
        final_errors: *error_curve.last().expect("curve holds the initial count"),
        error_curve,
    };
    let model = Model::new(rules, exceptions, None)?;
    Ok(TrainOutcome { model, stats })
}
