//! Scoring predicted lemmas against a gold corpus.
//!
//! Comparison is exact code-point equality; capitalization differences are a
//! real error, merely flagged. Accuracy is rendered half-up to two decimals
//! from exact integer arithmetic, so printed figures are reproducible from
//! the raw counts.

use std::fmt;
use std::io::BufRead;

use thiserror::Error;

use crate::par::{self, Threading};
use crate::ruleset::Provenance;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("failed to read corpus stream")]
    Io(#[from] std::io::Error),
    #[error("accuracy is undefined on an empty input")]
    EmptyInput,
    #[error("errors ({errors}) exceed total ({total})")]
    CountsOutOfRange { total: usize, errors: usize },
    #[error("line {line_number}: {message}")]
    MalformedLine { line_number: usize, message: String },
    #[error("record {index} has no auto tag")]
    MissingAutoTag { index: usize },
}

/// A percentage with two fixed decimals, stored exactly in hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Percent(u32);

impl Percent {
    /// Rounds `100 * numerator / denominator` half-up to two decimals.
    fn ratio(numerator: u64, denominator: u64) -> Percent {
        debug_assert!(denominator > 0);
        let scaled = 2 * 10_000 * numerator as u128 + denominator as u128;
        Percent((scaled / (2 * denominator as u128)) as u32)
    }

    pub fn hundredths(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

/// Accuracy over `total` tokens of which `errors` were wrong.
pub fn accuracy(total: usize, errors: usize) -> Result<Percent, EvalError> {
    if total == 0 {
        return Err(EvalError::EmptyInput);
    }
    if errors > total {
        return Err(EvalError::CountsOutOfRange { total, errors });
    }
    Ok(Percent::ratio((total - errors) as u64, total as u64))
}

/// One scored token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    pub form: String,
    pub gold_tag: String,
    pub auto_tag: Option<String>,
    pub gold_lemma: String,
    pub predicted_lemma: String,
    /// How the prediction was produced, when known (absent for predictions
    /// scored from a plain file).
    pub provenance: Option<Provenance>,
}

/// Mechanically decidable labels attached to disagreements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    /// The auto tag differs from the gold tag.
    TagMismatch,
    /// Predicted and gold lemma differ only by letter case.
    CapitalizationDifference,
    /// The prediction fell through to the identity fallback.
    IdentityFallback,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Flag::TagMismatch => "tag-mismatch",
            Flag::CapitalizationDifference => "capitalization-difference",
            Flag::IdentityFallback => "identity-fallback",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    /// Position in the input record sequence; the list preserves input order.
    pub index: usize,
    pub record: TokenRecord,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub total: usize,
    pub errors: usize,
    pub accuracy: Percent,
    pub disagreements: Vec<Disagreement>,
}

fn flags_for(record: &TokenRecord) -> Vec<Flag> {
    let mut flags = Vec::new();
    if let Some(auto) = &record.auto_tag {
        if *auto != record.gold_tag {
            flags.push(Flag::TagMismatch);
        }
    }
    if record.predicted_lemma != record.gold_lemma
        && record.predicted_lemma.to_lowercase() == record.gold_lemma.to_lowercase()
    {
        flags.push(Flag::CapitalizationDifference);
    }
    if record.provenance == Some(Provenance::IdentityFallback) {
        flags.push(Flag::IdentityFallback);
    }
    flags
}

/// Scores records by exact lemma equality and collects flagged
/// disagreements in input order.
pub fn evaluate(records: &[TokenRecord]) -> Result<EvalReport, EvalError> {
    evaluate_with(records, Threading::default())
}

pub fn evaluate_with(records: &[TokenRecord], mode: Threading) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let wrong: Vec<bool> =
        par::map_slice(mode, records, |r| r.predicted_lemma != r.gold_lemma);
    let errors = wrong.iter().filter(|&&w| w).count();
    let disagreements = records
        .iter()
        .enumerate()
        .filter(|&(i, _)| wrong[i])
        .map(|(index, record)| Disagreement {
            index,
            record: record.clone(),
            flags: flags_for(record),
        })
        .collect();
    Ok(EvalReport {
        total: records.len(),
        errors,
        accuracy: accuracy(records.len(), errors)?,
        disagreements,
    })
}

/// Share of records whose auto tag agrees with the gold tag. Every record
/// must carry an auto tag.
pub fn tag_accuracy(records: &[TokenRecord]) -> Result<Percent, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut agree = 0u64;
    for (index, record) in records.iter().enumerate() {
        match &record.auto_tag {
            None => return Err(EvalError::MissingAutoTag { index }),
            Some(auto) if *auto == record.gold_tag => agree += 1,
            Some(_) => {}
        }
    }
    Ok(Percent::ratio(agree, records.len() as u64))
}

/// One token of the gold corpus: `form TAB gold_tag TAB gold_lemma`, with an
/// optional fourth auto-tag column. Blank lines separate sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldToken {
    pub form: String,
    pub gold_tag: String,
    pub gold_lemma: String,
    pub auto_tag: Option<String>,
}

/// Reads the gold corpus. Tokens may legitimately start with `#`, so no
/// comment syntax exists here; only blank lines are structural.
pub fn read_gold(reader: impl BufRead) -> Result<Vec<GoldToken>, EvalError> {
    let mut tokens = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_number = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(EvalError::MalformedLine {
                line_number,
                message: format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
            });
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(EvalError::MalformedLine {
                line_number,
                message: "empty field".to_string(),
            });
        }
        tokens.push(GoldToken {
            form: fields[0].to_string(),
            gold_tag: fields[1].to_string(),
            gold_lemma: fields[2].to_string(),
            auto_tag: fields.get(3).map(|s| s.to_string()),
        });
    }
    Ok(tokens)
}
