//! Training-data ingestion: the morphological lexicon of (form, tag, lemma)
//! triples and the supplementary list of uninflected words.
//!
//! The lexicon file is 3-column TSV. `+` in the form column marks compound
//! part boundaries (`fjall+göngu+skó`); markers are stripped on parse and the
//! boundary offsets kept, in code points. Lines starting with `#` and blank
//! lines are skipped. Bad lines and conflicting lemmas are recorded, never
//! silently dropped, and never abort the parse.

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

use crate::tagmap::TagMap;

/// Fatal lexicon errors. Per-line problems are not fatal; they are collected
/// as [`Conflict`]s on the [`TrainingSet`].
#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon stream")]
    Io(#[from] std::io::Error),
    #[error("duplicate (form, tag) pair ({form:?}, {tag:?})")]
    DuplicateEntry { form: String, tag: String },
    #[error("invalid entry: {0}")]
    InvalidEntry(#[from] ParseLineError),
}

/// Why a single input line was rejected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseLineError {
    #[error("expected {expected} tab-separated fields, got {got}")]
    FieldCount { expected: usize, got: usize },
    #[error("empty {field} field")]
    EmptyField { field: &'static str },
    #[error("compound marker at word edge")]
    MarkerAtEdge,
    #[error("doubled compound marker")]
    MarkerDoubled,
    #[error("'+' is only valid in the form column")]
    MarkerOutsideForm,
    #[error("whitespace inside tag {tag:?}")]
    WhitespaceInTag { tag: String },
    #[error("form contains tab or newline")]
    ControlInForm,
    #[error("part boundaries must be strictly increasing inside the form")]
    InvalidBoundaries,
}

/// One training triple with compound markers stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub form: String,
    pub tag: String,
    pub lemma: String,
    /// Code-point offsets where compound parts start, strictly between 0 and
    /// the form length, strictly increasing. Empty for base words.
    pub part_boundaries: Vec<usize>,
}

impl LexiconEntry {
    /// Validating constructor; all invariants of the type are checked here.
    pub fn new(
        form: impl Into<String>,
        tag: impl Into<String>,
        lemma: impl Into<String>,
        part_boundaries: Vec<usize>,
    ) -> Result<Self, ParseLineError> {
        let form = form.into();
        let tag = tag.into();
        let lemma = lemma.into();
        if form.is_empty() {
            return Err(ParseLineError::EmptyField { field: "form" });
        }
        if lemma.is_empty() {
            return Err(ParseLineError::EmptyField { field: "lemma" });
        }
        if form.contains(['\t', '\n']) {
            return Err(ParseLineError::ControlInForm);
        }
        validate_tag(&tag)?;
        let len = form.chars().count();
        let increasing = part_boundaries.windows(2).all(|w| w[0] < w[1]);
        if !increasing || part_boundaries.iter().any(|&b| b == 0 || b >= len) {
            return Err(ParseLineError::InvalidBoundaries);
        }
        Ok(LexiconEntry { form, tag, lemma, part_boundaries })
    }

    /// The form with `+` markers re-inserted at the part boundaries; inverse
    /// of the marker stripping done by the parser.
    pub fn marked_form(&self) -> String {
        let mut out = String::with_capacity(self.form.len() + self.part_boundaries.len());
        let mut next = self.part_boundaries.iter().peekable();
        for (i, ch) in self.form.chars().enumerate() {
            if next.peek() == Some(&&i) {
                out.push('+');
                next.next();
            }
            out.push(ch);
        }
        out
    }
}

fn validate_tag(tag: &str) -> Result<(), ParseLineError> {
    if tag.is_empty() {
        return Err(ParseLineError::EmptyField { field: "tag" });
    }
    if tag.chars().any(char::is_whitespace) {
        return Err(ParseLineError::WhitespaceInTag { tag: tag.to_string() });
    }
    if tag.contains('+') {
        return Err(ParseLineError::MarkerOutsideForm);
    }
    Ok(())
}

/// Splits a marked form (`fjall+göngu+skó`) into the bare form and its part
/// boundaries in code points.
fn strip_markers(raw: &str) -> Result<(String, Vec<usize>), ParseLineError> {
    if !raw.contains('+') {
        return Ok((raw.to_string(), Vec::new()));
    }
    if raw.starts_with('+') || raw.ends_with('+') {
        return Err(ParseLineError::MarkerAtEdge);
    }
    if raw.contains("++") {
        return Err(ParseLineError::MarkerDoubled);
    }
    let mut form = String::with_capacity(raw.len());
    let mut boundaries = Vec::new();
    let mut cp = 0usize;
    for ch in raw.chars() {
        if ch == '+' {
            boundaries.push(cp);
        } else {
            form.push(ch);
            cp += 1;
        }
    }
    Ok((form, boundaries))
}

/// Parses one non-comment, non-blank lexicon line: `form TAB tag TAB lemma`.
pub fn parse_entry_line(line: &str) -> Result<LexiconEntry, ParseLineError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(ParseLineError::FieldCount { expected: 3, got: fields.len() });
    }
    if fields[0].is_empty() {
        return Err(ParseLineError::EmptyField { field: "form" });
    }
    if fields[2].is_empty() {
        return Err(ParseLineError::EmptyField { field: "lemma" });
    }
    if fields[2].contains('+') {
        return Err(ParseLineError::MarkerOutsideForm);
    }
    let (form, boundaries) = strip_markers(fields[0])?;
    LexiconEntry::new(form, fields[1], fields[2], boundaries)
}

/// Parses one uninflected-list line: `form TAB tag`. The lemma is the form.
pub fn parse_uninflected_line(line: &str) -> Result<LexiconEntry, ParseLineError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 2 {
        return Err(ParseLineError::FieldCount { expected: 2, got: fields.len() });
    }
    if fields[0].is_empty() {
        return Err(ParseLineError::EmptyField { field: "form" });
    }
    let (form, boundaries) = strip_markers(fields[0])?;
    LexiconEntry::new(form.clone(), fields[1], form, boundaries)
}

/// A discarded input line and the reason it was discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub line_number: usize,
    pub line: String,
    pub reason: ConflictReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConflictReason {
    /// The line did not parse.
    Malformed(ParseLineError),
    /// A different lemma was already recorded for this (form, tag); the first
    /// occurrence wins.
    LemmaConflict { kept_lemma: String },
}

/// The deduplicated training set plus a full account of what was discarded.
#[derive(Debug, Default, Clone)]
pub struct TrainingSet {
    entries: Vec<LexiconEntry>,
    index: HashMap<(String, String), usize>,
    conflicts: Vec<Conflict>,
    duplicates_ignored: usize,
    unmapped_tags: usize,
    line_cursor: usize,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from ready-made entries; fails on duplicate (form, tag).
    pub fn from_entries(
        entries: impl IntoIterator<Item = LexiconEntry>,
    ) -> Result<Self, LexiconError> {
        let mut set = TrainingSet::new();
        for entry in entries {
            let key = (entry.form.clone(), entry.tag.clone());
            if set.index.contains_key(&key) {
                return Err(LexiconError::DuplicateEntry { form: key.0, tag: key.1 });
            }
            set.index.insert(key, set.entries.len());
            set.entries.push(entry);
        }
        Ok(set)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    /// Count of lines dropped because they repeated an entry exactly
    /// (same form, tag and lemma). These are not conflicts.
    pub fn duplicates_ignored(&self) -> usize {
        self.duplicates_ignored
    }

    /// Count of tags the tag map passed through unchanged.
    pub fn unmapped_tags(&self) -> usize {
        self.unmapped_tags
    }

    /// First-occurrence insertion policy shared by all ingestion paths.
    fn admit(&mut self, entry: LexiconEntry, line_number: usize, line: &str) {
        let key = (entry.form.clone(), entry.tag.clone());
        match self.index.get(&key) {
            None => {
                self.index.insert(key, self.entries.len());
                self.entries.push(entry);
            }
            Some(&i) if self.entries[i].lemma == entry.lemma => {
                self.duplicates_ignored += 1;
            }
            Some(&i) => {
                self.conflicts.push(Conflict {
                    line_number,
                    line: line.to_string(),
                    reason: ConflictReason::LemmaConflict {
                        kept_lemma: self.entries[i].lemma.clone(),
                    },
                });
            }
        }
    }

    fn ingest<F>(&mut self, reader: impl BufRead, tagmap: Option<&TagMap>, parse: F) -> Result<(), LexiconError>
    where
        F: Fn(&str) -> Result<LexiconEntry, ParseLineError>,
    {
        for line in reader.lines() {
            let line = line?;
            self.line_cursor += 1;
            let line_number = self.line_cursor;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse(&line) {
                Ok(mut entry) => {
                    if let Some(map) = tagmap {
                        let (mapped, hit) = map.map_tag(&entry.tag);
                        if !hit {
                            self.unmapped_tags += 1;
                        }
                        entry.tag = mapped.to_string();
                    }
                    self.admit(entry, line_number, &line);
                }
                Err(err) => self.conflicts.push(Conflict {
                    line_number,
                    line,
                    reason: ConflictReason::Malformed(err),
                }),
            }
        }
        Ok(())
    }

    /// Adds `form TAB tag` pairs as entries whose lemma is the form itself,
    /// under the same first-occurrence policy as the main lexicon.
    pub fn merge_uninflected(
        &mut self,
        reader: impl BufRead,
        tagmap: Option<&TagMap>,
    ) -> Result<(), LexiconError> {
        self.line_cursor = 0;
        self.ingest(reader, tagmap, parse_uninflected_line)
    }
}

/// Parses a whole lexicon stream. Tags are translated through `tagmap`
/// before deduplication when one is given, so the (form, tag) key lives in
/// the same tag space the trainer will see.
pub fn parse_lexicon(
    reader: impl BufRead,
    tagmap: Option<&TagMap>,
) -> Result<TrainingSet, LexiconError> {
    let mut set = TrainingSet::new();
    set.ingest(reader, tagmap, parse_entry_line)?;
    Ok(set)
}
