//! The runtime model: longest-suffix rule lookup, the exception table, and
//! total lemmatization over both.
//!
//! Rules are indexed by a trie over the reversed match suffix; walking the
//! query form back-to-front visits every rule whose suffix matches, and the
//! deepest node carrying the query tag wins. The empty-suffix rule sits at
//! the root, so it matches everything of its tag.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use thiserror::Error;

use crate::rules::{Rule, RuleError};

pub const FORMAT_VERSION: u32 = 1;

/// Errors from assembling or deserializing a model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read or write model")]
    Io(#[from] std::io::Error),
    #[error("duplicate rule for (suffix {match_suffix:?}, tag {tag:?})")]
    DuplicateRuleKey { match_suffix: String, tag: String },
    #[error("duplicate exception for (form {form:?}, tag {tag:?})")]
    DuplicateException { form: String, tag: String },
    #[error("exception fields must be non-empty")]
    EmptyExceptionField,
    #[error("invalid rule: {0}")]
    InvalidRule(#[from] RuleError),
    #[error("missing or malformed header line")]
    BadHeader,
    #[error("unsupported model format version {found}")]
    UnsupportedVersion { found: String },
    #[error("missing or malformed tagmap line")]
    BadTagmapLine,
    #[error("missing [{section}] section")]
    MissingSection { section: &'static str },
    #[error("line {line_number}: {message}")]
    MalformedLine { line_number: usize, message: String },
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<char, u32>,
    /// (tag id, rule index), sorted by tag id.
    rules: Vec<(u32, u32)>,
}

/// Immutable set of rules with at most one rule per (match suffix, tag),
/// indexed for longest-suffix lookup.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Rule>,
    tag_ids: HashMap<String, u32>,
    nodes: Vec<TrieNode>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self, ModelError> {
        let mut tag_ids: HashMap<String, u32> = HashMap::new();
        let mut nodes = vec![TrieNode::default()];
        for (idx, rule) in rules.iter().enumerate() {
            let next_tag = tag_ids.len() as u32;
            let tag = *tag_ids.entry(rule.tag().to_string()).or_insert(next_tag);
            let mut node = 0u32;
            for ch in rule.match_suffix().chars().rev() {
                let n = nodes.len() as u32;
                node = match nodes[node as usize].children.entry(ch) {
                    Entry::Occupied(e) => *e.get(),
                    Entry::Vacant(e) => {
                        e.insert(n);
                        nodes.push(TrieNode::default());
                        n
                    }
                };
            }
            let slot = &mut nodes[node as usize].rules;
            if slot.iter().any(|&(t, _)| t == tag) {
                return Err(ModelError::DuplicateRuleKey {
                    match_suffix: rule.match_suffix().to_string(),
                    tag: rule.tag().to_string(),
                });
            }
            slot.push((tag, idx as u32));
        }
        for node in &mut nodes {
            node.rules.sort_unstable_by_key(|&(t, _)| t);
        }
        Ok(RuleSet { rules, tag_ids, nodes })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The rule with the longest match suffix shared by `form` under `tag`,
    /// if any. Uniqueness per (suffix, tag) makes the winner unique.
    pub fn lookup(&self, form: &str, tag: &str) -> Option<&Rule> {
        let tag_id = *self.tag_ids.get(tag)?;
        let rule_at = |node: &TrieNode| {
            node.rules
                .binary_search_by_key(&tag_id, |&(t, _)| t)
                .ok()
                .map(|i| node.rules[i].1)
        };
        let mut current = 0u32;
        let mut best = rule_at(&self.nodes[0]);
        for ch in form.chars().rev() {
            match self.nodes[current as usize].children.get(&ch) {
                Some(&next) => current = next,
                None => break,
            }
            if let Some(idx) = rule_at(&self.nodes[current as usize]) {
                best = Some(idx);
            }
        }
        best.map(|i| &self.rules[i as usize])
    }
}

/// Explicit (form, tag) → lemma entries for words the rules get wrong.
/// Keyed by form first so lookups borrow the query strings directly.
#[derive(Debug, Clone, Default)]
pub struct ExceptionTable {
    map: HashMap<String, Vec<(String, String)>>,
    len: usize,
}

impl ExceptionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, form: String, tag: String, lemma: String) -> Result<(), ModelError> {
        if form.is_empty() || tag.is_empty() || lemma.is_empty() {
            return Err(ModelError::EmptyExceptionField);
        }
        if self.get(&form, &tag).is_some() {
            return Err(ModelError::DuplicateException { form, tag });
        }
        self.map.entry(form).or_default().push((tag, lemma));
        self.len += 1;
        Ok(())
    }

    pub fn get(&self, form: &str, tag: &str) -> Option<&str> {
        self.map
            .get(form)?
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, lemma)| lemma.as_str())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.map
            .iter()
            .flat_map(|(f, v)| v.iter().map(move |(t, l)| (f.as_str(), t.as_str(), l.as_str())))
    }
}

/// How a lemma was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Exception-table hit.
    Exception,
    /// Suffix rule; carries the match-suffix length in code points.
    Rule { suffix_len: usize },
    /// Nothing matched; the form was returned unchanged.
    IdentityFallback,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Exception => f.write_str("exception"),
            Provenance::Rule { suffix_len } => write!(f, "rule:{suffix_len}"),
            Provenance::IdentityFallback => f.write_str("identity-fallback"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaResult {
    pub lemma: String,
    pub provenance: Provenance,
}

/// Runtime options for [`Model::lemmatize_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LemmatizeOptions {
    /// When nothing matches, retry once with the first code point
    /// lowercased before giving up. Helps sentence-initial capitals.
    pub case_fallback: bool,
}

/// A trained model: rules, exceptions, and the digest of the tag map used
/// at training time.
#[derive(Debug, Clone)]
pub struct Model {
    ruleset: RuleSet,
    exceptions: ExceptionTable,
    tagmap_hash: Option<String>,
    format_version: u32,
}

impl Model {
    pub fn new(
        rules: Vec<Rule>,
        exceptions: ExceptionTable,
        tagmap_hash: Option<String>,
    ) -> Result<Self, ModelError> {
        Ok(Model {
            ruleset: RuleSet::new(rules)?,
            exceptions,
            tagmap_hash,
            format_version: FORMAT_VERSION,
        })
    }

    pub fn empty() -> Self {
        Model::new(Vec::new(), ExceptionTable::new(), None).expect("empty model is valid")
    }

    pub fn ruleset(&self) -> &RuleSet {
        &self.ruleset
    }

    /// Rules in construction order: acceptance order for trained models,
    /// file order for loaded ones.
    pub fn rules(&self) -> &[Rule] {
        self.ruleset.rules()
    }

    pub fn exceptions(&self) -> &ExceptionTable {
        &self.exceptions
    }

    pub fn tagmap_hash(&self) -> Option<&str> {
        self.tagmap_hash.as_deref()
    }

    /// Records the digest of the tag map the training data went through.
    pub fn set_tagmap_hash(&mut self, hash: Option<String>) {
        self.tagmap_hash = hash;
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    fn lookup_once(&self, form: &str, tag: &str) -> Option<LemmaResult> {
        if let Some(lemma) = self.exceptions.get(form, tag) {
            return Some(LemmaResult { lemma: lemma.to_string(), provenance: Provenance::Exception });
        }
        let rule = self.ruleset.lookup(form, tag)?;
        let lemma = rule.apply(form).expect("lookup guarantees the suffix matches");
        Some(LemmaResult { lemma, provenance: Provenance::Rule { suffix_len: rule.suffix_len() } })
    }

    /// Total lemmatization: exception first, then the most specific rule,
    /// then the form itself.
    pub fn lemmatize(&self, form: &str, tag: &str) -> LemmaResult {
        self.lemmatize_with(form, tag, LemmatizeOptions::default())
    }

    pub fn lemmatize_with(&self, form: &str, tag: &str, opts: LemmatizeOptions) -> LemmaResult {
        if let Some(hit) = self.lookup_once(form, tag) {
            return hit;
        }
        if opts.case_fallback {
            if let Some(folded) = lowercase_first(form) {
                if let Some(hit) = self.lookup_once(&folded, tag) {
                    return hit;
                }
            }
        }
        LemmaResult { lemma: form.to_string(), provenance: Provenance::IdentityFallback }
    }

    /// Lemmatizes a batch of (form, tag) queries, preserving order.
    pub fn lemmatize_batch(
        &self,
        queries: &[(String, String)],
        opts: LemmatizeOptions,
        mode: crate::par::Threading,
    ) -> Vec<LemmaResult> {
        crate::par::map_slice(mode, queries, |(form, tag)| self.lemmatize_with(form, tag, opts))
    }

    /// Canonical (sorted) views used by serialization and equality.
    pub(crate) fn sorted_rules(&self) -> Vec<&Rule> {
        let mut rules: Vec<&Rule> = self.ruleset.rules().iter().collect();
        rules.sort_by(|a, b| {
            a.tag()
                .cmp(b.tag())
                .then_with(|| a.match_suffix().chars().rev().cmp(b.match_suffix().chars().rev()))
                .then_with(|| a.match_suffix().cmp(b.match_suffix()))
        });
        rules
    }

    pub(crate) fn sorted_exceptions(&self) -> Vec<(&str, &str, &str)> {
        let mut rows: Vec<(&str, &str, &str)> = self.exceptions.iter().collect();
        rows.sort_unstable();
        rows
    }
}

/// Model equality is content equality: same rule set (order-insensitive),
/// same exceptions, same tag-map digest and version.
impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.format_version == other.format_version
            && self.tagmap_hash == other.tagmap_hash
            && self.sorted_rules() == other.sorted_rules()
            && self.sorted_exceptions() == other.sorted_exceptions()
    }
}

impl Eq for Model {}

/// `form` with its first code point lowercased, or `None` when that changes
/// nothing.
fn lowercase_first(form: &str) -> Option<String> {
    let first = form.chars().next()?;
    let mut lowered = first.to_lowercase();
    if lowered.len() == 1 && lowered.next() == Some(first) {
        return None;
    }
    let mut out = String::with_capacity(form.len());
    out.extend(first.to_lowercase());
    out.push_str(&form[first.len_utf8()..]);
    Some(out)
}
