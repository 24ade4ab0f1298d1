//! Suffix substitution rules: the unit the trainer learns and the runtime
//! model applies.
//!
//! A [`Transform`] rewrites the end of a word (`ar` → `ur`); a [`Rule`] pairs
//! a transform with the suffix and tag that trigger it. All lengths and
//! offsets are counted in Unicode scalar values, never bytes.

use thiserror::Error;

/// Errors from constructing or applying rules.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("transform source {transform_source:?} is not a suffix of match suffix {match_suffix:?}")]
    SourceNotSuffix { match_suffix: String, transform_source: String },
    #[error("rule tag must be non-empty and free of whitespace, got {tag:?}")]
    InvalidTag { tag: String },
    #[error("form {form:?} does not end with match suffix {match_suffix:?}")]
    SuffixMismatch { form: String, match_suffix: String },
}

/// A suffix rewrite: strip `source` from the end of a word, append
/// `replacement`. Both sides may be empty; `(ε, ε)` is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transform {
    pub source: String,
    pub replacement: String,
}

impl Transform {
    pub fn new(source: impl Into<String>, replacement: impl Into<String>) -> Self {
        Transform { source: source.into(), replacement: replacement.into() }
    }

    /// The minimal rewrite taking `form` to `lemma`: strip the longest common
    /// prefix (in code points) and keep the differing tails.
    pub fn between(form: &str, lemma: &str) -> Self {
        let split = common_prefix_bytes(form, lemma);
        Transform { source: form[split..].to_string(), replacement: lemma[split..].to_string() }
    }

    pub fn is_identity(&self) -> bool {
        self.source.is_empty() && self.replacement.is_empty()
    }

    /// Code-point length of the source side, the shortest suffix a rule
    /// carrying this transform may match.
    pub fn source_len(&self) -> usize {
        self.source.chars().count()
    }
}

/// Byte length of the longest common code-point prefix of two strings.
fn common_prefix_bytes(a: &str, b: &str) -> usize {
    let mut split = 0;
    for (ca, cb) in a.chars().zip(b.chars()) {
        if ca != cb {
            break;
        }
        split += ca.len_utf8();
    }
    split
}

/// Convenience wrapper for [`Transform::between`].
pub fn minimal_transform(form: &str, lemma: &str) -> Transform {
    Transform::between(form, lemma)
}

/// A learned lemmatization rule: applies to any form ending in
/// `match_suffix` that carries `tag`, rewriting via `transform`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    match_suffix: String,
    tag: String,
    transform: Transform,
}

impl Rule {
    /// Builds a rule, enforcing that the transform source is a suffix of the
    /// match suffix and the tag is well-formed.
    pub fn new(
        match_suffix: impl Into<String>,
        tag: impl Into<String>,
        transform: Transform,
    ) -> Result<Self, RuleError> {
        let match_suffix = match_suffix.into();
        let tag = tag.into();
        if !match_suffix.ends_with(&transform.source) {
            return Err(RuleError::SourceNotSuffix {
                match_suffix,
                transform_source: transform.source,
            });
        }
        if tag.is_empty() || tag.chars().any(char::is_whitespace) {
            return Err(RuleError::InvalidTag { tag });
        }
        Ok(Rule { match_suffix, tag, transform })
    }

    pub fn match_suffix(&self) -> &str {
        &self.match_suffix
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// Code-point length of the match suffix; the rule's specificity.
    pub fn suffix_len(&self) -> usize {
        self.match_suffix.chars().count()
    }

    /// Rewrites `form`, which must end with the match suffix.
    pub fn apply(&self, form: &str) -> Result<String, RuleError> {
        if !form.ends_with(&self.match_suffix) {
            return Err(RuleError::SuffixMismatch {
                form: form.to_string(),
                match_suffix: self.match_suffix.clone(),
            });
        }
        // `source` is a suffix of `match_suffix`, hence of `form`; byte
        // arithmetic is safe because a UTF-8 suffix always splits on a
        // character boundary.
        let stem = &form[..form.len() - self.transform.source.len()];
        let mut out = String::with_capacity(stem.len() + self.transform.replacement.len());
        out.push_str(stem);
        out.push_str(&self.transform.replacement);
        Ok(out)
    }
}
