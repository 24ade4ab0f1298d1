//! Tag translation into the intermediate tagset shared by the lexicon and
//! the tagger output.
//!
//! The map is a plain two-column TSV. Lookups are total: a tag without a
//! mapping passes through unchanged, and the caller can count how often that
//! happened to spot coverage gaps.

use std::collections::HashMap;
use std::io::BufRead;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TagMapError {
    #[error("failed to read tag map stream")]
    Io(#[from] std::io::Error),
    #[error("line {line_number}: expected 2 tab-separated fields, got {got}")]
    FieldCount { line_number: usize, got: usize },
    #[error("line {line_number}: empty or whitespace-carrying tag")]
    InvalidTag { line_number: usize },
    #[error("line {line_number}: duplicate source tag {tag:?}")]
    DuplicateSource { line_number: usize, tag: String },
}

/// An immutable source → intermediate tag mapping.
#[derive(Debug, Default, Clone)]
pub struct TagMap {
    mapping: HashMap<String, String>,
}

impl TagMap {
    /// The identity map: every tag passes through.
    pub fn identity() -> Self {
        TagMap::default()
    }

    /// Loads `source TAB intermediate` lines. `#` comments and blank lines
    /// are skipped; a repeated source tag is an error.
    pub fn load(reader: impl BufRead) -> Result<Self, TagMapError> {
        let mut mapping = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line_number = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(TagMapError::FieldCount { line_number, got: fields.len() });
            }
            let ok = |s: &str| !s.is_empty() && !s.chars().any(char::is_whitespace);
            if !ok(fields[0]) || !ok(fields[1]) {
                return Err(TagMapError::InvalidTag { line_number });
            }
            if mapping.contains_key(fields[0]) {
                return Err(TagMapError::DuplicateSource {
                    line_number,
                    tag: fields[0].to_string(),
                });
            }
            mapping.insert(fields[0].to_string(), fields[1].to_string());
        }
        Ok(TagMap { mapping })
    }

    /// Translates one tag. Returns the result and whether the map had an
    /// entry for it; unmapped tags pass through unchanged.
    pub fn map_tag<'a>(&'a self, tag: &'a str) -> (&'a str, bool) {
        match self.mapping.get(tag) {
            Some(mapped) => (mapped, true),
            None => (tag, false),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// True when no mapped output is itself a source tag, which makes
    /// translation idempotent. Loaded maps that fail this deserve a warning.
    pub fn is_idempotent(&self) -> bool {
        self.mapping.values().all(|v| !self.mapping.contains_key(v) || self.mapping[v] == *v)
    }

    /// Content digest recorded in trained models so a mismatched map at
    /// inference time can be detected: SHA-256 over the sorted pairs.
    pub fn digest(&self) -> String {
        let mut pairs: Vec<(&str, &str)> =
            self.mapping.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        pairs.sort_unstable();
        let mut hasher = Sha256::new();
        for (src, dst) in pairs {
            hasher.update(src.as_bytes());
            hasher.update(b"\t");
            hasher.update(dst.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn empty_stream_is_identity() {
        let map = TagMap::load(Cursor::new("")).unwrap();
        assert!(map.is_empty());
        assert_eq!(map.map_tag("nkfn"), ("nkfn", false));
    }

    #[test]
    fn maps_listed_tags() {
        let map = TagMap::load(Cursor::new("nkfn-g\tnkfn\n")).unwrap();
        assert_eq!(map.map_tag("nkfn-g"), ("nkfn", true));
        assert_eq!(map.map_tag("lkensf"), ("lkensf", false));
    }

    #[test]
    fn duplicate_source_is_an_error() {
        let err = TagMap::load(Cursor::new("a\tx\na\ty\n")).unwrap_err();
        assert!(matches!(err, TagMapError::DuplicateSource { line_number: 2, .. }));
    }

    #[test]
    fn malformed_lines_are_errors() {
        assert!(matches!(
            TagMap::load(Cursor::new("justone\n")),
            Err(TagMapError::FieldCount { .. })
        ));
        assert!(matches!(
            TagMap::load(Cursor::new("a\t\n")),
            Err(TagMapError::InvalidTag { .. })
        ));
        assert!(matches!(
            TagMap::load(Cursor::new("a\tb c\n")),
            Err(TagMapError::InvalidTag { .. })
        ));
    }

    #[test]
    fn comments_are_skipped() {
        let map = TagMap::load(Cursor::new("# dmii to tagger\na\tx\n\n")).unwrap();
        assert_eq!(map.len(), 1);
    }

    #[test]
    fn idempotence_detection() {
        let disjoint = TagMap::load(Cursor::new("a\tx\nb\ty\n")).unwrap();
        assert!(disjoint.is_idempotent());
        // x is both an image and a source mapping elsewhere: not idempotent.
        let chained = TagMap::load(Cursor::new("a\tx\nx\ty\n")).unwrap();
        assert!(!chained.is_idempotent());
        // Self-mapping inside the image is harmless.
        let fixed = TagMap::load(Cursor::new("a\tx\nx\tx\n")).unwrap();
        assert!(fixed.is_idempotent());
    }

    #[test]
    fn idempotent_maps_are_idempotent_under_double_application() {
        let map = TagMap::load(Cursor::new("a\tx\nb\ty\nc\tx\n")).unwrap();
        assert!(map.is_idempotent());
        for tag in ["a", "b", "c", "x", "y", "other"] {
            let once = map.map_tag(tag).0;
            assert_eq!(map.map_tag(once).0, once);
        }
    }

    #[test]
    fn digest_is_order_independent_and_content_sensitive() {
        let m1 = TagMap::load(Cursor::new("a\tx\nb\ty\n")).unwrap();
        let m2 = TagMap::load(Cursor::new("b\ty\na\tx\n")).unwrap();
        let m3 = TagMap::load(Cursor::new("a\tx\nb\tz\n")).unwrap();
        assert_eq!(m1.digest(), m2.digest());
        assert_ne!(m1.digest(), m3.digest());
        assert_eq!(m1.digest().len(), 64);
    }
}
