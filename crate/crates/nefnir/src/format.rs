//! The on-disk model format: versioned, line-oriented UTF-8 text.
//!
//! ```text
//! nefnir-model 1
//! tagmap <hex digest or ->
//! [exceptions]
//! form<TAB>tag<TAB>lemma            (sorted by form, tag)
//! [rules]
//! suffix<TAB>tag<TAB>source<TAB>replacement   (sorted by tag, reversed suffix)
//! ```
//!
//! Tabs, newlines and backslashes inside fields are escaped (`\t`, `\n`,
//! `\\`); an empty field is written as the two characters `\0`. Output is a
//! deterministic function of model content, byte for byte.

use std::io::{BufRead, Write};

use crate::rules::{Rule, Transform};
use crate::ruleset::{ExceptionTable, Model, ModelError, FORMAT_VERSION};

const MAGIC: &str = "nefnir-model";
const EMPTY_MARKER: &str = "\\0";

fn escape_field(field: &str) -> String {
    if field.is_empty() {
        return EMPTY_MARKER.to_string();
    }
    let mut out = String::with_capacity(field.len());
    for ch in field.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out
}

fn unescape_field(field: &str) -> Result<String, String> {
    if field == EMPTY_MARKER {
        return Ok(String::new());
    }
    if field.is_empty() {
        return Err("empty field (empty strings are written as \\0)".to_string());
    }
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => return Err(format!("invalid escape \\{other}")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

/// Writes the model in the canonical format.
pub fn serialize_model(model: &Model, sink: &mut impl Write) -> Result<(), ModelError> {
    writeln!(sink, "{MAGIC} {}", model.format_version())?;
    writeln!(sink, "tagmap {}", model.tagmap_hash().unwrap_or("-"))?;
    writeln!(sink, "[exceptions]")?;
    for (form, tag, lemma) in model.sorted_exceptions() {
        writeln!(sink, "{}\t{}\t{}", escape_field(form), escape_field(tag), escape_field(lemma))?;
    }
    writeln!(sink, "[rules]")?;
    for rule in model.sorted_rules() {
        writeln!(
            sink,
            "{}\t{}\t{}\t{}",
            escape_field(rule.match_suffix()),
            escape_field(rule.tag()),
            escape_field(&rule.transform().source),
            escape_field(&rule.transform().replacement),
        )?;
    }
    Ok(())
}

/// Serializes to an in-memory string; handy for tests and hashing.
pub fn serialize_model_to_string(model: &Model) -> String {
    let mut buf = Vec::new();
    serialize_model(model, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("model text is UTF-8")
}

fn bad_line(line_number: usize, message: impl Into<String>) -> ModelError {
    ModelError::MalformedLine { line_number, message: message.into() }
}

/// Parses a model file, validating every invariant the trainer guarantees.
pub fn load_model(source: impl BufRead) -> Result<Model, ModelError> {
    let mut lines = source.lines().enumerate();

    let (_, header) = lines.next().ok_or(ModelError::BadHeader)?;
    let header = header?;
    let version = header.strip_prefix(MAGIC).and_then(|rest| rest.strip_prefix(' '));
    let version = version.ok_or(ModelError::BadHeader)?;
    if version.parse::<u32>().map_err(|_| ModelError::BadHeader)? != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion { found: version.to_string() });
    }

    let (_, tagmap_line) = lines.next().ok_or(ModelError::BadTagmapLine)?;
    let tagmap_line = tagmap_line?;
    let digest = tagmap_line.strip_prefix("tagmap ").ok_or(ModelError::BadTagmapLine)?;
    let tagmap_hash = match digest {
        "-" => None,
        hex if hex.len() == 64 && hex.chars().all(|c| c.is_ascii_hexdigit()) => {
            Some(hex.to_string())
        }
        _ => return Err(ModelError::BadTagmapLine),
    };

    let section = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(ModelError::MissingSection { section: "exceptions" }),
    };
    if section != "[exceptions]" {
        return Err(ModelError::MissingSection { section: "exceptions" });
    }

    let mut exceptions = ExceptionTable::new();
    let mut rules: Vec<Rule> = Vec::new();
    let mut in_rules = false;
    for (i, line) in lines {
        let line = line?;
        let line_number = i + 1;
        if !in_rules && line == "[rules]" {
            in_rules = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let unescaped = |idx: usize| {
            unescape_field(fields[idx]).map_err(|msg| bad_line(line_number, msg))
        };
        if in_rules {
            if fields.len() != 4 {
                return Err(bad_line(line_number, format!("expected 4 fields, got {}", fields.len())));
            }
            let transform = Transform::new(unescaped(2)?, unescaped(3)?);
            rules.push(Rule::new(unescaped(0)?, unescaped(1)?, transform)?);
        } else {
            if fields.len() != 3 {
                return Err(bad_line(line_number, format!("expected 3 fields, got {}", fields.len())));
            }
            exceptions.insert(unescaped(0)?, unescaped(1)?, unescaped(2)?)?;
        }
    }
    if !in_rules {
        return Err(ModelError::MissingSection { section: "rules" });
    }
    Model::new(rules, exceptions, tagmap_hash)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn rule(suffix: &str, tag: &str, src: &str, rep: &str) -> Rule {
        Rule::new(suffix, tag, Transform::new(src, rep)).unwrap()
    }

    #[test]
    fn empty_model_bytes_are_fixed() {
        let text = serialize_model_to_string(&Model::empty());
        assert_eq!(text, "nefnir-model 1\ntagmap -\n[exceptions]\n[rules]\n");
    }

    #[test]
    fn serialization_is_deterministic_and_sorted() {
        let mut exceptions = ExceptionTable::new();
        exceptions.insert("við".into(), "fp".into(), "ég".into()).unwrap();
        exceptions.insert("mig".into(), "fp".into(), "ég".into()).unwrap();
        let model = Model::new(
            vec![rule("ngar", "nkfn", "ar", "ur"), rule("ar", "nkfn", "ar", "ur"), rule("", "c", "", "")],
            exceptions,
            None,
        )
        .unwrap();
        let a = serialize_model_to_string(&model);
        let b = serialize_model_to_string(&model);
        assert_eq!(a, b);
        // Exceptions by (form, tag); rules by (tag, reversed suffix).
        assert_eq!(
            a,
            "nefnir-model 1\n\
             tagmap -\n\
             [exceptions]\n\
             mig\tfp\tég\n\
             við\tfp\tég\n\
             [rules]\n\
             \\0\tc\t\\0\t\\0\n\
             ar\tnkfn\tar\tur\n\
             ngar\tnkfn\tar\tur\n"
        );
    }

    #[test]
    fn round_trip_preserves_content() {
        let mut exceptions = ExceptionTable::new();
        exceptions.insert("a\tb".into(), "t".into(), "x\\y".into()).unwrap();
        let model = Model::new(
            vec![rule("ækur", "t", "ækur", "ók"), rule("", "t2", "", "r")],
            exceptions,
            Some("ab".repeat(32)),
        )
        .unwrap();
        let text = serialize_model_to_string(&model);
        let loaded = load_model(Cursor::new(text.clone())).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(serialize_model_to_string(&loaded), text);
    }

    #[test]
    fn rejects_unknown_version() {
        let err = load_model(Cursor::new("nefnir-model 2\ntagmap -\n[exceptions]\n[rules]\n"))
            .unwrap_err();
        assert!(matches!(err, ModelError::UnsupportedVersion { .. }));
    }

    #[test]
    fn rejects_truncated_files() {
        assert!(matches!(
            load_model(Cursor::new("nefnir-model 1\ntagmap -\n")),
            Err(ModelError::MissingSection { section: "exceptions" })
        ));
        assert!(matches!(
            load_model(Cursor::new("nefnir-model 1\ntagmap -\n[exceptions]\n")),
            Err(ModelError::MissingSection { section: "rules" })
        ));
        assert!(matches!(load_model(Cursor::new("")), Err(ModelError::BadHeader)));
    }

    #[test]
    fn rejects_duplicate_rule_keys() {
        let text = "nefnir-model 1\ntagmap -\n[exceptions]\n[rules]\n\
                    ar\tnkfn\tar\tur\nar\tnkfn\tr\t\\0\n";
        assert!(matches!(
            load_model(Cursor::new(text)),
            Err(ModelError::DuplicateRuleKey { .. })
        ));
    }

    #[test]
    fn rejects_bad_escapes_and_bad_tagmap() {
        let text = "nefnir-model 1\ntagmap -\n[exceptions]\n[rules]\nar\tnkfn\t\\q\tur\n";
        assert!(matches!(load_model(Cursor::new(text)), Err(ModelError::MalformedLine { .. })));
        let text = "nefnir-model 1\ntagmap zz\n[exceptions]\n[rules]\n";
        assert!(matches!(load_model(Cursor::new(text)), Err(ModelError::BadTagmapLine)));
    }

    #[test]
    fn escape_round_trip() {
        for field in ["", "plain", "a\tb", "a\\b", "line\nbreak", "\\0", "\\", "göngu"] {
            let escaped = escape_field(field);
            assert_eq!(unescape_field(&escaped).unwrap(), field, "field {field:?}");
        }
    }
}
