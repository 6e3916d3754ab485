//! Code book: maps raw categorical codes to canonical value names.
//!
//! File grammar: `field_name code canonical_value`, one mapping per line,
//! `#` comments, plus an optional `version TAG` line.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeBook {
    pub version_tag: String,
    entries: BTreeMap<String, BTreeMap<String, String>>,
}

impl CodeBook {
    pub fn parse(document: &str) -> Result<Self> {
        let mut book = CodeBook::default();
        for (idx, raw) in document.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["version", tag] => book.version_tag = tag.to_string(),
                [field, code, value] => {
                    let codes = book.entries.entry(field.to_string()).or_default();
                    if codes.insert(code.to_string(), value.to_string()).is_some() {
                        return Err(Error::Syntax {
                            line: idx + 1,
                            message: format!("code `{code}` declared twice for `{field}`"),
                        });
                    }
                }
                _ => {
                    return Err(Error::Syntax {
                        line: idx + 1,
                        message: "expected `field_name code canonical_value`".into(),
                    })
                }
            }
        }
        Ok(book)
    }

    /// Canonical value for a raw code. The raw value is trimmed first.
    pub fn lookup(&self, field: &str, raw: &str) -> Option<&str> {
        self.entries
            .get(field)
            .and_then(|codes| codes.get(raw.trim()))
            .map(String::as_str)
    }

    /// Raw code for a canonical value (first match in code order).
    pub fn code_for(&self, field: &str, canonical: &str) -> Option<&str> {
        self.entries.get(field).and_then(|codes| {
            codes
                .iter()
                .find(|(_, v)| v.as_str() == canonical)
                .map(|(k, _)| k.as_str())
        })
    }

    pub fn has_field(&self, field: &str) -> bool {
        self.entries.contains_key(field)
    }

    pub fn codes(&self, field: &str) -> impl Iterator<Item = (&str, &str)> {
        self.entries
            .get(field)
            .into_iter()
            .flat_map(|m| m.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_codebook() {
        let book = CodeBook::parse(crate::LUNG_CODEBOOK).unwrap();
        assert_eq!(book.version_tag, "lung-v1");
        assert_eq!(book.lookup("race", "01"), Some("White"));
        assert_eq!(book.lookup("marital_status", "99"), Some("Unknown"));
        assert_eq!(book.lookup("radiation", " 1"), Some("BeamRadiation"));
        assert_eq!(book.lookup("race", "05"), None);
        assert_eq!(book.code_for("stage", "Localized"), Some("1"));
        assert_eq!(book.codes("radiation").count(), 9);
    }

    #[test]
    fn duplicate_code_rejected() {
        let err = CodeBook::parse("race 01 White\nrace 01 Black\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }));
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(CodeBook::parse("race 01\n").is_err());
    }
}
