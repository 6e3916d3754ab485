//! Fixed-width record layouts.
//!
//! A schema file is line oriented. `#` starts a comment, blank lines are
//! ignored, and exactly one `record_length N` header is required. Every other
//! line declares a field:
//!
//! ```text
//! name offset width kind [sentinel,sentinel,...]
//! ```
//!
//! `kind` is one of `categorical`, `ordinal-integer` or `code`. Sentinels are
//! compared against the whitespace-trimmed slice; an all-blank slice is always
//! treated as missing.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Categorical,
    OrdinalInteger,
    Code,
}

impl FromStr for FieldKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "categorical" => Ok(FieldKind::Categorical),
            "ordinal-integer" => Ok(FieldKind::OrdinalInteger),
            "code" => Ok(FieldKind::Code),
            other => Err(format!("unknown field kind `{other}`")),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Categorical => "categorical",
            FieldKind::OrdinalInteger => "ordinal-integer",
            FieldKind::Code => "code",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub offset: usize,
    pub width: usize,
    pub kind: FieldKind,
    pub missing_sentinels: Vec<String>,
}

impl FieldSpec {
    pub fn end(&self) -> usize {
        self.offset + self.width
    }

    /// True when `raw` (an untrimmed slice) denotes a missing value.
    pub fn is_missing(&self, raw: &str) -> bool {
        let trimmed = raw.trim();
        trimmed.is_empty() || self.missing_sentinels.iter().any(|s| s == trimmed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub version_tag: String,
    pub record_length: usize,
    fields: Vec<FieldSpec>,
}

impl Schema {
    /// Builds a schema, sorting fields by offset and checking the layout invariants.
    pub fn new(
        version_tag: impl Into<String>,
        record_length: usize,
        mut fields: Vec<FieldSpec>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &fields {
            if f.width == 0 {
                return Err(Error::Config(format!("field `{}` has zero width", f.name)));
            }
            if !seen.insert(f.name.clone()) {
                return Err(Error::DuplicateField(f.name.clone()));
            }
        }
        fields.sort_by_key(|f| f.offset);
        for pair in fields.windows(2) {
            if pair[0].end() > pair[1].offset {
                return Err(Error::Overlap {
                    first: pair[0].name.clone(),
                    second: pair[1].name.clone(),
                });
            }
        }
        let max_end = fields.iter().map(FieldSpec::end).max().unwrap_or(0);
        if record_length < max_end {
            return Err(Error::Config(format!(
                "record_length {record_length} is shorter than the last field end {max_end}"
            )));
        }
        Ok(Schema {
            version_tag: version_tag.into(),
            record_length,
            fields,
        })
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn has_field(&self, name: &str) -> bool {
        self.field(name).is_some()
    }

    /// Renders the schema back into the file grammar.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        if !self.version_tag.is_empty() {
            out.push_str(&format!("version {}\n", self.version_tag));
        }
        out.push_str(&format!("record_length {}\n", self.record_length));
        for f in &self.fields {
            out.push_str(&format!("{} {} {} {}", f.name, f.offset, f.width, f.kind));
            if !f.missing_sentinels.is_empty() {
                out.push(' ');
                out.push_str(&f.missing_sentinels.join(","));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a schema document. An optional `version TAG` line sets the version tag.
pub fn parse_schema(document: &str) -> Result<Schema> {
    let mut record_length = None;
    let mut version_tag = String::new();
    let mut fields = Vec::new();

    for (idx, raw_line) in document.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let syntax = |message: String| Error::Syntax {
            line: line_no,
            message,
        };
        let tokens: Vec<&str> = line.split(' ').collect();
        if tokens.iter().any(|t| t.is_empty()) {
            return Err(syntax("tokens must be separated by single spaces".into()));
        }
        match tokens[0] {
            "record_length" => {
                if tokens.len() != 2 {
                    return Err(syntax("expected `record_length N`".into()));
                }
                if record_length.is_some() {
                    return Err(syntax("record_length declared twice".into()));
                }
                let n = tokens[1]
                    .parse::<usize>()
                    .map_err(|_| syntax(format!("bad record length `{}`", tokens[1])))?;
                record_length = Some(n);
            }
            "version" => {
                if tokens.len() != 2 {
                    return Err(syntax("expected `version TAG`".into()));
                }
                version_tag = tokens[1].to_string();
            }
            name => {
                if !(4..=5).contains(&tokens.len()) {
                    return Err(syntax(
                        "expected `name offset width kind [sentinels]`".into(),
                    ));
                }
                let offset = tokens[1]
                    .parse::<usize>()
                    .map_err(|_| syntax(format!("bad offset `{}`", tokens[1])))?;
                let width = tokens[2]
                    .parse::<usize>()
                    .map_err(|_| syntax(format!("bad width `{}`", tokens[2])))?;
                if width == 0 {
                    return Err(syntax(format!("field `{name}` has zero width")));
                }
                let kind = tokens[3].parse::<FieldKind>().map_err(syntax)?;
                let missing_sentinels = tokens
                    .get(4)
                    .map(|s| s.split(',').map(str::to_string).collect())
                    .unwrap_or_default();
                fields.push(FieldSpec {
                    name: name.to_string(),
                    offset,
                    width,
                    kind,
                    missing_sentinels,
                });
            }
        }
    }

    let record_length = match record_length {
        Some(n) => n,
        None if fields.is_empty() => {
            return Err(Error::Syntax {
                line: 0,
                message: "empty schema".into(),
            })
        }
        // A header-less document is accepted when it is unambiguous: the
        // record is exactly as long as its last field.
        None => fields.iter().map(FieldSpec::end).max().unwrap_or(0),
    };
    Schema::new(version_tag, record_length, fields)
}

/// Locates a record in its source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Locator {
    pub file: String,
    pub line: usize,
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// One line sliced into raw field values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub values: BTreeMap<String, String>,
    pub source_line: usize,
    pub source_file: String,
}

impl RawRecord {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    pub fn locator(&self) -> Locator {
        Locator {
            file: self.source_file.clone(),
            line: self.source_line,
        }
    }
}

pub fn parse_record(line: &str, schema: &Schema) -> Result<RawRecord> {
    parse_record_at(line, schema, "", 0)
}

fn parse_record_at(line: &str, schema: &Schema, file: &str, line_no: usize) -> Result<RawRecord> {
    if !line.is_ascii() {
        return Err(Error::NonAscii {
            file: file.to_string(),
            line: line_no,
        });
    }
    if line.len() < schema.record_length {
        return Err(Error::ShortLine {
            file: file.to_string(),
            line: line_no,
            expected: schema.record_length,
            actual: line.len(),
        });
    }
    let values = schema
        .fields()
        .iter()
        .map(|f| (f.name.clone(), line[f.offset..f.end()].to_string()))
        .collect();
    Ok(RawRecord {
        values,
        source_line: line_no,
        source_file: file.to_string(),
    })
}

/// Writes a record back to a fixed-width line. Gaps between fields are blank.
pub fn serialize_record(record: &RawRecord, schema: &Schema) -> String {
    let mut out = vec![b' '; schema.record_length];
    for f in schema.fields() {
        if let Some(v) = record.values.get(&f.name) {
            let bytes = v.as_bytes();
            let n = bytes.len().min(f.width);
            out[f.offset..f.offset + n].copy_from_slice(&bytes[..n]);
        }
    }
    String::from_utf8(out).expect("ascii")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseLog {
    pub source_file: String,
    pub parsed: usize,
    pub skipped: Vec<SkippedLine>,
}

impl ParseLog {
    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }
}

/// Parses every line of `stream`. Lines that cannot be sliced are logged and skipped.
pub fn parse_file<R: BufRead>(
    stream: R,
    schema: &Schema,
    source_file: &str,
) -> Result<(Vec<RawRecord>, ParseLog)> {
    let mut records = Vec::new();
    let mut log = ParseLog {
        source_file: source_file.to_string(),
        ..ParseLog::default()
    };
    for (idx, line) in stream.split(b'\n').enumerate() {
        let mut bytes = line?;
        if bytes.last() == Some(&b'\r') {
            bytes.pop();
        }
        let line_no = idx + 1;
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(_) => {
                log.skipped.push(SkippedLine {
                    line: line_no,
                    reason: "non-ascii".into(),
                });
                continue;
            }
        };
        match parse_record_at(&text, schema, source_file, line_no) {
            Ok(r) => {
                records.push(r);
                log.parsed += 1;
            }
            Err(e) => log.skipped.push(SkippedLine {
                line: line_no,
                reason: match e {
                    Error::ShortLine {
                        expected, actual, ..
                    } => format!("short line ({actual} < {expected})"),
                    Error::NonAscii { .. } => "non-ascii".into(),
                    other => other.to_string(),
                },
            }),
        }
    }
    Ok((records, log))
}
