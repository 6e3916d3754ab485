//! Codified patient records.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::schema::Locator;

/// Text used for a missing value in every serialized form.
pub const MISSING: &str = "?";

macro_rules! category_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant,)+
            Missing,
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)+ $name::Missing];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant),)+
                    $name::Missing => MISSING,
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $(stringify!($variant) => Ok($name::$variant),)+
                    MISSING => Ok($name::Missing),
                    other => Err(format!("`{}` is not a {} value", other, stringify!($name))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

category_enum!(Race {
    White,
    Black,
    AmericanIndianAlaskanNative,
    AsianPacificIslander,
    OtherUnspecified,
    Unknown,
});

category_enum!(MaritalStatus {
    Single,
    Married,
    Separated,
    Divorced,
    Widowed,
    Unknown,
});

category_enum!(VitalStatus { Alive, Dead });

category_enum!(LymphNodes { Yes, No });

/// The eight age groups used as the Age feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgeBin {
    To24,
    From25To34,
    From35To44,
    From45To54,
    From55To64,
    From65To74,
    From75To84,
    From85,
}

impl AgeBin {
    pub const ALL: [AgeBin; 8] = [
        AgeBin::To24,
        AgeBin::From25To34,
        AgeBin::From35To44,
        AgeBin::From45To54,
        AgeBin::From55To64,
        AgeBin::From65To74,
        AgeBin::From75To84,
        AgeBin::From85,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            AgeBin::To24 => "(0-24)",
            AgeBin::From25To34 => "(25-34)",
            AgeBin::From35To44 => "(35-44)",
            AgeBin::From45To54 => "(45-54)",
            AgeBin::From55To64 => "(55-64)",
            AgeBin::From65To74 => "(65-74)",
            AgeBin::From75To84 => "(75-84)",
            AgeBin::From85 => ">=85",
        }
    }
}

impl fmt::Display for AgeBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgeBin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        AgeBin::ALL
            .iter()
            .copied()
            .find(|b| b.label() == s)
            .ok_or_else(|| format!("`{s}` is not an age bin"))
    }
}

/// Maps an age in whole years onto its bin. Boundaries are inclusive as listed
/// in [`AgeBin::label`].
pub fn bin_age(age: i64) -> Result<AgeBin> {
    Ok(match age {
        0..=24 => AgeBin::To24,
        25..=34 => AgeBin::From25To34,
        35..=44 => AgeBin::From35To44,
        45..=54 => AgeBin::From45To54,
        55..=64 => AgeBin::From55To64,
        65..=74 => AgeBin::From65To74,
        75..=84 => AgeBin::From75To84,
        85..=120 => AgeBin::From85,
        other => return Err(Error::AgeOutOfRange(other)),
    })
}

/// Recorded cause of death.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DeathCause {
    /// No cause on file (the patient is not recorded as dead).
    None,
    Code(String),
    Missing,
}

impl DeathCause {
    /// Raw registry code used for "no cause of death".
    pub const NONE_CODE: &'static str = "0000";

    pub fn code(&self) -> Option<&str> {
        match self {
            DeathCause::Code(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for DeathCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeathCause::None => f.write_str("none"),
            DeathCause::Code(c) => f.write_str(c),
            DeathCause::Missing => f.write_str(MISSING),
        }
    }
}

impl FromStr for DeathCause {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(DeathCause::None),
            MISSING => Ok(DeathCause::Missing),
            c if is_icd10(c) => Ok(DeathCause::Code(c.to_string())),
            other => Err(format!("`{other}` is not an ICD-10 code")),
        }
    }
}

/// Letter followed by two or three digits.
pub fn is_icd10(code: &str) -> bool {
    let b = code.as_bytes();
    (3..=4).contains(&b.len()) && b[0].is_ascii_uppercase() && b[1..].iter().all(u8::is_ascii_digit)
}

/// `C` followed by three digits.
pub fn is_topography(code: &str) -> bool {
    let b = code.as_bytes();
    b.len() == 4 && b[0] == b'C' && b[1..].iter().all(u8::is_ascii_digit)
}

/// One codified patient case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientRecord {
    pub locator: Locator,
    pub age_bin: Option<AgeBin>,
    pub race: Race,
    pub marital_status: MaritalStatus,
    pub primary_site: String,
    pub histologic_type: Option<String>,
    pub tumor_size_mm: Option<u32>,
    pub extension: Option<String>,
    pub lymph_nodes: LymphNodes,
    pub surgery_site: Option<String>,
    pub radiation: Option<String>,
    pub stage: Option<String>,
    pub radiation_sequence: Option<String>,
    pub survival_months: Option<u32>,
    pub vital_status: VitalStatus,
    pub death_cause: DeathCause,
    pub diagnosis_year: i32,
}

pub const RECORD_COLUMNS: [&str; 18] = [
    "source_file",
    "source_line",
    "age_bin",
    "race",
    "marital_status",
    "primary_site",
    "histologic_type",
    "tumor_size",
    "extension",
    "lymph_nodes",
    "surgery_site",
    "radiation",
    "stage",
    "radiation_sequence",
    "survival_months",
    "vital_status",
    "death_cause",
    "diagnosis_year",
];

fn opt_str(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or(MISSING)
}

fn opt_num(v: Option<u32>) -> String {
    v.map_or_else(|| MISSING.to_string(), |n| n.to_string())
}

impl PatientRecord {
    /// Value of a named field rendered as text; `None` when no such field exists.
    pub fn field_value(&self, field: &str) -> Option<String> {
        Some(match field {
            "age_bin" | "age" => self.age_bin.map_or(MISSING.into(), |b| b.label().into()),
            "race" => self.race.as_str().into(),
            "marital_status" => self.marital_status.as_str().into(),
            "primary_site" => self.primary_site.clone(),
            "histologic_type" => opt_str(&self.histologic_type).into(),
            "tumor_size" | "tumor_size_mm" => opt_num(self.tumor_size_mm),
            "extension" => opt_str(&self.extension).into(),
            "lymph_nodes" => self.lymph_nodes.as_str().into(),
            "surgery_site" => opt_str(&self.surgery_site).into(),
            "radiation" => opt_str(&self.radiation).into(),
            "stage" => opt_str(&self.stage).into(),
            "radiation_sequence" => opt_str(&self.radiation_sequence).into(),
            "survival_months" => opt_num(self.survival_months),
            "vital_status" => self.vital_status.as_str().into(),
            "death_cause" => self.death_cause.to_string(),
            "diagnosis_year" => self.diagnosis_year.to_string(),
            _ => return None,
        })
    }

    fn to_row(&self) -> String {
        let mut cols = vec![self.locator.file.clone(), self.locator.line.to_string()];
        cols.extend(
            RECORD_COLUMNS[2..]
                .iter()
                .map(|c| self.field_value(c).expect("known column")),
        );
        cols.join("\t")
    }

    fn from_row(row: &str, line: usize) -> Result<Self> {
        let cols: Vec<&str> = row.split('\t').collect();
        let bad = |message: String| Error::Syntax { line, message };
        if cols.len() != RECORD_COLUMNS.len() {
            return Err(bad(format!(
                "expected {} columns, found {}",
                RECORD_COLUMNS.len(),
                cols.len()
            )));
        }
        let text =
            |i: usize| -> Option<String> { (cols[i] != MISSING).then(|| cols[i].to_string()) };
        let num = |i: usize| -> Result<Option<u32>> {
            if cols[i] == MISSING {
                Ok(None)
            } else {
                cols[i]
                    .parse()
                    .map(Some)
                    .map_err(|_| bad(format!("bad number `{}`", cols[i])))
            }
        };
        Ok(PatientRecord {
            locator: Locator {
                file: cols[0].to_string(),
                line: cols[1]
                    .parse()
                    .map_err(|_| bad(format!("bad line number `{}`", cols[1])))?,
            },
            age_bin: match cols[2] {
                MISSING => None,
                s => Some(s.parse().map_err(bad)?),
            },
            race: cols[3].parse().map_err(bad)?,
            marital_status: cols[4].parse().map_err(bad)?,
            primary_site: cols[5].to_string(),
            histologic_type: text(6),
            tumor_size_mm: num(7)?,
            extension: text(8),
            lymph_nodes: cols[9].parse().map_err(bad)?,
            surgery_site: text(10),
            radiation: text(11),
            stage: text(12),
            radiation_sequence: text(13),
            survival_months: num(14)?,
            vital_status: cols[15].parse().map_err(bad)?,
            death_cause: cols[16].parse().map_err(bad)?,
            diagnosis_year: cols[17]
                .parse()
                .map_err(|_| bad(format!("bad year `{}`", cols[17])))?,
        })
    }
}

/// Writes codified records as TSV with a header row.
pub fn write_records<W: Write>(mut out: W, records: &[PatientRecord]) -> Result<()> {
    writeln!(out, "{}", RECORD_COLUMNS.join("\t"))?;
    for r in records {
        writeln!(out, "{}", r.to_row())?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<PatientRecord>> {
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line != RECORD_COLUMNS.join("\t") {
                return Err(Error::Syntax {
                    line: 1,
                    message: "unexpected header for codified records".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        records.push(PatientRecord::from_row(&line, idx + 1)?);
    }
    Ok(records)
}
