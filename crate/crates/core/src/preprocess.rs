//! Four-phase preprocessing: structural checks, relevancy, qualitative
//! consistency (with the lung-site and year filters) and codification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::codebook::CodeBook;
use crate::error::Result;
use crate::record::{
    bin_age, is_icd10, is_topography, DeathCause, LymphNodes, MaritalStatus, PatientRecord, Race,
    VitalStatus,
};
use crate::schema::{Locator, RawRecord, Schema};

/// Canonical field names of the lung-cohort layout.
pub mod fields {
    pub const AGE: &str = "age";
    pub const RACE: &str = "race";
    pub const MARITAL_STATUS: &str = "marital_status";
    pub const PRIMARY_SITE: &str = "primary_site";
    pub const HISTOLOGIC_TYPE: &str = "histologic_type";
    pub const BEHAVIOR_CODE: &str = "behavior_code";
    pub const TUMOR_SIZE: &str = "tumor_size";
    pub const GRADE: &str = "grade";
    pub const EXTENSION: &str = "extension";
    pub const LYMPH_NODES: &str = "lymph_nodes";
    pub const SURGERY_SITE: &str = "surgery_site";
    pub const RADIATION: &str = "radiation";
    pub const STAGE: &str = "stage";
    pub const RADIATION_SEQUENCE: &str = "radiation_sequence";
    pub const SURVIVAL_MONTHS: &str = "survival_months";
    pub const VITAL_STATUS: &str = "vital_status";
    pub const DEATH_CAUSE: &str = "death_cause";
    pub const DIAGNOSIS_YEAR: &str = "diagnosis_year";
}

use fields::*;

/// Fields a dataset must carry to be usable for the study.
pub const REQUIRED_FIELDS: [&str; 16] = [
    AGE,
    RACE,
    MARITAL_STATUS,
    PRIMARY_SITE,
    HISTOLOGIC_TYPE,
    TUMOR_SIZE,
    EXTENSION,
    LYMPH_NODES,
    SURGERY_SITE,
    RADIATION,
    STAGE,
    RADIATION_SEQUENCE,
    SURVIVAL_MONTHS,
    VITAL_STATUS,
    DEATH_CAUSE,
    DIAGNOSIS_YEAR,
];

pub const ELIMINATED_FIELDS: [&str; 2] = [BEHAVIOR_CODE, GRADE];

pub const LUNG_SITES: [&str; 6] = ["C340", "C341", "C342", "C343", "C348", "C349"];

pub const FIRST_YEAR: i32 = 1988;
pub const LAST_COMPLETE_YEAR: i32 = 2003;
pub const STUDY_LAST_YEAR: i32 = 1999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::I => "I",
            Phase::II => "II",
            Phase::III => "III",
            Phase::IV => "IV",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueCode {
    StructuralMismatch,
    MissingSentinel,
    MissingRequiredField,
    GroupLevelData,
    ExtraneousAge,
    SurvivalExceedsFollowUp,
    DeathCauseContradiction,
    NonLungSite,
    OutsideStudyWindow,
    Uncodifiable,
}

impl IssueCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IssueCode::StructuralMismatch => "structural-mismatch",
            IssueCode::MissingSentinel => "missing-sentinel",
            IssueCode::MissingRequiredField => "missing-required-field",
            IssueCode::GroupLevelData => "group-level-data",
            IssueCode::ExtraneousAge => "extraneous-age",
            IssueCode::SurvivalExceedsFollowUp => "survival-exceeds-follow-up",
            IssueCode::DeathCauseContradiction => "death-cause-contradiction",
            IssueCode::NonLungSite => "non-lung-site",
            IssueCode::OutsideStudyWindow => "outside-study-window",
            IssueCode::Uncodifiable => "uncodifiable",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub locator: Locator,
    pub field: String,
    pub code: IssueCode,
    pub detail: String,
}

impl Issue {
    fn new(locator: &Locator, field: &str, code: IssueCode, detail: impl Into<String>) -> Self {
        Issue {
            locator: locator.clone(),
            field: field.to_string(),
            code,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseReport {
    pub phase: Phase,
    pub records_in: usize,
    pub records_out: usize,
    pub issues: Vec<Issue>,
}

impl PhaseReport {
    fn new(phase: Phase) -> Self {
        PhaseReport {
            phase,
            records_in: 0,
            records_out: 0,
            issues: Vec::new(),
        }
    }

    pub fn dropped(&self) -> usize {
        self.records_in - self.records_out
    }

    /// Combines reports of the same phase computed over disjoint inputs.
    pub fn merge(mut self, other: PhaseReport) -> PhaseReport {
        debug_assert_eq!(self.phase, other.phase);
        self.records_in += other.records_in;
        self.records_out += other.records_out;
        self.issues.extend(other.issues);
        self
    }
}

/// A raw record after sentinel normalization: values are trimmed and `None`
/// marks a missing value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedRecord {
    pub locator: Locator,
    pub values: BTreeMap<String, Option<String>>,
}

impl NormalizedRecord {
    pub fn get(&self, field: &str) -> Option<&str> {
        self.values.get(field).and_then(|v| v.as_deref())
    }
}

/// Phase I: cross-schema structural check, sentinel detection and normalization.
pub fn phase1_structural(
    schemas: &[Schema],
    datasets: &[Vec<RawRecord>],
) -> (PhaseReport, Vec<Vec<NormalizedRecord>>) {
    let mut report = PhaseReport::new(Phase::I);
    if let Some(reference) = schemas.first() {
        for (idx, schema) in schemas.iter().enumerate().skip(1) {
            let locator = Locator {
                file: format!("schema#{idx}"),
                line: 0,
            };
            let names: BTreeSet<&str> = reference
                .fields()
                .iter()
                .chain(schema.fields())
                .map(|f| f.name.as_str())
                .collect();
            for name in names {
                match (reference.field(name), schema.field(name)) {
                    (Some(a), Some(b)) if a.width == b.width => {}
                    (Some(a), Some(b)) => report.issues.push(Issue::new(
                        &locator,
                        name,
                        IssueCode::StructuralMismatch,
                        format!("width {} vs {}", a.width, b.width),
                    )),
                    (Some(_), None) => report.issues.push(Issue::new(
                        &locator,
                        name,
                        IssueCode::StructuralMismatch,
                        "field absent from this schema",
                    )),
                    (None, _) => report.issues.push(Issue::new(
                        &locator,
                        name,
                        IssueCode::StructuralMismatch,
                        "field absent from the reference schema",
                    )),
                }
            }
        }
    }

    let mut normalized = Vec::with_capacity(datasets.len());
    for (schema, records) in schemas.iter().zip(datasets) {
        report.records_in += records.len();
        report.records_out += records.len();
        let mut out = Vec::with_capacity(records.len());
        for rec in records {
            let locator = rec.locator();
            let mut values = BTreeMap::new();
            for f in schema.fields() {
                let raw = rec.get(&f.name).unwrap_or("");
                if f.is_missing(raw) {
                    report.issues.push(Issue::new(
                        &locator,
                        &f.name,
                        IssueCode::MissingSentinel,
                        format!("`{}`", raw.trim()),
                    ));
                    values.insert(f.name.clone(), None);
                } else {
                    values.insert(f.name.clone(), Some(raw.trim().to_string()));
                }
            }
            out.push(NormalizedRecord { locator, values });
        }
        normalized.push(out);
    }
    (report, normalized)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    PatientLevel,
    GroupLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Usable,
    Discard,
}

/// Phase II: decides whether a dataset can serve the study at all.
pub fn phase2_relevancy(
    schema: &Schema,
    records: &[NormalizedRecord],
    required_fields: &[&str],
    granularity: Granularity,
) -> (PhaseReport, Verdict) {
    let mut report = PhaseReport::new(Phase::II);
    report.records_in = records.len();
    let missing: Vec<&str> = required_fields
        .iter()
        .copied()
        .filter(|f| !schema.has_field(f))
        .collect();
    let mut reasons = Vec::new();
    for f in &missing {
        reasons.push((
            IssueCode::MissingRequiredField,
            f.to_string(),
            "required field not in schema",
        ));
    }
    if granularity == Granularity::GroupLevel {
        reasons.push((
            IssueCode::GroupLevelData,
            "-".to_string(),
            "data is not patient-level",
        ));
    }
    if reasons.is_empty() {
        report.records_out = records.len();
        return (report, Verdict::Usable);
    }
    let dataset = Locator {
        file: records
            .first()
            .map(|r| r.locator.file.clone())
            .unwrap_or_else(|| schema.version_tag.clone()),
        line: 0,
    };
    for (code, field, detail) in &reasons {
        report
            .issues
            .push(Issue::new(&dataset, field, *code, *detail));
    }
    for rec in records {
        let (code, field, _) = &reasons[0];
        report
            .issues
            .push(Issue::new(&rec.locator, field, *code, "dataset discarded"));
    }
    (report, Verdict::Discard)
}

/// Settings for the qualitative checks and the year filter.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    /// Restrict to diagnoses in 1988–1999 (otherwise 1988–2003).
    pub study_window: bool,
    /// Last year of follow-up covered by the data.
    pub end_year: i32,
    pub granularity: Granularity,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            study_window: true,
            end_year: LAST_COMPLETE_YEAR,
            granularity: Granularity::PatientLevel,
        }
    }
}

/// Upper bound on plausible survival months for a diagnosis year: the months
/// from January of the diagnosis year to the end of `end_year`, plus twelve.
pub fn follow_up_limit_months(diagnosis_year: i32, end_year: i32) -> i64 {
    (end_year as i64 - diagnosis_year as i64 + 1) * 12 + 12
}

/// Phase III: qualitative consistency issues for one record.
pub fn phase3_qualitative(
    record: &NormalizedRecord,
    codebook: &CodeBook,
    cfg: &PreprocessConfig,
) -> Vec<Issue> {
    let loc = &record.locator;
    let mut issues = Vec::new();
    if let Some(age) = record.get(AGE).and_then(|a| a.parse::<i64>().ok()) {
        if !(0..=120).contains(&age) {
            issues.push(Issue::new(
                loc,
                AGE,
                IssueCode::ExtraneousAge,
                format!("age {age}"),
            ));
        }
    }
    let year = record
        .get(DIAGNOSIS_YEAR)
        .and_then(|y| y.parse::<i32>().ok());
    let months = record
        .get(SURVIVAL_MONTHS)
        .and_then(|m| m.parse::<i64>().ok());
    if let (Some(year), Some(months)) = (year, months) {
        let limit = follow_up_limit_months(year, cfg.end_year);
        if months > limit {
            issues.push(Issue::new(
                loc,
                SURVIVAL_MONTHS,
                IssueCode::SurvivalExceedsFollowUp,
                format!("{months} months exceeds {limit} for diagnosis in {year}"),
            ));
        }
    }
    let alive = record
        .get(VITAL_STATUS)
        .and_then(|v| codebook.lookup(VITAL_STATUS, v))
        == Some(VitalStatus::Alive.as_str());
    let has_cause = matches!(record.get(DEATH_CAUSE), Some(c) if c != DeathCause::NONE_CODE);
    if alive && has_cause {
        issues.push(Issue::new(
            loc,
            DEATH_CAUSE,
            IssueCode::DeathCauseContradiction,
            format!(
                "alive with cause {}",
                record.get(DEATH_CAUSE).unwrap_or_default()
            ),
        ));
    }
    issues
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Site,
    Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Drop(DropReason),
}

/// Keeps lung primaries diagnosed inside the year window.
pub fn filter_lung(record: &NormalizedRecord, study_window: bool) -> FilterDecision {
    let site_ok = record
        .get(PRIMARY_SITE)
        .is_some_and(|s| LUNG_SITES.contains(&s));
    if !site_ok {
        return FilterDecision::Drop(DropReason::Site);
    }
    let last = if study_window {
        STUDY_LAST_YEAR
    } else {
        LAST_COMPLETE_YEAR
    };
    match record
        .get(DIAGNOSIS_YEAR)
        .and_then(|y| y.parse::<i32>().ok())
    {
        Some(y) if (FIRST_YEAR..=last).contains(&y) => FilterDecision::Keep,
        _ => FilterDecision::Drop(DropReason::Year),
    }
}

/// Removes the behavior-code and grade fields.
pub fn eliminate_fields(mut record: NormalizedRecord) -> NormalizedRecord {
    for f in ELIMINATED_FIELDS {
        record.values.remove(f);
    }
    record
}

/// Phase IV: converts a normalized record into typed domains.
pub fn phase4_codify(
    record: &NormalizedRecord,
    codebook: &CodeBook,
) -> std::result::Result<PatientRecord, Issue> {
    let loc = &record.locator;
    let bad = |field: &str, value: &str| {
        Issue::new(
            loc,
            field,
            IssueCode::Uncodifiable,
            format!("`{value}` is outside the field domain"),
        )
    };
    let coded = |field: &str| -> std::result::Result<Option<String>, Issue> {
        match record.get(field) {
            None => Ok(None),
            Some(v) => codebook
                .lookup(field, v)
                .map(|c| Some(c.to_string()))
                .ok_or_else(|| bad(field, v)),
        }
    };
    fn typed<T: std::str::FromStr>(
        value: Option<String>,
        missing: T,
        on_err: impl FnOnce(&str) -> Issue,
    ) -> std::result::Result<T, Issue> {
        match value {
            None => Ok(missing),
            Some(v) => v.parse().map_err(|_| on_err(&v)),
        }
    }
    let number = |field: &str| -> std::result::Result<Option<u32>, Issue> {
        match record.get(field) {
            None => Ok(None),
            Some(v) => v.parse::<u32>().map(Some).map_err(|_| bad(field, v)),
        }
    };

    let age_bin = match record.get(AGE) {
        None => None,
        Some(v) => {
            let age = v.parse::<i64>().map_err(|_| bad(AGE, v))?;
            Some(bin_age(age).map_err(|_| bad(AGE, v))?)
        }
    };
    let race = typed(coded(RACE)?, Race::Missing, |v| bad(RACE, v))?;
    let marital_status = typed(coded(MARITAL_STATUS)?, MaritalStatus::Missing, |v| {
        bad(MARITAL_STATUS, v)
    })?;
    let primary_site = match record.get(PRIMARY_SITE) {
        Some(s) if is_topography(s) => s.to_string(),
        other => return Err(bad(PRIMARY_SITE, other.unwrap_or("?"))),
    };
    let histologic_type = match record.get(HISTOLOGIC_TYPE) {
        None => None,
        Some(h) if h.len() == 4 && h.bytes().all(|b| b.is_ascii_digit()) => Some(h.to_string()),
        Some(h) => return Err(bad(HISTOLOGIC_TYPE, h)),
    };
    let tumor_size_mm = number(TUMOR_SIZE)?;
    let lymph_nodes = typed(coded(LYMPH_NODES)?, LymphNodes::Missing, |v| {
        bad(LYMPH_NODES, v)
    })?;
    let vital_status = typed(coded(VITAL_STATUS)?, VitalStatus::Missing, |v| {
        bad(VITAL_STATUS, v)
    })?;
    let death_cause = match record.get(DEATH_CAUSE) {
        None => DeathCause::Missing,
        Some(DeathCause::NONE_CODE) => DeathCause::None,
        Some(c) if is_icd10(c) => DeathCause::Code(c.to_string()),
        Some(c) => return Err(bad(DEATH_CAUSE, c)),
    };
    let diagnosis_year = match record.get(DIAGNOSIS_YEAR) {
        Some(y) => y.parse::<i32>().map_err(|_| bad(DIAGNOSIS_YEAR, y))?,
        None => return Err(bad(DIAGNOSIS_YEAR, "?")),
    };

    Ok(PatientRecord {
        locator: loc.clone(),
        age_bin,
        race,
        marital_status,
        primary_site,
        histologic_type,
        tumor_size_mm,
        extension: coded(EXTENSION)?,
        lymph_nodes,
        surgery_site: coded(SURGERY_SITE)?,
        radiation: coded(RADIATION)?,
        stage: coded(STAGE)?,
        radiation_sequence: coded(RADIATION_SEQUENCE)?,
        survival_months: number(SURVIVAL_MONTHS)?,
        vital_status,
        death_cause,
        diagnosis_year,
    })
}

/// One source file together with its layout.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: Schema,
    pub records: Vec<RawRecord>,
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub records: Vec<PatientRecord>,
    /// Reports for phases I–IV, in order.
    pub reports: Vec<PhaseReport>,
    pub verdicts: Vec<Verdict>,
}

impl PreprocessOutput {
    pub fn issues(&self) -> impl Iterator<Item = &Issue> {
        self.reports.iter().flat_map(|r| r.issues.iter())
    }
}

/// Runs phases I–IV over all datasets.
pub fn run_pipeline(
    datasets: &[Dataset],
    codebook: &CodeBook,
    cfg: &PreprocessConfig,
) -> PreprocessOutput {
    let schemas: Vec<Schema> = datasets.iter().map(|d| d.schema.clone()).collect();
    let raw: Vec<Vec<RawRecord>> = datasets.iter().map(|d| d.records.clone()).collect();
    let (p1, normalized) = phase1_structural(&schemas, &raw);

    let mut p2 = PhaseReport::new(Phase::II);
    let mut verdicts = Vec::new();
    let mut usable = Vec::new();
    for (schema, recs) in schemas.iter().zip(normalized) {
        let (report, verdict) = phase2_relevancy(schema, &recs, &REQUIRED_FIELDS, cfg.granularity);
        p2 = p2.merge(report);
        verdicts.push(verdict);
        if verdict == Verdict::Usable {
            usable.extend(recs);
        }
    }

    let mut p3 = PhaseReport::new(Phase::III);
    p3.records_in = usable.len();
    let checked: Vec<(NormalizedRecord, Vec<Issue>)> = usable
        .into_par_iter()
        .map(|rec| {
            let mut issues = phase3_qualitative(&rec, codebook, cfg);
            match filter_lung(&rec, cfg.study_window) {
                FilterDecision::Keep => {}
                FilterDecision::Drop(DropReason::Site) => issues.push(Issue::new(
                    &rec.locator,
                    PRIMARY_SITE,
                    IssueCode::NonLungSite,
                    format!("site `{}`", rec.get(PRIMARY_SITE).unwrap_or("?")),
                )),
                FilterDecision::Drop(DropReason::Year) => issues.push(Issue::new(
                    &rec.locator,
                    DIAGNOSIS_YEAR,
                    IssueCode::OutsideStudyWindow,
                    format!("year `{}`", rec.get(DIAGNOSIS_YEAR).unwrap_or("?")),
                )),
            }
            (rec, issues)
        })
        .collect();
    let mut passed = Vec::with_capacity(checked.len());
    for (rec, issues) in checked {
        if issues.is_empty() {
            passed.push(rec);
        } else {
            p3.issues.extend(issues);
        }
    }
    p3.records_out = passed.len();

    let mut p4 = PhaseReport::new(Phase::IV);
    p4.records_in = passed.len();
    let codified: Vec<std::result::Result<PatientRecord, Issue>> = passed
        .into_par_iter()
        .map(|rec| phase4_codify(&eliminate_fields(rec), codebook))
        .collect();
    let mut records = Vec::with_capacity(codified.len());
    for c in codified {
        match c {
            Ok(r) => records.push(r),
            Err(issue) => p4.issues.push(issue),
        }
    }
    p4.records_out = records.len();

    PreprocessOutput {
        records,
        reports: vec![p1, p2, p3, p4],
        verdicts,
    }
}

/// Writes the issue log: `file line field issue_code detail`, tab separated.
pub fn write_issue_log<'a, W: Write>(
    mut out: W,
    issues: impl IntoIterator<Item = &'a Issue>,
) -> Result<()> {
    for i in issues {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            i.locator.file, i.locator.line, i.field, i.code, i.detail
        )?;
    }
    Ok(())
}
