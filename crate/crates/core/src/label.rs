//! Survivability labels.
//!
//! Two labelings are supported. The five-year flag marks a patient as
//! survived when follow-up reaches 60 months alive and as not survived when a
//! lung death occurs inside 60 months; every other case is removed. The
//! short/long labeling evaluates five ordered rules, first match wins, and
//! splits on a short-term threshold `T_s` (12 months by default).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{features_of, Example, FEATURE_NAMES};
use crate::preprocess::STUDY_LAST_YEAR;
use crate::record::{DeathCause, PatientRecord, VitalStatus};
use crate::schema::Locator;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelingConfig {
    pub five_year_threshold_months: u32,
    pub short_term_threshold_months: u32,
    /// ICD-10 categories (or full codes) counted as lung deaths; a cause
    /// matches an entry when it starts with it.
    pub lung_death_codes: Vec<String>,
    pub follow_up_cutoff: NaiveDate,
    pub last_dataset_year: i32,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig::for_last_year(STUDY_LAST_YEAR)
    }
}

impl LabelingConfig {
    /// Defaults with the follow-up cutoff on December 31 of `last_dataset_year`.
    pub fn for_last_year(last_dataset_year: i32) -> Self {
        LabelingConfig {
            five_year_threshold_months: 60,
            short_term_threshold_months: 12,
            lung_death_codes: vec!["C33".into(), "C34".into()],
            follow_up_cutoff: NaiveDate::from_ymd_opt(last_dataset_year, 12, 31)
                .expect("valid year"),
            last_dataset_year,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.short_term_threshold_months == 0
            || self.five_year_threshold_months <= self.short_term_threshold_months
        {
            return Err(Error::Config(format!(
                "need five-year threshold ({}) > short-term threshold ({}) > 0",
                self.five_year_threshold_months, self.short_term_threshold_months
            )));
        }
        Ok(())
    }

    pub fn is_lung_death(&self, cause: &DeathCause) -> bool {
        cause.code().is_some_and(|c| {
            self.lung_death_codes
                .iter()
                .any(|p| c.starts_with(p.as_str()))
        })
    }

    /// Death month (counting from January of the diagnosis year) falls after
    /// the follow-up cutoff month.
    fn died_after_cutoff(&self, record: &PatientRecord, months: u32) -> bool {
        let death = record.diagnosis_year as i64 * 12 + months as i64;
        let cutoff =
            self.follow_up_cutoff.year() as i64 * 12 + self.follow_up_cutoff.month0() as i64;
        death > cutoff
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FiredRule {
    Alg1Survived,
    Alg1NotSurvived,
    Alg1Inconclusive,
    NullSurvivalCode,
    Rule1,
    Rule2,
    Rule3,
    Rule4,
    Rule5,
}

impl FiredRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            FiredRule::Alg1Survived => "alg1_survived",
            FiredRule::Alg1NotSurvived => "alg1_not_survived",
            FiredRule::Alg1Inconclusive => "alg1_inconclusive",
            FiredRule::NullSurvivalCode => "null_survival_code",
            FiredRule::Rule1 => "rule1",
            FiredRule::Rule2 => "rule2",
            FiredRule::Rule3 => "rule3",
            FiredRule::Rule4 => "rule4",
            FiredRule::Rule5 => "rule5",
        }
    }

    pub fn removes(&self) -> bool {
        matches!(
            self,
            FiredRule::Rule2
                | FiredRule::Rule5
                | FiredRule::NullSurvivalCode
                | FiredRule::Alg1Inconclusive
        )
    }
}

impl fmt::Display for FiredRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivalFlag {
    Survived,
    NotSurvived,
    Removed(FiredRule),
}

impl SurvivalFlag {
    pub fn fired_rule(&self) -> FiredRule {
        match self {
            SurvivalFlag::Survived => FiredRule::Alg1Survived,
            SurvivalFlag::NotSurvived => FiredRule::Alg1NotSurvived,
            SurvivalFlag::Removed(r) => *r,
        }
    }
}

/// Five-year survival flag.
///
/// A record whose survival time or vital status is missing has no survival
/// code and is removed before the two outcome tests run.
pub fn algorithm1_flag(record: &PatientRecord, cfg: &LabelingConfig) -> SurvivalFlag {
    let months = match (record.survival_months, record.vital_status) {
        (None, _) | (_, VitalStatus::Missing) => {
            return SurvivalFlag::Removed(FiredRule::NullSurvivalCode)
        }
        (Some(m), _) => m,
    };
    let threshold = cfg.five_year_threshold_months;
    if months >= threshold && record.vital_status == VitalStatus::Alive {
        SurvivalFlag::Survived
    } else if months < threshold && cfg.is_lung_death(&record.death_cause) {
        SurvivalFlag::NotSurvived
    } else {
        SurvivalFlag::Removed(FiredRule::Alg1Inconclusive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    LongTermSurvivor,
    ShortTermSurvivor,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelDecision {
    pub outcome: Outcome,
    pub fired_rule: FiredRule,
    pub locator: Locator,
}

/// Ordered short/long survivability rules.
pub fn apply_rules(record: &PatientRecord, cfg: &LabelingConfig) -> LabelDecision {
    let ts = cfg.short_term_threshold_months;
    let five = cfg.five_year_threshold_months;
    let dead = record.vital_status == VitalStatus::Dead;
    let alive = record.vital_status == VitalStatus::Alive;
    let months = record.survival_months;

    let (outcome, fired_rule) = match months {
        Some(m) if m > five && (alive || (dead && cfg.died_after_cutoff(record, m))) => {
            (Outcome::LongTermSurvivor, FiredRule::Rule1)
        }
        None => (Outcome::Removed, FiredRule::Rule2),
        Some(m) if record.diagnosis_year == cfg.last_dataset_year && !dead && m < ts => {
            (Outcome::Removed, FiredRule::Rule2)
        }
        Some(m) if dead && cfg.is_lung_death(&record.death_cause) && m < ts => {
            (Outcome::ShortTermSurvivor, FiredRule::Rule3)
        }
        Some(m) if m > ts => (Outcome::LongTermSurvivor, FiredRule::Rule4),
        Some(_) => (Outcome::Removed, FiredRule::Rule5),
    };
    LabelDecision {
        outcome,
        fired_rule,
        locator: record.locator.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    FiveYear,
    ShortLong,
}

impl std::str::FromStr for LabelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "five-year" | "five_year" => Ok(LabelMode::FiveYear),
            "short-long" | "short_long" => Ok(LabelMode::ShortLong),
            other => Err(format!("unknown label mode `{other}`")),
        }
    }
}

/// Labeled classifier input. `survived` is the positive class (long-term
/// survivor in short/long mode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledInstance {
    features: Vec<String>,
    pub survived: bool,
    pub diagnosis_year: i32,
    pub locator: Locator,
}

impl LabeledInstance {
    /// Panics unless `features` is aligned with [`FEATURE_NAMES`].
    pub fn new(
        features: Vec<String>,
        survived: bool,
        diagnosis_year: i32,
        locator: Locator,
    ) -> Self {
        assert_eq!(
            features.len(),
            FEATURE_NAMES.len(),
            "feature vector must align with FEATURE_NAMES"
        );
        LabeledInstance {
            features,
            survived,
            diagnosis_year,
            locator,
        }
    }

    pub fn from_record(record: &PatientRecord, survived: bool) -> Self {
        LabeledInstance::new(
            features_of(record),
            survived,
            record.diagnosis_year,
            record.locator.clone(),
        )
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&str> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.features[i].as_str())
    }
}

impl Example for LabeledInstance {
    fn values(&self) -> &[String] {
        &self.features
    }

    fn class(&self) -> usize {
        self.survived as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelingStats {
    pub input: usize,
    pub survived: usize,
    pub not_survived: usize,
    pub removed: usize,
    pub rule_counts: BTreeMap<FiredRule, usize>,
}

impl LabelingStats {
    pub fn labeled(&self) -> usize {
        self.survived + self.not_survived
    }

    pub fn merge(mut self, other: LabelingStats) -> LabelingStats {
        self.input += other.input;
        self.survived += other.survived;
        self.not_survived += other.not_survived;
        self.removed += other.removed;
        for (k, v) in other.rule_counts {
            *self.rule_counts.entry(k).or_default() += v;
        }
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("input\t{}\n", self.input));
        out.push_str(&format!("labeled\t{}\n", self.labeled()));
        out.push_str(&format!("survived\t{}\n", self.survived));
        out.push_str(&format!("not_survived\t{}\n", self.not_survived));
        out.push_str(&format!("removed\t{}\n", self.removed));
        for (rule, n) in &self.rule_counts {
            out.push_str(&format!("rule.{rule}\t{n}\n"));
        }
        out
    }
}

/// Labels every record; removed records are counted and excluded.
pub fn label_dataset(
    records: &[PatientRecord],
    cfg: &LabelingConfig,
    mode: LabelMode,
) -> (Vec<LabeledInstance>, LabelingStats) {
    let decisions: Vec<(FiredRule, Option<bool>)> = records
        .par_iter()
        .map(|r| match mode {
            LabelMode::FiveYear => {
                let flag = algorithm1_flag(r, cfg);
                let class = match flag {
                    SurvivalFlag::Survived => Some(true),
                    SurvivalFlag::NotSurvived => Some(false),
                    SurvivalFlag::Removed(_) => None,
                };
                (flag.fired_rule(), class)
            }
            LabelMode::ShortLong => {
                let d = apply_rules(r, cfg);
                let class = match d.outcome {
                    Outcome::LongTermSurvivor => Some(true),
                    Outcome::ShortTermSurvivor => Some(false),
                    Outcome::Removed => None,
                };
                (d.fired_rule, class)
            }
        })
        .collect();

    let mut stats = LabelingStats {
        input: records.len(),
        ..LabelingStats::default()
    };
    let mut labeled = Vec::with_capacity(records.len());
    for (record, (rule, class)) in records.iter().zip(decisions) {
        *stats.rule_counts.entry(rule).or_default() += 1;
        match class {
            Some(true) => stats.survived += 1,
            Some(false) => stats.not_survived += 1,
            None => stats.removed += 1,
        }
        if let Some(survived) = class {
            labeled.push(LabeledInstance::from_record(record, survived));
        }
    }
    (labeled, stats)
}

/// Writes the labeled CSV: feature columns, then `survived` and `diagnosis_year`.
pub fn write_labeled_csv<W: Write>(mut out: W, instances: &[LabeledInstance]) -> Result<()> {
    writeln!(out, "{},survived,diagnosis_year", FEATURE_NAMES.join(","))?;
    for inst in instances {
        if let Some(bad) = inst.features.iter().find(|v| v.contains(',')) {
            return Err(Error::Format(format!("value `{bad}` contains a comma")));
        }
        writeln!(
            out,
            "{},{},{}",
            inst.features.join(","),
            inst.survived as u8,
            inst.diagnosis_year
        )?;
    }
    Ok(())
}

/// Reads a labeled CSV. Locators point at `source` and the CSV line number.
pub fn read_labeled_csv<R: BufRead>(input: R, source: &str) -> Result<Vec<LabeledInstance>> {
    let header = format!("{},survived,diagnosis_year", FEATURE_NAMES.join(","));
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if idx == 0 {
            if line != header {
                return Err(Error::Syntax {
                    line: 1,
                    message: "unexpected labeled CSV header".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let bad = |message: &str| Error::Syntax {
            line: line_no,
            message: message.to_string(),
        };
        if cols.len() != FEATURE_NAMES.len() + 2 {
            return Err(bad("wrong column count"));
        }
        let survived = match cols[FEATURE_NAMES.len()] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("survived must be 0 or 1")),
        };
        let year = cols[FEATURE_NAMES.len() + 1]
            .parse()
            .map_err(|_| bad("bad diagnosis_year"))?;
        out.push(LabeledInstance::new(
            cols[..FEATURE_NAMES.len()]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            survived,
            year,
            Locator {
                file: source.to_string(),
                line: line_no,
            },
        ));
    }
    Ok(out)
}
