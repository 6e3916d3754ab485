//! Seeded synthetic cohort in the shipped record layout.
//!
//! Generation runs backward from labels: each record draws a diagnosis year,
//! then its class, then survival fields consistent with the five-year flag,
//! then the remaining fields. Planted rules tie one field value to a class at
//! a chosen fidelity; all other fields are drawn independently of the class.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Records
//! are generated in partitions of [`PARTITION_SIZE`]; partition `k` uses
//! stream `k` and noise for partition `k` uses stream `NOISE_STREAM + k`.
//! Partitions run in parallel and are merged in index order, so output is
//! independent of thread count.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::preprocess::fields::*;
use crate::preprocess::{follow_up_limit_months, LAST_COMPLETE_YEAR};
use crate::schema::{parse_schema, Schema};
use crate::stats::{median, Median};
use crate::LUNG_SCHEMA;

pub const PARTITION_SIZE: usize = 8192;
pub const NOISE_STREAM: u64 = 1 << 32;

/// Per-year median survival months and patient counts, 1988-2003.
pub const REGISTRY_MST: [(i32, u32, u32); 16] = [
    (1988, 7, 11_148),
    (1989, 7, 11_405),
    (1990, 7, 11_726),
    (1991, 7, 12_069),
    (1992, 7, 16_734),
    (1993, 7, 16_764),
    (1994, 7, 16_856),
    (1995, 8, 17_276),
    (1996, 8, 17_530),
    (1997, 8, 17_743),
    (1998, 8, 18_226),
    (1999, 9, 18_395),
    (2000, 6, 32_198),
    (2001, 6, 31_666),
    (2002, 5, 29_959),
    (2003, 4, 26_244),
];

type Table = &'static [(&'static str, f64)];

/// Class-independent value weights for each categorical field.
const MARGINALS: [(&str, Table); 11] = [
    (
        RACE,
        &[
            ("01", 0.82),
            ("02", 0.10),
            ("03", 0.005),
            ("04", 0.06),
            ("07", 0.005),
            ("99", 0.01),
        ],
    ),
    (
        MARITAL_STATUS,
        &[
            ("01", 0.10),
            ("02", 0.55),
            ("03", 0.02),
            ("04", 0.10),
            ("05", 0.20),
            ("99", 0.03),
        ],
    ),
    (
        PRIMARY_SITE,
        &[
            ("C340", 0.05),
            ("C341", 0.45),
            ("C342", 0.05),
            ("C343", 0.25),
            ("C348", 0.02),
            ("C349", 0.18),
        ],
    ),
    (
        HISTOLOGIC_TYPE,
        &[
            ("8140", 0.30),
            ("8070", 0.25),
            ("8041", 0.15),
            ("8046", 0.15),
            ("8012", 0.05),
            ("8000", 0.10),
        ],
    ),
    (
        GRADE,
        &[
            ("1", 0.12),
            ("2", 0.15),
            ("3", 0.25),
            ("4", 0.24),
            ("N/A", 0.24),
        ],
    ),
    (
        EXTENSION,
        &[
            ("10", 0.20),
            ("20", 0.10),
            ("30", 0.20),
            ("40", 0.10),
            ("70", 0.30),
            ("99", 0.10),
        ],
    ),
    (LYMPH_NODES, &[("0", 0.5), ("1", 0.5)]),
    (
        SURGERY_SITE,
        &[("10", 0.95), ("20", 0.02), ("30", 0.02), ("90", 0.01)],
    ),
    (
        RADIATION,
        &[
            ("0", 0.40),
            ("1", 0.52),
            ("2", 0.08 / 7.0),
            ("3", 0.08 / 7.0),
            ("4", 0.08 / 7.0),
            ("5", 0.08 / 7.0),
            ("6", 0.08 / 7.0),
            ("7", 0.08 / 7.0),
            ("8", 0.08 / 7.0),
        ],
    ),
    (
        STAGE,
        &[
            ("0", 0.01),
            ("1", 0.20),
            ("2", 0.25),
            ("4", 0.45),
            ("9", 0.09),
        ],
    ),
    (
        RADIATION_SEQUENCE,
        &[
            ("0", 0.60),
            ("2", 0.05),
            ("3", 0.25),
            ("4", 0.02),
            ("9", 0.08),
        ],
    ),
];

const LUNG_CAUSES: Table = &[
    ("C349", 0.70),
    ("C341", 0.15),
    ("C343", 0.10),
    ("C340", 0.05),
];

/// Share of tumors below 40 mm when no survivor override is set.
const BASE_BELOW_40MM: f64 = 0.45;

/// Fields that never receive injected missing values.
pub const NOISE_EXEMPT: [&str; 2] = [PRIMARY_SITE, DIAGNOSIS_YEAR];

fn marginal(field: &str) -> Option<Table> {
    MARGINALS.iter().find(|(f, _)| *f == field).map(|(_, t)| *t)
}

/// Field value `code` predicts `survived` with probability `fidelity`;
/// `coverage` is the share of all records carrying the value.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRule {
    pub feature: String,
    pub code: String,
    pub survived: bool,
    pub fidelity: f64,
    pub coverage: f64,
}

impl PlantedRule {
    /// P(value | class) implied by Bayes' rule at survivor share `p`.
    fn region_probability(&self, survived: bool, p: f64) -> f64 {
        let (class_share, hit) = if survived {
            (p, self.survived)
        } else {
            (1.0 - p, !self.survived)
        };
        if class_share == 0.0 {
            return 0.0;
        }
        let fid = if hit {
            self.fidelity
        } else {
            1.0 - self.fidelity
        };
        self.coverage * fid / class_share
    }
}

impl fmt::Display for PlantedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}:{}",
            self.feature,
            self.code,
            if self.survived {
                "survived"
            } else {
                "not_survived"
            },
            self.fidelity,
            self.coverage
        )
    }
}

impl FromStr for PlantedRule {
    type Err = Error;

    /// `feature:code:class:fidelity:coverage`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "bad rule `{s}`, expected feature:code:class:fidelity:coverage"
            ))
        };
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [feature, code, class, fidelity, coverage] = parts[..] else {
            return Err(bad());
        };
        let survived = match class {
            "survived" => true,
            "not_survived" => false,
            _ => return Err(bad()),
        };
        Ok(PlantedRule {
            feature: feature.to_string(),
            code: code.to_string(),
            survived,
            fidelity: fidelity.parse().map_err(|_| bad())?,
            coverage: coverage.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_records: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub survivor_fraction: f64,
    /// Exact per-year median survival months to enforce.
    pub mst_targets: BTreeMap<i32, u32>,
    /// Median of non-survivor survival months for years without a target.
    pub default_median_months: u32,
    pub planted_rules: Vec<PlantedRule>,
    /// Share of five-year survivors with a tumor below 40 mm; when unset
    /// tumor size is class-independent.
    pub survivor_below_40mm: Option<f64>,
    pub missing_rate: f64,
    pub malformed_line_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            n_records: 174_491,
            first_year: 1988,
            last_year: 1999,
            survivor_fraction: 0.0823,
            mst_targets: BTreeMap::new(),
            default_median_months: 8,
            planted_rules: vec![PlantedRule {
                feature: STAGE.into(),
                code: "1".into(),
                survived: true,
                fidelity: 0.9,
                coverage: 0.03,
            }],
            survivor_below_40mm: None,
            missing_rate: 0.0,
            malformed_line_rate: 0.0,
        }
    }
}

fn registry_targets() -> BTreeMap<i32, u32> {
    REGISTRY_MST.iter().map(|&(y, m, _)| (y, m)).collect()
}

impl GeneratorConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Config(format!("bad value `{value}` for `{key}`"));
        let float = || value.parse::<f64>().map_err(|_| bad());
        match key {
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "n_records" => self.n_records = value.replace('_', "").parse().map_err(|_| bad())?,
            "first_year" => self.first_year = value.parse().map_err(|_| bad())?,
            "last_year" => self.last_year = value.parse().map_err(|_| bad())?,
            "year_range" => {
                let (a, b) = value.split_once('-').ok_or_else(bad)?;
                self.first_year = a.trim().parse().map_err(|_| bad())?;
                self.last_year = b.trim().parse().map_err(|_| bad())?;
            }
            "survivor_fraction" => self.survivor_fraction = float()?,
            "mst_targets" => {
                self.mst_targets = match value {
                    "registry" => registry_targets(),
                    "none" | "" => BTreeMap::new(),
                    list => list
                        .split(',')
                        .map(|pair| {
                            let (y, m) = pair.split_once(':').ok_or_else(bad)?;
                            Ok((
                                y.trim().parse().map_err(|_| bad())?,
                                m.trim().parse().map_err(|_| bad())?,
                            ))
                        })
                        .collect::<Result<_>>()?,
                }
            }
            "default_median_months" => {
                self.default_median_months = value.parse().map_err(|_| bad())?
            }
            "rules" if value == "none" => self.planted_rules.clear(),
            "rule" => self.planted_rules.push(value.parse()?),
            "survivor_below_40mm" => {
                self.survivor_below_40mm = if value == "none" {
                    None
                } else {
                    Some(float()?)
                }
            }
            "missing_rate" => self.missing_rate = float()?,
            "malformed_line_rate" => self.malformed_line_rate = float()?,
            _ => return Err(Error::Config(format!("unknown generator setting `{key}`"))),
        }
        Ok(())
    }

    /// Defaults overridden by `key=value` lines. `#` starts a comment. A
    /// `rule` line replaces the default rules on first use and appends after.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = GeneratorConfig::default();
        let mut rules_seen = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Syntax {
                line: idx + 1,
                message: "expected key=value".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "rule" && !rules_seen {
                cfg.planted_rules.clear();
                rules_seen = true;
            }
            cfg.set(key, value).map_err(|e| Error::Syntax {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "seed={}\nn_records={}\nyear_range={}-{}\nsurvivor_fraction={}\ndefault_median_months={}\n",
            self.seed, self.n_records, self.first_year, self.last_year, self.survivor_fraction, self.default_median_months
        );
        let targets: Vec<String> = self
            .mst_targets
            .iter()
            .map(|(y, m)| format!("{y}:{m}"))
            .collect();
        out.push_str(&format!(
            "mst_targets={}\n",
            if targets.is_empty() {
                "none".to_string()
            } else {
                targets.join(",")
            }
        ));
        if self.planted_rules.is_empty() {
            out.push_str("rules=none\n");
        }
        for r in &self.planted_rules {
            out.push_str(&format!("rule={r}\n"));
        }
        out.push_str(&format!(
            "survivor_below_40mm={}\nmissing_rate={}\nmalformed_line_rate={}\n",
            self.survivor_below_40mm
                .map_or("none".to_string(), |f| f.to_string()),
            self.missing_rate,
            self.malformed_line_rate
        ));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let first = REGISTRY_MST[0].0;
        if self.first_year > self.last_year
            || self.first_year < first
            || self.last_year > LAST_COMPLETE_YEAR
        {
            return fail(format!(
                "year range {}-{} must lie within {first}-{LAST_COMPLETE_YEAR}",
                self.first_year, self.last_year
            ));
        }
        let fractions = [
            ("survivor_fraction", self.survivor_fraction),
            ("missing_rate", self.missing_rate),
            ("malformed_line_rate", self.malformed_line_rate),
            (
                "survivor_below_40mm",
                self.survivor_below_40mm.unwrap_or(0.0),
            ),
        ];
        for (name, f) in fractions {
            if !(0.0..=1.0).contains(&f) {
                return fail(format!("{name} {f} is outside [0, 1]"));
            }
        }
        if self.default_median_months == 0 || self.default_median_months >= 60 {
            return fail("default_median_months must lie in 1..60".into());
        }
        for (&y, &m) in &self.mst_targets {
            if m == 0 || m >= 60 || i64::from(m) > follow_up_limit_months(y, LAST_COMPLETE_YEAR) {
                return fail(format!(
                    "median target {m} for {y} is not a feasible non-survivor time"
                ));
            }
        }
        let p = self.survivor_fraction;
        let mut per_class = [0.0f64; 2];
        for (i, r) in self.planted_rules.iter().enumerate() {
            let Some(table) = marginal(&r.feature) else {
                return fail(format!(
                    "rule {i}: `{}` is not a generated categorical field",
                    r.feature
                ));
            };
            if r.feature == GRADE || r.feature == PRIMARY_SITE {
                return fail(format!("rule {i}: `{}` cannot carry a rule", r.feature));
            }
            if !table.iter().any(|(c, _)| *c == r.code) {
                return fail(format!(
                    "rule {i}: unknown code `{}` for `{}`",
                    r.code, r.feature
                ));
            }
            if !(0.5..=1.0).contains(&r.fidelity) {
                return fail(format!(
                    "rule {i}: fidelity {} must lie in [0.5, 1]",
                    r.fidelity
                ));
            }
            if !(r.coverage > 0.0 && r.coverage <= 1.0) {
                return fail(format!(
                    "rule {i}: coverage {} must lie in (0, 1]",
                    r.coverage
                ));
            }
            if self.planted_rules[..i]
                .iter()
                .any(|o| o.feature == r.feature && o.code == r.code)
            {
                return fail(format!(
                    "rule {i}: duplicate rule on {}={}",
                    r.feature, r.code
                ));
            }
            for (c, survived) in [(0, false), (1, true)] {
                let q = r.region_probability(survived, p);
                if q > 1.0 + 1e-12 {
                    return fail(format!(
                        "rule {i}: coverage {} is unreachable at this class balance",
                        r.coverage
                    ));
                }
                per_class[c] += q;
            }
        }
        if per_class.iter().any(|&s| s > 1.0 + 1e-12) {
            return fail("planted rules claim more than all records of a class".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub record_index: usize,
    pub survived: bool,
    pub planted_rule: Option<usize>,
    pub survival_months: u32,
    pub alive: bool,
    pub cause: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub rows: Vec<ManifestRow>,
    /// Median survival months of every generated record, per year.
    pub medians: BTreeMap<i32, Median>,
}

impl GroundTruth {
    pub fn survivors(&self) -> usize {
        self.rows.iter().filter(|r| r.survived).count()
    }
}

pub const MANIFEST_HEADER: &str =
    "record_index\ttrue_class\tplanted_rule\tsurvival_months\tvital\tcause\tyear\n";

pub fn write_manifest<W: Write>(mut out: W, truth: &GroundTruth) -> Result<()> {
    out.write_all(MANIFEST_HEADER.as_bytes())?;
    for r in &truth.rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.record_index,
            if r.survived {
                "survived"
            } else {
                "not_survived"
            },
            r.planted_rule.map_or("-".to_string(), |i| format!("r{i}")),
            r.survival_months,
            if r.alive { "alive" } else { "dead" },
            r.cause,
            r.year
        )?;
    }
    Ok(())
}

pub fn write_medians<W: Write>(mut out: W, truth: &GroundTruth) -> Result<()> {
    writeln!(out, "year\tmedian_months")?;
    for (y, m) in &truth.medians {
        writeln!(out, "{y}\t{}", m.value())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub lines: Vec<String>,
    pub truth: GroundTruth,
}

struct FieldSlot {
    offset: usize,
    width: usize,
}

struct Layout {
    schema: Schema,
    slots: HashMap<String, FieldSlot>,
}

impl Layout {
    fn lung() -> Self {
        let schema = parse_schema(LUNG_SCHEMA).expect("shipped schema parses");
        let slots = schema
            .fields()
            .iter()
            .map(|f| {
                (
                    f.name.clone(),
                    FieldSlot {
                        offset: f.offset,
                        width: f.width,
                    },
                )
            })
            .collect();
        Layout { schema, slots }
    }

    /// Writes `value` right-aligned; numbers are zero-padded by the caller.
    fn put(&self, line: &mut [u8], field: &str, value: &str) {
        let slot = &self.slots[field];
        debug_assert!(value.len() <= slot.width, "{field}={value}");
        let start = slot.offset + slot.width - value.len();
        line[slot.offset..start].fill(b' ');
        line[start..slot.offset + slot.width].copy_from_slice(value.as_bytes());
    }

    fn num(&self, line: &mut [u8], field: &str, value: u64) {
        let width = self.slots[field].width;
        self.put(line, field, &format!("{value:0width$}"));
    }
}

struct Sampler {
    codes: Vec<&'static str>,
    index: WeightedIndex<f64>,
}

impl Sampler {
    fn new(table: Table, exclude: &[&str]) -> Self {
        let kept: Vec<(&'static str, f64)> = table
            .iter()
            .copied()
            .filter(|(c, _)| !exclude.contains(c))
            .collect();
        Sampler {
            codes: kept.iter().map(|(c, _)| *c).collect(),
            index: WeightedIndex::new(kept.iter().map(|(_, w)| *w)).expect("positive weights"),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> &'static str {
        self.codes[self.index.sample(rng)]
    }
}

struct Plan<'a> {
    cfg: &'a GeneratorConfig,
    layout: Layout,
    years: Vec<i32>,
    year_index: WeightedIndex<f64>,
    /// Class-independent samplers, with every planted code removed from its field.
    samplers: Vec<(&'static str, Sampler)>,
    causes: Sampler,
    /// Per class: probability of each rule's region.
    regions: [Vec<f64>; 2],
    age: Normal<f64>,
}

struct Draft {
    line: Vec<u8>,
    row: ManifestRow,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a GeneratorConfig) -> Self {
        let years: Vec<i32> = (cfg.first_year..=cfg.last_year).collect();
        let weights = years.iter().map(|y| {
            REGISTRY_MST
                .iter()
                .find(|(t, _, _)| t == y)
                .expect("validated year")
                .2 as f64
        });
        let samplers = MARGINALS
            .iter()
            .map(|&(field, table)| {
                let planted: Vec<&str> = cfg
                    .planted_rules
                    .iter()
                    .filter(|r| r.feature == field)
                    .map(|r| r.code.as_str())
                    .collect();
                (field, Sampler::new(table, &planted))
            })
            .collect();
        let p = cfg.survivor_fraction;
        let regions = [false, true].map(|s| {
            cfg.planted_rules
                .iter()
                .map(|r| r.region_probability(s, p))
                .collect()
        });
        Plan {
            cfg,
            layout: Layout::lung(),
            year_index: WeightedIndex::new(weights).expect("positive weights"),
            years,
            samplers,
            causes: Sampler::new(LUNG_CAUSES, &[]),
            regions,
            age: Normal::new(67.0, 11.0).expect("valid normal"),
        }
    }

    fn record<R: Rng>(&self, rng: &mut R, index: usize) -> Draft {
        let cfg = self.cfg;
        let l = &self.layout;
        let mut line = vec![b' '; l.schema.record_length];

        let year = self.years[self.year_index.sample(rng)];
        let limit = follow_up_limit_months(year, LAST_COMPLETE_YEAR) as u32;
        let survived = limit >= 60 && rng.random::<f64>() < cfg.survivor_fraction;

        let (months, alive, cause) = if survived {
            (rng.random_range(60..=limit.min(180)), true, "0000")
        } else {
            let m = cfg
                .mst_targets
                .get(&year)
                .copied()
                .unwrap_or(cfg.default_median_months);
            let exp = Exp::new(std::f64::consts::LN_2 / m as f64).expect("positive rate");
            let t = exp.sample(rng).floor() as u32;
            (t.min(59).min(limit), false, self.causes.sample(rng))
        };

        // At most one planted region per record.
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut planted = None;
        for (i, q) in self.regions[survived as usize].iter().enumerate() {
            acc += q;
            if u < acc {
                planted = Some(i);
                break;
            }
        }

        let age = self.age.sample(rng).round().clamp(1.0, 106.0) as u64;
        l.num(&mut line, AGE, age);
        for (field, sampler) in &self.samplers {
            let value = match planted {
                Some(i) if cfg.planted_rules[i].feature == *field => {
                    cfg.planted_rules[i].code.as_str()
                }
                _ => sampler.sample(rng),
            };
            l.put(&mut line, field, value);
        }
        l.put(&mut line, BEHAVIOR_CODE, "3");
        let below = match cfg.survivor_below_40mm {
            Some(f) if survived => f,
            _ => BASE_BELOW_40MM,
        };
        let size = if rng.random::<f64>() < below {
            rng.random_range(1..40)
        } else {
            rng.random_range(40..=150)
        };
        l.num(&mut line, TUMOR_SIZE, size);
        l.num(&mut line, SURVIVAL_MONTHS, months as u64);
        l.put(&mut line, VITAL_STATUS, if alive { "1" } else { "4" });
        l.put(&mut line, DEATH_CAUSE, cause);
        l.num(&mut line, DIAGNOSIS_YEAR, year as u64);

        Draft {
            line,
            row: ManifestRow {
                record_index: index,
                survived,
                planted_rule: planted,
                survival_months: months,
                alive,
                cause: cause.to_string(),
                year,
            },
        }
    }

    /// Moves non-survivor times onto each year's target until the year's
    /// median equals it exactly.
    fn enforce_medians(&self, drafts: &mut [Draft]) {
        let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, d) in drafts.iter().enumerate() {
            by_year.entry(d.row.year).or_default().push(i);
        }
        for (year, idx) in by_year {
            let Some(&m) = self.cfg.mst_targets.get(&year) else {
                continue;
            };
            let n = idx.len();
            let lo = (n - 1) / 2;
            let hi = n / 2;
            let mut below: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| drafts[i].row.survival_months < m)
                .collect();
            let mut above: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&i| drafts[i].row.survival_months > m)
                .collect();
            // At most `lo` values may sit below the target and at most
            // `n - 1 - hi` above it.
            if below.len() > lo {
                below.sort_by_key(|&i| (std::cmp::Reverse(drafts[i].row.survival_months), i));
                for &i in &below[..below.len() - lo] {
                    self.set_months(&mut drafts[i], m);
                }
            }
            let max_above = n - 1 - hi;
            if above.len() > max_above {
                // Survivors all sit above any feasible target and stay put.
                let excess = above.len() - max_above;
                above.retain(|&i| !drafts[i].row.survived);
                above.sort_by_key(|&i| (drafts[i].row.survival_months, i));
                for &i in &above[..excess] {
                    self.set_months(&mut drafts[i], m);
                }
            }
        }
    }

    fn set_months(&self, d: &mut Draft, months: u32) {
        d.row.survival_months = months;
        self.layout.num(&mut d.line, SURVIVAL_MONTHS, months as u64);
    }
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Generated> {
    cfg.validate()?;
    let plan = Plan::new(cfg);
    let partitions = cfg.n_records.div_ceil(PARTITION_SIZE);
    let mut drafts: Vec<Draft> = (0..partitions)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let start = k * PARTITION_SIZE;
            let end = (start + PARTITION_SIZE).min(cfg.n_records);
            let plan = &plan;
            (start..end)
                .map(move |i| plan.record(&mut rng, i))
                .collect::<Vec<_>>()
        })
        .collect();
    plan.enforce_medians(&mut drafts);

    let mut per_year: BTreeMap<i32, Vec<i64>> = BTreeMap::new();
    for d in &drafts {
        per_year
            .entry(d.row.year)
            .or_default()
            .push(d.row.survival_months as i64);
    }
    let medians = per_year
        .into_iter()
        .map(|(y, v)| (y, median(&v).expect("non-empty year")))
        .collect();
    let (lines, rows) = drafts
        .into_iter()
        .map(|d| (String::from_utf8(d.line).expect("ascii"), d.row))
        .unzip();
    Ok(Generated {
        lines,
        truth: GroundTruth { rows, medians },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefectKind {
    /// The field's value was replaced by a missing-value sentinel.
    Missing { field: String },
    /// The line was cut to `length` characters.
    Truncated { length: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Defect {
    pub record_index: usize,
    pub kind: DefectKind,
}

pub fn write_defects<W: Write>(mut out: W, defects: &[Defect]) -> Result<()> {
    writeln!(out, "record_index\tdefect\tdetail")?;
    for d in defects {
        match &d.kind {
            DefectKind::Missing { field } => writeln!(out, "{}\tmissing\t{field}", d.record_index)?,
            DefectKind::Truncated { length } => {
                writeln!(out, "{}\ttruncated\t{length}", d.record_index)?
            }
        }
    }
    Ok(())
}

/// Replaces field values by missing sentinels at `missing_rate` and cuts
/// lines short at `malformed_line_rate`. Returns the new lines and a ledger
/// of every injected defect in line order.
pub fn inject_noise(lines: &[String], cfg: &GeneratorConfig) -> (Vec<String>, Vec<Defect>) {
    if cfg.missing_rate == 0.0 && cfg.malformed_line_rate == 0.0 {
        return (lines.to_vec(), Vec::new());
    }
    let layout = Layout::lung();
    let targets: Vec<(&str, usize, usize, String)> = layout
        .schema
        .fields()
        .iter()
        .filter(|f| !NOISE_EXEMPT.contains(&f.name.as_str()))
        .map(|f| {
            let filler = f
                .missing_sentinels
                .iter()
                .find(|s| s.len() <= f.width)
                .map_or_else(String::new, |s| s.clone());
            (
                f.name.as_str(),
                f.offset,
                f.width,
                format!("{filler:<w$}", w = f.width),
            )
        })
        .collect();
    let record_length = layout.schema.record_length;
    let chunks: Vec<(Vec<String>, Vec<Defect>)> = lines
        .par_chunks(PARTITION_SIZE)
        .enumerate()
        .map(|(k, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(NOISE_STREAM + k as u64);
            let mut out = Vec::with_capacity(chunk.len());
            let mut defects = Vec::new();
            for (j, line) in chunk.iter().enumerate() {
                let index = k * PARTITION_SIZE + j;
                let mut bytes = line.clone().into_bytes();
                for (field, offset, width, filler) in &targets {
                    if rng.random::<f64>() < cfg.missing_rate && bytes.len() >= offset + width {
                        bytes[*offset..offset + width].copy_from_slice(filler.as_bytes());
                        defects.push(Defect {
                            record_index: index,
                            kind: DefectKind::Missing {
                                field: field.to_string(),
                            },
                        });
                    }
                }
                if rng.random::<f64>() < cfg.malformed_line_rate {
                    let length = rng.random_range(0..record_length);
                    bytes.truncate(length);
                    defects.push(Defect {
                        record_index: index,
                        kind: DefectKind::Truncated { length },
                    });
                }
                out.push(String::from_utf8(bytes).expect("ascii"));
            }
            (out, defects)
        })
        .collect();
    let mut out = Vec::with_capacity(lines.len());
    let mut defects = Vec::new();
    for (l, d) in chunks {
        out.extend(l);
        defects.extend(d);
    }
    (out, defects)
}
