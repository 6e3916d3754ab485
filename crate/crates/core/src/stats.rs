//! Descriptive cohort statistics: per-year median survival, class profile
//! and field frequency profiles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::label::{algorithm1_flag, LabeledInstance, LabelingConfig, SurvivalFlag};
use crate::record::PatientRecord;

/// An exact median of integers, stored doubled so half values stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Median {
    twice: i64,
}

impl Median {
    pub fn from_integer(v: i64) -> Self {
        Median { twice: 2 * v }
    }

    pub fn value(&self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn is_integer(&self) -> bool {
        self.twice % 2 == 0
    }

    /// Rounded half-up to a whole number.
    pub fn rounded(&self) -> i64 {
        (self.twice + 1).div_euclid(2)
    }
}

impl fmt::Display for Median {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}.5", self.twice.div_euclid(2))
        }
    }
}

/// Middle element for odd counts, mean of the two middle elements otherwise.
pub fn median(values: &[i64]) -> Result<Median> {
    if values.is_empty() {
        return Err(Error::Empty("median of no values".into()));
    }
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, &mut upper, _) = v.select_nth_unstable(mid);
    if n % 2 == 1 {
        return Ok(Median::from_integer(upper));
    }
    let lower = *v[..mid].iter().max().expect("non-empty lower half");
    Ok(Median {
        twice: lower + upper,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearStats {
    pub year: i32,
    pub patient_count: usize,
    pub median_survival_months: Median,
}

/// Median survival time per diagnosis year, ascending. Records without a
/// survival time are not counted.
pub fn mst_by_year(records: &[PatientRecord]) -> Vec<YearStats> {
    let mut by_year: BTreeMap<i32, Vec<i64>> = BTreeMap::new();
    for r in records {
        if let Some(m) = r.survival_months {
            by_year.entry(r.diagnosis_year).or_default().push(m as i64);
        }
    }
    by_year
        .into_iter()
        .map(|(year, months)| YearStats {
            year,
            patient_count: months.len(),
            median_survival_months: median(&months).expect("non-empty group"),
        })
        .collect()
}

/// Years whose median dropped by at least `drop_fraction` relative to the
/// preceding entry. Only strict decreases count as drops.
pub fn detect_mst_discontinuity(stats: &[YearStats], drop_fraction: f64) -> BTreeSet<i32> {
    stats
        .windows(2)
        .filter(|w| {
            let prev = w[0].median_survival_months.value();
            let next = w[1].median_survival_months.value();
            next < prev && next <= (1.0 - drop_fraction) * prev
        })
        .map(|w| w[1].year)
        .collect()
}

/// `count / total` as a percentage rounded half-up to `decimals` places,
/// returned as an integer in units of 10^-decimals percent.
pub fn percent_units(count: u64, total: u64, decimals: u32) -> u64 {
    assert!(total > 0, "percentage of an empty total");
    let scale = 100u128 * 10u128.pow(decimals);
    ((count as u128 * scale * 2 + total as u128) / (2 * total as u128)) as u64
}

/// Two complementary percentages at `decimals` places whose sum is exactly
/// 100; any rounding excess is absorbed by the larger count.
pub fn complementary_percents(a: u64, b: u64, decimals: u32) -> (u64, u64) {
    let total = a + b;
    let full = 100 * 10u64.pow(decimals);
    let pa = percent_units(a, total, decimals);
    let pb = percent_units(b, total, decimals);
    let sum = pa + pb;
    if sum == full {
        return (pa, pb);
    }
    if a >= b {
        (full - pb, pb)
    } else {
        (pa, full - pa)
    }
}

/// Renders units produced by [`percent_units`] as a decimal string.
pub fn format_units(units: u64, decimals: u32) -> String {
    if decimals == 0 {
        return units.to_string();
    }
    let scale = 10u64.pow(decimals);
    format!(
        "{}.{:0width$}",
        units / scale,
        units % scale,
        width = decimals as usize
    )
}

/// Integer with thousands separators.
pub fn with_commas(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassProfile {
    pub survived: u64,
    pub not_survived: u64,
    /// Hundredths of a percent.
    pub survived_pct: u64,
    pub not_survived_pct: u64,
}

impl ClassProfile {
    pub fn total(&self) -> u64 {
        self.survived + self.not_survived
    }
}

pub fn class_profile_counts(survived: u64, not_survived: u64) -> ClassProfile {
    let (survived_pct, not_survived_pct) = if survived + not_survived == 0 {
        (0, 0)
    } else {
        complementary_percents(survived, not_survived, 2)
    };
    ClassProfile {
        survived,
        not_survived,
        survived_pct,
        not_survived_pct,
    }
}

pub fn class_profile(labeled: &[LabeledInstance]) -> ClassProfile {
    let survived = labeled.iter().filter(|i| i.survived).count() as u64;
    class_profile_counts(survived, labeled.len() as u64 - survived)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    pub field: String,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
    /// For the tumor-size field: share of five-year survivors with a known
    /// size below 40 mm.
    pub survivors_below_40mm: Option<f64>,
}

impl FrequencyProfile {
    pub fn fraction(&self, value: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(value).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn fractions(&self) -> BTreeMap<String, f64> {
        self.counts
            .keys()
            .map(|k| (k.clone(), self.fraction(k)))
            .collect()
    }
}

/// Value counts of one record field, missing values included.
pub fn frequency_profile(
    records: &[PatientRecord],
    field: &str,
    cfg: &LabelingConfig,
) -> Result<FrequencyProfile> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    if let Some(first) = records.first() {
        first
            .field_value(field)
            .ok_or_else(|| Error::UnknownField(field.to_string()))?;
    } else if PatientRecord::field_names().iter().all(|f| *f != field) {
        return Err(Error::UnknownField(field.to_string()));
    }
    for r in records {
        *counts
            .entry(r.field_value(field).expect("checked field"))
            .or_default() += 1;
    }
    let survivors_below_40mm = matches!(field, "tumor_size" | "tumor_size_mm")
        .then(|| {
            let sizes: Vec<u32> = records
                .iter()
                .filter(|r| algorithm1_flag(r, cfg) == SurvivalFlag::Survived)
                .filter_map(|r| r.tumor_size_mm)
                .collect();
            (!sizes.is_empty())
                .then(|| sizes.iter().filter(|&&s| s < 40).count() as f64 / sizes.len() as f64)
        })
        .flatten();
    Ok(FrequencyProfile {
        field: field.to_string(),
        counts,
        total: records.len() as u64,
        survivors_below_40mm,
    })
}

/// Output layout for report tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Aligned table followed by a `key<TAB>value` block.
    Text,
    Tsv,
}

pub fn render_class_profile(p: &ClassProfile, period: &str, format: ReportFormat) -> String {
    let rows = [
        (
            period,
            "Survived",
            p.survived,
            format_units(p.survived_pct, 2),
        ),
        (
            "",
            "Not Survived",
            p.not_survived,
            format_units(p.not_survived_pct, 2),
        ),
    ];
    let total_pct = if p.total() == 0 { "0.00" } else { "100.00" };
    match format {
        ReportFormat::Tsv => {
            let mut out = String::from("period\tstatus\tpatients\tpercent\n");
            for (per, status, n, pct) in &rows {
                out.push_str(&format!("{per}\t{status}\t{n}\t{pct}\n"));
            }
            out.push_str(&format!("total\t\t{}\t{total_pct}\n", p.total()));
            out
        }
        ReportFormat::Text => {
            let mut out = format!(
                "{:<10} {:<13} {:>18} {:>8}\n",
                "Period", "Status", "Number of Patients", "%"
            );
            for (per, status, n, pct) in &rows {
                out.push_str(&format!(
                    "{:<10} {:<13} {:>18} {:>7}%\n",
                    per,
                    status,
                    with_commas(*n),
                    pct
                ));
            }
            out.push_str(&format!(
                "{:<10} {:<13} {:>18} {:>7}%\n\n",
                "Total",
                "",
                with_commas(p.total()),
                total_pct
            ));
            out.push_str(&format!("survived\t{}\n", p.survived));
            out.push_str(&format!("not_survived\t{}\n", p.not_survived));
            out.push_str(&format!(
                "survived_pct\t{}\n",
                format_units(p.survived_pct, 2)
            ));
            out.push_str(&format!(
                "not_survived_pct\t{}\n",
                format_units(p.not_survived_pct, 2)
            ));
            out
        }
    }
}

pub fn render_mst_table(
    stats: &[YearStats],
    flagged: &BTreeSet<i32>,
    format: ReportFormat,
) -> String {
    match format {
        ReportFormat::Tsv => {
            let mut out = String::from("year\tmedian_survival_months\tpatients\tdiscontinuity\n");
            for s in stats {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    s.year,
                    s.median_survival_months,
                    s.patient_count,
                    flagged.contains(&s.year) as u8
                ));
            }
            out
        }
        ReportFormat::Text => {
            let mut out = format!(
                "{:<6} {:>24} {:>18}\n",
                "Year", "Median Survival (months)", "Number of Patients"
            );
            for s in stats {
                let mark = if flagged.contains(&s.year) { " *" } else { "" };
                out.push_str(&format!(
                    "{:<6} {:>24} {:>18}{}\n",
                    s.year,
                    s.median_survival_months.rounded(),
                    with_commas(s.patient_count as u64),
                    mark
                ));
            }
            out.push('\n');
            for s in stats {
                out.push_str(&format!("mst.{}\t{}\n", s.year, s.median_survival_months));
            }
            let years: Vec<String> = flagged.iter().map(i32::to_string).collect();
            out.push_str(&format!("discontinuities\t{}\n", years.join(",")));
            out
        }
    }
}

pub fn render_frequency_profile(p: &FrequencyProfile, format: ReportFormat) -> String {
    let mut out = String::new();
    if format == ReportFormat::Text {
        out.push_str(&format!("# {}\n", p.field));
    }
    for (value, n) in &p.counts {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\n",
            p.field,
            value,
            n,
            p.fraction(value)
        ));
    }
    if let Some(f) = p.survivors_below_40mm {
        out.push_str(&format!("{}\tsurvivors_below_40mm\t-\t{:.4}\n", p.field, f));
    }
    out
}

impl PatientRecord {
    /// Names accepted by [`PatientRecord::field_value`].
    pub fn field_names() -> &'static [&'static str] {
        &crate::record::RECORD_COLUMNS[2..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_median(values: &[i64]) -> f64 {
        let mut v = values.to_vec();
        v.sort_unstable();
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[1, 2, 3]).unwrap().value(), 2.0);
        assert_eq!(median(&[4, 8]).unwrap().value(), 6.0);
        assert_eq!(median(&[4, 7]).unwrap().to_string(), "5.5");
        assert_eq!(median(&[4, 7]).unwrap().rounded(), 6);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn median_matches_sort_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let values: Vec<i64> = (0..10_001).map(|_| rng.random_range(0..240)).collect();
        assert_eq!(median(&values).unwrap().value(), brute_median(&values));
        assert_eq!(
            median(&values[..10_000]).unwrap().value(),
            brute_median(&values[..10_000])
        );
    }

    fn series(values: &[i64]) -> Vec<YearStats> {
        values
            .iter()
            .enumerate()
            .map(|(i, &m)| YearStats {
                year: 1988 + i as i32,
                patient_count: 1,
                median_survival_months: Median::from_integer(m),
            })
            .collect()
    }

    #[test]
    fn discontinuity() {
        assert!(detect_mst_discontinuity(&series(&[7, 7, 7, 7]), 0.25).is_empty());
        assert!(detect_mst_discontinuity(&series(&[7, 7, 7, 7]), 0.0).is_empty());
        let table = [7, 7, 7, 7, 7, 7, 7, 8, 8, 8, 8, 9, 6, 6, 5, 4];
        let flagged = detect_mst_discontinuity(&series(&table), 0.25);
        assert_eq!(flagged.into_iter().collect::<Vec<_>>(), vec![2000]);
        let all = detect_mst_discontinuity(&series(&table), 0.0);
        assert_eq!(all.into_iter().collect::<Vec<_>>(), vec![2000, 2002, 2003]);
    }

    #[test]
    fn class_profiles() {
        let p = class_profile_counts(14_368, 160_123);
        assert_eq!(format_units(p.survived_pct, 2), "8.23");
        assert_eq!(format_units(p.not_survived_pct, 2), "91.77");
        let p = class_profile_counts(1, 1);
        assert_eq!((p.survived_pct, p.not_survived_pct), (5000, 5000));
        let p = class_profile_counts(1, 2);
        assert_eq!(format_units(p.survived_pct, 2), "33.33");
        assert_eq!(format_units(p.not_survived_pct, 2), "66.67");
        assert_eq!(
            complementary_percents(1, 6, 2).0 + complementary_percents(1, 6, 2).1,
            10_000
        );
        // Both halves round up (0.5 each): the larger class gives back the excess.
        assert_eq!(complementary_percents(1, 19_999, 2), (1, 9_999));
    }

    #[test]
    fn text_helpers() {
        assert_eq!(with_commas(481_432), "481,432");
        assert_eq!(with_commas(999), "999");
        assert_eq!(format_units(percent_units(14_577, 15_780, 4), 4), "92.3764");
        assert_eq!(format_units(percent_units(14_577, 15_780, 2), 2), "92.38");
    }

    #[test]
    fn single_value_profile_and_unknown_field() {
        let cfg = LabelingConfig::default();
        let r = crate::label::tests_support::sample_record();
        let recs = vec![r.clone(), r];
        let p = frequency_profile(&recs, "race", &cfg).unwrap();
        assert_eq!(p.fraction("White"), 1.0);
        assert!(frequency_profile(&recs, "shoe_size", &cfg).is_err());
        assert!(frequency_profile(&[], "shoe_size", &cfg).is_err());
    }

    proptest! {
        #[test]
        fn median_permutation_invariant(mut v in prop::collection::vec(-50i64..500, 1..60)) {
            let m = median(&v).unwrap();
            prop_assert_eq!(m.value(), brute_median(&v));
            v.reverse();
            prop_assert_eq!(median(&v).unwrap(), m);
            v.sort();
            prop_assert_eq!(median(&v).unwrap(), m);
        }

        #[test]
        fn complementary_sum(a in 0u64..1_000_000, b in 0u64..1_000_000) {
            prop_assume!(a + b > 0);
            let (pa, pb) = complementary_percents(a, b, 2);
            prop_assert_eq!(pa + pb, 10_000);
            let (qa, qb) = complementary_percents(a, b, 4);
            prop_assert_eq!(qa + qb, 1_000_000);
        }
    }
}
