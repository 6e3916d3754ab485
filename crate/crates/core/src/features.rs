//! Classifier input space shared by both learners.

use crate::record::{PatientRecord, MISSING};

/// Features presented to the classifiers, in column order. Survival fields are
/// deliberately absent.
pub const FEATURE_NAMES: [&str; 12] = [
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
];

/// Class names in declared order; index 0 wins ties.
pub const CLASS_NAMES: [&str; 2] = ["not_survived", "survived"];

/// Tumor size bins in millimeters; the 40 mm edge is a bin boundary.
pub fn tumor_size_bin(mm: Option<u32>) -> &'static str {
    match mm {
        None => MISSING,
        Some(0..=9) => "0-9",
        Some(10..=19) => "10-19",
        Some(20..=29) => "20-29",
        Some(30..=39) => "30-39",
        Some(40..=59) => "40-59",
        Some(_) => "60+",
    }
}

/// Categorical feature vector for a record, aligned with [`FEATURE_NAMES`].
pub fn features_of(record: &PatientRecord) -> Vec<String> {
    FEATURE_NAMES
        .iter()
        .map(|&name| match name {
            "tumor_size" => tumor_size_bin(record.tumor_size_mm).to_string(),
            other => record
                .field_value(other)
                .expect("feature is a record field"),
        })
        .collect()
}

/// A training or test example: aligned categorical values plus a class index.
pub trait Example {
    fn values(&self) -> &[String];
    fn class(&self) -> usize;
}

impl<T: Example + ?Sized> Example for &T {
    fn values(&self) -> &[String] {
        (**self).values()
    }

    fn class(&self) -> usize {
        (**self).class()
    }
}

/// Plain example used by tests and ad-hoc datasets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub values: Vec<String>,
    pub class: usize,
}

impl Instance {
    pub fn new<S: Into<String>>(values: impl IntoIterator<Item = S>, class: usize) -> Self {
        Instance {
            values: values.into_iter().map(Into::into).collect(),
            class,
        }
    }
}

impl Example for Instance {
    fn values(&self) -> &[String] {
        &self.values
    }

    fn class(&self) -> usize {
        self.class
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tumor_bins() {
        assert_eq!(tumor_size_bin(Some(39)), "30-39");
        assert_eq!(tumor_size_bin(Some(40)), "40-59");
        assert_eq!(tumor_size_bin(Some(60)), "60+");
        assert_eq!(tumor_size_bin(None), "?");
    }

    #[test]
    fn no_survival_fields_among_features() {
        for leaked in [
            "survival_months",
            "vital_status",
            "death_cause",
            "diagnosis_year",
        ] {
            assert!(!FEATURE_NAMES.contains(&leaked));
        }
    }
}
