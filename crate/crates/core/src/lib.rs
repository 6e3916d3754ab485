//! Lung-cancer survivability mining: fixed-width registry parsing, four-phase
//! preprocessing, survival labeling, categorical naive Bayes, C4.5-style
//! decision trees and year-split evaluation, plus a seeded synthetic cohort
//! generator that stands in for restricted registry data.

pub mod codebook;
pub mod error;
pub mod eval;
pub mod features;
pub mod label;
pub mod nb;
pub mod preprocess;
pub mod record;
pub mod schema;
pub mod stats;
pub mod synth;
pub mod tree;

pub use codebook::CodeBook;
pub use error::{Error, Result};
pub use eval::{EvaluationReport, ExperimentSpec};
pub use features::{Example, Instance, CLASS_NAMES, FEATURE_NAMES};
pub use label::{LabelMode, LabeledInstance, LabelingConfig};
pub use nb::NaiveBayesModel;
pub use record::PatientRecord;
pub use schema::{Locator, RawRecord, Schema};
pub use synth::{GeneratorConfig, PlantedRule};
pub use tree::{DecisionTreeModel, Node, TreeParams};

/// Shipped lung-cohort record layout.
pub const LUNG_SCHEMA: &str = include_str!("../data/lung.schema");

/// Shipped code book for [`LUNG_SCHEMA`].
pub const LUNG_CODEBOOK: &str = include_str!("../data/codebook.txt");
