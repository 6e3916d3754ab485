//! Fixtures shared by the benchmarks.

use survmine::label::label_dataset;
use survmine::preprocess::{run_pipeline, Dataset, PreprocessConfig};
use survmine::schema::{parse_file, parse_schema};
use survmine::synth::generate;
use survmine::{
    CodeBook, GeneratorConfig, LabelMode, LabeledInstance, LabelingConfig, PatientRecord, Schema,
    LUNG_CODEBOOK, LUNG_SCHEMA,
};

pub struct Cohort {
    pub schema: Schema,
    pub codebook: CodeBook,
    pub text: String,
    pub records: Vec<PatientRecord>,
    pub labeled: Vec<LabeledInstance>,
}

/// A generated cohort in every intermediate form.
pub fn cohort(n_records: usize, seed: u64) -> Cohort {
    let cfg = GeneratorConfig {
        n_records,
        seed,
        ..GeneratorConfig::default()
    };
    let schema = parse_schema(LUNG_SCHEMA).expect("shipped schema");
    let codebook = CodeBook::parse(LUNG_CODEBOOK).expect("shipped code book");
    let text = generate(&cfg).expect("valid config").lines.join("\n");
    let (raw, _) = parse_file(text.as_bytes(), &schema, "bench.dat").expect("in-memory read");
    let out = run_pipeline(
        &[Dataset {
            schema: schema.clone(),
            records: raw,
        }],
        &codebook,
        &PreprocessConfig::default(),
    );
    let (labeled, _) = label_dataset(
        &out.records,
        &LabelingConfig::default(),
        LabelMode::FiveYear,
    );
    Cohort {
        schema,
        codebook,
        text,
        records: out.records,
        labeled,
    }
}
