use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use survmine::eval::{
    evaluate, metrics_tsv, render_comparison, run_experiment, ClassifierKind, ExperimentParams,
};
use survmine::label::{label_dataset, read_labeled_csv, write_labeled_csv, LabelingStats};
use survmine::preprocess::{
    run_pipeline, write_issue_log, Dataset, PreprocessConfig, PreprocessOutput, LAST_COMPLETE_YEAR,
    STUDY_LAST_YEAR,
};
use survmine::record::{read_records, write_records};
use survmine::schema::{parse_file, parse_schema, ParseLog};
use survmine::stats::{
    class_profile, detect_mst_discontinuity, frequency_profile, mst_by_year, render_class_profile,
    render_frequency_profile, render_mst_table, ReportFormat,
};
use survmine::synth::{generate, inject_noise, write_defects, write_manifest, write_medians};
use survmine::{
    CodeBook, DecisionTreeModel, Error, ExperimentSpec, GeneratorConfig, LabelMode,
    LabeledInstance, LabelingConfig, NaiveBayesModel, PatientRecord, Schema, CLASS_NAMES,
    FEATURE_NAMES, LUNG_CODEBOOK, LUNG_SCHEMA,
};

use crate::settings::{require_files, ConfigFile, Switch};
use crate::staging::Staging;
use crate::{
    EvaluateArgs, ExperimentArgs, LabelArgs, LabelOpts, ModelOpts, PrepOpts, PreprocessArgs,
    StatsArgs, SynthArgs, TrainArgs,
};

/// Fields profiled by `stats`.
const PROFILED_FIELDS: [&str; 11] = [
    "age_bin",
    "race",
    "marital_status",
    "histologic_type",
    "tumor_size",
    "extension",
    "lymph_nodes",
    "surgery_site",
    "radiation",
    "stage",
    "radiation_sequence",
];

const RUN_KEYS: [&str; 14] = [
    "schema",
    "codebook",
    "in",
    "out",
    "study_window",
    "ts_months",
    "mode",
    "alpha",
    "confidence",
    "min_leaf",
    "spec",
    "format",
    "drop_fraction",
    "labeled",
];

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    Ok(ConfigFile::load(path, &RUN_KEYS)?)
}

fn out_dir(flag: Option<PathBuf>, cfg: &ConfigFile) -> Result<PathBuf> {
    cfg.pick(flag, "out")?
        .ok_or_else(|| Error::Config("no output directory given (--out)".into()).into())
}

fn inputs(flag: &[PathBuf], cfg: &ConfigFile) -> Result<Vec<PathBuf>> {
    let paths = cfg.paths(flag, "in");
    if paths.is_empty() {
        return Err(Error::Config("no input files given (--in)".into()).into());
    }
    require_files(&paths)?;
    Ok(paths)
}

fn single_input(flag: &[PathBuf], cfg: &ConfigFile) -> Result<PathBuf> {
    let mut paths = inputs(flag, cfg)?;
    if paths.len() != 1 {
        return Err(Error::Config("exactly one input file expected".into()).into());
    }
    Ok(paths.remove(0))
}

fn study_window(flag: Option<Switch>, cfg: &ConfigFile) -> Result<bool> {
    Ok(cfg.pick(flag, "study_window")?.unwrap_or(Switch(true)).0)
}

fn labeling(opts: &LabelOpts, cfg: &ConfigFile) -> Result<(LabelingConfig, LabelMode)> {
    let window = study_window(opts.study_window, cfg)?;
    let mut lc = LabelingConfig::for_last_year(if window {
        STUDY_LAST_YEAR
    } else {
        LAST_COMPLETE_YEAR
    });
    if let Some(ts) = cfg.pick(opts.ts_months, "ts_months")? {
        lc.short_term_threshold_months = ts;
    }
    lc.validate()?;
    let mode = match opts
        .mode
        .clone()
        .or_else(|| cfg.get("mode").map(str::to_string))
    {
        Some(m) => m.parse().map_err(Error::Config)?,
        None => LabelMode::FiveYear,
    };
    Ok((lc, mode))
}

fn model_params(opts: &ModelOpts, cfg: &ConfigFile) -> Result<ExperimentParams> {
    let mut params = ExperimentParams::default();
    if let Some(a) = cfg.pick(opts.alpha, "alpha")? {
        params.alpha = a;
    }
    if let Some(c) = cfg.pick(opts.confidence, "confidence")? {
        params.tree.pruning_confidence = c;
    }
    if let Some(m) = cfg.pick(opts.min_leaf, "min_leaf")? {
        params.tree.min_leaf_instances = m;
    }
    if !(params.alpha >= 0.0 && params.alpha.is_finite()) {
        return Err(Error::Config(format!(
            "alpha must be a finite value >= 0, got {}",
            params.alpha
        ))
        .into());
    }
    params.tree.validate()?;
    Ok(params)
}

fn format(flag: Option<&str>, cfg: &ConfigFile) -> Result<ReportFormat> {
    match flag.or(cfg.get("format")).unwrap_or("text") {
        "text" | "txt" => Ok(ReportFormat::Text),
        "tsv" => Ok(ReportFormat::Tsv),
        other => Err(Error::Config(format!("unknown format `{other}`")).into()),
    }
}

fn extension(f: ReportFormat) -> &'static str {
    match f {
        ReportFormat::Text => "txt",
        ReportFormat::Tsv => "tsv",
    }
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", p.display())))?;
            GeneratorConfig::parse(&text)?
        }
        None => GeneratorConfig::default(),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(n) = args.records {
        cfg.n_records = n;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let generated = generate(&cfg)?;
    let (lines, defects) = inject_noise(&generated.lines, &cfg);
    let mut staging = Staging::new(&args.out)?;
    let mut w = staging.create("cohort.dat")?;
    for line in &lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    write_manifest(staging.create("manifest.tsv")?, &generated.truth)?;
    write_medians(staging.create("medians.tsv")?, &generated.truth)?;
    write_defects(staging.create("defects.tsv")?, &defects)?;
    staging.write("generator.conf", cfg.to_text())?;
    staging.commit()
}

fn load_layout(opts: &PrepOpts, cfg: &ConfigFile) -> Result<(Schema, CodeBook)> {
    let schema_path: Option<PathBuf> = cfg.pick(opts.schema.clone(), "schema")?;
    let codebook_path: Option<PathBuf> = cfg.pick(opts.codebook.clone(), "codebook")?;
    let read = |p: &Option<PathBuf>, fallback: &str| -> Result<String> {
        match p {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read `{}`: {e}", p.display())).into()),
            None => Ok(fallback.to_string()),
        }
    };
    let schema = parse_schema(&read(&schema_path, LUNG_SCHEMA)?).context("schema")?;
    let codebook = CodeBook::parse(&read(&codebook_path, LUNG_CODEBOOK)?).context("code book")?;
    Ok((schema, codebook))
}

struct Prepared {
    output: PreprocessOutput,
    logs: Vec<ParseLog>,
}

fn run_preprocess(opts: &PrepOpts, input: &[PathBuf], cfg: &ConfigFile) -> Result<Prepared> {
    let (schema, codebook) = load_layout(opts, cfg)?;
    let files = inputs(input, cfg)?;
    let mut datasets = Vec::new();
    let mut logs = Vec::new();
    for path in &files {
        let file = File::open(path).with_context(|| format!("cannot open `{}`", path.display()))?;
        let (records, log) =
            parse_file(BufReader::new(file), &schema, &path.display().to_string())?;
        datasets.push(Dataset {
            schema: schema.clone(),
            records,
        });
        logs.push(log);
    }
    let pre = PreprocessConfig {
        study_window: study_window(opts.study_window, cfg)?,
        ..PreprocessConfig::default()
    };
    Ok(Prepared {
        output: run_pipeline(&datasets, &codebook, &pre),
        logs,
    })
}

fn stage_preprocess(staging: &mut Staging, prepared: &Prepared) -> Result<()> {
    let mut w = staging.create("parse_log.tsv")?;
    writeln!(w, "file\tline\treason")?;
    for log in &prepared.logs {
        for s in &log.skipped {
            writeln!(w, "{}\t{}\t{}", log.source_file, s.line, s.reason)?;
        }
    }
    w.flush()?;
    let mut w = staging.create("phase_reports.tsv")?;
    writeln!(w, "phase\trecords_in\trecords_out\tdropped\tissues")?;
    for r in &prepared.output.reports {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.phase,
            r.records_in,
            r.records_out,
            r.dropped(),
            r.issues.len()
        )?;
    }
    w.flush()?;
    let mut w = staging.create("issues.tsv")?;
    writeln!(w, "file\tline\tfield\tissue\tdetail")?;
    write_issue_log(&mut w, prepared.output.issues())?;
    w.flush()?;
    Ok(())
}

pub fn preprocess(args: PreprocessArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let out = out_dir(args.out, &cfg)?;
    let prepared = run_preprocess(&args.prep, &args.input, &cfg)?;
    let mut staging = Staging::new(&out)?;
    stage_preprocess(&mut staging, &prepared)?;
    let mut w = staging.create("records.tsv")?;
    write_records(&mut w, &prepared.output.records)?;
    w.flush()?;
    staging.commit()
}

fn load_records(path: &Path) -> Result<Vec<PatientRecord>> {
    let file = File::open(path).with_context(|| format!("cannot open `{}`", path.display()))?;
    read_records(BufReader::new(file)).with_context(|| format!("reading `{}`", path.display()))
}

fn load_labeled(path: &Path) -> Result<Vec<LabeledInstance>> {
    let file = File::open(path).with_context(|| format!("cannot open `{}`", path.display()))?;
    read_labeled_csv(BufReader::new(file), &path.display().to_string())
        .with_context(|| format!("reading `{}`", path.display()))
}

fn stage_labels(
    staging: &mut Staging,
    labeled: &[LabeledInstance],
    stats: &LabelingStats,
) -> Result<()> {
    let mut w = staging.create("labeled.csv")?;
    write_labeled_csv(&mut w, labeled)?;
    w.flush()?;
    staging.write("label_stats.tsv", stats.to_text())
}

pub fn label(args: LabelArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let out = out_dir(args.out, &cfg)?;
    let (lc, mode) = labeling(&args.label, &cfg)?;
    let records = load_records(&single_input(&args.input, &cfg)?)?;
    let (labeled, stats) = label_dataset(&records, &lc, mode);
    let mut staging = Staging::new(&out)?;
    stage_labels(&mut staging, &labeled, &stats)?;
    staging.commit()
}

fn period(labeled: &[LabeledInstance]) -> String {
    let years: BTreeSet<i32> = labeled.iter().map(|i| i.diagnosis_year).collect();
    match (years.first(), years.last()) {
        (Some(a), Some(b)) => format!("{a}-{b}"),
        _ => "-".into(),
    }
}

fn stage_stats(
    staging: &mut Staging,
    records: &[PatientRecord],
    labeled: &[LabeledInstance],
    lc: &LabelingConfig,
    fmt: ReportFormat,
    drop_fraction: f64,
) -> Result<()> {
    let ext = extension(fmt);
    let profile = class_profile(labeled);
    staging.write(
        &format!("class_profile.{ext}"),
        render_class_profile(&profile, &period(labeled), fmt),
    )?;
    let mst = mst_by_year(records);
    let flagged = detect_mst_discontinuity(&mst, drop_fraction);
    staging.write(&format!("mst.{ext}"), render_mst_table(&mst, &flagged, fmt))?;
    let mut freq = String::from("field\tvalue\tcount\tfraction\n");
    let mut below = None;
    for field in PROFILED_FIELDS {
        let p = frequency_profile(records, field, lc)?;
        below = below.or(p.survivors_below_40mm);
        freq.push_str(&render_frequency_profile(&p, ReportFormat::Tsv));
    }
    if let Some(b) = below {
        freq.push_str(&format!("#\tsurvivors_below_40mm\t\t{b:.4}\n"));
    }
    staging.write("frequencies.tsv", freq)
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let out = out_dir(args.out, &cfg)?;
    let (lc, mode) = labeling(&args.label, &cfg)?;
    let fmt = format(args.format.as_deref(), &cfg)?;
    let drop_fraction = cfg
        .pick(args.drop_fraction, "drop_fraction")?
        .unwrap_or(0.25);
    if !(0.0..1.0).contains(&drop_fraction) {
        return Err(Error::Config(format!("drop fraction {drop_fraction} outside [0, 1)")).into());
    }
    let records = load_records(&single_input(&args.input, &cfg)?)?;
    let labeled = match cfg.pick(args.labeled, "labeled")? {
        Some(p) => {
            require_files(std::slice::from_ref(&p))?;
            load_labeled(&p)?
        }
        None => label_dataset(&records, &lc, mode).0,
    };
    let mut staging = Staging::new(&out)?;
    stage_stats(&mut staging, &records, &labeled, &lc, fmt, drop_fraction)?;
    staging.commit()
}

fn parse_years(s: &str) -> Result<(i32, i32)> {
    let bad = || Error::Config(format!("bad year range `{s}`, expected first-last"));
    let (a, b) = s.split_once('-').ok_or_else(bad)?;
    let (a, b) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if a > b {
        return Err(bad().into());
    }
    Ok((a, b))
}

fn model_file(name: &str, kind: ClassifierKind) -> String {
    format!("models/{name}_{kind}.model")
}

pub fn train(args: TrainArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let out = out_dir(args.out, &cfg)?;
    let params = model_params(&args.model, &cfg)?;
    let kind: ClassifierKind = args.classifier.parse()?;
    let mut labeled = load_labeled(&single_input(&args.input, &cfg)?)?;
    if let Some(range) = &args.years {
        let (a, b) = parse_years(range)?;
        labeled.retain(|i| (a..=b).contains(&i.diagnosis_year));
    }
    if labeled.is_empty() {
        return Err(Error::EmptyPartition("no labeled instances to train on".into()).into());
    }
    let text = match kind {
        ClassifierKind::NaiveBayes => {
            NaiveBayesModel::train(&FEATURE_NAMES, &CLASS_NAMES, &labeled, params.alpha)?.to_text()
        }
        ClassifierKind::DecisionTree => {
            DecisionTreeModel::train(&FEATURE_NAMES, &CLASS_NAMES, &labeled, &params.tree)?
                .to_text()
        }
    };
    let mut staging = Staging::new(&out)?;
    staging.write(&format!("{kind}.model"), text)?;
    staging.commit()
}

enum Model {
    NaiveBayes(NaiveBayesModel),
    Tree(DecisionTreeModel),
}

fn load_model(path: &Path) -> Result<Model> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))?;
    let model = if text.starts_with("naive-bayes") {
        Model::NaiveBayes(NaiveBayesModel::from_text(&text)?)
    } else {
        Model::Tree(DecisionTreeModel::from_text(&text)?)
    };
    Ok(model)
}

pub fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let out = out_dir(args.out, &cfg)?;
    require_files(std::slice::from_ref(&args.model))?;
    let model = load_model(&args.model)?;
    let mut labeled = load_labeled(&single_input(&args.input, &cfg)?)?;
    if let Some(y) = args.year {
        labeled.retain(|i| i.diagnosis_year == y);
    }
    if labeled.is_empty() {
        return Err(Error::EmptyPartition("no labeled instances to evaluate".into()).into());
    }
    let name = args.name.as_deref().unwrap_or("evaluation");
    let report = match &model {
        Model::NaiveBayes(m) => evaluate(m, &labeled, name, ClassifierKind::NaiveBayes.as_str())?,
        Model::Tree(m) => evaluate(m, &labeled, name, ClassifierKind::DecisionTree.as_str())?,
    };
    let mut staging = Staging::new(&out)?;
    staging.write(
        &format!("{name}_{}.txt", report.classifier),
        report.render(),
    )?;
    staging.write("metrics.tsv", metrics_tsv([&report]))?;
    staging.commit()
}

pub fn experiment(args: ExperimentArgs, label_opts: LabelOpts) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let out = out_dir(args.out, &cfg)?;
    let (lc, mode) = labeling(&label_opts, &cfg)?;
    let params = model_params(&args.model, &cfg)?;
    let mut specs: Vec<ExperimentSpec> = if args.spec.is_empty() {
        cfg.all("spec")
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?
    } else {
        args.spec
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?
    };
    if specs.is_empty() {
        specs = ExperimentSpec::shipped();
    }
    let names: BTreeSet<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    if names.len() != specs.len() {
        return Err(Error::Config("experiment names must be unique".into()).into());
    }

    let prepared = run_preprocess(&args.prep, &args.input, &cfg)?;
    let records = &prepared.output.records;
    let (labeled, label_stats) = label_dataset(records, &lc, mode);
    let results = specs
        .iter()
        .map(|s| run_experiment(s, &labeled, &params))
        .collect::<Result<Vec<_>, _>>()?;

    let mut staging = Staging::new(&out)?;
    stage_preprocess(&mut staging, &prepared)?;
    stage_labels(&mut staging, &labeled, &label_stats)?;
    stage_stats(
        &mut staging,
        records,
        &labeled,
        &lc,
        ReportFormat::Tsv,
        0.25,
    )?;
    let mut rows = Vec::new();
    for r in &results {
        if let Some((m, report)) = &r.naive_bayes {
            staging.write(
                &model_file(&r.spec.name, ClassifierKind::NaiveBayes),
                m.to_text(),
            )?;
            staging.write(
                &format!("reports/{}_{}.txt", r.spec.name, report.classifier),
                report.render(),
            )?;
        }
        if let Some((m, report)) = &r.tree {
            staging.write(
                &model_file(&r.spec.name, ClassifierKind::DecisionTree),
                m.to_text(),
            )?;
            staging.write(
                &format!("reports/{}_{}.txt", r.spec.name, report.classifier),
                report.render(),
            )?;
        }
        rows.push(r.comparison_row());
    }
    staging.write(
        "metrics.tsv",
        metrics_tsv(results.iter().flat_map(|r| r.reports())),
    )?;
    staging.write("table9.txt", render_comparison(&rows))?;
    let spec_text: String = specs.iter().map(|s| format!("{s}\n")).collect();
    staging.write("experiments.txt", spec_text)?;
    staging.commit()
}
