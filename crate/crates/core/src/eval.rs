//! Evaluation metrics and year-split experiments.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{Example, CLASS_NAMES, FEATURE_NAMES};
use crate::label::LabeledInstance;
use crate::nb::{argmax, NaiveBayesModel};
use crate::stats::{complementary_percents, format_units, with_commas};
use crate::tree::{DecisionTreeModel, TreeParams};

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        assert!(
            rows.iter().all(|r| r.len() == rows.len()),
            "matrix must be square"
        );
        ConfusionMatrix { counts: rows }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes()).map(|c| self.counts[c][c]).sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    /// `None` when nothing was predicted as `c`.
    pub fn precision(&self, c: usize) -> Option<f64> {
        let d = self.col_sum(c);
        (d > 0).then(|| self.counts[c][c] as f64 / d as f64)
    }

    /// `None` when class `c` never occurs.
    pub fn recall(&self, c: usize) -> Option<f64> {
        let d = self.row_sum(c);
        (d > 0).then(|| self.counts[c][c] as f64 / d as f64)
    }
}

pub fn confusion(
    predictions: &[usize],
    truths: &[usize],
    classes: usize,
) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch(predictions.len(), truths.len()));
    }
    let mut m = ConfusionMatrix::new(classes);
    for (&p, &t) in predictions.iter().zip(truths) {
        if p >= classes || t >= classes {
            return Err(Error::Config(format!(
                "class index out of range for {classes} classes"
            )));
        }
        m.record(t, p);
    }
    Ok(m)
}

/// Correct count and percentage in hundredths of a percent.
pub fn cci(m: &ConfusionMatrix) -> Result<(u64, u64)> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix".into()));
    }
    let correct = m.correct();
    Ok((
        correct,
        complementary_percents(correct, total - correct, 2).0,
    ))
}

/// Cohen's kappa. When chance agreement is total, returns 1 for perfect
/// observed agreement and 0 otherwise.
pub fn kappa(m: &ConfusionMatrix) -> Result<f64> {
    let n = m.total() as u128;
    if n == 0 {
        return Err(Error::Empty("confusion matrix".into()));
    }
    // Scaled by n^2 so the only rounding is the final division.
    let chance: u128 = (0..m.classes())
        .map(|c| m.row_sum(c) as u128 * m.col_sum(c) as u128)
        .sum();
    let observed = n * m.correct() as u128;
    let denom = n * n - chance;
    if denom == 0 {
        return Ok(if observed == n * n { 1.0 } else { 0.0 });
    }
    Ok((observed as i128 - chance as i128) as f64 / denom as f64)
}

/// Root-mean-square error over all N * K probability entries against
/// one-hot truths.
pub fn rmse(predictions: &[Vec<f64>], truths: &[usize]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(Error::Empty("rmse of no predictions".into()));
    }
    let k = predictions[0].len();
    let mut sum = 0.0;
    for (row, (p, &t)) in predictions.iter().zip(truths).enumerate() {
        if p.len() != k || t >= k {
            return Err(Error::Distribution {
                row,
                detail: format!("expected {k} classes"),
            });
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 || p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Distribution {
                row,
                detail: format!("entries sum to {s}"),
            });
        }
        for (c, &x) in p.iter().enumerate() {
            let y = if c == t { 1.0 } else { 0.0 };
            sum += (x - y) * (x - y);
        }
    }
    Ok((sum / (predictions.len() * k) as f64).sqrt())
}

/// Anything producing a class distribution from a feature vector.
pub trait Classifier: Sync {
    fn distribution(&self, values: &[String]) -> Vec<f64>;
}

impl Classifier for NaiveBayesModel {
    fn distribution(&self, values: &[String]) -> Vec<f64> {
        self.predict(values)
    }
}

impl Classifier for DecisionTreeModel {
    fn distribution(&self, values: &[String]) -> Vec<f64> {
        self.predict(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassifierKind {
    NaiveBayes,
    DecisionTree,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 2] = [ClassifierKind::NaiveBayes, ClassifierKind::DecisionTree];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::DecisionTree => "j48",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive_bayes" | "nb" => Ok(ClassifierKind::NaiveBayes),
            "j48" | "tree" => Ok(ClassifierKind::DecisionTree),
            other => Err(Error::Config(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub experiment: String,
    pub classifier: String,
    pub matrix: ConfusionMatrix,
    pub kappa: f64,
    pub rmse: f64,
    pub class_names: Vec<String>,
}

impl EvaluationReport {
    pub fn total(&self) -> u64 {
        self.matrix.total()
    }

    pub fn cci_count(&self) -> u64 {
        self.matrix.correct()
    }

    /// Incorrect count, derived from the total and the correct count.
    pub fn ici_count(&self) -> u64 {
        self.total() - self.cci_count()
    }

    /// CCI and ICI percentages in units of 10^-decimals percent, summing to
    /// exactly 100.
    pub fn percents(&self, decimals: u32) -> (u64, u64) {
        complementary_percents(self.cci_count(), self.ici_count(), decimals)
    }

    pub fn cci_percent(&self, decimals: u32) -> String {
        format_units(self.percents(decimals).0, decimals)
    }

    pub fn ici_percent(&self, decimals: u32) -> String {
        format_units(self.percents(decimals).1, decimals)
    }

    /// Plain-text table in the layout of a per-classifier results table.
    pub fn render(&self) -> String {
        let mut out = format!("{} {}\n\n", self.experiment, self.classifier);
        let row = |label: &str, value: String| format!("{label:<8}{value}\n");
        out.push_str(&row(
            "CCI",
            format!(
                "{} ({}%)",
                with_commas(self.cci_count()),
                self.cci_percent(2)
            ),
        ));
        out.push_str(&row(
            "ICI",
            format!(
                "{} ({}%)",
                with_commas(self.ici_count()),
                self.ici_percent(2)
            ),
        ));
        out.push_str(&row("Kappa", format!("{:.4}", self.kappa)));
        out.push_str(&row("RMSE", format!("{:.4}", self.rmse)));
        out.push_str(&row("Total", with_commas(self.total())));

        let width = self
            .class_names
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(9)
            + 2;
        out.push_str("\nConfusion matrix (rows: true class, columns: predicted)\n");
        out.push_str(&" ".repeat(width));
        for name in &self.class_names {
            out.push_str(&format!("{name:>width$}"));
        }
        out.push('\n');
        for (name, r) in self.class_names.iter().zip(self.matrix.rows()) {
            out.push_str(&format!("{name:<width$}"));
            for c in r {
                out.push_str(&format!("{:>width$}", with_commas(*c)));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "\n{:<width$}{:>11}{:>11}\n",
            "class", "precision", "recall"
        ));
        let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for (c, name) in self.class_names.iter().enumerate() {
            out.push_str(&format!(
                "{name:<width$}{:>11}{:>11}\n",
                fmt_opt(self.matrix.precision(c)),
                fmt_opt(self.matrix.recall(c))
            ));
        }
        out
    }

    /// One `metrics.tsv` row.
    pub fn tsv_row(&self) -> String {
        let (cp, ip) = self.percents(4);
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}\n",
            self.experiment,
            self.classifier,
            self.cci_count(),
            format_units(cp, 4),
            self.ici_count(),
            format_units(ip, 4),
            self.kappa,
            self.rmse,
            self.total()
        )
    }
}

pub const METRICS_HEADER: &str =
    "experiment\tclassifier\tcci_count\tcci_pct\tici_count\tici_pct\tkappa\trmse\ttotal\n";

pub fn metrics_tsv<'a>(reports: impl IntoIterator<Item = &'a EvaluationReport>) -> String {
    let mut out = METRICS_HEADER.to_string();
    for r in reports {
        out.push_str(&r.tsv_row());
    }
    out
}

/// Scores `model` on `instances`.
pub fn evaluate<C: Classifier, E: Example + Sync>(
    model: &C,
    instances: &[E],
    experiment: &str,
    classifier: &str,
) -> Result<EvaluationReport> {
    if instances.is_empty() {
        return Err(Error::EmptyPartition(format!(
            "{experiment}: no instances to evaluate"
        )));
    }
    let dists: Vec<Vec<f64>> = instances
        .par_iter()
        .map(|i| model.distribution(i.values()))
        .collect();
    let k = dists[0].len();
    let preds: Vec<usize> = dists.iter().map(|d| argmax(d)).collect();
    let truths: Vec<usize> = instances.iter().map(|i| i.class()).collect();
    let matrix = confusion(&preds, &truths, k)?;
    Ok(EvaluationReport {
        experiment: experiment.to_string(),
        classifier: classifier.to_string(),
        kappa: kappa(&matrix)?,
        rmse: rmse(&dists, &truths)?,
        matrix,
        class_names: CLASS_NAMES.iter().take(k).map(|s| s.to_string()).collect(),
    })
}

/// Train on an inclusive year range, predict a later year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub name: String,
    pub train_first: i32,
    pub train_last: i32,
    pub target_year: i32,
    pub classifiers: Vec<ClassifierKind>,
}

impl ExperimentSpec {
    pub fn new(name: &str, train_first: i32, train_last: i32, target_year: i32) -> Result<Self> {
        let spec = ExperimentSpec {
            name: name.to_string(),
            train_first,
            train_last,
            target_year,
            classifiers: ClassifierKind::ALL.to_vec(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The three shipped splits: T93, T99 and T98.
    pub fn shipped() -> Vec<ExperimentSpec> {
        [
            ("T93", 1988, 1992, 1993),
            ("T99", 1992, 1998, 1999),
            ("T98", 1988, 1997, 1998),
        ]
        .iter()
        .map(|&(n, a, b, t)| ExperimentSpec::new(n, a, b, t).expect("shipped spec is valid"))
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['\t', '\n', '/']) {
            return Err(Error::Config(format!(
                "bad experiment name `{}`",
                self.name
            )));
        }
        if self.train_first > self.train_last {
            return Err(Error::Config(format!(
                "{}: empty training range",
                self.name
            )));
        }
        if self.trains_on(self.target_year) {
            return Err(Error::Config(format!(
                "{}: target year {} lies inside the training range",
                self.name, self.target_year
            )));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config(format!("{}: no classifiers", self.name)));
        }
        Ok(())
    }

    pub fn trains_on(&self, year: i32) -> bool {
        (self.train_first..=self.train_last).contains(&year)
    }

    pub fn training_years(&self) -> u32 {
        (self.train_last - self.train_first + 1) as u32
    }
}

impl fmt::Display for ExperimentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}-{}:{}",
            self.name, self.train_first, self.train_last, self.target_year
        )
    }
}

impl FromStr for ExperimentSpec {
    type Err = Error;

    /// `name:first-last:target`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "bad experiment spec `{s}`, expected name:first-last:target"
            ))
        };
        let mut parts = s.split(':');
        let (Some(name), Some(range), Some(target), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad());
        };
        let (a, b) = range.split_once('-').ok_or_else(bad)?;
        let year = |t: &str| t.trim().parse::<i32>().map_err(|_| bad());
        ExperimentSpec::new(name.trim(), year(a)?, year(b)?, year(target)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentParams {
    pub alpha: f64,
    pub tree: TreeParams,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            alpha: 1.0,
            tree: TreeParams::default(),
        }
    }
}

/// Indices into the labeled input that went into training and evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub train: Vec<usize>,
    pub target: Vec<usize>,
}

impl Provenance {
    /// Fails if any target-year instance, or any instance from the target
    /// year, was used for training.
    pub fn verify(&self, spec: &ExperimentSpec, labeled: &[LabeledInstance]) -> Result<()> {
        let mut train = self.train.clone();
        train.sort_unstable();
        for t in &self.target {
            if train.binary_search(t).is_ok() {
                return Err(Error::Config(format!(
                    "{}: instance {t} in both partitions",
                    spec.name
                )));
            }
            if labeled[*t].diagnosis_year != spec.target_year {
                return Err(Error::Config(format!(
                    "{}: target instance {t} from wrong year",
                    spec.name
                )));
            }
        }
        for &i in &self.train {
            let y = labeled[i].diagnosis_year;
            if y == spec.target_year || !spec.trains_on(y) {
                return Err(Error::Config(format!(
                    "{}: training instance {i} from year {y}",
                    spec.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub provenance: Provenance,
    pub naive_bayes: Option<(NaiveBayesModel, EvaluationReport)>,
    pub tree: Option<(DecisionTreeModel, EvaluationReport)>,
}

impl ExperimentResult {
    pub fn reports(&self) -> impl Iterator<Item = &EvaluationReport> {
        self.naive_bayes
            .iter()
            .map(|(_, r)| r)
            .chain(self.tree.iter().map(|(_, r)| r))
    }

    pub fn comparison_row(&self) -> ComparisonRow {
        ComparisonRow {
            id: self.spec.name.clone(),
            target_year: self.spec.target_year,
            training_years: self.spec.training_years(),
            naive_bayes: self.naive_bayes.as_ref().map(|(_, r)| r.percents(4).0),
            tree: self.tree.as_ref().map(|(_, r)| r.percents(4).0),
        }
    }
}

pub fn run_experiment(
    spec: &ExperimentSpec,
    labeled: &[LabeledInstance],
    params: &ExperimentParams,
) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut train_idx = Vec::new();
    let mut target_idx = Vec::new();
    for (i, inst) in labeled.iter().enumerate() {
        if inst.diagnosis_year == spec.target_year {
            target_idx.push(i);
        } else if spec.trains_on(inst.diagnosis_year) {
            train_idx.push(i);
        }
    }
    if train_idx.is_empty() {
        return Err(Error::EmptyPartition(format!(
            "{}: no labeled instances diagnosed {}-{}",
            spec.name, spec.train_first, spec.train_last
        )));
    }
    if target_idx.is_empty() {
        return Err(Error::EmptyPartition(format!(
            "{}: no labeled instances diagnosed in {}",
            spec.name, spec.target_year
        )));
    }
    let provenance = Provenance {
        train: train_idx,
        target: target_idx,
    };
    provenance.verify(spec, labeled)?;

    let train: Vec<&LabeledInstance> = provenance.train.iter().map(|&i| &labeled[i]).collect();
    let target: Vec<&LabeledInstance> = provenance.target.iter().map(|&i| &labeled[i]).collect();

    let mut result = ExperimentResult {
        spec: spec.clone(),
        provenance,
        naive_bayes: None,
        tree: None,
    };
    for kind in &spec.classifiers {
        match kind {
            ClassifierKind::NaiveBayes => {
                let m = NaiveBayesModel::train(&FEATURE_NAMES, &CLASS_NAMES, &train, params.alpha)?;
                let r = evaluate(&m, &target, &spec.name, kind.as_str())?;
                result.naive_bayes = Some((m, r));
            }
            ClassifierKind::DecisionTree => {
                let m =
                    DecisionTreeModel::train(&FEATURE_NAMES, &CLASS_NAMES, &train, &params.tree)?;
                let r = evaluate(&m, &target, &spec.name, kind.as_str())?;
                result.tree = Some((m, r));
            }
        }
    }
    Ok(result)
}

/// One row of the per-experiment accuracy comparison. Percentages are in
/// units of 10^-4 percent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRow {
    pub id: String,
    pub target_year: i32,
    pub training_years: u32,
    pub naive_bayes: Option<u64>,
    pub tree: Option<u64>,
}

impl ComparisonRow {
    pub fn winner(&self) -> &'static str {
        match (self.naive_bayes, self.tree) {
            (Some(a), Some(b)) if a > b => "naive_bayes",
            (Some(a), Some(b)) if b > a => "j48",
            (Some(_), Some(_)) => "tie",
            _ => "-",
        }
    }
}

pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let pct = |v: Option<u64>| v.map_or("-".to_string(), |u| format!("{}%", format_units(u, 4)));
    let mut out = format!(
        "{:<6}{:<24}{:<20}{:<14}{:<14}{}\n",
        "ID", "Prediction for year", "Years of training", "Naive Bayes", "J48", "Winner"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<6}{:<24}{:<20}{:<14}{:<14}{}\n",
            r.id,
            r.target_year,
            r.training_years,
            pct(r.naive_bayes),
            pct(r.tree),
            r.winner()
        ));
    }
    out
}
