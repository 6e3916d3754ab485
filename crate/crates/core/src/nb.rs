//! Categorical naive Bayes trained by frequency counting.
//!
//! Class priors are relative class frequencies. Each likelihood is
//! `(count(f = v, c) + alpha) / (count(c) + alpha * |domain(f)|)` where the
//! domain holds the values of `f` seen in training. The missing marker is an
//! ordinary value and joins the domain whenever it occurs. Scoring happens in
//! log space.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::Example;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    feature_names: Vec<String>,
    class_names: Vec<String>,
    alpha: f64,
    priors: Vec<f64>,
    /// Per feature: value -> likelihood per class.
    likelihoods: Vec<BTreeMap<String, Vec<f64>>>,
}

fn ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl NaiveBayesModel {
    pub fn train<E: Example>(
        feature_names: &[&str],
        class_names: &[&str],
        instances: &[E],
        alpha: f64,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::Empty("naive Bayes training set".into()));
        }
        if class_names.is_empty() {
            return Err(Error::Config("at least one class is required".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "smoothing alpha {alpha} must be >= 0"
            )));
        }
        let k = class_names.len();
        let nf = feature_names.len();
        let mut class_counts = vec![0u64; k];
        let mut joint: Vec<BTreeMap<&str, Vec<u64>>> = vec![BTreeMap::new(); nf];
        for inst in instances {
            let c = inst.class();
            if c >= k {
                return Err(Error::Config(format!("class index {c} out of range")));
            }
            let values = inst.values();
            if values.len() != nf {
                return Err(Error::Config(format!(
                    "instance has {} values, expected {nf}",
                    values.len()
                )));
            }
            class_counts[c] += 1;
            for (f, v) in values.iter().enumerate() {
                joint[f].entry(v.as_str()).or_insert_with(|| vec![0; k])[c] += 1;
            }
        }
        let n = instances.len() as f64;
        let priors = class_counts.iter().map(|&c| c as f64 / n).collect();
        let likelihoods = joint
            .into_iter()
            .map(|counts| {
                let domain = counts.len() as f64;
                counts
                    .into_iter()
                    .map(|(value, per_class)| {
                        let liks = per_class
                            .iter()
                            .zip(&class_counts)
                            .map(|(&joint, &cc)| {
                                let denom = cc as f64 + alpha * domain;
                                if denom > 0.0 {
                                    (joint as f64 + alpha) / denom
                                } else {
                                    1.0 / domain
                                }
                            })
                            .collect();
                        (value.to_string(), liks)
                    })
                    .collect()
            })
            .collect();
        Ok(NaiveBayesModel {
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            class_names: class_names.iter().map(|s| s.to_string()).collect(),
            alpha,
            priors,
            likelihoods,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn prior(&self, class: usize) -> f64 {
        self.priors[class]
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn likelihood(&self, feature: usize, value: &str, class: usize) -> Option<f64> {
        self.likelihoods[feature].get(value).map(|l| l[class])
    }

    pub fn domain(&self, feature: usize) -> impl Iterator<Item = &str> {
        self.likelihoods[feature].keys().map(String::as_str)
    }

    pub fn domain_size(&self, feature: usize) -> usize {
        self.likelihoods[feature].len()
    }

    /// Posterior from any subset of `(feature index, value)` pairs.
    pub fn predict_pairs<'a>(&self, pairs: impl IntoIterator<Item = (usize, &'a str)>) -> Vec<f64> {
        let mut scores: Vec<f64> = self.priors.iter().map(|&p| ln(p)).collect();
        for (f, v) in pairs {
            match self.likelihoods[f].get(v) {
                Some(liks) => {
                    for (s, &l) in scores.iter_mut().zip(liks) {
                        *s += ln(l);
                    }
                }
                None => {
                    let uniform = ln(1.0 / self.likelihoods[f].len() as f64);
                    for s in scores.iter_mut() {
                        *s += uniform;
                    }
                }
            }
        }
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return self.priors.clone();
        }
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / z).collect()
    }

    /// Class distribution for a full feature vector.
    pub fn predict(&self, values: &[String]) -> Vec<f64> {
        self.predict_pairs(values.iter().enumerate().map(|(i, v)| (i, v.as_str())))
    }

    /// Class distribution for a partial mapping of feature name to value.
    /// Unknown feature names are ignored.
    pub fn predict_map(&self, features: &BTreeMap<String, String>) -> Vec<f64> {
        self.predict_pairs(features.iter().filter_map(|(name, v)| {
            self.feature_names
                .iter()
                .position(|n| n == name)
                .map(|i| (i, v.as_str()))
        }))
    }

    /// Most probable class; ties go to the lower class index.
    pub fn classify(&self, values: &[String]) -> usize {
        argmax(&self.predict(values))
    }

    /// Versioned text form; floats carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::from("naive-bayes v1\n");
        out.push_str(&format!("alpha\t{:.16e}\n", self.alpha));
        out.push_str(&format!("classes\t{}\n", self.class_names.join("\t")));
        out.push_str(&format!("features\t{}\n", self.feature_names.join("\t")));
        let priors: Vec<String> = self.priors.iter().map(|p| format!("{p:.16e}")).collect();
        out.push_str(&format!("prior\t{}\n", priors.join("\t")));
        for (name, table) in self.feature_names.iter().zip(&self.likelihoods) {
            for (value, liks) in table {
                let liks: Vec<String> = liks.iter().map(|l| format!("{l:.16e}")).collect();
                out.push_str(&format!(
                    "likelihood\t{name}\t{value}\t{}\n",
                    liks.join("\t")
                ));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, m: &str| Error::Format(format!("line {line}: {m}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "naive-bayes v1")) => {}
            _ => return Err(bad(1, "expected `naive-bayes v1` header")),
        }
        let parse_f = |line: usize, s: &str| s.parse::<f64>().map_err(|_| bad(line, "bad number"));
        let mut alpha = None;
        let mut class_names = Vec::new();
        let mut feature_names: Vec<String> = Vec::new();
        let mut priors = Vec::new();
        let mut likelihoods: Vec<BTreeMap<String, Vec<f64>>> = Vec::new();
        for (idx, line) in lines {
            let no = idx + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            match cols[0] {
                "alpha" if cols.len() == 2 => alpha = Some(parse_f(no, cols[1])?),
                "classes" => class_names = cols[1..].iter().map(|s| s.to_string()).collect(),
                "features" => {
                    feature_names = cols[1..]
                        .iter()
                        .filter(|s| !s.is_empty())
                        .map(|s| s.to_string())
                        .collect();
                    likelihoods = vec![BTreeMap::new(); feature_names.len()];
                }
                "prior" => {
                    priors = cols[1..]
                        .iter()
                        .map(|s| parse_f(no, s))
                        .collect::<Result<_>>()?
                }
                "likelihood" if cols.len() >= 3 => {
                    let f = feature_names
                        .iter()
                        .position(|n| n == cols[1])
                        .ok_or_else(|| bad(no, "unknown feature"))?;
                    let liks: Vec<f64> = cols[3..]
                        .iter()
                        .map(|s| parse_f(no, s))
                        .collect::<Result<_>>()?;
                    if liks.len() != class_names.len() {
                        return Err(bad(no, "likelihood count differs from class count"));
                    }
                    likelihoods[f].insert(cols[2].to_string(), liks);
                }
                "" => {}
                _ => return Err(bad(no, "unrecognized line")),
            }
        }
        let alpha = alpha.ok_or_else(|| bad(0, "missing alpha"))?;
        if priors.len() != class_names.len() || class_names.is_empty() {
            return Err(bad(0, "prior count differs from class count"));
        }
        Ok(NaiveBayesModel {
            feature_names,
            class_names,
            alpha,
            priors,
            likelihoods,
        })
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Instance;
    use proptest::prelude::*;

    fn toy() -> Vec<Instance> {
        vec![
            Instance::new(["a"], 0),
            Instance::new(["a"], 0),
            Instance::new(["b"], 1),
            Instance::new(["b"], 1),
        ]
    }

    #[test]
    fn hand_counted_model() {
        // Classes: 0 = "+", 1 = "-". P(a|+) = (2 + 1) / (2 + 2) = 3/4.
        let m = NaiveBayesModel::train(&["x"], &["+", "-"], &toy(), 1.0).unwrap();
        assert_eq!(m.prior(0), 0.5);
        assert_eq!(m.domain_size(0), 2);
        assert!((m.likelihood(0, "a", 0).unwrap() - 0.75).abs() < 1e-15);
        assert!((m.likelihood(0, "a", 1).unwrap() - 0.25).abs() < 1e-15);
        let d = m.predict(&["a".to_string()]);
        assert!((d[0] - 0.75).abs() < 1e-12);
        assert!((d[1] - 0.25).abs() < 1e-12);
        assert_eq!(m.classify(&["a".to_string()]), 0);
    }

    #[test]
    fn empty_features_return_priors() {
        let data = vec![
            Instance::new(["a"], 0),
            Instance::new(["a"], 0),
            Instance::new(["b"], 1),
        ];
        let m = NaiveBayesModel::train(&["x"], &["+", "-"], &data, 1.0).unwrap();
        let d = m.predict_map(&BTreeMap::new());
        assert!((d[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((d[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_prior() {
        let data = vec![Instance::new(["a"], 1), Instance::new(["b"], 1)];
        let m = NaiveBayesModel::train(&["x"], &["no", "yes"], &data, 1.0).unwrap();
        assert_eq!(m.priors(), &[0.0, 1.0]);
        assert_eq!(m.classify(&["a".to_string()]), 1);
    }

    #[test]
    fn zero_alpha_records_zero_likelihood() {
        let m = NaiveBayesModel::train(&["x"], &["+", "-"], &toy(), 0.0).unwrap();
        assert_eq!(m.likelihood(0, "b", 0), Some(0.0));
        for c in 0..2 {
            let sum: f64 = m.domain(0).map(|v| m.likelihood(0, v, c).unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        let d = m.predict(&["a".to_string()]);
        assert_eq!(d, vec![1.0, 0.0]);
    }

    #[test]
    fn unseen_value_is_uniform() {
        let m = NaiveBayesModel::train(&["x"], &["+", "-"], &toy(), 1.0).unwrap();
        let d = m.predict(&["zzz".to_string()]);
        assert!((d[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_tie_goes_to_first_class() {
        let data = vec![Instance::new(["a"], 0), Instance::new(["a"], 1)];
        let m = NaiveBayesModel::train(&["x"], &["no", "yes"], &data, 1.0).unwrap();
        assert_eq!(m.predict(&["a".to_string()]), vec![0.5, 0.5]);
        assert_eq!(m.classify(&["a".to_string()]), 0);
    }

    #[test]
    fn empty_training_is_error() {
        let data: Vec<Instance> = vec![];
        assert!(NaiveBayesModel::train(&["x"], &["a"], &data, 1.0).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let data = vec![
            Instance::new(["a", "p"], 0),
            Instance::new(["b", "q"], 1),
            Instance::new(["c", "q"], 1),
        ];
        let m = NaiveBayesModel::train(&["x", "y"], &["no", "yes"], &data, 0.7).unwrap();
        let back = NaiveBayesModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(NaiveBayesModel::from_text("bogus").is_err());
    }

    fn dataset() -> impl Strategy<Value = Vec<Instance>> {
        prop::collection::vec((prop::collection::vec(0u8..4, 3), 0usize..2), 1..40).prop_map(
            |rows| {
                rows.into_iter()
                    .map(|(vals, c)| Instance::new(vals.iter().map(|v| format!("v{v}")), c))
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn model_invariants(data in dataset(), alpha in 0.1f64..5.0) {
            let m = NaiveBayesModel::train(&["a", "b", "c"], &["0", "1"], &data, alpha).unwrap();
            prop_assert!((m.priors().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for f in 0..3 {
                for c in 0..2 {
                    let s: f64 = m.domain(f).map(|v| m.likelihood(f, v, c).unwrap()).sum();
                    prop_assert!((s - 1.0).abs() < 1e-12);
                }
            }
            for inst in &data {
                let d = m.predict(&inst.values);
                prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(d.iter().all(|p| (0.0..=1.0).contains(p)));
            }
        }

        #[test]
        fn larger_alpha_moves_toward_uniform(data in dataset(), a in 0.0f64..3.0, extra in 0.01f64..3.0) {
            let lo = NaiveBayesModel::train(&["a", "b", "c"], &["0", "1"], &data, a).unwrap();
            let hi = NaiveBayesModel::train(&["a", "b", "c"], &["0", "1"], &data, a + extra).unwrap();
            for f in 0..3 {
                let u = 1.0 / lo.domain_size(f) as f64;
                for v in lo.domain(f) {
                    for c in 0..2 {
                        let dl = (lo.likelihood(f, v, c).unwrap() - u).abs();
                        let dh = (hi.likelihood(f, v, c).unwrap() - u).abs();
                        prop_assert!(dh <= dl + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn relabeling_values_is_equivariant(data in dataset()) {
            let renamed: Vec<Instance> = data
                .iter()
                .map(|i| Instance::new(i.values.iter().map(|v| format!("{v}_r")), i.class))
                .collect();
            let m = NaiveBayesModel::train(&["a", "b", "c"], &["0", "1"], &data, 1.0).unwrap();
            let r = NaiveBayesModel::train(&["a", "b", "c"], &["0", "1"], &renamed, 1.0).unwrap();
            for (x, y) in data.iter().zip(&renamed) {
                let p = m.predict(&x.values);
                let q = r.predict(&y.values);
                prop_assert!((p[0] - q[0]).abs() < 1e-12);
                prop_assert_eq!(m.classify(&x.values), r.classify(&y.values));
            }
        }

        #[test]
        fn retraining_is_bit_identical(data in dataset()) {
            let a = NaiveBayesModel::train(&["a", "b", "c"], &["0", "1"], &data, 1.0).unwrap();
            let b = NaiveBayesModel::train(&["a", "b", "c"], &["0", "1"], &data, 1.0).unwrap();
            prop_assert_eq!(a.to_text(), b.to_text());
        }
    }
}
