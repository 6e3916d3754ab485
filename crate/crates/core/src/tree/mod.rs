//! Multiway decision-tree induction over categorical features.
//!
//! Splits maximize gain ratio, each feature is consumed on its path, and the
//! missing marker is an ordinary branch value. Pruning lives in [`prune`],
//! the text form in [`text`].

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::Example;
use crate::nb::argmax;

pub mod prune;
pub mod text;

/// Gains and gain ratios closer than this are treated as equal.
pub const TIE_EPSILON: f64 = 1e-12;

/// Nodes larger than this build their children in parallel.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub min_leaf_instances: usize,
    pub pruning_confidence: f64,
    pub use_gain_ratio: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf_instances: 2,
            pruning_confidence: 0.25,
            use_gain_ratio: true,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf_instances < 1 {
            return Err(Error::Config("min_leaf_instances must be >= 1".into()));
        }
        let cf = self.pruning_confidence;
        if !(cf > 0.0 && cf < 0.5) {
            return Err(Error::Config(format!(
                "pruning confidence {cf} must lie strictly between 0 and 0.5"
            )));
        }
        Ok(())
    }
}

/// A tree node. `counts` is the class distribution used for prediction and
/// `n` the number of training instances that reached the node. An empty
/// branch carries its parent's counts with `n = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf {
        class: usize,
        counts: Vec<u64>,
        n: u64,
    },
    Internal {
        feature: usize,
        counts: Vec<u64>,
        n: u64,
        /// Branches sorted by value.
        children: Vec<(String, Node)>,
    },
}

impl Node {
    pub fn counts(&self) -> &[u64] {
        match self {
            Node::Leaf { counts, .. } | Node::Internal { counts, .. } => counts,
        }
    }

    pub fn training_count(&self) -> u64 {
        match self {
            Node::Leaf { n, .. } | Node::Internal { n, .. } => *n,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    /// Total number of nodes, leaves included.
    pub fn size(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Internal { children, .. } => {
                1 + children.iter().map(|(_, c)| c.size()).sum::<usize>()
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Internal { children, .. } => children.iter().map(|(_, c)| c.leaf_count()).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Internal { children, .. } => {
                1 + children.iter().map(|(_, c)| c.depth()).max().unwrap_or(0)
            }
        }
    }

    /// Leaf reached by `values`. Values absent from a node's branches follow
    /// the branch with the most training instances.
    pub fn route(&self, values: &[String]) -> &Node {
        let mut node = self;
        while let Node::Internal {
            feature, children, ..
        } = node
        {
            let v = values[*feature].as_str();
            node = match children.binary_search_by(|(k, _)| k.as_str().cmp(v)) {
                Ok(i) => &children[i].1,
                Err(_) => &children[largest_branch(children)].1,
            };
        }
        node
    }
}

fn largest_branch(children: &[(String, Node)]) -> usize {
    let mut best = 0;
    for (i, (_, c)) in children.iter().enumerate().skip(1) {
        if c.training_count() > children[best].1.training_count() {
            best = i;
        }
    }
    best
}

/// Majority class of a count vector; ties go to the first class.
pub fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy in bits.
pub fn entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("entropy of all-zero counts".into()));
    }
    Ok(entropy_of(counts, total))
}

fn entropy_of(counts: &[u64], total: u64) -> f64 {
    let t = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Class counts per value of one feature.
fn partition_counts<E: Example>(
    instances: &[&E],
    feature: usize,
    k: usize,
) -> BTreeMap<String, Vec<u64>> {
    let mut parts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for inst in instances {
        let v = &inst.values()[feature];
        match parts.get_mut(v) {
            Some(c) => c[inst.class()] += 1,
            None => {
                let mut c = vec![0; k];
                c[inst.class()] += 1;
                parts.insert(v.clone(), c);
            }
        }
    }
    parts
}

fn class_counts<E: Example>(instances: &[&E], k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for inst in instances {
        counts[inst.class()] += 1;
    }
    counts
}

struct SplitScore {
    gain: f64,
    split_info: f64,
}

fn score_split(parent: &[u64], parts: &BTreeMap<String, Vec<u64>>) -> SplitScore {
    let total: u64 = parent.iter().sum();
    let t = total as f64;
    let mut weighted = 0.0;
    let mut split_info = 0.0;
    for counts in parts.values() {
        let n: u64 = counts.iter().sum();
        let w = n as f64 / t;
        weighted += w * entropy_of(counts, n);
        split_info -= w * w.log2();
    }
    SplitScore {
        gain: (entropy_of(parent, total) - weighted).max(0.0),
        split_info,
    }
}

fn num_classes<E: Example>(instances: &[E]) -> usize {
    instances
        .iter()
        .map(|i| i.class())
        .max()
        .map_or(0, |m| m + 1)
}

/// Information gain of splitting `instances` on `feature`.
pub fn info_gain<E: Example>(instances: &[E], feature: usize) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::Empty("information gain of no instances".into()));
    }
    let refs: Vec<&E> = instances.iter().collect();
    let k = num_classes(instances);
    let parent = class_counts(&refs, k);
    Ok(score_split(&parent, &partition_counts(&refs, feature, k)).gain)
}

/// Gain ratio, or `None` when the feature induces a single partition.
pub fn gain_ratio<E: Example>(instances: &[E], feature: usize) -> Result<Option<f64>> {
    if instances.is_empty() {
        return Err(Error::Empty("gain ratio of no instances".into()));
    }
    let refs: Vec<&E> = instances.iter().collect();
    let k = num_classes(instances);
    let parent = class_counts(&refs, k);
    let parts = partition_counts(&refs, feature, k);
    if parts.len() < 2 {
        return Ok(None);
    }
    let s = score_split(&parent, &parts);
    Ok(Some(s.gain / s.split_info))
}

/// A grown or pruned tree together with its column and class names.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub root: Node,
}

struct Builder<'a> {
    k: usize,
    params: TreeParams,
    /// Feature indices sorted by name, for deterministic tie-breaking.
    by_name: Vec<usize>,
    /// Training-time value domain of each feature.
    domains: &'a [Vec<String>],
}

impl DecisionTreeModel {
    /// Grows an unpruned tree.
    pub fn grow<E: Example + Sync>(
        feature_names: &[&str],
        class_names: &[&str],
        instances: &[E],
        params: &TreeParams,
    ) -> Result<Self> {
        params.validate()?;
        if instances.is_empty() {
            return Err(Error::Empty("decision tree training set".into()));
        }
        let k = class_names.len();
        let nf = feature_names.len();
        for inst in instances {
            if inst.class() >= k {
                return Err(Error::Config(format!(
                    "class index {} out of range",
                    inst.class()
                )));
            }
            if inst.values().len() != nf {
                return Err(Error::Config(format!(
                    "instance has {} values, expected {nf}",
                    inst.values().len()
                )));
            }
        }
        let domains: Vec<Vec<String>> = (0..nf)
            .map(|f| {
                let mut d: Vec<String> = instances.iter().map(|i| i.values()[f].clone()).collect();
                d.sort_unstable();
                d.dedup();
                d
            })
            .collect();
        let mut by_name: Vec<usize> = (0..nf).collect();
        by_name.sort_by_key(|&f| feature_names[f]);
        let builder = Builder {
            k,
            params: *params,
            by_name,
            domains: &domains,
        };
        let refs: Vec<&E> = instances.iter().collect();
        let root = builder.build(&refs, &vec![true; nf]);
        Ok(DecisionTreeModel {
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            class_names: class_names.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    /// Grows then prunes at `params.pruning_confidence`.
    pub fn train<E: Example + Sync>(
        feature_names: &[&str],
        class_names: &[&str],
        instances: &[E],
        params: &TreeParams,
    ) -> Result<Self> {
        let grown = Self::grow(feature_names, class_names, instances, params)?;
        Ok(grown.pruned(params.pruning_confidence))
    }

    pub fn pruned(&self, confidence: f64) -> Self {
        DecisionTreeModel {
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            root: prune::prune(&self.root, confidence),
        }
    }

    /// Laplace-corrected class distribution at the leaf reached by `values`.
    pub fn predict(&self, values: &[String]) -> Vec<f64> {
        let counts = self.root.route(values).counts();
        let n: u64 = counts.iter().sum();
        let denom = (n + counts.len() as u64) as f64;
        counts.iter().map(|&c| (c + 1) as f64 / denom).collect()
    }

    pub fn classify(&self, values: &[String]) -> usize {
        match self.root.route(values) {
            Node::Leaf { class, .. } => *class,
            Node::Internal { .. } => unreachable!("route always ends at a leaf"),
        }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn to_text(&self) -> String {
        text::write_tree(self)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        text::read_tree(s)
    }
}

/// Class with the highest probability; ties go to the first class.
pub fn predicted_class(distribution: &[f64]) -> usize {
    argmax(distribution)
}

impl Builder<'_> {
    fn leaf(&self, counts: Vec<u64>) -> Node {
        let n = counts.iter().sum();
        Node::Leaf {
            class: majority(&counts),
            counts,
            n,
        }
    }

    fn build<E: Example + Sync>(&self, instances: &[&E], available: &[bool]) -> Node {
        let counts = class_counts(instances, self.k);
        let n = instances.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || n < 2 * self.params.min_leaf_instances {
            return self.leaf(counts);
        }

        let mut best: Option<(usize, f64)> = None;
        for &f in &self.by_name {
            if !available[f] {
                continue;
            }
            let parts = partition_counts(instances, f, self.k);
            if parts.len() < 2 {
                continue;
            }
            let s = score_split(&counts, &parts);
            if s.gain <= TIE_EPSILON {
                continue;
            }
            let score = if self.params.use_gain_ratio {
                s.gain / s.split_info
            } else {
                s.gain
            };
            if best.is_none_or(|(_, b)| score > b + TIE_EPSILON) {
                best = Some((f, score));
            }
        }
        let Some((feature, _)) = best else {
            return self.leaf(counts);
        };

        let mut groups: BTreeMap<&str, Vec<&E>> = self.domains[feature]
            .iter()
            .map(|v| (v.as_str(), Vec::new()))
            .collect();
        for &inst in instances {
            groups
                .get_mut(inst.values()[feature].as_str())
                .expect("value is in the training domain")
                .push(inst);
        }
        let mut rest = available.to_vec();
        rest[feature] = false;
        let parent_class = majority(&counts);
        let make_child = |(value, group): (&&str, &Vec<&E>)| {
            let child = if group.is_empty() {
                Node::Leaf {
                    class: parent_class,
                    counts: counts.clone(),
                    n: 0,
                }
            } else {
                self.build(group, &rest)
            };
            (value.to_string(), child)
        };
        let children: Vec<(String, Node)> = if n >= PARALLEL_THRESHOLD {
            groups
                .iter()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(make_child)
                .collect()
        } else {
            groups.iter().map(make_child).collect()
        };
        Node::Internal {
            feature,
            counts,
            n: n as u64,
            children,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::features::Instance;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Classic play-tennis data: outlook, temperature, humidity, windy.
    pub(crate) fn weather() -> Vec<Instance> {
        let rows = [
            ("sunny", "hot", "high", "false", 0),
            ("sunny", "hot", "high", "true", 0),
            ("overcast", "hot", "high", "false", 1),
            ("rainy", "mild", "high", "false", 1),
            ("rainy", "cool", "normal", "false", 1),
            ("rainy", "cool", "normal", "true", 0),
            ("overcast", "cool", "normal", "true", 1),
            ("sunny", "mild", "high", "false", 0),
            ("sunny", "cool", "normal", "false", 1),
            ("rainy", "mild", "normal", "false", 1),
            ("sunny", "mild", "normal", "true", 1),
            ("overcast", "mild", "high", "true", 1),
            ("overcast", "hot", "normal", "false", 1),
            ("rainy", "mild", "high", "true", 0),
        ];
        rows.iter()
            .map(|&(a, b, c, d, k)| Instance::new([a, b, c, d], k))
            .collect()
    }

    pub(crate) const WEATHER_FEATURES: [&str; 4] = ["outlook", "temperature", "humidity", "windy"];

    // Independent oracle: materializes every partition as an instance list and
    // recomputes entropies from scratch.
    fn h(instances: &[&Instance]) -> f64 {
        let n = instances.len() as f64;
        let mut out = 0.0;
        for c in 0..2 {
            let m = instances.iter().filter(|i| i.class == c).count() as f64;
            if m > 0.0 {
                out -= m / n * (m / n).log2();
            }
        }
        out
    }

    fn split<'a>(instances: &[&'a Instance], f: usize) -> Vec<(String, Vec<&'a Instance>)> {
        let mut values: Vec<String> = instances.iter().map(|i| i.values[f].clone()).collect();
        values.sort();
        values.dedup();
        values
            .into_iter()
            .map(|v| {
                let part = instances
                    .iter()
                    .copied()
                    .filter(|i| i.values[f] == v)
                    .collect();
                (v, part)
            })
            .collect()
    }

    fn oracle_gain(instances: &[&Instance], f: usize) -> (f64, f64) {
        let n = instances.len() as f64;
        let parts = split(instances, f);
        let rem: f64 = parts.iter().map(|(_, p)| p.len() as f64 / n * h(p)).sum();
        let si: f64 = parts
            .iter()
            .map(|(_, p)| -(p.len() as f64 / n) * (p.len() as f64 / n).log2())
            .sum();
        (h(instances) - rem, si)
    }

    pub(crate) fn oracle_tree(
        instances: &[&Instance],
        names: &[&str],
        domains: &[Vec<String>],
        used: &mut Vec<usize>,
        min_leaf: usize,
    ) -> Node {
        let counts = vec![
            instances.iter().filter(|i| i.class == 0).count() as u64,
            instances.iter().filter(|i| i.class == 1).count() as u64,
        ];
        let class = if counts[1] > counts[0] { 1 } else { 0 };
        let leaf = Node::Leaf {
            class,
            counts: counts.clone(),
            n: instances.len() as u64,
        };
        if counts[0] == 0 || counts[1] == 0 || instances.len() < 2 * min_leaf {
            return leaf;
        }
        let mut order: Vec<usize> = (0..names.len()).filter(|f| !used.contains(f)).collect();
        order.sort_by_key(|&f| names[f]);
        let mut best: Option<(usize, f64)> = None;
        for f in order {
            let (ig, si) = oracle_gain(instances, f);
            if ig <= 1e-12 || si <= 0.0 {
                continue;
            }
            let gr = ig / si;
            if best.is_none() || gr > best.unwrap().1 + 1e-12 {
                best = Some((f, gr));
            }
        }
        let Some((f, _)) = best else { return leaf };
        used.push(f);
        let children = domains[f]
            .iter()
            .map(|v| {
                let part: Vec<&Instance> = instances
                    .iter()
                    .copied()
                    .filter(|i| &i.values[f] == v)
                    .collect();
                let child = if part.is_empty() {
                    Node::Leaf {
                        class,
                        counts: counts.clone(),
                        n: 0,
                    }
                } else {
                    oracle_tree(&part, names, domains, used, min_leaf)
                };
                (v.clone(), child)
            })
            .collect();
        used.pop();
        Node::Internal {
            feature: f,
            counts,
            n: instances.len() as u64,
            children,
        }
    }

    pub(crate) fn oracle_for(data: &[Instance], names: &[&str], min_leaf: usize) -> Node {
        let domains: Vec<Vec<String>> = (0..names.len())
            .map(|f| {
                let mut d: Vec<String> = data.iter().map(|i| i.values[f].clone()).collect();
                d.sort();
                d.dedup();
                d
            })
            .collect();
        let refs: Vec<&Instance> = data.iter().collect();
        oracle_tree(&refs, names, &domains, &mut Vec::new(), min_leaf)
    }

    fn grow(data: &[Instance], names: &[&str]) -> DecisionTreeModel {
        DecisionTreeModel::grow(names, &["no", "yes"], data, &TreeParams::default()).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[5, 0]).unwrap(), 0.0);
        assert_eq!(entropy(&[1, 1]).unwrap(), 1.0);
        let direct =
            -(9.0f64 / 14.0) * (9.0f64 / 14.0).log2() - (5.0f64 / 14.0) * (5.0f64 / 14.0).log2();
        let e = entropy(&[9, 5]).unwrap();
        assert!((e - direct).abs() < 1e-15);
        assert!((e - 0.940286).abs() < 1e-6);
        assert!(entropy(&[0, 0]).is_err());
    }

    #[test]
    fn perfect_and_constant_features() {
        let data = vec![
            Instance::new(["a", "k"], 0),
            Instance::new(["a", "k"], 0),
            Instance::new(["b", "k"], 1),
            Instance::new(["b", "k"], 1),
        ];
        assert_eq!(info_gain(&data, 0).unwrap(), 1.0);
        assert_eq!(gain_ratio(&data, 0).unwrap(), Some(1.0));
        assert_eq!(info_gain(&data, 1).unwrap(), 0.0);
        assert_eq!(gain_ratio(&data, 1).unwrap(), None);
    }

    #[test]
    fn gain_ratio_penalizes_identifier_features() {
        // `id` is unique per row; `flag` is two-valued and almost predictive.
        let rows = [
            (0, "x", 0),
            (1, "x", 0),
            (2, "x", 0),
            (3, "x", 1),
            (4, "y", 1),
            (5, "y", 1),
            (6, "y", 1),
            (7, "y", 1),
        ];
        let data: Vec<Instance> = rows
            .iter()
            .map(|&(id, flag, c)| Instance::new([format!("id{id}"), flag.to_string()], c))
            .collect();
        let refs: Vec<&Instance> = data.iter().collect();
        let (ig_id, si_id) = oracle_gain(&refs, 0);
        let (ig_flag, si_flag) = oracle_gain(&refs, 1);
        assert!(ig_id > ig_flag, "raw gain prefers the identifier");
        assert!(
            ig_flag / si_flag > ig_id / si_id,
            "gain ratio prefers the flag"
        );
        assert!((info_gain(&data, 0).unwrap() - ig_id).abs() < 1e-12);
        assert!((gain_ratio(&data, 1).unwrap().unwrap() - ig_flag / si_flag).abs() < 1e-12);
        let tree = grow(&data, &["id", "flag"]);
        assert!(matches!(tree.root, Node::Internal { feature: 1, .. }));
    }

    #[test]
    fn weather_tree_matches_oracle() {
        let data = weather();
        let tree = grow(&data, &WEATHER_FEATURES);
        assert_eq!(tree.root, oracle_for(&data, &WEATHER_FEATURES, 2));
        assert!(matches!(tree.root, Node::Internal { feature: 0, .. }));
    }

    #[test]
    fn pure_input_is_one_leaf() {
        let data = vec![Instance::new(["a"], 1), Instance::new(["b"], 1)];
        let tree = grow(&data, &["x"]);
        assert_eq!(
            tree.root,
            Node::Leaf {
                class: 1,
                counts: vec![0, 2],
                n: 2
            }
        );
    }

    #[test]
    fn leaf_prediction_is_laplace_corrected() {
        let data = vec![
            Instance::new(["a"], 0),
            Instance::new(["a"], 0),
            Instance::new(["a"], 0),
            Instance::new(["a"], 1),
        ];
        let tree = grow(&data, &["x"]);
        let d = tree.predict(&["a".to_string()]);
        assert!((d[0] - 4.0 / 6.0).abs() < 1e-15);
        assert!((d[1] - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_value_follows_largest_branch() {
        let mut data = vec![Instance::new(["a"], 0), Instance::new(["a"], 0)];
        data.extend((0..3).map(|_| Instance::new(["b"], 1)));
        let tree = grow(&data, &["x"]);
        assert_eq!(tree.classify(&["zzz".to_string()]), 1);
        assert_eq!(tree.classify(&["a".to_string()]), 0);
    }

    #[test]
    fn empty_branch_inherits_parent_majority() {
        fn check(node: &Node, found: &mut usize) {
            if let Node::Internal {
                counts, children, ..
            } = node
            {
                for (_, c) in children {
                    if c.training_count() == 0 {
                        *found += 1;
                        assert_eq!(c.counts(), &counts[..]);
                        assert!(
                            matches!(c, Node::Leaf { class, .. } if *class == majority(counts))
                        );
                    }
                    check(c, found);
                }
            }
        }
        let mut found = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 40, 3, 3);
            check(&grow(&data, &["x", "y", "z"]).root, &mut found);
        }
        assert!(found > 0);
    }

    pub(crate) fn random_dataset(
        rng: &mut ChaCha8Rng,
        n: usize,
        nf: usize,
        arity: u8,
    ) -> Vec<Instance> {
        (0..n)
            .map(|_| {
                let vals: Vec<String> = (0..nf)
                    .map(|_| format!("v{}", rng.random_range(0..arity)))
                    .collect();
                Instance::new(vals, rng.random_range(0..2))
            })
            .collect()
    }

    #[test]
    fn small_datasets_match_oracle() {
        let names = ["a", "b", "c", "d"];
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=12);
            let nf = rng.random_range(1..=4);
            let data = random_dataset(&mut rng, n, nf, 2);
            let tree = grow(&data, &names[..nf]);
            assert_eq!(tree.root, oracle_for(&data, &names[..nf], 2), "seed {seed}");
        }
    }

    #[test]
    fn consistent_data_is_fit_exactly() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut data = random_dataset(&mut rng, 60, 5, 3);
            // Class is a function of the features, so no two rows contradict,
            // and every impure node has a feature with positive gain.
            let v: Vec<String> = (0..3)
                .map(|_| format!("v{}", rng.random_range(0..3)))
                .collect();
            for inst in &mut data {
                let x = &inst.values;
                inst.class = usize::from(x[0] == v[0] || (x[1] == v[1] && x[2] != v[2]));
            }
            let params = TreeParams {
                min_leaf_instances: 1,
                ..TreeParams::default()
            };
            let tree =
                DecisionTreeModel::grow(&["a", "b", "c", "d", "e"], &["no", "yes"], &data, &params)
                    .unwrap();
            for inst in &data {
                assert_eq!(tree.classify(&inst.values), inst.class, "seed {seed}");
            }
        }
    }

    #[test]
    fn instance_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = random_dataset(&mut rng, 300, 4, 3);
        let mut shuffled = data.clone();
        shuffled.shuffle(&mut rng);
        let names = ["a", "b", "c", "d"];
        assert_eq!(grow(&data, &names), grow(&shuffled, &names));
    }

    #[test]
    fn no_feature_repeats_on_a_path() {
        fn check(n: &Node, seen: &mut Vec<usize>) {
            if let Node::Internal {
                feature, children, ..
            } = n
            {
                assert!(!seen.contains(feature));
                assert!(children.len() >= 2);
                seen.push(*feature);
                for (_, c) in children {
                    check(c, seen);
                }
                seen.pop();
            } else if let Node::Leaf { class, counts, .. } = n {
                assert_eq!(*class, majority(counts));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_dataset(&mut rng, 500, 6, 4);
        check(
            &grow(&data, &["a", "b", "c", "d", "e", "f"]).root,
            &mut Vec::new(),
        );
    }

    proptest! {
        #[test]
        fn entropy_is_concave(a in prop::collection::vec(0u64..50, 2), b in prop::collection::vec(0u64..50, 2)) {
            let na: u64 = a.iter().sum();
            let nb: u64 = b.iter().sum();
            prop_assume!(na > 0 && nb > 0);
            let merged: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let t = (na + nb) as f64;
            let mean = na as f64 / t * entropy(&a).unwrap() + nb as f64 / t * entropy(&b).unwrap();
            prop_assert!(entropy(&merged).unwrap() >= mean - 1e-12);
            prop_assert!(entropy(&merged).unwrap() <= 1.0 + 1e-12);
        }

        #[test]
        fn gain_bounds(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 30, 2, 4);
            let ig = info_gain(&data, 0).unwrap();
            let refs: Vec<&Instance> = data.iter().collect();
            prop_assert!(ig >= 0.0 && ig <= h(&refs) + 1e-12);
            if let Some(gr) = gain_ratio(&data, 0).unwrap() {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&gr));
            }
        }
    }
}
