//! Error-based subtree replacement.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{majority, Node};

/// Extra errors predicted for a leaf with `n` instances and `e` training
/// errors: the upper confidence bound on the binomial error rate at
/// confidence `cf`, times `n`, minus `e`.
pub fn added_errors(n: f64, e: f64, cf: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (added_errors(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = Normal::standard().inverse_cdf(1.0 - cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt())
        / (1.0 + z * z / n);
    r * n - e
}

/// Pessimistic error estimate if the node were a single leaf.
pub fn leaf_error(counts: &[u64], n: u64, cf: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let e = (n - counts[majority(counts)]) as f64;
    e + added_errors(n as f64, e, cf)
}

fn subtree_error(node: &Node, cf: f64) -> f64 {
    match node {
        Node::Leaf { counts, n, .. } => leaf_error(counts, *n, cf),
        Node::Internal { children, .. } => children.iter().map(|(_, c)| subtree_error(c, cf)).sum(),
    }
}

/// Bottom-up replacement of any subtree whose estimated error is no lower
/// than that of a single majority leaf.
pub fn prune(node: &Node, cf: f64) -> Node {
    match node {
        Node::Leaf { .. } => node.clone(),
        Node::Internal {
            feature,
            counts,
            n,
            children,
        } => {
            let children: Vec<(String, Node)> = children
                .iter()
                .map(|(v, c)| (v.clone(), prune(c, cf)))
                .collect();
            let pruned = Node::Internal {
                feature: *feature,
                counts: counts.clone(),
                n: *n,
                children,
            };
            if leaf_error(counts, *n, cf) <= subtree_error(&pruned, cf) + 1e-12 {
                Node::Leaf {
                    class: majority(counts),
                    counts: counts.clone(),
                    n: *n,
                }
            } else {
                pruned
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_dataset;
    use super::super::{DecisionTreeModel, TreeParams};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn leaf(counts: [u64; 2]) -> Node {
        Node::Leaf {
            class: majority(&counts),
            counts: counts.to_vec(),
            n: counts.iter().sum(),
        }
    }

    #[test]
    fn added_errors_hand_values() {
        // Zero errors: n * (1 - cf^(1/n)).
        assert!((added_errors(10.0, 0.0, 0.25) - 10.0 * (1.0 - 0.25f64.powf(0.1))).abs() < 1e-12);
        // e = 1 of 5 at cf 0.25, normal approximation with z = 0.6744897501960817.
        let z = 0.674_489_750_196_081_7_f64;
        let f = 1.5 / 5.0;
        let r = (f + z * z / 10.0 + z * (f / 5.0 - f * f / 5.0 + z * z / 100.0).sqrt())
            / (1.0 + z * z / 5.0);
        assert!((added_errors(5.0, 1.0, 0.25) - (r * 5.0 - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn uninformative_split_collapses() {
        // Parent 8+/2-, both children 4+/1-.
        let tree = Node::Internal {
            feature: 0,
            counts: vec![8, 2],
            n: 10,
            children: vec![("a".into(), leaf([4, 1])), ("b".into(), leaf([4, 1]))],
        };
        let parent = leaf_error(&[8, 2], 10, 0.25);
        let child = leaf_error(&[4, 1], 5, 0.25);
        assert!(parent <= 2.0 * child);
        assert_eq!(prune(&tree, 0.25), leaf([8, 2]));
    }

    #[test]
    fn pure_tree_is_unchanged() {
        let tree = Node::Internal {
            feature: 0,
            counts: vec![20, 20],
            n: 40,
            children: vec![("a".into(), leaf([20, 0])), ("b".into(), leaf([0, 20]))],
        };
        assert_eq!(prune(&tree, 0.25), tree);
    }

    #[test]
    fn higher_confidence_prunes_less() {
        let names = ["a", "b", "c", "d", "e"];
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_dataset(&mut rng, 400, 5, 3);
            let grown =
                DecisionTreeModel::grow(&names, &["no", "yes"], &data, &TreeParams::default())
                    .unwrap();
            let low = grown.pruned(0.25).size();
            let high = grown.pruned(0.4999).size();
            assert!(
                low <= high && high <= grown.size(),
                "seed {seed}: {low} {high} {}",
                grown.size()
            );
        }
    }

    #[test]
    fn pruning_only_changes_pruned_regions() {
        let names = ["a", "b", "c", "d"];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = random_dataset(&mut rng, 300, 4, 3);
        let grown =
            DecisionTreeModel::grow(&names, &["no", "yes"], &data, &TreeParams::default()).unwrap();
        let pruned = grown.pruned(0.25);
        for inst in &data {
            let (mut g, mut p) = (&grown.root, &pruned.root);
            loop {
                match (g, p) {
                    (
                        Node::Internal {
                            feature,
                            children: gc,
                            ..
                        },
                        Node::Internal { children: pc, .. },
                    ) => {
                        let v = &inst.values[*feature];
                        let i = gc.iter().position(|(k, _)| k == v).unwrap();
                        g = &gc[i].1;
                        p = &pc[i].1;
                    }
                    (Node::Leaf { class: a, .. }, Node::Leaf { class: b, .. }) => {
                        assert_eq!(a, b);
                        break;
                    }
                    // Pruned region.
                    _ => break,
                }
            }
        }
    }
}
