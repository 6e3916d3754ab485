//! Indented text form of a tree.
//!
//! ```text
//! decision-tree v1
//! features<TAB>outlook<TAB>humidity
//! classes<TAB>no<TAB>yes
//! root (5,9) n=14
//! outlook=overcast: yes (0,4) n=4
//! outlook=sunny (3,2) n=5
//! |   humidity=high: no (3,0) n=3
//! |   humidity=normal: yes (0,2) n=2
//! ```
//!
//! Each line below `root` is one branch: `feature=value`, then `: class` for
//! a leaf, then the class counts and training count. Children follow their
//! parent one `|   ` deeper. A leaf root reads `root: class (counts) n=N`.

use crate::error::{Error, Result};

use super::{DecisionTreeModel, Node};

const INDENT: &str = "|   ";

fn counts_text(counts: &[u64]) -> String {
    let parts: Vec<String> = counts.iter().map(u64::to_string).collect();
    format!("({})", parts.join(","))
}

fn write_node(out: &mut String, model: &DecisionTreeModel, node: &Node, depth: usize) {
    if let Node::Internal {
        feature, children, ..
    } = node
    {
        let name = &model.feature_names[*feature];
        for (value, child) in children {
            out.push_str(&INDENT.repeat(depth));
            out.push_str(&format!("{name}={value}"));
            push_tail(out, model, child);
            write_node(out, model, child, depth + 1);
        }
    }
}

fn push_tail(out: &mut String, model: &DecisionTreeModel, node: &Node) {
    if let Node::Leaf { class, .. } = node {
        out.push_str(&format!(": {}", model.class_names[*class]));
    }
    out.push_str(&format!(
        " {} n={}\n",
        counts_text(node.counts()),
        node.training_count()
    ));
}

pub fn write_tree(model: &DecisionTreeModel) -> String {
    let mut out = String::from("decision-tree v1\n");
    out.push_str(&format!("features\t{}\n", model.feature_names.join("\t")));
    out.push_str(&format!("classes\t{}\n", model.class_names.join("\t")));
    out.push_str("root");
    push_tail(&mut out, model, &model.root);
    write_node(&mut out, model, &model.root, 0);
    out
}

struct Line {
    depth: usize,
    feature: Option<usize>,
    value: String,
    class: Option<usize>,
    counts: Vec<u64>,
    n: u64,
}

fn parse_line(model: &DecisionTreeModel, no: usize, raw: &str) -> Result<Line> {
    let bad = |m: &str| Error::Format(format!("line {no}: {m}"));
    let mut depth = 0;
    let mut rest = raw;
    while let Some(r) = rest.strip_prefix(INDENT) {
        depth += 1;
        rest = r;
    }
    let (head, n) = rest.rsplit_once(" n=").ok_or_else(|| bad("missing n="))?;
    let n: u64 = n.parse().map_err(|_| bad("bad training count"))?;
    let (head, counts) = head
        .rsplit_once(" (")
        .ok_or_else(|| bad("missing counts"))?;
    let counts: Vec<u64> = counts
        .strip_suffix(')')
        .ok_or_else(|| bad("unclosed counts"))?
        .split(',')
        .map(|c| c.parse().map_err(|_| bad("bad count")))
        .collect::<Result<_>>()?;
    if counts.len() != model.class_names.len() {
        return Err(bad("count arity differs from class count"));
    }
    let (head, class) = match head.split_once(": ") {
        Some((h, c)) => {
            let idx = model
                .class_names
                .iter()
                .position(|k| k == c)
                .ok_or_else(|| bad("unknown class"))?;
            (h, Some(idx))
        }
        None => (head, None),
    };
    let (feature, value) = if head == "root" {
        (None, String::new())
    } else {
        let (f, v) = head
            .split_once('=')
            .ok_or_else(|| bad("expected feature=value"))?;
        let idx = model
            .feature_names
            .iter()
            .position(|k| k == f)
            .ok_or_else(|| bad("unknown feature"))?;
        (Some(idx), v.to_string())
    };
    Ok(Line {
        depth,
        feature,
        value,
        class,
        counts,
        n,
    })
}

fn assemble(lines: &[Line], pos: &mut usize, depth: usize, this: &Line) -> Result<Node> {
    if let Some(class) = this.class {
        return Ok(Node::Leaf {
            class,
            counts: this.counts.clone(),
            n: this.n,
        });
    }
    let mut children = Vec::new();
    let mut feature = None;
    while *pos < lines.len() && lines[*pos].depth == depth {
        let line = &lines[*pos];
        *pos += 1;
        let f = line
            .feature
            .ok_or_else(|| Error::Format("nested root line".into()))?;
        if feature.is_some_and(|g| g != f) {
            return Err(Error::Format("siblings split on different features".into()));
        }
        feature = Some(f);
        let child = assemble(lines, pos, depth + 1, line)?;
        children.push((line.value.clone(), child));
    }
    let feature = feature.ok_or_else(|| Error::Format("internal node without branches".into()))?;
    Ok(Node::Internal {
        feature,
        counts: this.counts.clone(),
        n: this.n,
        children,
    })
}

pub fn read_tree(s: &str) -> Result<DecisionTreeModel> {
    let mut lines = s.lines();
    if lines.next() != Some("decision-tree v1") {
        return Err(Error::Format("expected `decision-tree v1` header".into()));
    }
    let mut header = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().unwrap_or_default();
        let rest = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('\t'))
            .ok_or_else(|| Error::Format(format!("expected `{key}` line")))?;
        Ok(rest
            .split('\t')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect())
    };
    let feature_names = header("features")?;
    let class_names = header("classes")?;
    let mut model = DecisionTreeModel {
        feature_names,
        class_names,
        root: Node::Leaf {
            class: 0,
            counts: Vec::new(),
            n: 0,
        },
    };
    let parsed: Vec<Line> = lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_line(&model, i + 4, l))
        .collect::<Result<_>>()?;
    let (root, rest) = parsed
        .split_first()
        .ok_or_else(|| Error::Format("missing root line".into()))?;
    if root.feature.is_some() || root.depth != 0 {
        return Err(Error::Format("first node line must be `root`".into()));
    }
    let mut pos = 0;
    model.root = assemble(rest, &mut pos, 0, root)?;
    if pos != rest.len() {
        return Err(Error::Format(format!(
            "unexpected indentation at node {}",
            pos + 2
        )));
    }
    Ok(model)
}
