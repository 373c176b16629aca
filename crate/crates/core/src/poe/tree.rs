use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies one trained expert: stream name and index within the stream.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LeafKey {
    pub stream: String,
    pub expert: usize,
}

impl LeafKey {
    pub fn new(stream: impl Into<String>, expert: usize) -> Self {
        Self {
            stream: stream.into(),
            expert,
        }
    }
}

impl std::fmt::Display for LeafKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.stream, self.expert)
    }
}

/// A fusion hierarchy. In JSON, internal nodes are
/// `{"label": str, "children": [...]}` and leaves `{"stream": str, "expert": int}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FusionNode {
    Leaf(LeafKey),
    Internal { label: String, children: Vec<FusionNode> },
}

impl FusionNode {
    pub fn leaf(stream: impl Into<String>, expert: usize) -> Self {
        FusionNode::Leaf(LeafKey::new(stream, expert))
    }

    pub fn internal(label: impl Into<String>, children: Vec<FusionNode>) -> Self {
        FusionNode::Internal {
            label: label.into(),
            children,
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a LeafKey>) {
        match self {
            FusionNode::Leaf(k) => out.push(k),
            FusionNode::Internal { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FusionTree {
    pub root: FusionNode,
}

impl FusionTree {
    pub fn new(root: FusionNode) -> Result<Self> {
        let tree = Self { root };
        tree.validate()?;
        Ok(tree)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let root: FusionNode =
            serde_json::from_str(text).map_err(|e| Error::Tree(format!("invalid JSON: {e}")))?;
        Self::new(root)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Tree(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.root).expect("tree serializes")
    }

    /// Leaves in depth-first declared order.
    pub fn leaves(&self) -> Vec<&LeafKey> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    /// Labels of internal nodes, pre-order.
    pub fn internal_labels(&self) -> Vec<&str> {
        fn walk<'a>(n: &'a FusionNode, out: &mut Vec<&'a str>) {
            if let FusionNode::Internal { label, children } = n {
                out.push(label);
                children.iter().for_each(|c| walk(c, out));
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Internal nodes need at least one child and unique labels; no leaf may
    /// appear twice.
    pub fn validate(&self) -> Result<()> {
        fn check_children(n: &FusionNode) -> Result<()> {
            if let FusionNode::Internal { label, children } = n {
                if children.is_empty() {
                    return Err(Error::Tree(format!("node {label:?} has no children")));
                }
                children.iter().try_for_each(check_children)?;
            }
            Ok(())
        }
        check_children(&self.root)?;
        let mut seen = BTreeSet::new();
        for leaf in self.leaves() {
            if !seen.insert(leaf) {
                return Err(Error::Tree(format!("leaf {leaf} appears more than once")));
            }
        }
        let mut labels = BTreeSet::new();
        for label in self.internal_labels() {
            if !labels.insert(label) {
                return Err(Error::Tree(format!("duplicate node label {label:?}")));
            }
        }
        Ok(())
    }

    /// Checks every leaf against the available experts.
    pub fn resolve(&self, has_expert: impl Fn(&LeafKey) -> bool) -> Result<()> {
        match self.leaves().into_iter().find(|k| !has_expert(k)) {
            Some(k) => Err(Error::Tree(format!("leaf {k} does not name a trained expert"))),
            None => Ok(()),
        }
    }

    /// Two-level layout: one `Fusion-1/<stream>` node over each stream's
    /// experts, `Fusion-2/<group>` nodes over stream groups, and a
    /// `Fusion-all` root.
    pub fn layered(groups: &[(&str, Vec<(&str, usize)>)]) -> Result<Self> {
        let root = FusionNode::internal(
            "Fusion-all",
            groups
                .iter()
                .map(|(group, streams)| {
                    FusionNode::internal(
                        format!("Fusion-2/{group}"),
                        streams
                            .iter()
                            .map(|(stream, k)| {
                                FusionNode::internal(
                                    format!("Fusion-1/{stream}"),
                                    (0..*k).map(|e| FusionNode::leaf(*stream, e)).collect(),
                                )
                            })
                            .collect(),
                    )
                })
                .collect(),
        );
        Self::new(root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_json_shape() {
        let tree = FusionTree::from_json(
            r#"{"label": "root", "children": [
                {"stream": "rgb", "expert": 0},
                {"label": "inner", "children": [{"stream": "flow", "expert": 1}]}
            ]}"#,
        )
        .unwrap();
        assert_eq!(tree.leaves().len(), 2);
        assert_eq!(tree.internal_labels(), vec!["root", "inner"]);
        let again = FusionTree::from_json(&tree.to_json()).unwrap();
        assert_eq!(again, tree);
    }

    #[test]
    fn rejects_duplicate_leaf() {
        let err = FusionTree::from_json(
            r#"{"label": "r", "children": [{"stream": "a", "expert": 0}, {"stream": "a", "expert": 0}]}"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_empty_node_and_garbage() {
        assert!(FusionTree::from_json(r#"{"label": "r", "children": []}"#).is_err());
        assert!(FusionTree::from_json(r#"{"label": "r"}"#).is_err());
        assert!(FusionTree::from_json(r#"[1, 2]"#).is_err());
    }

    #[test]
    fn resolve_reports_unknown_leaf() {
        let tree = FusionTree::new(FusionNode::internal("r", vec![FusionNode::leaf("a", 3)])).unwrap();
        let err = tree.resolve(|k| k.expert < 3).unwrap_err();
        assert!(err.to_string().contains("a#3"));
    }

    #[test]
    fn two_level_layout() {
        let tree = FusionTree::layered(&[
            ("Inception", vec![("Inception-RGB", 7), ("Inception-Flow", 7)]),
            ("ResNet", vec![("ResNet-RGB", 7), ("ResNet-Flow", 7)]),
        ])
        .unwrap();
        assert_eq!(tree.leaves().len(), 28);
        let labels = tree.internal_labels();
        assert_eq!(labels.len(), 7);
        assert_eq!(labels.iter().filter(|l| l.starts_with("Fusion-1/")).count(), 4);
        assert_eq!(labels.iter().filter(|l| l.starts_with("Fusion-2/")).count(), 2);
    }
}
