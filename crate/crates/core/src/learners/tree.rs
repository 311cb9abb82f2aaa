//! Binary regression/classification trees stored as a flat pre-order list.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One node; children of a split are referenced by position in
/// [`Tree::nodes`]. `cover` is the training weight that reached the node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        cover: f64,
    },
    Leaf {
        value: f64,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match *self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => cover,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct Tree {
    nodes: Vec<Node>,
}

impl TryFrom<Vec<Node>> for Tree {
    type Error = Error;
    fn try_from(nodes: Vec<Node>) -> Result<Self> {
        Tree::from_nodes(nodes)
    }
}

impl From<Tree> for Vec<Node> {
    fn from(t: Tree) -> Self {
        t.nodes
    }
}

impl Tree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value, cover }],
        }
    }

    /// Checks the pre-order layout: the root is node 0, a split's left child
    /// directly follows it, every node is reached exactly once.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidModel("tree has no nodes".into()));
        }
        let mut next = 0usize;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i != next {
                return Err(Error::InvalidModel(format!(
                    "node {i} is not in pre-order position {next}"
                )));
            }
            next += 1;
            let node = nodes
                .get(i)
                .ok_or_else(|| Error::InvalidModel(format!("child index {i} out of range")))?;
            if !(node.cover() > 0.0 && node.cover().is_finite()) {
                return Err(Error::InvalidModel(format!("node {i} has cover {}", node.cover())));
            }
            match *node {
                Node::Split {
                    threshold, left, right, ..
                } => {
                    if !threshold.is_finite() {
                        return Err(Error::InvalidModel(format!("node {i} has a non-finite threshold")));
                    }
                    stack.push(right);
                    stack.push(left);
                }
                Node::Leaf { value, .. } => {
                    if !value.is_finite() {
                        return Err(Error::InvalidModel(format!("leaf {i} has a non-finite value")));
                    }
                }
            }
        }
        if next != nodes.len() {
            return Err(Error::InvalidModel(format!(
                "{} of {} nodes unreachable",
                nodes.len() - next,
                nodes.len()
            )));
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    /// Largest feature index used by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    /// Cover-weighted mean leaf value.
    pub fn expected_value(&self) -> f64 {
        let total = self.nodes[0].cover();
        self.nodes
            .iter()
            .map(|n| match *n {
                Node::Leaf { value, cover } => value * cover,
                Node::Split { .. } => 0.0,
            })
            .sum::<f64>()
            / total
    }
}
