//! Path-dependent TreeSHAP and an exhaustive Shapley oracle.
//!
//! Both condition the same way: a feature outside the coalition sends the
//! walk down both children, weighted by training cover.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Model, Node, Tree};

/// Largest feature count [`brute_force_shap`] will enumerate.
pub const BRUTE_FORCE_MAX_FEATURES: usize = 15;

/// How the raw score maps to a probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Raw score is a log-odds margin.
    Logit,
    /// Raw score already is a probability.
    Identity,
}

impl Link {
    pub fn probability(self, raw: f64) -> f64 {
        match self {
            Link::Logit => crate::learners::sigmoid(raw),
            Link::Identity => raw,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    /// One attribution per model feature, in model order.
    pub phi: Vec<f64>,
    /// Expected raw score under the training cover.
    pub base_value: f64,
    pub raw_output: f64,
    pub link: Link,
}

impl ShapExplanation {
    /// `|base + Σφ − raw|`.
    pub fn additivity_error(&self) -> f64 {
        (self.base_value + self.phi.iter().sum::<f64>() - self.raw_output).abs()
    }
}

/// The trees of a model plus the constant added to their sum.
pub(crate) struct Ensemble<'a> {
    pub offset: f64,
    pub trees: &'a [Tree],
    pub link: Link,
}

pub(crate) fn ensemble(model: &Model) -> Result<Ensemble<'_>> {
    match model {
        Model::Gbm(m) => Ok(Ensemble {
            offset: m.base_score,
            trees: &m.trees,
            link: Link::Logit,
        }),
        Model::DecisionTree(m) => Ok(Ensemble {
            offset: 0.0,
            trees: std::slice::from_ref(&m.tree),
            link: Link::Identity,
        }),
        Model::Constant(m) => Ok(Ensemble {
            offset: m.probability,
            trees: &[],
            link: Link::Identity,
        }),
        Model::LogReg(_) => Err(Error::Precondition("TreeSHAP needs a tree model; got logreg".into())),
    }
}

fn check_tree(tree: &Tree) -> Result<()> {
    if let Some(i) = tree.nodes().iter().position(|n| n.cover().is_nan() || n.cover() <= 0.0) {
        return Err(Error::InvalidModel(format!("node {i} has zero cover")));
    }
    Ok(())
}

fn check_input(model: &Model, x: &[f64]) -> Result<()> {
    let p = model.feature_names().len();
    if x.len() != p {
        return Err(Error::Precondition(format!(
            "input has {} values, model has {p} features",
            x.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Default)]
struct PathElement {
    feature: usize,
    zero: f64,
    one: f64,
    weight: f64,
}

const NO_FEATURE: usize = usize::MAX;

fn extend(path: &mut [PathElement], depth: usize, zero: f64, one: f64, feature: usize) {
    path[depth] = PathElement {
        feature,
        zero,
        one,
        weight: if depth == 0 { 1.0 } else { 0.0 },
    };
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / d1;
        path[i].weight = zero * path[i].weight * (depth - i) as f64 / d1;
    }
}

fn unwind(path: &mut [PathElement], depth: usize, index: usize) {
    let PathElement { zero, one, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * d1 / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].weight = path[i].weight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
}

fn unwound_sum(path: &[PathElement], depth: usize, index: usize) -> f64 {
    let PathElement { zero, one, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (depth - i) as f64 / d1;
        } else {
            total += path[i].weight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

struct Walk<'a> {
    nodes: &'a [Node],
    x: &'a [f64],
    phi: &'a mut [f64],
}

impl Walk<'_> {
    /// `buf[..len]` holds the parent's path; this node's path is built in
    /// `buf[len..]`.
    fn recurse(&mut self, node: usize, buf: &mut [PathElement], len: usize, zero: f64, one: f64, feature: usize) {
        let (parent, rest) = buf.split_at_mut(len);
        rest[..len].copy_from_slice(parent);
        extend(rest, len, zero, one, feature);
        match self.nodes[node] {
            Node::Leaf { value, .. } => {
                for i in 1..=len {
                    let w = unwound_sum(rest, len, i);
                    let el = rest[i];
                    self.phi[el.feature] += w * (el.one - el.zero) * value;
                }
            }
            Node::Split {
                feature: f,
                threshold,
                left,
                right,
                cover,
            } => {
                let (hot, cold) = if self.x[f] <= threshold {
                    (left, right)
                } else {
                    (right, left)
                };
                let hot_zero = self.nodes[hot].cover() / cover;
                let cold_zero = self.nodes[cold].cover() / cover;
                let (mut in_zero, mut in_one) = (1.0, 1.0);
                let mut plen = len + 1;
                if let Some(k) = (1..=len).find(|&k| rest[k].feature == f) {
                    in_zero = rest[k].zero;
                    in_one = rest[k].one;
                    unwind(rest, len, k);
                    plen = len;
                }
                self.recurse(hot, rest, plen, hot_zero * in_zero, in_one, f);
                self.recurse(cold, rest, plen, cold_zero * in_zero, 0.0, f);
            }
        }
    }
}

/// Adds one tree's attributions for `x` into `phi`. The tree's base value
/// is [`Tree::expected_value`].
pub fn tree_shap(tree: &Tree, x: &[f64], phi: &mut [f64]) {
    let d = tree.depth();
    let mut buf = vec![PathElement::default(); (d + 3) * (d + 4) / 2 + 2];
    Walk {
        nodes: tree.nodes(),
        x,
        phi,
    }
    .recurse(0, &mut buf, 0, 1.0, 1.0, NO_FEATURE);
}

/// Base value of a model: offset plus the trees' expected values.
pub fn base_value(model: &Model) -> Result<f64> {
    let e = ensemble(model)?;
    Ok(e.offset + e.trees.iter().map(Tree::expected_value).sum::<f64>())
}

pub(crate) fn shap_row(e: &Ensemble<'_>, x: &[f64], phi: &mut [f64]) {
    for t in e.trees {
        tree_shap(t, x, phi);
    }
}

/// Exact path-dependent SHAP values of `x`, summed over the model's trees.
/// Additive on the raw (margin) scale.
pub fn treeshap(model: &Model, x: &[f64]) -> Result<ShapExplanation> {
    check_input(model, x)?;
    let e = ensemble(model)?;
    for t in e.trees {
        check_tree(t)?;
    }
    let mut phi = vec![0.0; x.len()];
    shap_row(&e, x, &mut phi);
    Ok(ShapExplanation {
        phi,
        base_value: base_value(model)?,
        raw_output: model.raw_row(x),
        link: e.link,
    })
}

/// Cover-weighted expectation of the tree given only the features in `known`.
fn conditional_value(nodes: &[Node], x: &[f64], known: u32, node: usize) -> f64 {
    match nodes[node] {
        Node::Leaf { value, .. } => value,
        Node::Split {
            feature,
            threshold,
            left,
            right,
            cover,
        } => {
            if known >> feature & 1 == 1 {
                let next = if x[feature] <= threshold { left } else { right };
                conditional_value(nodes, x, known, next)
            } else {
                (nodes[left].cover() * conditional_value(nodes, x, known, left)
                    + nodes[right].cover() * conditional_value(nodes, x, known, right))
                    / cover
            }
        }
    }
}

/// Shapley values by enumerating every coalition. Test oracle; at most
/// [`BRUTE_FORCE_MAX_FEATURES`] features.
pub fn brute_force_shap(model: &Model, x: &[f64]) -> Result<ShapExplanation> {
    check_input(model, x)?;
    let n = x.len();
    if n > BRUTE_FORCE_MAX_FEATURES {
        return Err(Error::Precondition(format!(
            "brute-force Shapley supports at most {BRUTE_FORCE_MAX_FEATURES} features, got {n}"
        )));
    }
    let e = ensemble(model)?;
    for t in e.trees {
        check_tree(t)?;
    }
    let value: Vec<f64> = (0..1u32 << n)
        .map(|s| {
            e.offset
                + e.trees
                    .iter()
                    .map(|t| conditional_value(t.nodes(), x, s, 0))
                    .sum::<f64>()
        })
        .collect();
    // weight(s) = s! (n - s - 1)! / n!
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let weight: Vec<f64> = (0..n).map(|s| fact(s) * fact(n - s - 1) / fact(n)).collect();
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u32 << i;
        for s in (0..1u32 << n).filter(|s| s & bit == 0) {
            *p += weight[s.count_ones() as usize] * (value[(s | bit) as usize] - value[s as usize]);
        }
    }
    Ok(ShapExplanation {
        phi,
        base_value: value[0],
        raw_output: value[(1usize << n) - 1],
        link: e.link,
    })
}
