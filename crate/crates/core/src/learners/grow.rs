//! Level-wise exact split search shared by CART and Newton boosting.
//!
//! Every node is scored as `A^2 / (B + lambda)` over per-row statistics
//! `(a, b)`. For Gini, `a = w*y` and `b = w` with `lambda = 0`; for boosting
//! `a` and `b` are the gradient and hessian. Candidate thresholds are the
//! midpoints between consecutive distinct values inside a node, so the
//! search is exact. Columns with few distinct values are scanned through
//! per-bin sums over the rows outside the most common bin.

use rayon::prelude::*;

use super::tree::{Node, Tree};
use crate::features::FeatureMatrix;

const MAX_BINS: usize = 256;
const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Stats {
    pub a: f64,
    pub b: f64,
    /// Training weight, reported as node cover.
    pub w: f64,
    pub n: usize,
}

impl Stats {
    fn add(&mut self, o: &Stats) {
        self.a += o.a;
        self.b += o.b;
        self.w += o.w;
        self.n += o.n;
    }

    fn minus(&self, o: &Stats) -> Stats {
        Stats {
            a: self.a - o.a,
            b: self.b - o.b,
            w: self.w - o.w,
            n: self.n - o.n,
        }
    }
}

enum ColumnIndex {
    /// Row indices sorted by value (ties by row).
    Sorted { order: Vec<u32>, values: Vec<f64> },
    Binned {
        bin_values: Vec<f64>,
        bins: Vec<u8>,
        default_bin: u8,
        /// Rows outside `default_bin`, ascending.
        others: Vec<u32>,
    },
}

/// Per-column indexes built once per fit and reused by every tree.
pub(crate) struct Columns {
    cols: Vec<ColumnIndex>,
}

impl Columns {
    pub fn new(x: &FeatureMatrix) -> Self {
        let (n, p) = (x.n_rows(), x.n_cols());
        let cols = (0..p)
            .into_par_iter()
            .map(|j| {
                let values: Vec<f64> = (0..n).map(|i| x.get(i, j)).collect();
                let mut distinct = values.clone();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup();
                if distinct.len() <= MAX_BINS {
                    let bins: Vec<u8> = values
                        .iter()
                        .map(|v| distinct.partition_point(|d| d < v) as u8)
                        .collect();
                    let mut counts = vec![0usize; distinct.len()];
                    for &b in &bins {
                        counts[b as usize] += 1;
                    }
                    let default_bin = (0..counts.len())
                        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
                        .unwrap_or(0) as u8;
                    let others = (0..n as u32).filter(|&i| bins[i as usize] != default_bin).collect();
                    ColumnIndex::Binned {
                        bin_values: distinct,
                        bins,
                        default_bin,
                        others,
                    }
                } else {
                    let mut order: Vec<u32> = (0..n as u32).collect();
                    order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]).then(a.cmp(&b)));
                    ColumnIndex::Sorted { order, values }
                }
            })
            .collect();
        Columns { cols }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_rows: usize,
    /// Minimum `B` in each child.
    pub min_b: f64,
    pub lambda: f64,
    /// A split is taken only if its gain exceeds this.
    pub min_gain: f64,
    /// Gain = `gain_scale * (score_L + score_R - score_parent)`.
    pub gain_scale: f64,
}

impl GrowParams {
    fn score(&self, s: &Stats) -> f64 {
        let d = s.b + self.lambda;
        if d > 0.0 {
            s.a * s.a / d
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    left: Stats,
}

struct Active {
    node: usize,
    total: Stats,
    parent_score: f64,
}

struct Evaluator<'a> {
    params: &'a GrowParams,
    active: &'a [Active],
}

impl Evaluator<'_> {
    fn consider(&self, best: &mut Option<Candidate>, slot: usize, feature: usize, lo: f64, hi: f64, left: Stats) {
        let total = &self.active[slot].total;
        let right = total.minus(&left);
        let p = self.params;
        if left.n < p.min_rows || right.n < p.min_rows || left.b < p.min_b || right.b < p.min_b {
            return;
        }
        let gain = p.gain_scale * (p.score(&left) + p.score(&right) - self.active[slot].parent_score);
        if gain > p.min_gain && best.is_none_or(|b| gain > b.gain) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            *best = Some(Candidate {
                gain,
                feature,
                threshold,
                left,
            });
        }
    }
}

/// Grown tree plus the pre-order leaf each training row landed in.
pub(crate) struct Grown {
    pub tree: Tree,
    pub row_leaf: Vec<usize>,
}

/// (feature, threshold, left, right) of a split arena node.
type ArenaSplit = (usize, f64, usize, usize);

/// Grows one tree; `leaf_value` maps a leaf's statistics to its value.
pub(crate) fn grow(
    x: &FeatureMatrix,
    cols: &Columns,
    rows: &[Stats],
    params: &GrowParams,
    leaf_value: impl Fn(&Stats) -> f64,
) -> Grown {
    let n = rows.len();
    let mut total = Stats::default();
    for s in rows {
        total.add(s);
    }
    // arena in creation (breadth-first) order
    let mut arena: Vec<(Stats, Option<ArenaSplit>)> = vec![(total, None)];
    let mut node_of = vec![0usize; n];
    let mut slot_of = vec![0u32; n];
    let mut active = vec![Active {
        node: 0,
        total,
        parent_score: params.score(&total),
    }];

    for _depth in 0..params.max_depth {
        if active.is_empty() {
            break;
        }
        let eval = Evaluator {
            params,
            active: &active,
        };
        let per_feature: Vec<Vec<Option<Candidate>>> = cols
            .cols
            .par_iter()
            .enumerate()
            .map(|(j, c)| best_splits(j, c, rows, &slot_of, &eval))
            .collect();
        let mut best: Vec<Option<Candidate>> = vec![None; active.len()];
        for cands in &per_feature {
            for (s, c) in cands.iter().enumerate() {
                if let Some(c) = c {
                    if best[s].is_none_or(|b| c.gain > b.gain) {
                        best[s] = Some(*c);
                    }
                }
            }
        }

        let mut next = Vec::new();
        // per old slot: (feature, threshold, left slot, right slot)
        let mut route: Vec<Option<(usize, f64, u32, u32)>> = vec![None; active.len()];
        for (s, cand) in best.iter().enumerate() {
            let Some(c) = cand else { continue };
            let right = active[s].total.minus(&c.left);
            let (l_node, r_node) = (arena.len(), arena.len() + 1);
            arena.push((c.left, None));
            arena.push((right, None));
            arena[active[s].node].1 = Some((c.feature, c.threshold, l_node, r_node));
            route[s] = Some((c.feature, c.threshold, next.len() as u32, next.len() as u32 + 1));
            next.push(Active {
                node: l_node,
                total: c.left,
                parent_score: params.score(&c.left),
            });
            next.push(Active {
                node: r_node,
                total: right,
                parent_score: params.score(&right),
            });
        }
        for i in 0..n {
            let s = slot_of[i];
            if s == NO_SLOT {
                continue;
            }
            match route[s as usize] {
                Some((f, t, l, r)) => {
                    let new = if x.get(i, f) <= t { l } else { r };
                    slot_of[i] = new;
                    node_of[i] = next[new as usize].node;
                }
                None => slot_of[i] = NO_SLOT,
            }
        }
        active = next;
    }

    // renumber breadth-first arena into pre-order
    let mut order = vec![usize::MAX; arena.len()];
    let mut nodes = Vec::with_capacity(arena.len());
    let mut stack = vec![0usize];
    let mut pre = Vec::with_capacity(arena.len());
    while let Some(a) = stack.pop() {
        order[a] = pre.len();
        pre.push(a);
        if let Some((_, _, l, r)) = arena[a].1 {
            stack.push(r);
            stack.push(l);
        }
    }
    for &a in &pre {
        let (st, split) = &arena[a];
        nodes.push(match *split {
            Some((feature, threshold, l, r)) => Node::Split {
                feature,
                threshold,
                left: order[l],
                right: order[r],
                cover: st.w,
            },
            None => Node::Leaf {
                value: leaf_value(st),
                cover: st.w,
            },
        });
    }
    Grown {
        tree: Tree::from_nodes(nodes).expect("grown trees are well formed"),
        row_leaf: node_of.into_iter().map(|a| order[a]).collect(),
    }
}

fn best_splits(
    feature: usize,
    col: &ColumnIndex,
    rows: &[Stats],
    slot_of: &[u32],
    eval: &Evaluator<'_>,
) -> Vec<Option<Candidate>> {
    let k = eval.active.len();
    let mut best: Vec<Option<Candidate>> = vec![None; k];
    match col {
        ColumnIndex::Sorted { order, values } => {
            let mut acc = vec![Stats::default(); k];
            let mut last: Vec<Option<f64>> = vec![None; k];
            for &r in order {
                let s = slot_of[r as usize];
                if s == NO_SLOT {
                    continue;
                }
                let s = s as usize;
                let v = values[r as usize];
                if let Some(prev) = last[s] {
                    if v > prev {
                        eval.consider(&mut best[s], s, feature, prev, v, acc[s]);
                    }
                }
                acc[s].add(&rows[r as usize]);
                last[s] = Some(v);
            }
        }
        ColumnIndex::Binned {
            bin_values,
            bins,
            default_bin,
            others,
        } => {
            let nb = bin_values.len();
            if nb < 2 {
                return best;
            }
            let mut acc = vec![Stats::default(); k * nb];
            for &r in others {
                let s = slot_of[r as usize];
                if s == NO_SLOT {
                    continue;
                }
                acc[s as usize * nb + bins[r as usize] as usize].add(&rows[r as usize]);
            }
            for s in 0..k {
                let hist = &mut acc[s * nb..(s + 1) * nb];
                let mut rest = eval.active[s].total;
                for (b, h) in hist.iter().enumerate() {
                    if b != *default_bin as usize {
                        rest = rest.minus(h);
                    }
                }
                hist[*default_bin as usize] = rest;
                let mut left = Stats::default();
                let mut prev: Option<f64> = None;
                for (b, h) in hist.iter().enumerate() {
                    if h.n == 0 {
                        continue;
                    }
                    if let Some(p) = prev {
                        eval.consider(&mut best[s], s, feature, p, bin_values[b], left);
                    }
                    left.add(h);
                    prev = Some(bin_values[b]);
                }
            }
        }
    }
    best
}
