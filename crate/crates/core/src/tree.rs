//! Randomized decision trees with per-node impurity bookkeeping.
//!
//! A tree is stored as a flat arena of [`Node`]s with parent links; node 0 is
//! the root. Every internal node records `delta = p(t) Δi(s, t)`, the weighted
//! impurity decrease of its split, from which all impurity-based importances
//! are derived.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::distributions::{ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Candidates whose impurity decreases differ by less than this are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Above this many observed values, unordered subset enumeration falls back
/// to the ordering of values by output mean (exact for binary outputs and
/// for the variance impurity).
pub const MAX_SUBSET_VALUES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Impurity {
    Shannon,
    Gini,
    Variance,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFamily {
    #[default]
    MultiwayExhaustive,
    BinaryOrdered,
    BinaryUnordered,
    BinaryOneVsAll,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    #[default]
    Best,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// Number of variables drawn at each node; `None` means all of them.
    pub k: Option<usize>,
    /// Maximal depth (the root has depth 0); `None` means unlimited.
    pub max_depth: Option<usize>,
    /// Nodes with fewer rows than this are not split.
    pub n_min: usize,
    /// `None` picks Shannon entropy for a categorical output and variance
    /// for a numeric one.
    pub impurity: Option<Impurity>,
    pub split_family: SplitFamily,
    pub split_strategy: SplitStrategy,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            k: None,
            max_depth: None,
            n_min: 2,
            impurity: None,
            split_family: SplitFamily::MultiwayExhaustive,
            split_strategy: SplitStrategy::Best,
            seed: 0,
        }
    }
}

impl TreeConfig {
    /// Totally randomized multiway tree: `K = 1`, no output-driven choice.
    pub fn totally_randomized() -> Self {
        TreeConfig {
            k: Some(1),
            split_strategy: SplitStrategy::Random,
            ..TreeConfig::default()
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.max_depth = Some(depth);
        self
    }

    pub fn with_family(mut self, family: SplitFamily) -> Self {
        self.split_family = family;
        self
    }

    pub fn with_strategy(mut self, strategy: SplitStrategy) -> Self {
        self.split_strategy = strategy;
        self
    }

    pub fn with_impurity(mut self, impurity: Impurity) -> Self {
        self.impurity = Some(impurity);
        self
    }

    /// Checks the configuration against a dataset and resolves the default
    /// impurity.
    pub fn resolve(&self, dataset: &Dataset, features: &[usize]) -> Result<Impurity> {
        if self.k == Some(0) {
            return Err(Error::config("K must be at least 1"));
        }
        if self.n_min < 2 {
            return Err(Error::config("n_min must be at least 2"));
        }
        let classification = dataset.is_classification();
        let impurity = self.impurity.unwrap_or(if classification {
            Impurity::Shannon
        } else {
            Impurity::Variance
        });
        match (impurity, classification) {
            (Impurity::Variance, true) => {
                return Err(Error::config("variance impurity needs a numeric output"))
            }
            (Impurity::Shannon | Impurity::Gini, false) => {
                return Err(Error::config("entropy and gini impurities need a categorical output"))
            }
            _ => {}
        }
        if self.split_family == SplitFamily::MultiwayExhaustive {
            if let Some(&j) = features
                .iter()
                .find(|&&j| !dataset.column(j).kind.is_categorical())
            {
                return Err(Error::config(format!(
                    "multiway splits need categorical inputs; column {} is numeric",
                    dataset.column(j).name
                )));
            }
        }
        Ok(impurity)
    }
}

/// Sufficient statistics of the output over a set of weighted rows.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Stats {
    Class(Vec<f64>),
    Reg { w: f64, s: f64, ss: f64 },
}

impl Stats {
    pub(crate) fn empty(n_classes: Option<usize>) -> Self {
        match n_classes {
            Some(c) => Stats::Class(vec![0.0; c]),
            None => Stats::Reg {
                w: 0.0,
                s: 0.0,
                ss: 0.0,
            },
        }
    }

    pub(crate) fn add(&mut self, y: f64, weight: f64) {
        match self {
            Stats::Class(c) => c[y as usize] += weight,
            Stats::Reg { w, s, ss } => {
                *w += weight;
                *s += weight * y;
                *ss += weight * y * y;
            }
        }
    }

    fn merge(&mut self, other: &Stats) {
        match (self, other) {
            (Stats::Class(a), Stats::Class(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
            (Stats::Reg { w, s, ss }, Stats::Reg { w: w2, s: s2, ss: ss2 }) => {
                *w += w2;
                *s += s2;
                *ss += ss2;
            }
            _ => unreachable!("mixed statistics"),
        }
    }

    fn subtract(&self, other: &Stats) -> Stats {
        match (self, other) {
            (Stats::Class(a), Stats::Class(b)) => {
                Stats::Class(a.iter().zip(b).map(|(x, y)| (x - y).max(0.0)).collect())
            }
            (Stats::Reg { w, s, ss }, Stats::Reg { w: w2, s: s2, ss: ss2 }) => Stats::Reg {
                w: (w - w2).max(0.0),
                s: s - s2,
                ss: ss - ss2,
            },
            _ => unreachable!("mixed statistics"),
        }
    }

    pub(crate) fn weight(&self) -> f64 {
        match self {
            Stats::Class(c) => c.iter().sum(),
            Stats::Reg { w, .. } => *w,
        }
    }

    pub(crate) fn impurity(&self, kind: Impurity) -> f64 {
        let total = self.weight();
        if total <= 0.0 {
            return 0.0;
        }
        match (self, kind) {
            (Stats::Class(c), Impurity::Shannon) => c
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| {
                    let q = x / total;
                    -q * q.log2()
                })
                .sum::<f64>()
                .max(0.0),
            (Stats::Class(c), Impurity::Gini) => {
                (1.0 - c.iter().map(|&x| (x / total).powi(2)).sum::<f64>()).max(0.0)
            }
            (Stats::Reg { w, s, ss }, _) => {
                let mean = s / w;
                (ss / w - mean * mean).max(0.0)
            }
            (Stats::Class(_), Impurity::Variance) => unreachable!("checked by resolve"),
        }
    }

    fn value(&self) -> NodeValue {
        match self {
            Stats::Class(c) => {
                let total: f64 = c.iter().sum();
                NodeValue::Classes(c.iter().map(|x| x / total).collect())
            }
            Stats::Reg { w, s, .. } => NodeValue::Mean(s / w),
        }
    }

    /// Sort key for the mean-ordering fallback of unordered splits.
    fn order_key(&self) -> f64 {
        match self {
            Stats::Class(c) => c.first().copied().unwrap_or(0.0) / self.weight().max(f64::MIN_POSITIVE),
            Stats::Reg { w, s, .. } => s / w,
        }
    }
}

/// Impurity of a weighted sample summary: class counts for `Shannon` and
/// `Gini`, raw values for `Variance`.
pub fn impurity(summary: &[f64], kind: Impurity) -> Result<f64> {
    if summary.is_empty() {
        return Err(Error::Empty("impurity of an empty sample".into()));
    }
    let stats = match kind {
        Impurity::Variance => {
            let mut s = Stats::empty(None);
            summary.iter().for_each(|&y| s.add(y, 1.0));
            s
        }
        _ => Stats::Class(summary.to_vec()),
    };
    if stats.weight() <= 0.0 {
        return Err(Error::Empty("impurity of an empty sample".into()));
    }
    Ok(stats.impurity(kind))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeValue {
    /// Class distribution of the node (sums to one).
    Classes(Vec<f64>),
    Mean(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// One child per observed value, in the order of `values`.
    Multiway { values: Vec<u32> },
    /// Left child takes `x <= value`.
    Threshold { value: f64 },
    /// Left child takes the values in `left`, right child those in `right`.
    Subset { left: Vec<u32>, right: Vec<u32> },
}

impl SplitRule {
    fn n_children(&self) -> usize {
        match self {
            SplitRule::Multiway { values } => values.len(),
            _ => 2,
        }
    }

    /// Child position for value `x`, or `None` for an unseen categorical
    /// value.
    fn route(&self, x: f64) -> Option<usize> {
        match self {
            SplitRule::Multiway { values } => values.iter().position(|&v| f64::from(v) == x),
            SplitRule::Threshold { value } => Some(usize::from(x > *value)),
            SplitRule::Subset { left, right } => {
                if left.iter().any(|&v| f64::from(v) == x) {
                    Some(0)
                } else if right.iter().any(|&v| f64::from(v) == x) {
                    Some(1)
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    /// Dataset column tested at the node.
    pub feature: usize,
    pub rule: SplitRule,
    pub children: Vec<usize>,
    /// Child receiving unseen categorical values: the one with the largest
    /// training mass.
    pub fallback: usize,
    /// `Δi(s, t)`.
    pub decrease: f64,
    /// `p(t) Δi(s, t)`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<usize>,
    pub depth: usize,
    /// Number of training rows (with bootstrap multiplicity).
    pub n_samples: usize,
    /// Fraction `p(t)` of the root's training mass.
    pub weight: f64,
    pub impurity: f64,
    pub value: NodeValue,
    pub split: Option<Split>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    config: TreeConfig,
    impurity: Impurity,
    n_columns: usize,
    importances: Vec<f64>,
    split_counts: Vec<usize>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn impurity_kind(&self) -> Impurity {
        self.impurity
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    /// Sum of `p(t) Δi(s, t)` over the nodes splitting on each column.
    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    /// Number of nodes splitting on each column.
    pub fn split_counts(&self) -> &[usize] {
        &self.split_counts
    }

    pub fn n_internal(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// `Σ_leaves p(t) i(t)`.
    pub fn leaf_impurity(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.weight * n.impurity)
            .sum()
    }

    /// Index of the leaf reached by a full row of column values.
    pub fn apply(&self, x: &[f64]) -> usize {
        let mut t = 0;
        while let Some(split) = &self.nodes[t].split {
            let pos = split
                .rule
                .route(x[split.feature])
                .unwrap_or(split.fallback);
            t = split.children[pos];
        }
        t
    }

    pub fn leaf_value(&self, x: &[f64]) -> &NodeValue {
        &self.nodes[self.apply(x)].value
    }

    /// Most frequent class of the reached leaf (lowest id on ties), or its
    /// mean for regression.
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.leaf_value(x) {
            NodeValue::Classes(c) => argmax_lowest(c) as f64,
            NodeValue::Mean(m) => *m,
        }
    }

    /// Routes dataset rows down the tree; entry `t` lists the rows reaching
    /// node `t`.
    pub fn node_rows(&self, dataset: &Dataset, rows: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        out[0] = rows.to_vec();
        for t in 0..self.nodes.len() {
            if let Some(split) = &self.nodes[t].split {
                let here = std::mem::take(&mut out[t]);
                for &r in &here {
                    let pos = split
                        .rule
                        .route(dataset.value(r, split.feature))
                        .unwrap_or(split.fallback);
                    out[split.children[pos]].push(r);
                }
                out[t] = here;
            }
        }
        out
    }
}

pub(crate) fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Candidate splits of one variable given its observed values at a node.
/// Values are sorted and deduplicated first; fewer than two distinct values
/// give no candidate.
pub fn enumerate_candidate_splits(observed: &[f64], family: SplitFamily) -> Vec<SplitRule> {
    let mut values = observed.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let m = values.len();
    if m < 2 {
        return Vec::new();
    }
    let codes = || values.iter().map(|&v| v as u32);
    match family {
        SplitFamily::MultiwayExhaustive => vec![SplitRule::Multiway {
            values: codes().collect(),
        }],
        SplitFamily::BinaryOrdered => values
            .windows(2)
            .map(|w| SplitRule::Threshold {
                value: 0.5 * (w[0] + w[1]),
            })
            .collect(),
        SplitFamily::BinaryUnordered => {
            let codes: Vec<u32> = codes().collect();
            (0..(1usize << (m - 1)) - 1)
                .map(|mask| subset_rule(&codes, |i| i == 0 || mask >> (i - 1) & 1 == 1))
                .collect()
        }
        SplitFamily::BinaryOneVsAll => {
            let codes: Vec<u32> = codes().collect();
            (0..m).map(|k| subset_rule(&codes, |i| i == k)).collect()
        }
    }
}

fn subset_rule(codes: &[u32], in_left: impl Fn(usize) -> bool) -> SplitRule {
    let (left, right): (Vec<_>, Vec<_>) = codes.iter().enumerate().partition(|(i, _)| in_left(*i));
    SplitRule::Subset {
        left: left.into_iter().map(|(_, &c)| c).collect(),
        right: right.into_iter().map(|(_, &c)| c).collect(),
    }
}

/// Reservoir choice among maximal scores, ties broken uniformly.
struct Best<T> {
    score: f64,
    ties: u32,
    item: Option<T>,
}

impl<T> Best<T> {
    fn new() -> Self {
        Best {
            score: f64::NEG_INFINITY,
            ties: 0,
            item: None,
        }
    }

    fn offer(&mut self, score: f64, item: T, rng: &mut Rng) {
        if score > self.score + TIE_TOLERANCE || self.item.is_none() {
            self.score = score;
            self.ties = 1;
            self.item = Some(item);
        } else if score >= self.score - TIE_TOLERANCE {
            self.ties += 1;
            if rng.gen_range(0..self.ties) == 0 {
                self.item = Some(item);
            }
        }
    }
}

struct Candidate {
    rule: SplitRule,
    decrease: f64,
}

struct Grower<'a> {
    dataset: &'a Dataset,
    config: &'a TreeConfig,
    impurity: Impurity,
    n_classes: Option<usize>,
    rng: Rng,
}

impl Grower<'_> {
    fn stats(&self, rows: &[usize]) -> Stats {
        let target = self.dataset.target();
        let mut s = Stats::empty(self.n_classes);
        for &r in rows {
            s.add(self.dataset.value(r, target), self.dataset.weight(r));
        }
        s
    }

    /// Output statistics per observed value of column `j`, sorted by value.
    fn groups(&self, rows: &[usize], j: usize) -> Vec<(f64, Stats)> {
        let target = self.dataset.target();
        match self.dataset.column(j).kind {
            ColumnKind::Categorical { .. } => {
                let mut map: BTreeMap<u32, Stats> = BTreeMap::new();
                for &r in rows {
                    map.entry(self.dataset.code(r, j) as u32)
                        .or_insert_with(|| Stats::empty(self.n_classes))
                        .add(self.dataset.value(r, target), self.dataset.weight(r));
                }
                map.into_iter().map(|(v, s)| (f64::from(v), s)).collect()
            }
            ColumnKind::Numeric => {
                let mut sorted: Vec<usize> = rows.to_vec();
                sorted.sort_by(|&a, &b| self.dataset.value(a, j).total_cmp(&self.dataset.value(b, j)));
                let mut out: Vec<(f64, Stats)> = Vec::new();
                for r in sorted {
                    let v = self.dataset.value(r, j);
                    if out.last().map_or(true, |(last, _)| *last != v) {
                        out.push((v, Stats::empty(self.n_classes)));
                    }
                    out.last_mut()
                        .expect("pushed")
                        .1
                        .add(self.dataset.value(r, target), self.dataset.weight(r));
                }
                out
            }
        }
    }

    fn is_constant(&self, rows: &[usize], j: usize) -> bool {
        let first = self.dataset.value(rows[0], j);
        rows.iter().all(|&r| self.dataset.value(r, j) == first)
    }

    fn decrease(&self, parent: &Stats, parent_i: f64, children: &[&Stats]) -> f64 {
        let total = parent.weight();
        let after: f64 = children
            .iter()
            .map(|c| c.weight() / total * c.impurity(self.impurity))
            .sum();
        (parent_i - after).max(0.0)
    }

    fn binary_decrease(&self, parent: &Stats, parent_i: f64, left: &Stats) -> f64 {
        let right = parent.subtract(left);
        self.decrease(parent, parent_i, &[left, &right])
    }

    fn split_variable(&mut self, parent: &Stats, parent_i: f64, groups: &[(f64, Stats)]) -> Candidate {
        let m = groups.len();
        let codes = || groups.iter().map(|(v, _)| *v as u32).collect::<Vec<_>>();
        let random = self.config.split_strategy == SplitStrategy::Random;
        match self.config.split_family {
            SplitFamily::MultiwayExhaustive => {
                let children: Vec<&Stats> = groups.iter().map(|(_, s)| s).collect();
                Candidate {
                    rule: SplitRule::Multiway { values: codes() },
                    decrease: self.decrease(parent, parent_i, &children),
                }
            }
            SplitFamily::BinaryOrdered if random => {
                let (lo, hi) = (groups[0].0, groups[m - 1].0);
                let threshold = lo + (hi - lo) * self.rng.gen::<f64>();
                let mut left = Stats::empty(self.n_classes);
                groups
                    .iter()
                    .filter(|(v, _)| *v <= threshold)
                    .for_each(|(_, s)| left.merge(s));
                Candidate {
                    decrease: self.binary_decrease(parent, parent_i, &left),
                    rule: SplitRule::Threshold { value: threshold },
                }
            }
            SplitFamily::BinaryOrdered => {
                let mut best = Best::new();
                let mut left = Stats::empty(self.n_classes);
                for k in 0..m - 1 {
                    left.merge(&groups[k].1);
                    let d = self.binary_decrease(parent, parent_i, &left);
                    best.offer(d, 0.5 * (groups[k].0 + groups[k + 1].0), &mut self.rng);
                }
                Candidate {
                    decrease: best.score,
                    rule: SplitRule::Threshold {
                        value: best.item.expect("m >= 2"),
                    },
                }
            }
            SplitFamily::BinaryUnordered | SplitFamily::BinaryOneVsAll if random => {
                let in_left: Vec<bool> = if self.config.split_family == SplitFamily::BinaryOneVsAll {
                    let k = self.rng.gen_range(0..m);
                    (0..m).map(|i| i == k).collect()
                } else {
                    loop {
                        let draw: Vec<bool> =
                            (0..m).map(|i| i == 0 || self.rng.gen::<bool>()).collect();
                        if draw.iter().any(|&b| !b) {
                            break draw;
                        }
                    }
                };
                self.subset_candidate(parent, parent_i, groups, &in_left)
            }
            SplitFamily::BinaryOneVsAll => {
                let mut best = Best::new();
                for k in 0..m {
                    let d = self.binary_decrease(parent, parent_i, &groups[k].1);
                    best.offer(d, k, &mut self.rng);
                }
                let k = best.item.expect("m >= 2");
                let in_left: Vec<bool> = (0..m).map(|i| i == k).collect();
                self.subset_candidate(parent, parent_i, groups, &in_left)
            }
            SplitFamily::BinaryUnordered if m > MAX_SUBSET_VALUES => {
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&a, &b| groups[a].1.order_key().total_cmp(&groups[b].1.order_key()));
                let mut best = Best::new();
                let mut left = Stats::empty(self.n_classes);
                for k in 0..m - 1 {
                    left.merge(&groups[order[k]].1);
                    let d = self.binary_decrease(parent, parent_i, &left);
                    best.offer(d, k, &mut self.rng);
                }
                let cut = best.item.expect("m >= 2");
                let mut in_left = vec![false; m];
                order[..=cut].iter().for_each(|&i| in_left[i] = true);
                self.subset_candidate(parent, parent_i, groups, &in_left)
            }
            SplitFamily::BinaryUnordered => {
                let mut best = Best::new();
                for mask in 0..(1usize << (m - 1)) - 1 {
                    let mut left = groups[0].1.clone();
                    for i in 1..m {
                        if mask >> (i - 1) & 1 == 1 {
                            left.merge(&groups[i].1);
                        }
                    }
                    let d = self.binary_decrease(parent, parent_i, &left);
                    best.offer(d, mask, &mut self.rng);
                }
                let mask = best.item.expect("m >= 2");
                let in_left: Vec<bool> = (0..m).map(|i| i == 0 || mask >> (i - 1) & 1 == 1).collect();
                self.subset_candidate(parent, parent_i, groups, &in_left)
            }
        }
    }

    fn subset_candidate(
        &self,
        parent: &Stats,
        parent_i: f64,
        groups: &[(f64, Stats)],
        in_left: &[bool],
    ) -> Candidate {
        let mut left_stats = Stats::empty(self.n_classes);
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for ((v, s), &l) in groups.iter().zip(in_left) {
            if l {
                left_stats.merge(s);
                left.push(*v as u32);
            } else {
                right.push(*v as u32);
            }
        }
        Candidate {
            decrease: self.binary_decrease(parent, parent_i, &left_stats),
            rule: SplitRule::Subset { left, right },
        }
    }

    fn grow(mut self, rows: &[usize], features: &[usize]) -> Tree {
        let n_columns = self.dataset.n_columns();
        let root_stats = self.stats(rows);
        let root_weight = root_stats.weight();
        let mut nodes: Vec<Node> = Vec::new();
        let mut importances = vec![0.0; n_columns];
        let mut split_counts = vec![0usize; n_columns];
        // (rows, stats, parent, depth); nodes are numbered in creation order.
        let mut stack: Vec<(Vec<usize>, Stats, Option<usize>, usize)> =
            vec![(rows.to_vec(), root_stats, None, 0)];
        let mut pending_children: Vec<(usize, usize)> = Vec::new();
        while let Some((rows, stats, parent, depth)) = stack.pop() {
            let id = nodes.len();
            if let Some(p) = parent {
                pending_children.push((p, id));
            }
            let node_i = stats.impurity(self.impurity);
            let weight = stats.weight() / root_weight;
            nodes.push(Node {
                parent,
                depth,
                n_samples: rows.len(),
                weight,
                impurity: node_i,
                value: stats.value(),
                split: None,
            });
            let target = self.dataset.target();
            let pure = self.is_constant(&rows, target);
            let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
            if pure || depth_reached || rows.len() < self.config.n_min {
                continue;
            }
            let mut splittable: Vec<usize> = features
                .iter()
                .copied()
                .filter(|&j| !self.is_constant(&rows, j))
                .collect();
            if splittable.is_empty() {
                continue;
            }
            let k = self.config.k.unwrap_or(splittable.len()).min(splittable.len());
            let (drawn, _) = splittable.partial_shuffle(&mut self.rng, k);
            let drawn: Vec<usize> = drawn.to_vec();
            let mut best = Best::new();
            for j in drawn {
                let groups = self.groups(&rows, j);
                let cand = self.split_variable(&stats, node_i, &groups);
                best.offer(cand.decrease, (j, cand.rule), &mut self.rng);
            }
            let decrease = best.score;
            let (feature, rule) = best.item.expect("at least one candidate");
            let mut parts: Vec<Vec<usize>> = vec![Vec::new(); rule.n_children()];
            for &r in &rows {
                let pos = rule
                    .route(self.dataset.value(r, feature))
                    .expect("training values are routable");
                parts[pos].push(r);
            }
            let part_stats: Vec<Stats> = parts.iter().map(|p| self.stats(p)).collect();
            let fallback = argmax_lowest(&part_stats.iter().map(Stats::weight).collect::<Vec<_>>());
            let delta = weight * decrease;
            importances[feature] += delta;
            split_counts[feature] += 1;
            nodes[id].split = Some(Split {
                feature,
                rule,
                children: Vec::new(),
                fallback,
                decrease,
                delta,
            });
            // Reverse so that the first child is popped (and numbered) first.
            for (part, s) in parts.into_iter().zip(part_stats).rev() {
                stack.push((part, s, Some(id), depth + 1));
            }
        }
        for (p, c) in pending_children {
            nodes[p].split.as_mut().expect("parent splits").children.push(c);
        }
        Tree {
            nodes,
            config: self.config.clone(),
            impurity: self.impurity,
            n_columns,
            importances,
            split_counts,
        }
    }
}

/// Grows a tree on all rows and input columns of `dataset`.
pub fn grow_tree(dataset: &Dataset, config: &TreeConfig) -> Result<Tree> {
    let rows: Vec<usize> = (0..dataset.n_rows()).collect();
    let mut rng = rng_from_seed(config.seed);
    grow_tree_with(dataset, config, &rows, &dataset.inputs(), &mut rng)
}

/// Grows a tree on a multiset of rows (e.g. a bootstrap sample) using only
/// the given candidate columns.
pub fn grow_tree_with(
    dataset: &Dataset,
    config: &TreeConfig,
    rows: &[usize],
    features: &[usize],
    rng: &mut Rng,
) -> Result<Tree> {
    if rows.is_empty() {
        return Err(Error::Empty("no rows to grow a tree on".into()));
    }
    if let Some(&j) = features
        .iter()
        .find(|&&j| j >= dataset.n_columns() || j == dataset.target() || Some(j) == dataset.context())
    {
        return Err(Error::config(format!("column {j} cannot be a split variable")));
    }
    let impurity = config.resolve(dataset, features)?;
    let grower = Grower {
        dataset,
        config,
        impurity,
        n_classes: dataset.n_classes(),
        rng: rng_from_seed(rng.gen()),
    };
    Ok(grower.grow(rows, features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{generate, Column, Problem};

    fn dataset(cols: Vec<Column>) -> Dataset {
        let target = cols.len() - 1;
        Dataset::new(cols, target, None, None).unwrap()
    }

    #[test]
    fn impurity_values() {
        assert!((impurity(&[5.0, 5.0], Impurity::Shannon).unwrap() - 1.0).abs() < 1e-12);
        assert!((impurity(&[5.0, 5.0], Impurity::Gini).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(impurity(&[3.0, 3.0, 3.0], Impurity::Variance).unwrap(), 0.0);
        assert_eq!(impurity(&[4.0, 0.0], Impurity::Shannon).unwrap(), 0.0);
        assert!(impurity(&[], Impurity::Gini).is_err());
        let a = impurity(&[1.0, 2.0, 3.0], Impurity::Gini).unwrap();
        let b = impurity(&[3.0, 1.0, 2.0], Impurity::Gini).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn candidate_counts() {
        let v = [0.0, 1.0, 2.0, 3.0, 1.0];
        assert_eq!(enumerate_candidate_splits(&v, SplitFamily::BinaryOrdered).len(), 3);
        assert_eq!(enumerate_candidate_splits(&v, SplitFamily::BinaryUnordered).len(), 7);
        assert_eq!(enumerate_candidate_splits(&v, SplitFamily::BinaryOneVsAll).len(), 4);
        assert_eq!(enumerate_candidate_splits(&v, SplitFamily::MultiwayExhaustive).len(), 1);
        assert!(enumerate_candidate_splits(&[2.0, 2.0], SplitFamily::BinaryOrdered).is_empty());
        for rule in enumerate_candidate_splits(&v, SplitFamily::BinaryUnordered) {
            match rule {
                SplitRule::Subset { left, right } => {
                    assert!(!left.is_empty() && !right.is_empty());
                    assert_eq!(left.len() + right.len(), 4);
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn copy_problem_gives_single_split() {
        let ds = dataset(vec![
            Column::categorical("X1", 2, &[0, 1, 0, 1]),
            Column::categorical("X2", 2, &[0, 0, 1, 1]),
            Column::categorical("Y", 2, &[0, 1, 0, 1]),
        ]);
        let tree = grow_tree(&ds, &TreeConfig::default()).unwrap();
        assert_eq!(tree.n_internal(), 1);
        assert_eq!(tree.root().split.as_ref().unwrap().feature, 0);
        assert!(tree.nodes().iter().filter(|n| n.is_leaf()).all(|n| n.impurity == 0.0));
        for r in 0..4 {
            let x: Vec<f64> = (0..3).map(|c| ds.value(r, c)).collect();
            assert_eq!(tree.predict(&x), ds.value(r, 2));
        }
    }

    #[test]
    fn telescoping_and_path_uniqueness() {
        let ds = generate(Problem::Digit).unwrap().to_exact_dataset();
        for seed in 0..20 {
            let cfg = TreeConfig::totally_randomized().with_seed(seed);
            let tree = grow_tree(&ds, &cfg).unwrap();
            let total: f64 = tree.importances().iter().sum();
            assert!((total - (tree.root().impurity - tree.leaf_impurity())).abs() < 1e-9);
            assert!((total - 10f64.log2()).abs() < 1e-9);
            assert!(tree.depth() <= 7);
            for (id, n) in tree.nodes().iter().enumerate() {
                let Some(split) = &n.split else { continue };
                let mut up = n.parent;
                while let Some(a) = up {
                    assert_ne!(tree.nodes()[a].split.as_ref().unwrap().feature, split.feature, "node {id}");
                    up = tree.nodes()[a].parent;
                }
            }
        }
    }

    #[test]
    fn xor_depth_two_credits_second_level_only() {
        let ds = dataset(vec![
            Column::categorical("X1", 2, &[0, 0, 1, 1]),
            Column::categorical("X2", 2, &[0, 1, 0, 1]),
            Column::categorical("Y", 2, &[0, 1, 1, 0]),
        ]);
        for seed in 0..10 {
            let tree = grow_tree(&ds, &TreeConfig::totally_randomized().with_depth(2).with_seed(seed)).unwrap();
            let first = tree.root().split.as_ref().unwrap().feature;
            assert_eq!(tree.importances()[first], 0.0);
            assert!((tree.importances()[1 - first] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_leaf_and_regression() {
        let ds = dataset(vec![
            Column::categorical("X", 2, &[0, 0, 0]),
            Column::categorical("Y", 3, &[2, 1, 2]),
        ]);
        let tree = grow_tree(&ds, &TreeConfig::default()).unwrap();
        assert_eq!(tree.n_nodes(), 1);
        assert_eq!(tree.predict(&[0.0, 0.0]), 2.0);

        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let mut y = vec![0.0; 6];
        y[5] = 10.0;
        let ds = dataset(vec![Column::numeric("x", x), Column::numeric("y", y)]);
        let cfg = TreeConfig::default()
            .with_family(SplitFamily::BinaryOrdered)
            .with_depth(1);
        let tree = grow_tree(&ds, &cfg).unwrap();
        let split = tree.root().split.as_ref().unwrap();
        assert_eq!(split.rule, SplitRule::Threshold { value: 4.5 });
        assert_eq!(tree.predict(&[5.0, 0.0]), 10.0);
        assert_eq!(tree.predict(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn config_validation() {
        let ds = dataset(vec![Column::numeric("x", vec![0.0, 1.0]), Column::categorical("Y", 2, &[0, 1])]);
        assert!(matches!(grow_tree(&ds, &TreeConfig::default()), Err(Error::Config(_))));
        let cfg = TreeConfig::default().with_impurity(Impurity::Variance).with_family(SplitFamily::BinaryOrdered);
        assert!(grow_tree(&ds, &cfg).is_err());
        assert!(grow_tree(&ds, &TreeConfig::default().with_k(0)).is_err());
    }

    #[test]
    fn deterministic_and_unseen_values_route_to_heaviest_child() {
        let ds = generate(Problem::Digit).unwrap().sample(200, 5).unwrap();
        let cfg = TreeConfig::default().with_k(2).with_seed(9);
        assert_eq!(grow_tree(&ds, &cfg).unwrap(), grow_tree(&ds, &cfg).unwrap());

        let ds = dataset(vec![
            Column::categorical("X", 3, &[0, 1, 1, 1]),
            Column::categorical("Y", 2, &[0, 1, 1, 1]),
        ]);
        let tree = grow_tree(&ds, &TreeConfig::default()).unwrap();
        assert_eq!(tree.predict(&[2.0, 0.0]), 1.0);
    }

    #[test]
    fn unordered_best_split_finds_pairing() {
        let ds = dataset(vec![
            Column::categorical("X", 4, &[0, 1, 2, 3]),
            Column::categorical("Y", 2, &[0, 1, 1, 0]),
        ]);
        let cfg = TreeConfig::default().with_family(SplitFamily::BinaryUnordered);
        let tree = grow_tree(&ds, &cfg).unwrap();
        let split = tree.root().split.as_ref().unwrap();
        assert_eq!(
            split.rule,
            SplitRule::Subset {
                left: vec![0, 3],
                right: vec![1, 2]
            }
        );
        assert!((split.decrease - 1.0).abs() < 1e-12);
    }
}
