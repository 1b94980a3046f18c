//! Entropies and mutual informations, exact (over a [`JointDistribution`])
//! and plug-in (over weighted counts), plus exhaustive relevance analysis.
//!
//! Variables of a distribution are addressed by *slot*: inputs are
//! `0..p`, the output is `p`, the context (if any) is `p + 1`. Sets of slots
//! are passed either as slices or, internally, as `u64` bitmasks. All
//! quantities are in bits.

use std::collections::HashMap;
use std::sync::RwLock;

use itertools::Itertools;
use serde::Serialize;

use crate::distributions::{JointDistribution, ORACLE_MAX_INPUTS};
use crate::error::{Error, Result};

/// Conditional mutual informations at or below this value count as zero.
pub const INDEPENDENCE_TOLERANCE: f64 = 1e-12;

/// Conditional mutual informations above this value count as dependence when
/// deciding strong relevance.
pub const STRONG_TOLERANCE: f64 = 1e-9;

/// Largest number of inputs accepted by [`markov_boundaries`].
pub const BOUNDARY_MAX_INPUTS: usize = 16;

/// `-Σ p log2 p` of a list of nonnegative masses, normalized by their total.
pub fn entropy_of_counts(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if counts.is_empty() || !(total > 0.0) {
        return Err(Error::Empty("entropy of an empty sample".into()));
    }
    Ok(entropy_unnormalized(counts.iter().copied(), total))
}

fn entropy_unnormalized(masses: impl Iterator<Item = f64>, total: f64) -> f64 {
    let h = masses
        .filter(|&m| m > 0.0)
        .map(|m| {
            let q = m / total;
            -q * q.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

pub(crate) fn mask_of(slots: &[usize]) -> u64 {
    slots.iter().fold(0, |m, &s| m | (1u64 << s))
}

pub(crate) fn slots_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|&s| mask >> s & 1 == 1).collect()
}

/// Exact entropy oracle over one distribution. Entropies of slot subsets are
/// memoized, so repeated conditional mutual information queries cost one
/// hash lookup per term. Shareable across threads.
pub struct Oracle<'a> {
    dist: &'a JointDistribution,
    cards: Vec<u128>,
    cache: RwLock<HashMap<u64, f64>>,
}

impl<'a> Oracle<'a> {
    pub fn new(dist: &'a JointDistribution) -> Self {
        let cards = (0..dist.width())
            .map(|s| u128::from(dist.variable(s).expect("slot").cardinality))
            .collect();
        Oracle {
            dist,
            cards,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn distribution(&self) -> &JointDistribution {
        self.dist
    }

    fn check_slots(&self, slots: &[usize]) -> Result<()> {
        match slots.iter().find(|&&s| s >= self.dist.width()) {
            Some(s) => Err(Error::UnknownVariable(format!("slot {s}"))),
            None => Ok(()),
        }
    }

    /// Joint entropy of the slots in `mask`.
    pub fn entropy_mask(&self, mask: u64) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        if let Some(&h) = self.cache.read().expect("cache lock").get(&mask) {
            return h;
        }
        let h = self.compute_entropy(mask);
        self.cache.write().expect("cache lock").insert(mask, h);
        h
    }

    fn compute_entropy(&self, mask: u64) -> f64 {
        let slots = slots_of(mask);
        let radix_fits = slots
            .iter()
            .try_fold(1u128, |acc, &s| acc.checked_mul(self.cards[s]))
            .is_some();
        let entries = self.dist.entries();
        let total: f64 = entries.iter().map(|e| e.prob).sum();
        if radix_fits {
            let mut groups: HashMap<u128, f64> = HashMap::with_capacity(entries.len());
            for e in entries {
                let key = slots
                    .iter()
                    .fold(0u128, |k, &s| k * self.cards[s] + u128::from(e.config[s]));
                *groups.entry(key).or_insert(0.0) += e.prob;
            }
            entropy_unnormalized(groups.into_values(), total)
        } else {
            let mut groups: HashMap<Vec<u32>, f64> = HashMap::with_capacity(entries.len());
            for e in entries {
                let key = slots.iter().map(|&s| e.config[s]).collect();
                *groups.entry(key).or_insert(0.0) += e.prob;
            }
            entropy_unnormalized(groups.into_values(), total)
        }
    }

    /// `I(X;Y|B)` for disjoint masks, clamped at zero.
    pub fn cmi_mask(&self, x: u64, y: u64, b: u64) -> f64 {
        let v = self.entropy_mask(x | b) + self.entropy_mask(y | b)
            - self.entropy_mask(x | y | b)
            - self.entropy_mask(b);
        v.max(0.0)
    }

    pub fn entropy(&self, slots: &[usize]) -> Result<f64> {
        if slots.is_empty() {
            return Err(Error::Empty("entropy of an empty variable set".into()));
        }
        self.check_slots(slots)?;
        Ok(self.entropy_mask(mask_of(slots)))
    }

    pub fn cmi(&self, x: &[usize], y: &[usize], b: &[usize]) -> Result<f64> {
        self.check_slots(x)?;
        self.check_slots(y)?;
        self.check_slots(b)?;
        let (mx, my, mb) = (mask_of(x), mask_of(y), mask_of(b));
        if mx & my != 0 || mx & mb != 0 || my & mb != 0 {
            return Err(Error::Overlap(format!("{x:?}, {y:?}, {b:?}")));
        }
        if x.is_empty() || y.is_empty() {
            return Err(Error::Empty("mutual information needs two nonempty sets".into()));
        }
        Ok(self.cmi_mask(mx, my, mb))
    }

    /// Mask of all input slots.
    pub fn inputs_mask(&self) -> u64 {
        (1u64 << self.dist.n_inputs()) - 1
    }

    pub fn output_mask(&self) -> u64 {
        1u64 << self.dist.output_slot()
    }
}

/// `H(X)` for a set of slots.
pub fn entropy(dist: &JointDistribution, slots: &[usize]) -> Result<f64> {
    Oracle::new(dist).entropy(slots)
}

/// `I(X;Y|B)`; `B` may be empty.
pub fn cond_mutual_information(
    dist: &JointDistribution,
    x: &[usize],
    y: &[usize],
    b: &[usize],
) -> Result<f64> {
    Oracle::new(dist).cmi(x, y, b)
}

/// `I(X;Y;Z|B) = I(X;Y|B) - I(X;Y|B,Z)`. May be negative.
pub fn multivariate_mi(
    dist: &JointDistribution,
    x: &[usize],
    y: &[usize],
    z: &[usize],
    b: &[usize],
) -> Result<f64> {
    let oracle = Oracle::new(dist);
    let all: Vec<usize> = [x, y, z, b].concat();
    if all.iter().duplicates().next().is_some() {
        return Err(Error::Overlap(format!("{x:?}, {y:?}, {z:?}, {b:?}")));
    }
    let bz: Vec<usize> = [b, z].concat();
    Ok(oracle.cmi(x, y, b)? - oracle.cmi(x, y, &bz)?)
}

/// `Σ H(X_i) - H(X_1, ..., X_n)`.
pub fn redundancy_score(dist: &JointDistribution, slots: &[usize]) -> Result<f64> {
    if slots.len() < 2 {
        return Err(Error::param("redundancy needs at least two variables"));
    }
    let oracle = Oracle::new(dist);
    let mut sum = 0.0;
    for &s in slots {
        sum += oracle.entropy(&[s])?;
    }
    Ok((sum - oracle.entropy(slots)?).max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    Irrelevant,
    WeaklyRelevant,
    StronglyRelevant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelevanceLabel {
    pub label: Relevance,
    /// A conditioning set `B` with `I(X;Y|B) > 0`: all other inputs for a
    /// strongly relevant variable, a smallest such set for a weakly relevant
    /// one.
    pub witness: Option<Vec<usize>>,
}

fn guard(p: usize, limit: usize) -> Result<()> {
    if p > limit {
        Err(Error::TooLarge { size: p, limit })
    } else {
        Ok(())
    }
}

fn check_input(dist: &JointDistribution, m: usize) -> Result<()> {
    if m >= dist.n_inputs() {
        Err(Error::UnknownVariable(format!("input #{m}")))
    } else {
        Ok(())
    }
}

/// Conditioning sets of size `k` drawn from the inputs other than `m`.
pub(crate) fn subsets_without(p: usize, m: usize, k: usize) -> impl Iterator<Item = u64> {
    (0..p)
        .filter(move |&i| i != m)
        .combinations(k)
        .map(|c| mask_of(&c))
}

/// Smallest conditioning set making input `m` dependent on the output, by
/// ascending size.
fn smallest_witness(oracle: &Oracle, m: usize) -> Option<u64> {
    let p = oracle.distribution().n_inputs();
    let (x, y) = (1u64 << m, oracle.output_mask());
    (0..p).find_map(|k| subsets_without(p, m, k).find(|&b| oracle.cmi_mask(x, y, b) > INDEPENDENCE_TOLERANCE))
}

pub fn classify_relevance(dist: &JointDistribution, m: usize) -> Result<RelevanceLabel> {
    guard(dist.n_inputs(), ORACLE_MAX_INPUTS)?;
    check_input(dist, m)?;
    let oracle = Oracle::new(dist);
    Ok(classify_with(&oracle, m))
}

pub(crate) fn classify_with(oracle: &Oracle, m: usize) -> RelevanceLabel {
    let p = oracle.distribution().n_inputs();
    let rest = oracle.inputs_mask() & !(1u64 << m);
    if oracle.cmi_mask(1 << m, oracle.output_mask(), rest) > STRONG_TOLERANCE {
        return RelevanceLabel {
            label: Relevance::StronglyRelevant,
            witness: Some((0..p).filter(|&i| i != m).collect()),
        };
    }
    match smallest_witness(oracle, m) {
        Some(b) => RelevanceLabel {
            label: Relevance::WeaklyRelevant,
            witness: Some(slots_of(b)),
        },
        None => RelevanceLabel {
            label: Relevance::Irrelevant,
            witness: None,
        },
    }
}

/// Minimal size of a conditioning set under which input `m` depends on the
/// output; `None` for an irrelevant input.
pub fn degree(dist: &JointDistribution, m: usize) -> Result<Option<usize>> {
    guard(dist.n_inputs(), ORACLE_MAX_INPUTS)?;
    check_input(dist, m)?;
    let oracle = Oracle::new(dist);
    Ok(smallest_witness(&oracle, m).map(|b| b.count_ones() as usize))
}

/// All minimal input subsets `M` with `Y ⊥ V∖M | M`, each sorted, listed by
/// increasing size.
pub fn markov_boundaries(dist: &JointDistribution) -> Result<Vec<Vec<usize>>> {
    let p = dist.n_inputs();
    guard(p, BOUNDARY_MAX_INPUTS)?;
    let oracle = Oracle::new(dist);
    let all = oracle.inputs_mask();
    let y = oracle.output_mask();
    let mut found: Vec<u64> = Vec::new();
    for k in 0..=p {
        for combo in (0..p).combinations(k) {
            let m = mask_of(&combo);
            if found.iter().any(|&f| f & m == f) {
                continue;
            }
            let rest = all & !m;
            if rest == 0 || oracle.cmi_mask(rest, y, m) <= INDEPENDENCE_TOLERANCE {
                found.push(m);
            }
        }
    }
    Ok(found.into_iter().map(slots_of).collect())
}

/// Mean of the plug-in estimator of `I(X;Y|Z)` under independence, for `N`
/// samples: `|Z| (|X|-1) (|Y|-1) / (2 N ln 2)`. An infinite `n` gives 0.
pub fn finite_sample_mi_bias(card_x: usize, card_y: usize, card_z: usize, n: f64) -> f64 {
    if n.is_infinite() {
        return 0.0;
    }
    (card_z * card_x.saturating_sub(1) * card_y.saturating_sub(1)) as f64
        / (2.0 * n * std::f64::consts::LN_2)
}

/// Plug-in entropy of the joint values of `cols` over weighted rows.
pub fn plugin_entropy<F>(rows: &[usize], cols: &[usize], value: F, weight: impl Fn(usize) -> f64) -> f64
where
    F: Fn(usize, usize) -> u32,
{
    let mut groups: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut total = 0.0;
    for &r in rows {
        let key = cols.iter().map(|&c| value(r, c)).collect();
        let w = weight(r);
        *groups.entry(key).or_insert(0.0) += w;
        total += w;
    }
    if total <= 0.0 {
        return 0.0;
    }
    entropy_unnormalized(groups.into_values(), total)
}

/// Plug-in mutual information of two discrete variables from weighted
/// `(x, y, weight)` observations.
pub fn plugin_mi(observations: impl IntoIterator<Item = (u32, u32, f64)>) -> f64 {
    let mut joint: HashMap<(u32, u32), f64> = HashMap::new();
    let mut mx: HashMap<u32, f64> = HashMap::new();
    let mut my: HashMap<u32, f64> = HashMap::new();
    let mut total = 0.0;
    for (x, y, w) in observations {
        *joint.entry((x, y)).or_insert(0.0) += w;
        *mx.entry(x).or_insert(0.0) += w;
        *my.entry(y).or_insert(0.0) += w;
        total += w;
    }
    if total <= 0.0 {
        return 0.0;
    }
    let h = |it: &mut dyn Iterator<Item = f64>| entropy_unnormalized(it, total);
    let v = h(&mut mx.into_values()) + h(&mut my.into_values()) - h(&mut joint.into_values());
    v.max(0.0)
}
