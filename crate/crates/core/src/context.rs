//! Context-dependent importances.
//!
//! For an input `X_m`, a context variable `X_c` and every conditioning set
//! `B` of other inputs, compare the information `X_m` carries about `Y`
//! given `B = b` with the same information once the context is fixed to
//! `x_c`:
//!
//! ```text
//! Imp^{|x_c|}(X_m) = Σ_k w_k Σ_B Σ_b P(B=b) |I(Y;X_m|B=b) - I(Y;X_m|B=b,X_c=x_c)|
//! Imp_s^{x_c}(X_m) = Σ_k w_k Σ_B Σ_b P(B=b) (I(Y;X_m|B=b) - I(Y;X_m|B=b,X_c=x_c))
//! Imp^{X_c}(X_m)   = Σ_k w_k Σ_B (I(Y;X_m|B) - I(Y;X_m|B,X_c))
//! ```
//!
//! with `w_k = 1/(C(p,k)(p-k))`. A stratum `(B=b, X_c=x_c)` of zero
//! probability contributes an information of zero. Forests estimate the same
//! sums node by node, a node `t` playing the role of `B = b` with weight
//! `p(t)`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Dataset, JointDistribution, ORACLE_MAX_INPUTS};
use crate::error::{Error, Result};
use crate::forest::{build_forest, Forest, ForestConfig};
use crate::importance::{asymptotic_mdi_report, degree_weight};
use crate::infotheory::{plugin_mi, slots_of, subsets_without, Oracle};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tree::{Impurity, Stats};

/// Largest number of inputs accepted by [`asymptotic_contextual`].
pub const CONTEXT_MAX_INPUTS: usize = 16;

/// Equality tolerance used by [`characterize`] on exact reports.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextReport {
    pub variables: Vec<String>,
    pub context_values: Vec<u32>,
    /// `Imp(X_m)`, the context being ignored.
    pub imp: Vec<f64>,
    /// `[m][c]`: `Imp(X_m | X_c = x_c)`; `NaN` when `P(X_c = x_c) = 0`.
    pub imp_given: Vec<Vec<f64>>,
    /// `[m][c]`: `Imp^{|x_c|}(X_m)`.
    pub imp_abs: Vec<Vec<f64>>,
    /// `[m][c]`: `Imp_s^{x_c}(X_m)`.
    pub imp_signed: Vec<Vec<f64>>,
    /// `Imp^{X_c}(X_m)`.
    pub imp_global: Vec<f64>,
    /// `[m][c]`: permutation p-values of `Imp^{|x_c|}(X_m)`, when computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_values: Option<Vec<Vec<f64>>>,
    /// `[m][c]`: nodes left out of the estimate because their `x_c`
    /// stratum was too small (empirical reports only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<Vec<Vec<usize>>>,
}

impl ContextReport {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }
}

fn check_context(dist: &JointDistribution) -> Result<usize> {
    let c = dist
        .context_slot()
        .ok_or_else(|| Error::param("distribution has no context variable"))?;
    let p = dist.n_inputs();
    if p > CONTEXT_MAX_INPUTS {
        return Err(Error::TooLarge {
            size: p,
            limit: CONTEXT_MAX_INPUTS,
        });
    }
    if p == 0 {
        return Err(Error::Empty("distribution has no input".into()));
    }
    Ok(c)
}

/// Exact contextual importances of every input of a distribution with a
/// context variable.
pub fn asymptotic_contextual(dist: &JointDistribution) -> Result<ContextReport> {
    let c_slot = check_context(dist)?;
    let p = dist.n_inputs();
    let y_slot = dist.output_slot();
    let n_ctx = dist.context().expect("checked").cardinality as usize;
    let marginal = dist.without_context();
    let imp = asymptotic_mdi_report(&marginal, p)?.scores;
    let mut imp_given = vec![vec![f64::NAN; n_ctx]; p];
    for xc in 0..n_ctx {
        if let Some((cond, _)) = dist.given_context(xc as u32)? {
            let scores = asymptotic_mdi_report(&cond, p)?.scores;
            for m in 0..p {
                imp_given[m][xc] = scores[m];
            }
        }
    }
    let oracle = Oracle::new(dist);
    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..p)
        .into_par_iter()
        .map(|m| {
            let mut abs = vec![0.0; n_ctx];
            let mut signed = vec![0.0; n_ctx];
            let mut global = 0.0;
            for k in 0..p {
                let w = degree_weight(p, k);
                for b in subsets_without(p, m, k) {
                    let (a, s) = stratified_terms(dist, m, y_slot, c_slot, b, n_ctx);
                    for xc in 0..n_ctx {
                        abs[xc] += w * a[xc];
                        signed[xc] += w * s[xc];
                    }
                    let x = 1u64 << m;
                    let y = 1u64 << y_slot;
                    global += w * (oracle.cmi_mask(x, y, b) - oracle.cmi_mask(x, y, b | 1u64 << c_slot));
                }
            }
            (abs, signed, global)
        })
        .collect();
    let mut imp_abs = Vec::with_capacity(p);
    let mut imp_signed = Vec::with_capacity(p);
    let mut imp_global = Vec::with_capacity(p);
    for (a, s, g) in rows {
        imp_abs.push(a);
        imp_signed.push(s);
        imp_global.push(g);
    }
    Ok(ContextReport {
        variables: dist.inputs().iter().map(|v| v.name.clone()).collect(),
        context_values: (0..n_ctx as u32).collect(),
        imp,
        imp_given,
        imp_abs,
        imp_signed,
        imp_global,
        p_values: None,
        skipped: None,
    })
}

/// `Σ_b P(B=b) |I(Y;X_m|b) - I(Y;X_m|b,x_c)|` and the signed sum, for every
/// context value.
fn stratified_terms(
    dist: &JointDistribution,
    m: usize,
    y: usize,
    c: usize,
    b: u64,
    n_ctx: usize,
) -> (Vec<f64>, Vec<f64>) {
    let b_slots: Vec<usize> = slots_of(b);
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (i, e) in dist.entries().iter().enumerate() {
        let key = b_slots.iter().map(|&s| e.config[s]).collect();
        groups.entry(key).or_default().push(i);
    }
    let entries = dist.entries();
    let mut abs = vec![0.0; n_ctx];
    let mut signed = vec![0.0; n_ctx];
    for members in groups.values() {
        let mass: f64 = members.iter().map(|&i| entries[i].prob).sum();
        let base = plugin_mi(members.iter().map(|&i| {
            let e = &entries[i];
            (e.config[m], e.config[y], e.prob)
        }));
        for xc in 0..n_ctx {
            let ctx = plugin_mi(
                members
                    .iter()
                    .filter(|&&i| entries[i].config[c] as usize == xc)
                    .map(|&i| {
                        let e = &entries[i];
                        (e.config[m], e.config[y], e.prob)
                    }),
            );
            abs[xc] += mass * (base - ctx).abs();
            signed[xc] += mass * (base - ctx);
        }
    }
    (abs, signed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContextConfig {
    /// Strata with fewer rows (but at least one) are left out of a node's
    /// contribution. Empty strata count as carrying no information.
    pub min_stratum_rows: usize,
    /// `None` uses mutual information (Shannon impurity decrease); any other
    /// impurity gives the generic-impurity variant.
    pub impurity: Option<Impurity>,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            min_stratum_rows: 5,
            impurity: None,
        }
    }
}

/// Information brought by `X_m` about `Y` over a set of rows: the impurity
/// decrease of the multiway split on `X_m`.
struct Gain<'a> {
    dataset: &'a Dataset,
    impurity: Impurity,
    n_classes: Option<usize>,
}

impl Gain<'_> {
    fn eval(&self, rows: impl Iterator<Item = usize>, m: usize) -> (f64, f64) {
        let target = self.dataset.target();
        let mut parent = Stats::empty(self.n_classes);
        let mut children: HashMap<u64, Stats> = HashMap::new();
        for r in rows {
            let (y, w) = (self.dataset.value(r, target), self.dataset.weight(r));
            parent.add(y, w);
            children
                .entry(self.dataset.value(r, m).to_bits())
                .or_insert_with(|| Stats::empty(self.n_classes))
                .add(y, w);
        }
        let total = parent.weight();
        if total <= 0.0 {
            return (0.0, 0.0);
        }
        let after: f64 = children
            .values()
            .map(|s| s.weight() / total * s.impurity(self.impurity))
            .sum();
        ((parent.impurity(self.impurity) - after).max(0.0), total)
    }
}

/// Context codes of a dataset, possibly permuted.
fn context_codes(dataset: &Dataset) -> Result<(usize, Vec<u32>, usize)> {
    let c = dataset
        .context()
        .ok_or_else(|| Error::param("dataset has no context column"))?;
    let n_ctx = dataset.column(c).kind.cardinality().expect("categorical context") as usize;
    let codes = (0..dataset.n_rows()).map(|r| dataset.code(r, c) as u32).collect();
    Ok((c, codes, n_ctx))
}

struct Accumulator {
    imp: Vec<f64>,
    given: Vec<Vec<f64>>,
    abs: Vec<Vec<f64>>,
    signed: Vec<Vec<f64>>,
    global: Vec<f64>,
    skipped: Vec<Vec<usize>>,
}

fn accumulate(
    forest: &Forest,
    dataset: &Dataset,
    codes: &[u32],
    n_ctx: usize,
    config: &ContextConfig,
) -> Result<Accumulator> {
    let inputs = dataset.inputs();
    let p = inputs.len();
    let position: HashMap<usize, usize> = inputs.iter().enumerate().map(|(i, &j)| (j, i)).collect();
    let impurity = config.impurity.unwrap_or(if dataset.is_classification() {
        Impurity::Shannon
    } else {
        Impurity::Variance
    });
    let gain = Gain {
        dataset,
        impurity,
        n_classes: dataset.n_classes(),
    };
    let all_rows: Vec<usize> = (0..dataset.n_rows()).collect();
    let total: f64 = dataset.total_weight();
    let mut ctx_mass = vec![0.0; n_ctx];
    for r in 0..dataset.n_rows() {
        ctx_mass[codes[r] as usize] += dataset.weight(r);
    }
    let n_t = forest.n_trees() as f64;
    let mut acc = Accumulator {
        imp: vec![0.0; p],
        given: vec![vec![0.0; n_ctx]; p],
        abs: vec![vec![0.0; n_ctx]; p],
        signed: vec![vec![0.0; n_ctx]; p],
        global: vec![0.0; p],
        skipped: vec![vec![0; n_ctx]; p],
    };
    for tree in forest.trees() {
        let node_rows = tree.node_rows(dataset, &all_rows);
        for (t, node) in tree.nodes().iter().enumerate() {
            let Some(split) = &node.split else { continue };
            let Some(&m) = position.get(&split.feature) else { continue };
            let rows = &node_rows[t];
            let (base, mass) = gain.eval(rows.iter().copied(), split.feature);
            if mass <= 0.0 {
                continue;
            }
            let p_t = mass / total;
            acc.imp[m] += p_t * base / n_t;
            let mut mixed = 0.0;
            for xc in 0..n_ctx {
                let stratum: Vec<usize> = rows.iter().copied().filter(|&r| codes[r] as usize == xc).collect();
                let (g, w) = if stratum.is_empty() {
                    (0.0, 0.0)
                } else if stratum.len() < config.min_stratum_rows {
                    acc.skipped[m][xc] += 1;
                    continue;
                } else {
                    gain.eval(stratum.iter().copied(), split.feature)
                };
                acc.abs[m][xc] += p_t * (base - g).abs() / n_t;
                acc.signed[m][xc] += p_t * (base - g) / n_t;
                mixed += w / mass * g;
                if ctx_mass[xc] > 0.0 {
                    acc.given[m][xc] += w / ctx_mass[xc] * g / n_t;
                }
            }
            acc.global[m] += p_t * (base - mixed) / n_t;
        }
    }
    for m in 0..p {
        for xc in 0..n_ctx {
            if ctx_mass[xc] <= 0.0 {
                acc.given[m][xc] = f64::NAN;
            }
        }
    }
    Ok(acc)
}

/// Node-by-node estimates of the contextual importances from a forest grown
/// without the context column.
pub fn contextual_importances(forest: &Forest, dataset: &Dataset, config: &ContextConfig) -> Result<ContextReport> {
    let (c, codes, n_ctx) = context_codes(dataset)?;
    if forest.features().iter().any(|f| f.contains(&c)) {
        return Err(Error::config("the forest must be grown without the context column"));
    }
    let acc = accumulate(forest, dataset, &codes, n_ctx, config)?;
    Ok(ContextReport {
        variables: dataset.inputs().iter().map(|&j| dataset.column(j).name.clone()).collect(),
        context_values: (0..n_ctx as u32).collect(),
        imp: acc.imp,
        imp_given: acc.given,
        imp_abs: acc.abs,
        imp_signed: acc.signed,
        imp_global: acc.global,
        p_values: None,
        skipped: Some(acc.skipped),
    })
}

/// Grows the forest, estimates the contextual importances and adds
/// permutation p-values: the fraction of `n_permutations` context-shuffled
/// replicates whose `Imp^{|x_c|}` reaches the observed one. The context is
/// not an input of the trees, so the same forest serves every replicate.
pub fn ctx_pvalues(
    forest_config: &ForestConfig,
    dataset: &Dataset,
    config: &ContextConfig,
    n_permutations: usize,
    seed: u64,
) -> Result<ContextReport> {
    if n_permutations == 0 {
        return Err(Error::param("n_permutations must be at least 1"));
    }
    let forest = build_forest(dataset, forest_config)?;
    let mut report = contextual_importances(&forest, dataset, config)?;
    let (_, codes, n_ctx) = context_codes(dataset)?;
    let p = report.variables.len();
    let exceed: Vec<Vec<Vec<bool>>> = (0..n_permutations)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let mut shuffled = codes.clone();
            shuffled.shuffle(&mut rng);
            let acc = accumulate(&forest, dataset, &shuffled, n_ctx, config)?;
            Ok((0..p)
                .map(|m| {
                    (0..n_ctx)
                        .map(|xc| acc.abs[m][xc] >= report.imp_abs[m][xc] - 1e-12)
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let p_values = (0..p)
        .map(|m| {
            (0..n_ctx)
                .map(|xc| exceed.iter().filter(|e| e[m][xc]).count() as f64 / n_permutations as f64)
                .collect()
        })
        .collect();
    report.p_values = Some(p_values);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextLabel {
    Independent,
    Complementary,
    Redundant,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Characterization {
    pub variable: String,
    /// Label for each context value.
    pub per_context: Vec<ContextLabel>,
}

impl Characterization {
    pub fn is_context_dependent(&self) -> bool {
        self.per_context.iter().any(|&l| l != ContextLabel::Independent)
    }

    /// Single label summarizing all context values: the common label of the
    /// context-dependent values, `Mixed` if they disagree.
    pub fn overall(&self) -> ContextLabel {
        let mut dependent = self
            .per_context
            .iter()
            .filter(|&&l| l != ContextLabel::Independent);
        match dependent.next() {
            None => ContextLabel::Independent,
            Some(&first) if dependent.all(|&l| l == first) => first,
            Some(_) => ContextLabel::Mixed,
        }
    }

    pub fn values_with(&self, label: ContextLabel) -> Vec<u32> {
        (0..self.per_context.len() as u32)
            .filter(|&c| self.per_context[c as usize] == label)
            .collect()
    }
}

/// Labels each (variable, context value). A value is context-dependent when
/// `Imp^{|x_c|} > tolerance` (or, with p-values, when its p-value is below
/// `alpha`); it is complementary when `|Imp_s^{x_c}| = Imp^{|x_c|}` with a
/// negative sign, redundant with a positive sign, mixed otherwise.
pub fn characterize(report: &ContextReport, tolerance: f64, alpha: Option<f64>) -> Vec<Characterization> {
    (0..report.variables.len())
        .map(|m| {
            let per_context = (0..report.context_values.len())
                .map(|xc| {
                    let abs = report.imp_abs[m][xc];
                    let signed = report.imp_signed[m][xc];
                    let dependent = match (alpha, &report.p_values) {
                        (Some(a), Some(pv)) => pv[m][xc] < a,
                        _ => abs > tolerance,
                    };
                    if !dependent {
                        ContextLabel::Independent
                    } else if (signed.abs() - abs).abs() <= tolerance {
                        if signed < 0.0 {
                            ContextLabel::Complementary
                        } else {
                            ContextLabel::Redundant
                        }
                    } else {
                        ContextLabel::Mixed
                    }
                })
                .collect();
            Characterization {
                variable: report.variables[m].clone(),
                per_context,
            }
        })
        .collect()
}

/// Definition-level check of context independence: for every conditioning
/// set `B` of other inputs and every stratum `b`, `I(Y;X_m|B=b)` equals
/// `I(Y;X_m|B=b,X_c=x_c)` for all `x_c`.
pub fn is_context_independent(dist: &JointDistribution, m: usize, tolerance: f64) -> Result<bool> {
    let c = check_context(dist)?;
    let p = dist.n_inputs();
    if p > ORACLE_MAX_INPUTS || m >= p {
        return Err(Error::UnknownVariable(format!("input #{m}")));
    }
    let n_ctx = dist.context().expect("checked").cardinality as usize;
    for k in 0..p {
        for b in subsets_without(p, m, k) {
            let (abs, _) = stratified_terms(dist, m, dist.output_slot(), c, b, n_ctx);
            if abs.iter().any(|&a| a > tolerance) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
