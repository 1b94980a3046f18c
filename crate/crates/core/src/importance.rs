//! Variable importances: empirical scores from grown forests and the exact
//! infinite-sample MDI of totally randomized trees.
//!
//! For `p` inputs, fully developed totally randomized trees built on an
//! infinitely large sample give input `X_m` the importance
//!
//! ```text
//! Imp(X_m) = Σ_{k=0}^{p-1} 1 / (C(p,k) (p-k)) Σ_{B ⊆ V^{-m}, |B|=k} I(X_m; Y | B)
//! ```
//!
//! and trees pruned at depth `q` keep only the terms `k < q`.
//! [`asymptotic_mdi`] evaluates this sum by enumerating conditioning sets
//! with memoized entropies.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{Dataset, JointDistribution, ORACLE_MAX_INPUTS};
use crate::error::{Error, Result};
use crate::forest::{row, Forest, Loss};
use crate::infotheory::{subsets_without, Oracle};
use crate::rng::{derive_seed, rng_from_seed};

/// Importances at or below this value count as zero for oracle results.
pub const ORACLE_ZERO: f64 = 1e-9;

/// Per-variable scores of one importance measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub measure: String,
    pub variables: Vec<String>,
    pub scores: Vec<f64>,
    /// `per_degree[m][k]`: contribution of conditioning sets of size `k`
    /// (oracle) or of nodes at depth `k` (empirical MDI). Rows sum to
    /// `scores[m]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_degree: Option<Vec<Vec<f64>>>,
    /// Variables whose score is a sentinel (e.g. an infinite z-score caused
    /// by zero variance).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flagged: Vec<String>,
    pub params: BTreeMap<String, String>,
}

impl ImportanceReport {
    pub fn new(measure: impl Into<String>, variables: Vec<String>, scores: Vec<f64>) -> Self {
        ImportanceReport {
            measure: measure.into(),
            variables,
            scores,
            per_degree: None,
            flagged: Vec::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.variables
            .iter()
            .position(|v| v == name)
            .map(|i| self.scores[i])
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

fn input_names(dataset: &Dataset) -> Vec<String> {
    dataset
        .inputs()
        .into_iter()
        .map(|j| dataset.column(j).name.clone())
        .collect()
}

fn forest_params(report: ImportanceReport, forest: &Forest) -> ImportanceReport {
    let cfg = forest.config();
    let k = cfg
        .effective_tree_config()
        .k
        .map_or("all".to_string(), |k| k.to_string());
    report
        .with_param("method", serde_json::to_string(&cfg.method).unwrap_or_default())
        .with_param("n_trees", cfg.n_trees)
        .with_param("K", k)
        .with_param("seed", cfg.seed)
}

/// Mean decrease of impurity: average over trees of `Σ p(t) Δi(s, t)` over
/// the nodes splitting on each input. `per_degree` splits the score by node
/// depth.
pub fn mdi(forest: &Forest, dataset: &Dataset) -> ImportanceReport {
    let inputs = dataset.inputs();
    let n_t = forest.n_trees() as f64;
    let width = forest
        .trees()
        .iter()
        .map(|t| t.depth())
        .max()
        .unwrap_or(1)
        .max(inputs.len())
        .max(1);
    let mut by_depth = vec![vec![0.0; width]; inputs.len()];
    let position: BTreeMap<usize, usize> = inputs.iter().enumerate().map(|(i, &j)| (j, i)).collect();
    for tree in forest.trees() {
        for node in tree.nodes() {
            if let Some(split) = &node.split {
                if let Some(&i) = position.get(&split.feature) {
                    by_depth[i][node.depth] += split.delta / n_t;
                }
            }
        }
    }
    let scores = by_depth.iter().map(|r| r.iter().sum()).collect();
    let mut report = ImportanceReport::new("mdi", input_names(dataset), scores);
    report.per_degree = Some(by_depth);
    forest_params(report, forest)
}

/// Fraction of internal nodes of the forest splitting on each input.
pub fn selection_frequency(forest: &Forest, dataset: &Dataset) -> Result<ImportanceReport> {
    let inputs = dataset.inputs();
    let mut counts = vec![0usize; inputs.len()];
    for tree in forest.trees() {
        for (i, &j) in inputs.iter().enumerate() {
            counts[i] += tree.split_counts()[j];
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("forest has no internal node".into()));
    }
    let scores = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(forest_params(
        ImportanceReport::new("selection_frequency", input_names(dataset), scores),
        forest,
    ))
}

fn weighted_loss(forest: &Forest, tree: usize, dataset: &Dataset, rows: &[usize], xs: &[Vec<f64>], loss: Loss) -> f64 {
    let t = &forest.trees()[tree];
    let target = dataset.target();
    let (mut sum, mut weight) = (0.0, 0.0);
    for (&r, x) in rows.iter().zip(xs) {
        let w = dataset.weight(r);
        sum += w * loss.eval(t.predict(x), dataset.value(r, target));
        weight += w;
    }
    sum / weight
}

/// Per-tree permutation importances, `[tree][input]`, for the trees that
/// have out-of-bag rows.
pub fn mda_per_tree(
    forest: &Forest,
    dataset: &Dataset,
    loss: Loss,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_repeats == 0 {
        return Err(Error::param("n_repeats must be at least 1"));
    }
    let inputs = dataset.inputs();
    let per_tree: Vec<Option<Vec<f64>>> = (0..forest.n_trees())
        .into_par_iter()
        .map(|i| {
            let oob = forest.oob_rows(i);
            if oob.is_empty() {
                return None;
            }
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let xs: Vec<Vec<f64>> = oob.iter().map(|&r| row(dataset, r)).collect();
            let base = weighted_loss(forest, i, dataset, &oob, &xs, loss);
            let scores = inputs
                .iter()
                .map(|&j| {
                    let mut acc = 0.0;
                    for _ in 0..n_repeats {
                        let mut perm: Vec<usize> = (0..oob.len()).collect();
                        perm.shuffle(&mut rng);
                        let permuted: Vec<Vec<f64>> = xs
                            .iter()
                            .zip(&perm)
                            .map(|(x, &src)| {
                                let mut x = x.clone();
                                x[j] = xs[src][j];
                                x
                            })
                            .collect();
                        acc += weighted_loss(forest, i, dataset, &oob, &permuted, loss) - base;
                    }
                    acc / n_repeats as f64
                })
                .collect();
            Some(scores)
        })
        .collect();
    let rows: Vec<Vec<f64>> = per_tree.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::Empty("no tree has out-of-bag rows".into()));
    }
    Ok(rows)
}

/// Mean decrease of accuracy: per tree, the increase of out-of-bag loss when
/// an input is permuted among the out-of-bag rows, averaged over
/// `n_repeats` permutations and then over trees.
pub fn mda(forest: &Forest, dataset: &Dataset, loss: Loss, n_repeats: usize, seed: u64) -> Result<ImportanceReport> {
    let per_tree = mda_per_tree(forest, dataset, loss, n_repeats, seed)?;
    let n = per_tree.len() as f64;
    let scores = (0..per_tree[0].len())
        .map(|m| per_tree.iter().map(|r| r[m]).sum::<f64>() / n)
        .collect();
    Ok(forest_params(ImportanceReport::new("mda", input_names(dataset), scores), forest)
        .with_param("loss", format!("{loss:?}"))
        .with_param("n_repeats", n_repeats)
        .with_param("permutation_seed", seed))
}

/// `mean / (sd / √n)` of per-tree scores, with the sample standard
/// deviation. `None` when the deviation is zero.
pub fn zscore(values: &[f64]) -> Option<f64> {
    let n = values.len() as f64;
    if values.len() < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    (se > 0.0).then(|| mean / se)
}

/// MDA divided by its standard error across trees. Inputs with zero
/// variance get `+∞` and are listed in `flagged`.
pub fn mda_zscore(
    forest: &Forest,
    dataset: &Dataset,
    loss: Loss,
    n_repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if forest.n_trees() < 2 {
        return Err(Error::param("z-scores need at least two trees"));
    }
    let per_tree = mda_per_tree(forest, dataset, loss, n_repeats, seed)?;
    let names = input_names(dataset);
    let mut flagged = Vec::new();
    let scores = (0..names.len())
        .map(|m| {
            let col: Vec<f64> = per_tree.iter().map(|r| r[m]).collect();
            zscore(&col).unwrap_or_else(|| {
                flagged.push(names[m].clone());
                f64::INFINITY
            })
        })
        .collect();
    let mut report = forest_params(ImportanceReport::new("mda_zscore", names, scores), forest)
        .with_param("loss", format!("{loss:?}"));
    report.flagged = flagged;
    Ok(report)
}

/// `C(n, k)` exactly, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// Weight `1 / (C(p,k) (p-k))` of a conditioning set of size `k`.
pub fn degree_weight(p: usize, k: usize) -> f64 {
    let c = binomial(p as u64, k as u64).map_or(f64::INFINITY, |c| c as f64);
    1.0 / (c * (p - k) as f64)
}

/// Checks `C(p-1,k) / (C(p,k) (p-k)) = 1/p` for every `k < p` in exact
/// integer arithmetic.
pub fn weight_identity_check(p: usize) -> bool {
    if p == 0 {
        return false;
    }
    let p = p as u64;
    (0..p).all(|k| match (binomial(p - 1, k), binomial(p, k)) {
        (Some(a), Some(b)) => a * u128::from(p) == b * u128::from(p - k),
        _ => false,
    })
}

fn check_oracle(dist: &JointDistribution, m: usize, q: usize) -> Result<()> {
    let p = dist.n_inputs();
    if p > ORACLE_MAX_INPUTS {
        return Err(Error::TooLarge {
            size: p,
            limit: ORACLE_MAX_INPUTS,
        });
    }
    if m >= p {
        return Err(Error::UnknownVariable(format!("input #{m}")));
    }
    if q == 0 || q > p {
        return Err(Error::param(format!("depth q={q} must lie in 1..={p}")));
    }
    Ok(())
}

/// `Σ_B I(X_m; Y | B)` over conditioning sets of size `k`.
fn degree_sum(oracle: &Oracle, m: usize, k: usize) -> f64 {
    let p = oracle.distribution().n_inputs();
    let (x, y) = (1u64 << m, oracle.output_mask());
    subsets_without(p, m, k).map(|b| oracle.cmi_mask(x, y, b)).sum()
}

fn oracle_terms(oracle: &Oracle, m: usize, q: usize) -> Vec<f64> {
    let p = oracle.distribution().n_inputs();
    (0..q).map(|k| degree_weight(p, k) * degree_sum(oracle, m, k)).collect()
}

/// Infinite-sample MDI of input `m` for totally randomized trees of depth
/// `q` (`q = p` for fully developed trees), with its per-degree terms.
pub fn asymptotic_mdi(dist: &JointDistribution, m: usize, q: usize) -> Result<(f64, Vec<f64>)> {
    check_oracle(dist, m, q)?;
    let oracle = Oracle::new(dist);
    let terms = oracle_terms(&oracle, m, q);
    Ok((terms.iter().sum(), terms))
}

/// [`asymptotic_mdi`] for every input, sharing one entropy cache.
pub fn asymptotic_mdi_report(dist: &JointDistribution, q: usize) -> Result<ImportanceReport> {
    let p = dist.n_inputs();
    if p == 0 {
        return Err(Error::Empty("distribution has no input".into()));
    }
    check_oracle(dist, 0, q)?;
    let oracle = Oracle::new(dist);
    let terms: Vec<Vec<f64>> = (0..p).into_par_iter().map(|m| oracle_terms(&oracle, m, q)).collect();
    let scores = terms.iter().map(|t| t.iter().sum()).collect();
    let names = dist.inputs().iter().map(|v| v.name.clone()).collect();
    let mut report = ImportanceReport::new("asymptotic_mdi", names, scores).with_param("q", q);
    report.per_degree = Some(terms);
    Ok(report)
}

/// Infinite-sample MDI of input `j` once an exact copy of it is added to the
/// inputs: `Σ_k (p-k)/(p+1) · 1/(C(p,k)(p-k)) · Σ_B I(X_j; Y | B)`.
pub fn asymptotic_mdi_redundant_closed_form(dist: &JointDistribution, j: usize) -> Result<f64> {
    let p = dist.n_inputs();
    if p + 1 > ORACLE_MAX_INPUTS {
        return Err(Error::TooLarge {
            size: p + 1,
            limit: ORACLE_MAX_INPUTS,
        });
    }
    check_oracle(dist, j, p)?;
    let oracle = Oracle::new(dist);
    Ok((0..p)
        .map(|k| (p - k) as f64 / (p + 1) as f64 * degree_weight(p, k) * degree_sum(&oracle, j, k))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{generate, Column, Problem, Variable};
    use crate::forest::{build_forest, ForestConfig, Method};
    use crate::tree::TreeConfig;

    const DIGIT_TABLE: [[f64; 7]; 7] = [
        [0.103, 0.085, 0.068, 0.053, 0.042, 0.033, 0.029],
        [0.139, 0.126, 0.105, 0.082, 0.060, 0.042, 0.029],
        [0.103, 0.091, 0.081, 0.073, 0.066, 0.061, 0.057],
        [0.126, 0.114, 0.097, 0.077, 0.058, 0.042, 0.029],
        [0.139, 0.123, 0.106, 0.090, 0.076, 0.065, 0.057],
        [0.067, 0.056, 0.043, 0.031, 0.020, 0.010, 0.000],
        [0.126, 0.098, 0.070, 0.045, 0.025, 0.010, 0.000],
    ];

    #[test]
    fn digit_table() {
        let d = generate(Problem::Digit).unwrap();
        let report = asymptotic_mdi_report(&d, 7).unwrap();
        let per = report.per_degree.as_ref().unwrap();
        for m in 0..7 {
            for k in 0..7 {
                assert!((per[m][k] - DIGIT_TABLE[m][k]).abs() < 1e-3, "X{} k={k}: {}", m + 1, per[m][k]);
            }
        }
        assert!((report.total() - 10f64.log2()).abs() < 1e-9);
        let (x1, terms) = asymptotic_mdi(&d, 0, 1).unwrap();
        assert_eq!(terms.len(), 1);
        assert!((x1 - 0.103).abs() < 1e-3);
    }

    #[test]
    fn weights() {
        for p in [1, 2, 3, 6, 7, 8, 10] {
            assert!(weight_identity_check(p));
        }
        for k in 0..10 {
            let w = binomial(9, k).unwrap() as f64 * degree_weight(10, k as usize);
            assert!((w - 0.1).abs() < 1e-15);
        }
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(3, 5), Some(0));
    }

    #[test]
    fn redundant_closed_form() {
        let d = generate(Problem::Digit).unwrap();
        let closed = asymptotic_mdi_redundant_closed_form(&d, 0).unwrap();
        let dup = d.with_duplicate_input(0).unwrap();
        let (direct, _) = asymptotic_mdi(&dup, 0, 8).unwrap();
        assert!((closed - direct).abs() < 1e-9);
        let (plain, _) = asymptotic_mdi(&d, 0, 7).unwrap();
        assert!(closed < plain);

        let copy = JointDistribution::new(
            vec![Variable::new("X1", 2)],
            Variable::new("Y", 2),
            None,
            vec![(vec![0, 0], 0.5), (vec![1, 1], 0.5)],
        )
        .unwrap();
        assert!((asymptotic_mdi_redundant_closed_form(&copy, 0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_guards() {
        let d = generate(Problem::Digit).unwrap();
        assert!(asymptotic_mdi(&d, 0, 0).is_err());
        assert!(asymptotic_mdi(&d, 0, 8).is_err());
        assert!(asymptotic_mdi(&d, 7, 1).is_err());
    }

    #[test]
    fn single_tree_mdi_sums_to_entropy() {
        let ds = generate(Problem::Digit).unwrap().to_exact_dataset();
        let f = build_forest(&ds, &ForestConfig::totally_randomized(1, 3)).unwrap();
        let r = mdi(&f, &ds);
        assert!((r.total() - 10f64.log2()).abs() < 1e-9);
        for (m, row) in r.per_degree.as_ref().unwrap().iter().enumerate() {
            assert!((row.iter().sum::<f64>() - r.scores[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn selection_frequencies() {
        let ds = Dataset::new(
            vec![
                Column::categorical("X1", 2, &[0, 0, 1, 1]),
                Column::categorical("X2", 2, &[0, 1, 0, 1]),
                Column::categorical("N", 2, &[0, 0, 0, 0]),
                Column::categorical("Y", 2, &[0, 0, 1, 1]),
            ],
            3,
            None,
            None,
        )
        .unwrap();
        let f = build_forest(&ds, &ForestConfig::new(Method::ExtraTrees, 1, TreeConfig::default(), 0)).unwrap();
        let s = selection_frequency(&f, &ds).unwrap();
        assert_eq!(s.scores, vec![1.0, 0.0, 0.0]);
        let pure = Dataset::new(
            vec![Column::categorical("X", 2, &[0, 1]), Column::categorical("Y", 2, &[1, 1])],
            1,
            None,
            None,
        )
        .unwrap();
        let f = build_forest(&pure, &ForestConfig::new(Method::ExtraTrees, 2, TreeConfig::default(), 0)).unwrap();
        assert!(selection_frequency(&f, &pure).is_err());
    }

    #[test]
    fn zscores() {
        assert_eq!(zscore(&[0.0, 2.0]), Some(1.0));
        assert_eq!(zscore(&[1.0; 4]), None);
        assert_eq!(zscore(&[0.0; 4]), None);
    }

    #[test]
    fn mda_on_a_copy() {
        let n = 2000;
        let y: Vec<u32> = (0..n).map(|i| (i * 7 % 2) as u32).collect();
        let noise: Vec<u32> = (0..n).map(|i| ((i / 2) % 2) as u32).collect();
        let ds = Dataset::new(
            vec![
                Column::categorical("X1", 2, &y),
                Column::categorical("N", 2, &noise),
                Column::categorical("Y", 2, &y),
            ],
            2,
            None,
            None,
        )
        .unwrap();
        let f = build_forest(&ds, &ForestConfig::new(Method::Bagging, 50, TreeConfig::default().with_depth(1), 1)).unwrap();
        let r = mda(&f, &ds, Loss::ZeroOne, 5, 2).unwrap();
        assert!((r.scores[0] - 0.5).abs() < 0.05, "{:?}", r.scores);
        assert!(r.scores[1].abs() < 0.02);
        let z = mda_zscore(&f, &ds, Loss::ZeroOne, 5, 2).unwrap();
        assert_eq!(z.flagged, vec!["N".to_string()]);
    }
}
