//! Ensembles of randomized trees.
//!
//! Tree `i` of a forest is grown from its own RNG stream seeded with
//! [`derive_seed`]`(seed, i)`, so forests are bit-identical whatever the
//! number of threads.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tree::{argmax_lowest, grow_tree_with, SplitStrategy, Tree, TreeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Bootstrap replicate of the rows per tree.
    Bagging,
    /// `q` input columns per tree, drawn without replacement.
    RandomSubspace { q: usize },
    /// `q` input columns and `l` rows per tree, both without replacement.
    RandomPatches { q: usize, l: usize },
    /// All rows, random split values.
    ExtraTrees,
    /// All rows, `K = 1` and random split values.
    TotallyRandomized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub method: Method,
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl ForestConfig {
    pub fn new(method: Method, n_trees: usize, tree: TreeConfig, seed: u64) -> Self {
        ForestConfig {
            method,
            n_trees,
            tree,
            seed,
        }
    }

    /// Totally randomized multiway trees.
    pub fn totally_randomized(n_trees: usize, seed: u64) -> Self {
        Self::new(Method::TotallyRandomized, n_trees, TreeConfig::totally_randomized(), seed)
    }

    /// Tree configuration after the method's overrides.
    pub fn effective_tree_config(&self) -> TreeConfig {
        let mut tree = self.tree.clone();
        match self.method {
            Method::ExtraTrees => tree.split_strategy = SplitStrategy::Random,
            Method::TotallyRandomized => {
                tree.k = Some(1);
                tree.split_strategy = SplitStrategy::Random;
            }
            _ => {}
        }
        tree
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    ZeroOne,
    Mse,
}

impl Loss {
    pub fn eval(self, predicted: f64, actual: f64) -> f64 {
        match self {
            Loss::ZeroOne => f64::from(u8::from(predicted != actual)),
            Loss::Mse => (predicted - actual).powi(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    config: ForestConfig,
    trees: Vec<Tree>,
    /// Training rows of each tree (with multiplicity), `None` when the tree
    /// saw every row once.
    samples: Vec<Option<Vec<usize>>>,
    /// Candidate columns of each tree.
    features: Vec<Vec<usize>>,
    n_rows: usize,
    n_classes: Option<usize>,
}

pub fn build_forest(dataset: &Dataset, config: &ForestConfig) -> Result<Forest> {
    build_forest_on(dataset, config, &dataset.inputs())
}

/// Builds a forest whose trees only consider the given input columns.
pub fn build_forest_on(dataset: &Dataset, config: &ForestConfig, inputs: &[usize]) -> Result<Forest> {
    if config.n_trees == 0 {
        return Err(Error::config("a forest needs at least one tree"));
    }
    let n = dataset.n_rows();
    let p = inputs.len();
    match config.method {
        Method::RandomSubspace { q } | Method::RandomPatches { q, .. } if q == 0 || q > p => {
            return Err(Error::config(format!("subspace size q={q} must lie in 1..={p}")))
        }
        Method::RandomPatches { l, .. } if l == 0 || l > n => {
            return Err(Error::config(format!("patch size l={l} must lie in 1..={n}")))
        }
        _ => {}
    }
    let tree_config = config.effective_tree_config();
    tree_config.resolve(dataset, inputs)?;
    let grown: Vec<(Tree, Option<Vec<usize>>, Vec<usize>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(config.seed, i as u64));
            let (rows, sample, features) = match config.method {
                Method::Bagging => {
                    let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    (rows.clone(), Some(rows), inputs.to_vec())
                }
                Method::RandomSubspace { q } => {
                    let mut f: Vec<usize> = inputs.choose_multiple(&mut rng, q).copied().collect();
                    f.sort_unstable();
                    ((0..n).collect(), None, f)
                }
                Method::RandomPatches { q, l } => {
                    let mut f: Vec<usize> = inputs.choose_multiple(&mut rng, q).copied().collect();
                    f.sort_unstable();
                    let mut rows = index::sample(&mut rng, n, l).into_vec();
                    rows.sort_unstable();
                    (rows.clone(), Some(rows), f)
                }
                Method::ExtraTrees | Method::TotallyRandomized => ((0..n).collect(), None, inputs.to_vec()),
            };
            let tree = grow_tree_with(dataset, &tree_config, &rows, &features, &mut rng)?;
            Ok((tree, sample, features))
        })
        .collect::<Result<_>>()?;
    let mut trees = Vec::with_capacity(grown.len());
    let mut samples = Vec::with_capacity(grown.len());
    let mut features = Vec::with_capacity(grown.len());
    for (t, s, f) in grown {
        trees.push(t);
        samples.push(s);
        features.push(f);
    }
    Ok(Forest {
        config: config.clone(),
        trees,
        samples,
        features,
        n_rows: n,
        n_classes: dataset.n_classes(),
    })
}

impl Forest {
    pub(crate) fn from_parts(
        config: ForestConfig,
        trees: Vec<Tree>,
        samples: Vec<Option<Vec<usize>>>,
        features: Vec<Vec<usize>>,
        dataset: &Dataset,
    ) -> Self {
        Forest {
            config,
            trees,
            samples,
            features,
            n_rows: dataset.n_rows(),
            n_classes: dataset.n_classes(),
        }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn samples(&self) -> &[Option<Vec<usize>>] {
        &self.samples
    }

    pub fn features(&self) -> &[Vec<usize>] {
        &self.features
    }

    pub fn is_classification(&self) -> bool {
        self.n_classes.is_some()
    }

    /// Out-of-bag rows of tree `i` (empty when the tree saw every row).
    pub fn oob_rows(&self, i: usize) -> Vec<usize> {
        match &self.samples[i] {
            None => Vec::new(),
            Some(rows) => {
                let mut seen = vec![false; self.n_rows];
                rows.iter().for_each(|&r| seen[r] = true);
                (0..self.n_rows).filter(|&r| !seen[r]).collect()
            }
        }
    }

    /// Aggregates the predictions of a subset of trees: majority vote with
    /// ties to the lowest class, or the mean for regression.
    pub fn predict_with<'a>(&self, trees: impl IntoIterator<Item = &'a Tree>, x: &[f64]) -> Option<f64> {
        match self.n_classes {
            Some(c) => {
                let mut votes = vec![0.0; c];
                let mut any = false;
                for t in trees {
                    votes[t.predict(x) as usize] += 1.0;
                    any = true;
                }
                any.then(|| argmax_lowest(&votes) as f64)
            }
            None => {
                let (mut sum, mut count) = (0.0, 0usize);
                for t in trees {
                    sum += t.predict(x);
                    count += 1;
                }
                (count > 0).then(|| sum / count as f64)
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_with(&self.trees, x).expect("forest has trees")
    }

    pub fn oob_error(&self, dataset: &Dataset, loss: Loss) -> Result<OobError> {
        if self.samples.iter().all(Option::is_none) {
            return Err(Error::config("out-of-bag error needs bagging or random patches"));
        }
        let mut oob_trees: Vec<Vec<usize>> = vec![Vec::new(); self.n_rows];
        for i in 0..self.trees.len() {
            for r in self.oob_rows(i) {
                oob_trees[r].push(i);
            }
        }
        let target = dataset.target();
        let (mut total, mut weight, mut used, mut excluded) = (0.0, 0.0, 0usize, 0usize);
        for (r, trees) in oob_trees.iter().enumerate() {
            let x = row(dataset, r);
            match self.predict_with(trees.iter().map(|&i| &self.trees[i]), &x) {
                Some(pred) => {
                    let w = dataset.weight(r);
                    total += w * loss.eval(pred, dataset.value(r, target));
                    weight += w;
                    used += 1;
                }
                None => excluded += 1,
            }
        }
        if used == 0 {
            return Err(Error::Empty("no row is out of bag for any tree".into()));
        }
        Ok(OobError {
            error: total / weight,
            n_used: used,
            n_excluded: excluded,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OobError {
    pub error: f64,
    pub n_used: usize,
    /// Rows that were in bag for every tree.
    pub n_excluded: usize,
}

/// All column values of row `r`.
pub fn row(dataset: &Dataset, r: usize) -> Vec<f64> {
    (0..dataset.n_columns()).map(|c| dataset.value(r, c)).collect()
}

pub fn forest_predict(forest: &Forest, x: &[f64]) -> f64 {
    forest.predict(x)
}

pub fn oob_error(forest: &Forest, dataset: &Dataset, loss: Loss) -> Result<OobError> {
    forest.oob_error(dataset, loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{generate, Column, Problem};
    use crate::tree::SplitFamily;

    #[test]
    fn bootstrap_sizes_and_coverage() {
        let ds = generate(Problem::Digit).unwrap().sample(1000, 1).unwrap();
        let cfg = ForestConfig::new(Method::Bagging, 20, TreeConfig::default().with_k(2), 3);
        let f = build_forest(&ds, &cfg).unwrap();
        let mut frac = 0.0;
        for s in f.samples() {
            let s = s.as_ref().unwrap();
            assert_eq!(s.len(), 1000);
            let mut d = s.clone();
            d.sort_unstable();
            d.dedup();
            frac += d.len() as f64 / 1000.0 / 20.0;
        }
        assert!((frac - 0.632).abs() < 0.02, "{frac}");
    }

    #[test]
    fn determinism_and_order_invariance() {
        let ds = generate(Problem::Digit).unwrap().sample(100, 2).unwrap();
        let cfg = ForestConfig::new(Method::Bagging, 9, TreeConfig::default(), 11);
        let a = build_forest(&ds, &cfg).unwrap();
        assert_eq!(a, build_forest(&ds, &cfg).unwrap());
        let mut reversed = a.clone();
        reversed.trees.reverse();
        for r in 0..ds.n_rows() {
            let x = row(&ds, r);
            assert_eq!(a.predict(&x), reversed.predict(&x));
        }
    }

    #[test]
    fn subspace_leaves_features_unused() {
        let ds = generate(Problem::Chain { p: 5, r: 2 }).unwrap().to_exact_dataset();
        let cfg = ForestConfig::new(Method::RandomSubspace { q: 3 }, 10, TreeConfig::default(), 0);
        let f = build_forest(&ds, &cfg).unwrap();
        for t in f.trees() {
            assert!(t.importances()[..5].iter().filter(|&&v| v == 0.0).count() >= 2);
        }
        let bad = ForestConfig::new(Method::RandomSubspace { q: 6 }, 1, TreeConfig::default(), 0);
        assert!(matches!(build_forest(&ds, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn totally_randomized_overrides() {
        let cfg = ForestConfig::new(Method::TotallyRandomized, 1, TreeConfig::default().with_k(5), 0);
        let t = cfg.effective_tree_config();
        assert_eq!(t.k, Some(1));
        assert_eq!(t.split_strategy, SplitStrategy::Random);
    }

    #[test]
    fn votes_and_means() {
        let ds = Dataset::new(
            vec![Column::categorical("X", 2, &[0, 1]), Column::categorical("Y", 2, &[0, 1])],
            1,
            None,
            None,
        )
        .unwrap();
        let f = build_forest(&ds, &ForestConfig::new(Method::ExtraTrees, 3, TreeConfig::default(), 0)).unwrap();
        assert_eq!(f.predict(&[1.0, 0.0]), 1.0);
        assert_eq!(f.predict(&[0.0, 0.0]), 0.0);

        let ds = Dataset::new(
            vec![Column::numeric("x", vec![0.0, 1.0]), Column::numeric("y", vec![1.0, 3.0])],
            1,
            None,
            None,
        )
        .unwrap();
        let stump = TreeConfig::default().with_family(SplitFamily::BinaryOrdered).with_depth(0);
        let f = build_forest(&ds, &ForestConfig::new(Method::ExtraTrees, 2, stump, 0)).unwrap();
        assert_eq!(f.predict(&[0.0, 0.0]), 2.0);
    }

    #[test]
    fn oob_errors() {
        let ds = generate(Problem::Digit).unwrap().sample(500, 4).unwrap();
        let f = build_forest(&ds, &ForestConfig::new(Method::Bagging, 30, TreeConfig::default(), 5)).unwrap();
        let e = f.oob_error(&ds, Loss::ZeroOne).unwrap();
        assert!(e.error < 0.01, "{e:?}");

        let y: Vec<u32> = (0..1000).map(|i| (i % 2) as u32).collect();
        let x = vec![0u32; 1000];
        let ds = Dataset::new(
            vec![Column::categorical("X", 2, &x), Column::categorical("Y", 2, &y)],
            1,
            None,
            None,
        )
        .unwrap();
        let f = build_forest(&ds, &ForestConfig::new(Method::Bagging, 25, TreeConfig::default(), 6)).unwrap();
        let e = f.oob_error(&ds, Loss::ZeroOne).unwrap();
        assert!((e.error - 0.5).abs() < 0.05, "{e:?}");

        let single = build_forest(&ds, &ForestConfig::new(Method::Bagging, 1, TreeConfig::default(), 6)).unwrap();
        let e = single.oob_error(&ds, Loss::ZeroOne).unwrap();
        assert_eq!(e.n_used, single.oob_rows(0).len());
        assert_eq!(e.n_used + e.n_excluded, 1000);

        let et = build_forest(&ds, &ForestConfig::new(Method::ExtraTrees, 2, TreeConfig::default(), 6)).unwrap();
        assert!(et.oob_error(&ds, Loss::ZeroOne).is_err());
    }
}
