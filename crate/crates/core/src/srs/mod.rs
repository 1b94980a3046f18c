//! Sequential random subspace (SRS) feature selection.
//!
//! Each iteration grows one tree on a subspace `Q` of `q` inputs made of
//! `min(⌊αq⌋, |F|)` features re-injected from the set `F` of features found
//! so far, completed with features drawn from the rest. Features of `Q`
//! judged relevant by the tree join `F`; they are never removed. `α = 0` is
//! the plain random subspace method.

pub mod theory;

use std::io::Write;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::distributions::{Column, Dataset};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestConfig, Method};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tree::{grow_tree_with, TreeConfig};

pub use theory::{
    expected_found_curve, expected_time, markov_expected_time, markov_transition_matrix, simulate_expected_time,
    Scenario, ScenarioModel, SubspaceMethod,
};

/// Importance above which a feature counts as used by a tree in exact mode.
pub const EXACT_RELEVANCE_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceMode {
    /// Positive importance in the tree (asymptotic semantics, for
    /// exact-frequency data).
    Exact,
    /// Random-probe test: see [`probe_test`].
    Probe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrsConfig {
    pub q: usize,
    pub iterations: usize,
    pub alpha: f64,
    /// Variables drawn at each node.
    pub k: usize,
    /// `L`: evaluations needed before the probe test can pass.
    pub min_evaluations: usize,
    /// `β`: fraction of evaluations in which the feature must beat the probe.
    pub pass_fraction: f64,
    pub mode: RelevanceMode,
    /// Base tree configuration; its `k` and `seed` are overridden.
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for SrsConfig {
    fn default() -> Self {
        SrsConfig {
            q: 10,
            iterations: 100,
            alpha: 1.0,
            k: 1,
            min_evaluations: 10,
            pass_fraction: 0.95,
            mode: RelevanceMode::Probe,
            tree: TreeConfig::default(),
            seed: 0,
        }
    }
}

impl SrsConfig {
    fn validate(&self, p: usize) -> Result<()> {
        if self.q == 0 || self.q > p {
            return Err(Error::config(format!("q={} must lie in 1..={p}", self.q)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha={} must lie in [0, 1]", self.alpha)));
        }
        if self.k == 0 || self.k > self.q {
            return Err(Error::config(format!("K={} must lie in 1..={}", self.k, self.q)));
        }
        if self.iterations == 0 {
            return Err(Error::config("at least one iteration is needed"));
        }
        if self.min_evaluations == 0 {
            return Err(Error::config("L must be at least 1"));
        }
        if !(self.pass_fraction > 0.0 && self.pass_fraction <= 1.0) {
            return Err(Error::config(format!("beta={} must lie in (0, 1]", self.pass_fraction)));
        }
        Ok(())
    }

    fn reserved(&self) -> usize {
        (self.alpha * self.q as f64 + 1e-9).floor() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Subspace `Q`, sorted column indices.
    pub subset: Vec<usize>,
    /// Part of `Q` re-injected from `F`.
    pub reinjected: Vec<usize>,
    /// Column whose permuted values formed the probe (probe mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_source: Option<usize>,
    pub new_features: Vec<usize>,
    pub n_found: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub column: usize,
    pub name: String,
    pub evaluations: usize,
    /// Evaluations in which the feature's importance exceeded the probe's.
    pub wins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrsTrace {
    pub iterations: Vec<IterationRecord>,
    /// `F` in order of discovery.
    pub found: Vec<usize>,
    pub stats: Vec<FeatureStats>,
    /// Column index of the probe in the trees of the returned forest.
    pub probe_column: Option<usize>,
}

impl SrsTrace {
    /// Iteration at which the feature joined `F`.
    pub fn discovery_iteration(&self, column: usize) -> Option<usize> {
        self.iterations
            .iter()
            .find(|r| r.new_features.contains(&column))
            .map(|r| r.iteration)
    }

    /// One JSON object per iteration, then a summary line.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for r in &self.iterations {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        let summary = serde_json::json!({ "found": self.found, "stats": self.stats });
        serde_json::to_writer(&mut w, &summary)?;
        writeln!(w)?;
        Ok(())
    }
}

/// `true` iff the feature was evaluated at least `min_evaluations` times and
/// beat the probe in at least a `pass_fraction` of them.
pub fn probe_test(evaluations: usize, wins: usize, min_evaluations: usize, pass_fraction: f64) -> bool {
    evaluations >= min_evaluations && wins as f64 >= pass_fraction * evaluations as f64 - 1e-12
}

/// Runs SRS. In probe mode the trees of the returned forest were grown on
/// the dataset with one extra column, the probe, at index
/// `dataset.n_columns()`; MDI computed on `dataset` ignores it.
pub fn srs_run(dataset: &Dataset, config: &SrsConfig) -> Result<(Forest, SrsTrace)> {
    run(dataset, config, true)
}

/// Plain random subspace with the same relevance rule: every iteration draws
/// `q` inputs uniformly. Consumes randomness exactly like [`srs_run`] with
/// `alpha = 0`.
pub fn random_subspace_run(dataset: &Dataset, config: &SrsConfig) -> Result<(Forest, SrsTrace)> {
    run(dataset, config, false)
}

fn run(dataset: &Dataset, config: &SrsConfig, reinject: bool) -> Result<(Forest, SrsTrace)> {
    let inputs = dataset.inputs();
    config.validate(inputs.len())?;
    let tree_config = TreeConfig {
        k: Some(config.k),
        ..config.tree.clone()
    };
    tree_config.resolve(dataset, &inputs)?;
    let n = dataset.n_rows();
    let rows: Vec<usize> = (0..n).collect();
    let probe_mode = config.mode == RelevanceMode::Probe;
    let probe_column = probe_mode.then(|| dataset.n_columns());
    let mut work = match probe_column {
        Some(_) => Some(dataset.with_appended_column(Column::numeric("__probe", vec![0.0; n]))?),
        None => None,
    };
    let position = |j: usize| inputs.binary_search(&j).expect("input column");
    let mut stats: Vec<FeatureStats> = inputs
        .iter()
        .map(|&j| FeatureStats {
            column: j,
            name: dataset.column(j).name.clone(),
            evaluations: 0,
            wins: 0,
        })
        .collect();
    let mut found: Vec<usize> = Vec::new();
    let mut in_found = vec![false; inputs.len()];
    let mut records = Vec::with_capacity(config.iterations);
    let mut trees = Vec::with_capacity(config.iterations);
    let mut features = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let mut rng = rng_from_seed(derive_seed(config.seed, it as u64));
        let n_r = if reinject { config.reserved().min(found.len()) } else { 0 };
        let reinjected: Vec<usize> = if n_r > 0 {
            found.choose_multiple(&mut rng, n_r).copied().collect()
        } else {
            Vec::new()
        };
        let rest: Vec<usize> = inputs.iter().copied().filter(|j| !reinjected.contains(j)).collect();
        let mut subset = reinjected.clone();
        subset.extend(rest.choose_multiple(&mut rng, config.q - n_r).copied());
        subset.sort_unstable();
        let mut candidates = subset.clone();
        let mut probe_source = None;
        let data = match (&mut work, probe_column) {
            (Some(w), Some(pc)) => {
                let src = *subset.choose(&mut rng).expect("q >= 1");
                let perm = index::sample(&mut rng, n, n);
                let source = dataset.column(src);
                w.set_column(
                    pc,
                    Column {
                        name: "__probe".into(),
                        kind: source.kind.clone(),
                        values: perm.iter().map(|r| source.values[r]).collect(),
                    },
                );
                candidates.push(pc);
                probe_source = Some(src);
                &*w
            }
            _ => dataset,
        };
        let tree = grow_tree_with(data, &tree_config, &rows, &candidates, &mut rng)?;
        let imp = tree.importances();
        let mut new_features = Vec::new();
        for &j in &subset {
            let i = position(j);
            let relevant = match probe_column {
                Some(pc) => {
                    stats[i].evaluations += 1;
                    if imp[j] > imp[pc] {
                        stats[i].wins += 1;
                    }
                    probe_test(stats[i].evaluations, stats[i].wins, config.min_evaluations, config.pass_fraction)
                }
                None => {
                    stats[i].evaluations += 1;
                    imp[j] > EXACT_RELEVANCE_THRESHOLD
                }
            };
            if relevant && !in_found[i] {
                in_found[i] = true;
                found.push(j);
                new_features.push(j);
            }
        }
        records.push(IterationRecord {
            iteration: it,
            subset,
            reinjected,
            probe_source,
            new_features,
            n_found: found.len(),
        });
        trees.push(tree);
        features.push(candidates);
    }
    let forest_config = ForestConfig::new(
        Method::RandomSubspace { q: config.q },
        config.iterations,
        tree_config,
        config.seed,
    );
    let forest = Forest::from_parts(
        forest_config,
        trees,
        vec![None; config.iterations],
        features,
        dataset,
    );
    Ok((
        forest,
        SrsTrace {
            iterations: records,
            found,
            stats,
            probe_column,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{generate, Problem};
    use crate::infotheory::{classify_relevance, Relevance};
    use crate::tree::SplitStrategy;

    fn exact_config(q: usize, alpha: f64, iterations: usize, seed: u64) -> SrsConfig {
        SrsConfig {
            q,
            iterations,
            alpha,
            mode: RelevanceMode::Exact,
            tree: TreeConfig::totally_randomized(),
            seed,
            ..SrsConfig::default()
        }
    }

    #[test]
    fn probe_rule() {
        assert!(!probe_test(5, 5, 10, 0.95));
        assert!(probe_test(10, 10, 10, 0.95));
        assert!(!probe_test(10, 9, 10, 0.95));
        assert!(probe_test(20, 19, 10, 0.95));
    }

    #[test]
    fn alpha_zero_is_random_subspace() {
        let ds = generate(Problem::Chain { p: 8, r: 3 }).unwrap().to_exact_dataset();
        let cfg = exact_config(3, 0.0, 60, 7);
        let (_, a) = srs_run(&ds, &cfg).unwrap();
        let (_, b) = random_subspace_run(&ds, &cfg).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.found, b.found);
    }

    #[test]
    fn subsets_have_size_q_and_found_features_return() {
        let ds = generate(Problem::Chain { p: 10, r: 3 }).unwrap().to_exact_dataset();
        let (forest, trace) = srs_run(&ds, &exact_config(4, 1.0, 200, 3)).unwrap();
        assert_eq!(forest.n_trees(), 200);
        let mut found = Vec::new();
        for r in &trace.iterations {
            assert_eq!(r.subset.len(), 4);
            assert_eq!(r.reinjected.len(), found.len().min(4));
            for f in &found {
                assert!(r.subset.contains(f));
            }
            found.extend(&r.new_features);
        }
    }

    #[test]
    fn finds_exactly_the_relevant_features() {
        for problem in [Problem::Chain { p: 8, r: 3 }, Problem::Clique { p: 8, r: 2 }, Problem::MarginalOnly { p: 8, r: 3 }] {
            let dist = generate(problem).unwrap();
            let ds = dist.to_exact_dataset();
            let mut relevant: Vec<usize> = (0..dist.n_inputs())
                .filter(|&m| classify_relevance(&dist, m).unwrap().label != Relevance::Irrelevant)
                .collect();
            relevant.sort_unstable();
            for seed in 0..3 {
                let (_, trace) = srs_run(&ds, &exact_config(4, 1.0, 400, seed)).unwrap();
                let mut found: Vec<usize> = trace.found.iter().map(|&j| ds.inputs().binary_search(&j).unwrap()).collect();
                found.sort_unstable();
                assert_eq!(found, relevant, "{problem:?} seed {seed}");
            }
        }
    }

    #[test]
    fn probe_mode_runs_and_is_deterministic() {
        let ds = generate(Problem::MarginalOnly { p: 10, r: 2 }).unwrap().sample(300, 5).unwrap();
        let cfg = SrsConfig {
            q: 4,
            iterations: 80,
            tree: TreeConfig::default().with_strategy(SplitStrategy::Random),
            seed: 9,
            ..SrsConfig::default()
        };
        let (forest, a) = srs_run(&ds, &cfg).unwrap();
        let (_, b) = srs_run(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.probe_column, Some(ds.n_columns()));
        assert!(forest.features().iter().all(|f| f.len() == 5));
        let mut out = Vec::new();
        a.write_jsonl(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 81);
    }

    #[test]
    fn rejects_bad_config() {
        let ds = generate(Problem::Chain { p: 5, r: 2 }).unwrap().to_exact_dataset();
        for cfg in [
            exact_config(0, 1.0, 10, 0),
            exact_config(6, 1.0, 10, 0),
            exact_config(3, 1.5, 10, 0),
            exact_config(3, 1.0, 0, 0),
            SrsConfig { k: 4, ..exact_config(3, 1.0, 10, 0) },
            SrsConfig { pass_fraction: 0.0, ..exact_config(3, 1.0, 10, 0) },
        ] {
            assert!(srs_run(&ds, &cfg).is_err());
        }
    }
}
