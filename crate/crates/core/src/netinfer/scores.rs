use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::filters::{preprocess, FilterSpec};
use super::{ScoreMatrix, TimeSeries};
use crate::distributions::{Column, Dataset};
use crate::error::{Error, Result};
use crate::forest::{build_forest, ForestConfig, Method};
use crate::importance::mdi;
use crate::tree::{SplitFamily, TreeConfig};

fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c.tr_mul(&c) / (n as f64 - 1.0)
}

fn precision(cov: &DMatrix<f64>, n_components: Option<usize>) -> Result<DMatrix<f64>> {
    let p = cov.nrows();
    match n_components {
        None => cov.clone().cholesky().map(|c| c.inverse()).ok_or_else(|| {
            Error::Numerical(
                "covariance matrix is singular; use a principal-component truncation (n_components)".into(),
            )
        }),
        Some(m) => {
            if m == 0 || m > p {
                return Err(Error::param(format!("n_components={m} must lie in 1..={p}")));
            }
            let eig = SymmetricEigen::new(cov.clone());
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let top = eig.eigenvalues[order[0]];
            let mut inv = DMatrix::zeros(p, p);
            for &k in &order[..m] {
                let lambda = eig.eigenvalues[k];
                if !(lambda > 1e-12 * top.max(f64::MIN_POSITIVE)) {
                    return Err(Error::Numerical(format!(
                        "only {} components have positive variance; use fewer",
                        order.iter().filter(|&&o| eig.eigenvalues[o] > 1e-12 * top).count()
                    )));
                }
                let v = eig.eigenvectors.column(k);
                inv += (v * v.transpose()) / lambda;
            }
            Ok(inv)
        }
    }
}

fn normalize(m: &DMatrix<f64>, sign: f64) -> DMatrix<f64> {
    let p = m.nrows();
    DMatrix::from_fn(p, p, |i, j| {
        let d = m[(i, i)] * m[(j, j)];
        if d > 0.0 {
            sign * m[(i, j)] / d.sqrt()
        } else {
            0.0
        }
    })
}

/// Partial correlations `-P_ij / sqrt(P_ii P_jj)` with `P` the inverse of
/// the covariance matrix, or its approximation from the `n_components`
/// leading principal components.
pub fn partial_correlation(series: &TimeSeries, n_components: Option<usize>) -> Result<ScoreMatrix> {
    let (t, p) = (series.n_steps(), series.n_nodes());
    if n_components.is_none() && t <= p {
        return Err(Error::Numerical(format!(
            "{t} time steps for {p} nodes: covariance is singular; use a principal-component truncation"
        )));
    }
    let prec = precision(&covariance(series.values()), n_components)?;
    Ok(ScoreMatrix::new(series.names().to_vec(), normalize(&prec, -1.0), false))
}

/// Pearson correlation matrix.
pub fn correlation(series: &TimeSeries) -> ScoreMatrix {
    ScoreMatrix::new(series.names().to_vec(), normalize(&covariance(series.values()), 1.0), false)
}

/// Weighted mean of the partial correlations of the series filtered by each
/// spec.
pub fn averaged_partial_correlation(
    series: &TimeSeries,
    specs: &[FilterSpec],
    weights: &[f64],
    n_components: Option<usize>,
) -> Result<ScoreMatrix> {
    if specs.is_empty() {
        return Err(Error::param("the filter grid is empty"));
    }
    if specs.len() != weights.len() {
        return Err(Error::param(format!("{} filter specs but {} weights", specs.len(), weights.len())));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::param("weights must be nonnegative and sum to 1"));
    }
    let p = series.n_nodes();
    let total = specs
        .par_iter()
        .zip(weights)
        .map(|(spec, &w)| {
            let filtered = preprocess(series, spec)?;
            Ok::<_, Error>(partial_correlation(&filtered, n_components)?.values * w)
        })
        .try_reduce(|| DMatrix::zeros(p, p), |a, b| Ok(a + b))?;
    Ok(ScoreMatrix::new(series.names().to_vec(), total, false))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectivityParams {
    pub phi1: f64,
    pub phi2: f64,
    pub weight: f64,
}

impl Default for DirectivityParams {
    fn default() -> Self {
        DirectivityParams {
            phi1: 0.2,
            phi2: 0.5,
            weight: 0.997,
        }
    }
}

/// `q = weight p + (1 - weight) z` with `z = s - sᵀ` and `s_ij` the number
/// of steps where `x_j^{t+1} - x_i^t` falls in `[φ1, φ2]`.
pub fn directivity_adjust(series: &TimeSeries, scores: &ScoreMatrix, params: &DirectivityParams) -> Result<ScoreMatrix> {
    let DirectivityParams { phi1, phi2, weight } = *params;
    if !(phi1 < phi2) {
        return Err(Error::param(format!("phi1={phi1} must be below phi2={phi2}")));
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::param(format!("weight={weight} must lie in [0, 1]")));
    }
    let p = series.n_nodes();
    if scores.n_nodes() != p {
        return Err(Error::param("score matrix and series disagree on the number of nodes"));
    }
    let x = series.values();
    let mut s = DMatrix::<f64>::zeros(p, p);
    for t in 0..x.nrows() - 1 {
        for i in 0..p {
            let xi = x[(t, i)];
            for j in 0..p {
                let d = x[(t + 1, j)] - xi;
                if (phi1..=phi2).contains(&d) {
                    s[(i, j)] += 1.0;
                }
            }
        }
    }
    let z = &s - s.transpose();
    let q = &scores.values * weight + z * (1.0 - weight);
    Ok(ScoreMatrix::new(series.names().to_vec(), q, true))
}

/// Extra-Trees regression forests with `K = ⌈sqrt(p - 1)⌉` and binary
/// splits.
pub fn genie3_forest_config(p: usize, n_trees: usize, seed: u64) -> ForestConfig {
    let k = ((p.saturating_sub(1)) as f64).sqrt().ceil().max(1.0) as usize;
    let tree = TreeConfig::default()
        .with_k(k)
        .with_family(SplitFamily::BinaryOrdered);
    ForestConfig::new(Method::ExtraTrees, n_trees, tree, seed)
}

/// Scores `i → j` by the MDI of `x_i` in a forest predicting `x_j` from the
/// other nodes, divided by the variance of `x_j`. Constant targets score 0.
pub fn genie3_scores(series: &TimeSeries, config: &ForestConfig) -> Result<ScoreMatrix> {
    let p = series.n_nodes();
    if p < 2 {
        return Err(Error::param("need at least 2 nodes"));
    }
    let columns: Vec<Column> = (0..p)
        .map(|j| Column::numeric(series.names()[j].clone(), series.values().column(j).iter().copied().collect()))
        .collect();
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let n = series.n_steps();
            let col = series.values().column(j);
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            if var <= 1e-300 {
                log::warn!("node {} is constant; its incoming scores are 0", series.names()[j]);
                return Ok(vec![0.0; p]);
            }
            let ds = Dataset::new(columns.clone(), j, None, None)?;
            let forest = build_forest(&ds, config)?;
            let report = mdi(&forest, &ds);
            let mut incoming = vec![0.0; p];
            for (k, &i) in ds.inputs().iter().enumerate() {
                incoming[i] = report.scores[k] / var;
            }
            Ok(incoming)
        })
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(p, p, |i, j| cols[j][i]);
    Ok(ScoreMatrix::new(series.names().to_vec(), values, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netinfer::synth::linear_sem;

    fn chain(t: usize, seed: u64) -> TimeSeries {
        let mut b = DMatrix::zeros(3, 3);
        b[(0, 1)] = 0.8;
        b[(1, 2)] = 0.8;
        linear_sem(&b, t, seed).unwrap()
    }

    #[test]
    fn two_nodes_give_pearson() {
        let s = chain(500, 1);
        let two = TimeSeries::unnamed(s.values().columns(0, 2).into_owned()).unwrap();
        let pc = partial_correlation(&two, None).unwrap();
        let r = correlation(&two);
        assert!((pc.score(0, 1) - r.score(0, 1)).abs() < 1e-10);
    }

    #[test]
    fn chain_partial_correlation() {
        let s = chain(20_000, 3);
        let pc = partial_correlation(&s, None).unwrap();
        let r = correlation(&s);
        assert!(pc.score(0, 2).abs() < 0.02, "{}", pc.score(0, 2));
        assert!(r.score(0, 2).abs() > 0.3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((pc.score(i, j) - pc.score(j, i)).abs() < 1e-12);
            }
        }
        let full = partial_correlation(&s, Some(3)).unwrap();
        assert!((full.values.clone() - pc.values.clone()).abs().max() < 1e-8);
        let scaled = TimeSeries::unnamed(DMatrix::from_fn(s.n_steps(), 3, |t, i| {
            s.values()[(t, i)] * (i as f64 + 2.0) - 7.0
        }))
        .unwrap();
        let pcs = partial_correlation(&scaled, None).unwrap();
        assert!((pcs.values - pc.values).abs().max() < 1e-9);
    }

    #[test]
    fn singular_covariance_needs_truncation() {
        let s = TimeSeries::unnamed(DMatrix::from_fn(3, 4, |t, i| (t * i) as f64)).unwrap();
        assert!(partial_correlation(&s, None).is_err());
        let dup = TimeSeries::unnamed(DMatrix::from_fn(50, 2, |t, _| t as f64)).unwrap();
        assert!(partial_correlation(&dup, None).is_err());
        assert!(partial_correlation(&dup, Some(1)).is_ok());
        assert!(partial_correlation(&dup, Some(2)).is_err());
    }

    #[test]
    fn averaging() {
        let s = chain(300, 2);
        let spec = FilterSpec::new(super::super::LowPass::F1, 0.11);
        let single = averaged_partial_correlation(&s, &[spec.clone()], &[1.0], None).unwrap();
        let direct = partial_correlation(&preprocess(&s, &spec).unwrap(), None).unwrap();
        assert!((single.values.clone() - direct.values).abs().max() < 1e-12);
        let two = averaged_partial_correlation(&s, &[spec.clone(), spec.clone()], &[0.5, 0.5], None).unwrap();
        assert!((two.values - single.values).abs().max() < 1e-12);
        assert!(averaged_partial_correlation(&s, &[spec.clone()], &[0.5, 0.5], None).is_err());
        assert!(averaged_partial_correlation(&s, &[], &[], None).is_err());
    }

    #[test]
    fn directivity() {
        // Node 0 spikes at odd steps, node 1 one step later, node 2 never.
        let x = DMatrix::from_fn(40, 3, |t, i| match i {
            0 if t % 4 == 1 => 0.1,
            1 if t % 4 == 2 => 0.4,
            _ => 0.0,
        });
        let s = TimeSeries::unnamed(x).unwrap();
        let scores = ScoreMatrix::new(s.names().to_vec(), DMatrix::from_element(3, 3, 0.5), false);
        let q = directivity_adjust(&s, &scores, &DirectivityParams { weight: 0.0, ..Default::default() }).unwrap();
        assert!(q.score(0, 1) > 0.0 && q.score(1, 0) < 0.0);
        let same = TimeSeries::unnamed(DMatrix::from_fn(20, 2, |t, _| (t % 3) as f64 * 0.3)).unwrap();
        let sc = ScoreMatrix::new(same.names().to_vec(), DMatrix::from_element(2, 2, 0.7), false);
        let q = directivity_adjust(&same, &sc, &DirectivityParams::default()).unwrap();
        assert!((q.score(0, 1) - 0.997 * 0.7).abs() < 1e-12);
        let q = directivity_adjust(&s, &scores, &DirectivityParams { weight: 1.0, ..Default::default() }).unwrap();
        assert_eq!(q.values, scores.values);
        assert!(directivity_adjust(&s, &scores, &DirectivityParams { phi1: 0.5, phi2: 0.2, weight: 0.5 }).is_err());
    }

    #[test]
    fn genie3_is_deterministic_and_handles_constant_targets() {
        let s = chain(200, 4);
        let mut x = s.values().clone().insert_column(3, 0.0);
        x.column_mut(3).fill(1.0);
        let s = TimeSeries::unnamed(x).unwrap();
        let cfg = genie3_forest_config(4, 20, 5);
        let a = genie3_scores(&s, &cfg).unwrap();
        let b = genie3_scores(&s, &cfg).unwrap();
        assert_eq!(a, b);
        assert!((0..3).all(|i| a.score(i, 3) == 0.0));
        assert!(a.score(0, 1) > a.score(3, 1));
    }
}
