//! Network inference from multivariate time series: spike-extraction
//! filters, partial-correlation scoring (exact or PCA-truncated), weighted
//! averaging over filter settings, a directivity correction, tree-based
//! scoring and ROC/PR evaluation against a known network.

mod eval;
mod filters;
mod io;
mod scores;
mod synth;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

pub use eval::{evaluate, EdgeMode, Evaluation};
pub use filters::{challenge_grid, preprocess, FilterSpec, LowPass, Regularizer, CHALLENGE_WEIGHTS};
pub use io::{load_scores, load_series, load_truth, save_scores, save_series, save_truth};
pub use scores::{
    averaged_partial_correlation, correlation, directivity_adjust, genie3_forest_config, genie3_scores,
    partial_correlation, DirectivityParams,
};
pub use synth::{linear_sem, synth_network, Dynamics, SynthConfig};

/// `T × p` observations, one column per node.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl TimeSeries {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::param(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if values.nrows() < 2 {
            return Err(Error::param("a time series needs at least 2 time steps"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("time series contains non-finite values"));
        }
        Ok(TimeSeries { names, values })
    }

    /// Columns named `X1..Xp`.
    pub fn unnamed(values: DMatrix<f64>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|i| format!("X{i}")).collect();
        Self::new(names, values)
    }

    /// `steps × nodes` values in row-major order, columns named `X1..Xp`.
    pub fn from_row_major(values: &[f64], steps: usize, nodes: usize) -> Result<Self> {
        if steps.checked_mul(nodes) != Some(values.len()) {
            return Err(Error::param(format!(
                "{} values do not fill {steps} steps of {nodes} nodes",
                values.len()
            )));
        }
        Self::unnamed(DMatrix::from_row_slice(steps, nodes, values))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_steps(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.ncols()
    }
}

/// `p × p` edge scores; entry `(i, j)` scores the edge `i → j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreMatrix {
    pub names: Vec<String>,
    #[serde(serialize_with = "rows")]
    pub values: DMatrix<f64>,
    pub directed: bool,
}

fn rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in m.row_iter() {
        seq.serialize_element(&r.iter().copied().collect::<Vec<_>>())?;
    }
    seq.end()
}

impl ScoreMatrix {
    /// Builds a matrix whose diagonal is set to the smallest off-diagonal
    /// score.
    pub fn new(names: Vec<String>, mut values: DMatrix<f64>, directed: bool) -> Self {
        let p = values.nrows();
        let min = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| values[(i, j)])
            .fold(f64::INFINITY, f64::min);
        let min = if min.is_finite() { min } else { 0.0 };
        for i in 0..p {
            values[(i, i)] = min;
        }
        ScoreMatrix { names, values, directed }
    }

    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn score(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Candidate edges sorted by decreasing score (ties by index): every
    /// ordered pair when directed, `i < j` scored `max(s_ij, s_ji)`
    /// otherwise.
    pub fn ranked_edges(&self) -> Vec<(usize, usize, f64)> {
        let p = self.n_nodes();
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..p {
            for j in 0..p {
                if i == j {
                    continue;
                }
                if self.directed {
                    edges.push((i, j, self.values[(i, j)]));
                } else if i < j {
                    edges.push((i, j, self.values[(i, j)].max(self.values[(j, i)])));
                }
            }
        }
        edges.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
        edges
    }
}
