use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ScoreMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    /// Ordered pairs `i → j`, `i ≠ j`.
    Directed,
    /// Pairs `i < j` scored `max(s_ij, s_ji)`; true when either direction
    /// is in the network.
    Undirected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub auroc: f64,
    pub auprc: f64,
    pub n_positive: usize,
    pub n_candidates: usize,
}

/// Area under the ROC curve (midranks for ties) and under the
/// precision-recall curve (step interpolation, one step per distinct score).
pub fn evaluate(scores: &ScoreMatrix, truth: &[(usize, usize)], mode: EdgeMode) -> Result<Evaluation> {
    let p = scores.n_nodes();
    if truth.is_empty() {
        return Err(Error::Empty("the true network has no edge".into()));
    }
    let mut positive = HashSet::new();
    for &(i, j) in truth {
        if i >= p || j >= p {
            return Err(Error::param(format!("edge ({i}, {j}) is outside the {p} nodes")));
        }
        if i == j {
            return Err(Error::param(format!("self edge ({i}, {i})")));
        }
        positive.insert(match mode {
            EdgeMode::Directed => (i, j),
            EdgeMode::Undirected => (i.min(j), i.max(j)),
        });
    }
    let mut cands: Vec<(f64, bool)> = Vec::new();
    for i in 0..p {
        for j in 0..p {
            match mode {
                EdgeMode::Directed if i != j => cands.push((scores.score(i, j), positive.contains(&(i, j)))),
                EdgeMode::Undirected if i < j => cands.push((
                    scores.score(i, j).max(scores.score(j, i)),
                    positive.contains(&(i, j)),
                )),
                _ => {}
            }
        }
    }
    let n_pos = cands.iter().filter(|c| c.1).count();
    let n_neg = cands.len() - n_pos;
    if n_neg == 0 {
        return Err(Error::param("every candidate edge is true; AUROC is undefined"));
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    // Walk tie groups from the highest score down.
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auprc = 0.0;
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < cands.len() {
        let mut end = start;
        while end < cands.len() && cands[end].0 == cands[start].0 {
            end += 1;
        }
        let group_pos = cands[start..end].iter().filter(|c| c.1).count();
        // Ascending ranks of this group: n - end + 1 ..= n - start.
        let mid = (2 * cands.len() - start - end + 1) as f64 / 2.0;
        rank_sum += group_pos as f64 * mid;
        let prev_recall = tp as f64 / n_pos as f64;
        tp += group_pos;
        fp += end - start - group_pos;
        auprc += (tp as f64 / n_pos as f64 - prev_recall) * tp as f64 / (tp + fp) as f64;
        start = end;
    }
    let auroc = (rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos * n_neg) as f64;
    Ok(Evaluation {
        auroc,
        auprc,
        n_positive: n_pos,
        n_candidates: cands.len(),
    })
}
