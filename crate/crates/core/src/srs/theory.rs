//! Expected number of iterations needed by random subspace (RS) and
//! sequential random subspace (SRS) to find the relevant features of three
//! idealized problems, each with `r` relevant features among `p` and
//! subspaces of size `q`:
//!
//! * chaining: feature `i` is detectable only together with features
//!   `0..i`;
//! * clique: a feature is detectable only when all `r` are in the subspace,
//!   and a tree finds one of them, picked uniformly, per iteration;
//! * marginal-only: every relevant feature is detectable alone.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Chaining,
    Clique,
    MarginalOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceMethod {
    #[serde(rename = "RS")]
    Rs,
    #[serde(rename = "SRS")]
    Srs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub scenario: Scenario,
    pub method: SubspaceMethod,
    pub p: u64,
    pub q: u64,
    pub r: u64,
}

impl ScenarioModel {
    pub fn new(scenario: Scenario, method: SubspaceMethod, p: u64, q: u64, r: u64) -> Result<Self> {
        if r == 0 || r > q || q > p {
            return Err(Error::param(format!("need 1 <= r <= q <= p, got p={p}, q={q}, r={r}")));
        }
        Ok(ScenarioModel {
            scenario,
            method,
            p,
            q,
            r,
        })
    }
}

fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `C(a, b) / C(c, d)`, computed in log space.
fn binom_ratio(a: u64, b: u64, c: u64, d: u64) -> f64 {
    (ln_binom(a, b) - ln_binom(c, d)).exp()
}

/// `Π_{l=from}^{to-1} (p-l)/(q-l)`; `+∞` on overflow.
fn inv_inclusion(p: u64, q: u64, from: u64, to: u64) -> f64 {
    (from..to)
        .map(|l| ((p - l) as f64).ln() - ((q - l) as f64).ln())
        .sum::<f64>()
        .exp()
}

/// Closed-form expected number of iterations to find `i` relevant features
/// of a chaining or clique problem.
pub fn expected_time(model: &ScenarioModel, i: u64) -> Result<f64> {
    let ScenarioModel { p, q, r, .. } = *model;
    if i > r {
        return Err(Error::param(format!("i={i} exceeds r={r}")));
    }
    let value = match (model.scenario, model.method) {
        (Scenario::Chaining, SubspaceMethod::Rs) => inv_inclusion(p, q, 0, i),
        (Scenario::Chaining, SubspaceMethod::Srs) => {
            (0..i).map(|l| (p - l) as f64 / (q - l) as f64).sum::<f64>() - i.saturating_sub(1) as f64
        }
        (Scenario::Clique, SubspaceMethod::Rs) => {
            inv_inclusion(p, q, 0, r) * (0..i).map(|l| r as f64 / (r - l) as f64).sum::<f64>()
        }
        (Scenario::Clique, SubspaceMethod::Srs) => (0..i)
            .map(|l| r as f64 / (r - l) as f64 * inv_inclusion(p, q, l, r))
            .sum(),
        (Scenario::MarginalOnly, _) => {
            return Err(Error::param(
                "no closed form for the marginal-only scenario; use markov_expected_time",
            ))
        }
    };
    if value.is_nan() {
        return Err(Error::Numerical("expected time is not a number".into()));
    }
    Ok(value)
}

/// Transition matrix of the number of relevant features found, over states
/// `0..=r`. State `r` is absorbing.
pub fn markov_transition_matrix(model: &ScenarioModel) -> Result<DMatrix<f64>> {
    let ScenarioModel { p, q, r, .. } = *model;
    let n = r as usize + 1;
    let mut m = DMatrix::zeros(n, n);
    let srs = model.method == SubspaceMethod::Srs;
    for l in 0..r {
        // Subspace draws: q out of p for RS, q-l fresh out of p-l for SRS.
        let (dn, dk) = if srs { (p - l, q - l) } else { (p, q) };
        for l1 in l + 1..=r {
            let v = match model.scenario {
                Scenario::Chaining if l1 < r => binom_ratio(p - l1 - 1, q - l1, dn, dk),
                Scenario::Chaining => binom_ratio(p - r, q - r, dn, dk),
                Scenario::Clique if l1 == l + 1 => binom_ratio(p - r, q - r, dn, dk) * (r - l) as f64 / r as f64,
                Scenario::Clique => 0.0,
                Scenario::MarginalOnly => {
                    let others = if srs { binom_ratio(p - r, q - l1, dn, dk) } else { binom_ratio(p - r + l, q - (l1 - l), dn, dk) };
                    ln_binom(r - l, l1 - l).exp() * others
                }
            };
            if !v.is_finite() {
                return Err(Error::Numerical(format!("transition {l}->{l1} is not finite")));
            }
            m[(l as usize, l1 as usize)] = v;
        }
        let off: f64 = (l as usize + 1..n).map(|j| m[(l as usize, j)]).sum();
        m[(l as usize, l as usize)] = 1.0 - off;
    }
    m[(n - 1, n - 1)] = 1.0;
    Ok(m)
}

fn check_stochastic(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::param("transition matrix must be square and nonempty"));
    }
    for (i, row) in m.row_iter().enumerate() {
        if row.iter().any(|&v| !(0.0..=1.0 + 1e-12).contains(&v)) || (row.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("row {i} is not a probability vector")));
        }
    }
    Ok(())
}

/// Expected number of steps before absorption when starting from state 0.
pub fn markov_expected_time(m: &DMatrix<f64>) -> Result<f64> {
    check_stochastic(m)?;
    let n = m.nrows();
    let transient: Vec<usize> = (0..n)
        .filter(|&i| (0..n).any(|j| j != i && m[(i, j)] > 0.0))
        .collect();
    if transient.len() == n {
        return Err(Error::param("chain has no absorbing state"));
    }
    let Some(start) = transient.iter().position(|&i| i == 0) else {
        return Ok(0.0);
    };
    let k = transient.len();
    let a = DMatrix::from_fn(k, k, |i, j| {
        let v = m[(transient[i], transient[j])];
        if i == j {
            // 1 - P(i->i), taken as the off-diagonal mass for precision.
            (0..n).filter(|&c| c != transient[i]).map(|c| m[(transient[i], c)]).sum::<f64>()
        } else {
            -v
        }
    });
    let t = a
        .lu()
        .solve(&DVector::from_element(k, 1.0))
        .ok_or_else(|| Error::param("chain is not absorbing from every transient state"))?;
    if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::param("chain is not absorbing from every transient state"));
    }
    Ok(t[start])
}

/// Expected state index after `t = 0..=steps` steps, starting from state 0.
pub fn expected_found_curve(m: &DMatrix<f64>, steps: usize) -> Result<Vec<f64>> {
    check_stochastic(m)?;
    let n = m.nrows();
    let mut dist = DVector::zeros(n);
    dist[0] = 1.0;
    let states = DVector::from_fn(n, |i, _| i as f64);
    let mt = m.transpose();
    let mut curve = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        curve.push(dist.dot(&states));
        dist = &mt * dist;
    }
    Ok(curve)
}

/// One run of the idealized process; relevant features are `0..r`, found
/// ones are relabeled to `0..l`.
fn simulate_once(model: &ScenarioModel, rng: &mut Rng) -> u64 {
    let (p, q, r) = (model.p as usize, model.q as usize, model.r as usize);
    let srs = model.method == SubspaceMethod::Srs;
    let mut l = 0usize;
    let mut t = 0u64;
    let mut present = vec![false; r];
    while l < r {
        t += 1;
        present.iter_mut().for_each(|b| *b = false);
        if srs {
            present[..l].iter_mut().for_each(|b| *b = true);
            for j in index::sample(rng, p - l, q - l) {
                if j + l < r {
                    present[j + l] = true;
                }
            }
        } else {
            for j in index::sample(rng, p, q) {
                if j < r {
                    present[j] = true;
                }
            }
        }
        match model.scenario {
            Scenario::Chaining => {
                let prefix = present.iter().take_while(|&&b| b).count();
                l = l.max(prefix);
            }
            Scenario::Clique => {
                if present.iter().all(|&b| b) && rng.gen_range(0..r) >= l {
                    l += 1;
                }
            }
            Scenario::MarginalOnly => l += present[l..].iter().filter(|&&b| b).count(),
        }
    }
    t
}

/// Monte-Carlo estimate of the expected absorption time of the idealized
/// process.
pub fn simulate_expected_time(model: &ScenarioModel, runs: usize, seed: u64) -> Result<f64> {
    if runs == 0 {
        return Err(Error::param("runs must be at least 1"));
    }
    let total: u64 = (0..runs)
        .into_par_iter()
        .map(|i| simulate_once(model, &mut rng_from_seed(derive_seed(seed, i as u64))))
        .sum();
    Ok(total as f64 / runs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Scenario::*;
    use SubspaceMethod::*;

    fn model(s: Scenario, m: SubspaceMethod, p: u64, q: u64, r: u64) -> ScenarioModel {
        ScenarioModel::new(s, m, p, q, r).unwrap()
    }

    #[test]
    fn chaining_table_entries() {
        let t = |m, p, i| expected_time(&model(Chaining, m, p, 100, 5), i).unwrap();
        assert!((t(Rs, 10_000, 1) - 100.0).abs() < 1e-9);
        assert!((t(Srs, 10_000, 1) - 100.0).abs() < 1e-9);
        assert!((t(Rs, 10_000, 2) - 10_100.0).abs() < 1.0);
        assert!((t(Srs, 10_000, 2) - 200.0).abs() < 1.0);
        assert!((t(Srs, 10_000, 5) - 506.0).abs() < 1.0);
        assert!((expected_time(&model(Chaining, Srs, 100_000, 100, 3), 3).unwrap() - 3028.0).abs() < 1.0);
    }

    #[test]
    fn clique_table_entries() {
        let c = |m, q, r| expected_time(&model(Clique, m, 10_000, q, r), r).unwrap();
        assert!((c(Rs, 100, 2) - 30_300.0).abs() < 1.0);
        assert!((c(Srs, 100, 2) - 10_302.0).abs() < 1.0);
        assert!((c(Rs, 1000, 4) - 83_785.0).abs() < 1.0);
        assert!((c(Srs, 1000, 4) - 11_635.0).abs() < 1.0);
    }

    #[test]
    fn marginal_only_needs_markov() {
        assert!(expected_time(&model(MarginalOnly, Rs, 100, 10, 3), 1).is_err());
        let rs = markov_expected_time(&markov_transition_matrix(&model(MarginalOnly, Rs, 10_000, 100, 10)).unwrap()).unwrap();
        let srs = markov_expected_time(&markov_transition_matrix(&model(MarginalOnly, Srs, 10_000, 100, 10)).unwrap()).unwrap();
        assert!((rs - 291.0).abs() < 1.0, "{rs}");
        assert!((srs - 312.0).abs() < 1.0, "{srs}");
    }

    #[test]
    fn matrices_are_stochastic_and_match_closed_forms() {
        for s in [Chaining, Clique, MarginalOnly] {
            for m in [Rs, Srs] {
                let mm = model(s, m, 100, 10, 3);
                let mat = markov_transition_matrix(&mm).unwrap();
                for row in mat.row_iter() {
                    assert!((row.sum() - 1.0).abs() < 1e-12);
                }
                assert_eq!(mat[(3, 3)], 1.0);
                if s != MarginalOnly {
                    let a = markov_expected_time(&mat).unwrap();
                    let b = expected_time(&mm, 3).unwrap();
                    assert!((a - b).abs() < 1e-6, "{s:?} {m:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn two_state_chain() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 1.0]);
        assert!((markov_expected_time(&m).unwrap() - 2.0).abs() < 1e-12);
        let curve = expected_found_curve(&m, 10).unwrap();
        assert!(curve.windows(2).all(|w| w[1] >= w[0]));
        assert!((curve[1] - 0.5).abs() < 1e-12);
        assert!(markov_expected_time(&DMatrix::identity(2, 2)).is_ok());
        let cycle = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(markov_expected_time(&cycle).is_err());
    }

    #[test]
    fn simulation_agrees_with_closed_form() {
        let mm = model(Chaining, Srs, 100, 10, 3);
        let mc = simulate_expected_time(&mm, 10_000, 1).unwrap();
        let exact = expected_time(&mm, 3).unwrap();
        assert!((mc - exact).abs() / exact < 0.02, "{mc} vs {exact}");
    }

    #[test]
    fn srs_is_faster_except_marginal_only() {
        for (p, q, r) in [(10_000, 100, 2), (10_000, 100, 5), (10_000, 1000, 4)] {
            for s in [Chaining, Clique] {
                let rs = expected_time(&model(s, Rs, p, q, r), r).unwrap();
                let srs = expected_time(&model(s, Srs, p, q, r), r).unwrap();
                assert!(srs <= rs);
            }
        }
        let t = |m| markov_expected_time(&markov_transition_matrix(&model(MarginalOnly, m, 10_000, 100, 50)).unwrap()).unwrap();
        assert!(t(Srs) >= t(Rs));
    }

    #[test]
    fn rejects_bad_models() {
        assert!(ScenarioModel::new(Chaining, Rs, 10, 20, 3).is_err());
        assert!(ScenarioModel::new(Chaining, Rs, 10, 5, 6).is_err());
        assert!(ScenarioModel::new(Chaining, Rs, 10, 5, 0).is_err());
    }
}
