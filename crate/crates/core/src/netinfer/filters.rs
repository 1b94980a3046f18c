//! Spike extraction: `w ∘ h ∘ g ∘ f`, optionally `w* ∘ r ∘ h ∘ g ∘ f`, or
//! without the low-pass stage `f`.
//!
//! Time steps lacking the full support of a filter are dropped, so the
//! output is shorter than the input.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowPass {
    /// `x^{t-1} + x^t + x^{t+1}`
    F1,
    /// `0.4 x^{t-3} + 0.8 x^{t-2} + x^{t-1} + x^t`
    F2,
    /// `x^{t-1} + x^t + x^{t+1} + x^{t+2}`
    F3,
    /// `x^t + x^{t+1} + x^{t+2} + x^{t+3}`
    F4,
}

impl LowPass {
    pub const ALL: [LowPass; 4] = [LowPass::F1, LowPass::F2, LowPass::F3, LowPass::F4];

    /// `(offset, coefficient)` pairs.
    fn taps(self) -> &'static [(isize, f64)] {
        match self {
            LowPass::F1 => &[(-1, 1.0), (0, 1.0), (1, 1.0)],
            LowPass::F2 => &[(-3, 0.4), (-2, 0.8), (-1, 1.0), (0, 1.0)],
            LowPass::F3 => &[(-1, 1.0), (0, 1.0), (1, 1.0), (2, 1.0)],
            LowPass::F4 => &[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)],
        }
    }
}

impl std::str::FromStr for LowPass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(LowPass::F1),
            "f2" => Ok(LowPass::F2),
            "f3" => Ok(LowPass::F3),
            "f4" => Ok(LowPass::F4),
            _ => Err(Error::param(format!("unknown low-pass filter {s:?} (f1, f2, f3 or f4)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    None,
    /// `(x + 1)^(1 + 1/S)` with `S` the activity summed over nodes; `1` when
    /// `S = 0`.
    W,
    /// `w` raised to `k(S)`, `k` piecewise linear through the `(S, k)`
    /// knots and constant beyond them; no knots means `k ≡ 1`.
    WStar { knots: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// `None` skips the low-pass stage.
    pub low_pass: Option<LowPass>,
    /// Threshold of `h`.
    pub tau: f64,
    /// Exponent `c` of `r`; `None` skips `r`.
    pub r_exponent: Option<f64>,
    pub regularizer: Regularizer,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            low_pass: Some(LowPass::F1),
            tau: 0.11,
            r_exponent: None,
            regularizer: Regularizer::W,
        }
    }
}

impl FilterSpec {
    pub fn new(low_pass: LowPass, tau: f64) -> Self {
        FilterSpec {
            low_pass: Some(low_pass),
            tau,
            ..FilterSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::config(format!("tau={} must be positive", self.tau)));
        }
        if let Some(c) = self.r_exponent {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::config(format!("c={c} must lie in (0, 1]")));
            }
        }
        if let Regularizer::WStar { knots } = &self.regularizer {
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::config("w* knots must have increasing abscissae"));
            }
        }
        Ok(())
    }
}

/// Weights of `f1..f4` in the averaged statistics.
pub const CHALLENGE_WEIGHTS: [f64; 4] = [0.383, 0.345, 0.004, 0.268];

/// `τ ∈ {0.100, 0.101, ..., 0.210} × {f1, f2, f3, f4}` with each filter's
/// weight spread evenly over its thresholds.
pub fn challenge_grid() -> (Vec<FilterSpec>, Vec<f64>) {
    let taus: Vec<f64> = (100..=210).map(|t| f64::from(t) / 1000.0).collect();
    let mut specs = Vec::new();
    let mut weights = Vec::new();
    for (f, w) in LowPass::ALL.into_iter().zip(CHALLENGE_WEIGHTS) {
        for &tau in &taus {
            specs.push(FilterSpec::new(f, tau));
            weights.push(w / taus.len() as f64);
        }
    }
    (specs, weights)
}

pub(crate) fn low_pass(x: &DMatrix<f64>, f: LowPass) -> DMatrix<f64> {
    let taps = f.taps();
    let lo = taps.iter().map(|t| t.0).min().unwrap_or(0);
    let hi = taps.iter().map(|t| t.0).max().unwrap_or(0);
    let n = x.nrows() as isize - (hi - lo);
    let n = n.max(0) as usize;
    DMatrix::from_fn(n, x.ncols(), |t, i| {
        let center = t as isize - lo;
        taps.iter()
            .map(|&(o, c)| c * x[((center + o) as usize, i)])
            .sum()
    })
}

pub(crate) fn difference(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows().saturating_sub(1);
    DMatrix::from_fn(n, x.ncols(), |t, i| x[(t + 1, i)] - x[(t, i)])
}

pub(crate) fn threshold(x: &mut DMatrix<f64>, tau: f64) {
    x.iter_mut().for_each(|v| {
        if *v < tau {
            *v = 0.0;
        }
    });
}

fn piecewise(knots: &[(f64, f64)], s: f64) -> f64 {
    match knots {
        [] => 1.0,
        [(x0, y0), ..] if s <= *x0 => *y0,
        [.., (xn, yn)] if s >= *xn => *yn,
        _ => {
            let i = knots.partition_point(|k| k.0 <= s);
            let ((x0, y0), (x1, y1)) = (knots[i - 1], knots[i]);
            y0 + (y1 - y0) * (s - x0) / (x1 - x0)
        }
    }
}

pub(crate) fn regularize(x: &mut DMatrix<f64>, knots: Option<&[(f64, f64)]>) {
    for mut row in x.row_iter_mut() {
        let s: f64 = row.sum();
        if s == 0.0 {
            row.fill(1.0);
            continue;
        }
        let k = knots.map_or(1.0, |k| piecewise(k, s));
        row.iter_mut().for_each(|v| *v = (*v + 1.0).powf((1.0 + 1.0 / s) * k));
    }
}

/// Applies the filter chain. Needs at least 5 time steps so that one
/// survives the longest low-pass support and the difference.
pub fn preprocess(series: &TimeSeries, spec: &FilterSpec) -> Result<TimeSeries> {
    spec.validate()?;
    if series.n_steps() < 5 {
        return Err(Error::param(format!(
            "filtering needs at least 5 time steps, got {}",
            series.n_steps()
        )));
    }
    let mut x = match spec.low_pass {
        Some(f) => difference(&low_pass(series.values(), f)),
        None => difference(series.values()),
    };
    threshold(&mut x, spec.tau);
    if let Some(c) = spec.r_exponent {
        x.iter_mut().for_each(|v| *v = v.powf(c));
    }
    match &spec.regularizer {
        Regularizer::None => {}
        Regularizer::W => regularize(&mut x, None),
        Regularizer::WStar { knots } => regularize(&mut x, Some(knots)),
    }
    TimeSeries::new(series.names().to_vec(), x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn individual_filters() {
        let f1 = low_pass(&col(&[1.0, 2.0, 3.0, 4.0]), LowPass::F1);
        assert_eq!(f1.as_slice(), &[6.0, 9.0]);
        let f2 = low_pass(&col(&[1.0, 1.0, 1.0, 1.0, 2.0]), LowPass::F2);
        assert_eq!(f2.nrows(), 2);
        assert!((f2[0] - 3.2).abs() < 1e-12);
        assert_eq!(low_pass(&col(&[1.0, 2.0, 3.0, 4.0, 5.0]), LowPass::F4).as_slice(), &[10.0, 14.0]);
        assert_eq!(difference(&col(&[1.0, 2.0, 4.0])).as_slice(), &[1.0, 2.0]);
        let mut h = col(&[0.2, 0.8, -1.0]);
        threshold(&mut h, 0.5);
        assert_eq!(h.as_slice(), &[0.0, 0.8, 0.0]);
        let once = h.clone();
        threshold(&mut h, 0.5);
        assert_eq!(h, once);
    }

    #[test]
    fn regularizer_special_cases() {
        let mut x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        regularize(&mut x, None);
        assert_eq!(x.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0]);
        assert!((x[(1, 0)] - 4.0).abs() < 1e-12);
        assert!((x[(1, 1)] - 1.0).abs() < 1e-12);
        let mut a = DMatrix::from_row_slice(1, 2, &[0.5, 0.3]);
        let mut b = a.clone();
        regularize(&mut a, None);
        regularize(&mut b, Some(&[]));
        assert_eq!(a, b);
        assert!((piecewise(&[(0.0, 1.0), (2.0, 3.0)], 1.0) - 2.0).abs() < 1e-12);
        assert_eq!(piecewise(&[(0.0, 1.0), (2.0, 3.0)], 5.0), 3.0);
    }

    #[test]
    fn grid_and_validation() {
        let (specs, weights) = challenge_grid();
        assert_eq!(specs.len(), 4 * 111);
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(FilterSpec::new(LowPass::F1, 0.0).validate().is_err());
        let s = TimeSeries::unnamed(DMatrix::zeros(4, 2)).unwrap();
        assert!(preprocess(&s, &FilterSpec::default()).is_err());
        let s = TimeSeries::unnamed(DMatrix::zeros(10, 2)).unwrap();
        assert_eq!(preprocess(&s, &FilterSpec::default()).unwrap().n_steps(), 7);
    }
}
