//! Synthetic networks and time series with a known ground truth.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dynamics {
    /// Independent draws of `x = x B + ε`, `ε ~ N(0, I)`, positive
    /// (excitatory) edge weights drawn in `[0.5, 1]`, each node's incoming
    /// weights scaled to a sum of at most 0.9.
    LinearGaussian,
    /// Binary spikes, `P(s_j^{t+1} = 1) = min(1, base + coupling Σ_{i→j}
    /// s_i^t)`, observed through a fluorescence level `F^{t+1} = decay F^t +
    /// s^{t+1}` plus Gaussian noise.
    Spiking {
        base: f64,
        coupling: f64,
        decay: f64,
        noise: f64,
    },
}

impl Dynamics {
    pub fn spiking() -> Self {
        Dynamics::Spiking {
            base: 0.02,
            coupling: 0.3,
            decay: 0.8,
            noise: 0.03,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub p: usize,
    /// Probability of each ordered pair `i → j`, `i ≠ j`, being an edge.
    pub density: f64,
    pub steps: usize,
    pub dynamics: Dynamics,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(p: usize, density: f64, steps: usize, seed: u64) -> Self {
        SynthConfig {
            p,
            density,
            steps,
            dynamics: Dynamics::LinearGaussian,
            seed,
        }
    }
}

/// `steps` independent draws of the linear structural model `x = x B + ε`,
/// `B_ij` being the weight of `i → j`.
pub fn linear_sem(b: &DMatrix<f64>, steps: usize, seed: u64) -> Result<TimeSeries> {
    let p = b.nrows();
    let inv = (DMatrix::<f64>::identity(p, p) - b)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("I - B is singular".into()))?;
    let mut rng = rng_from_seed(seed);
    let eps = DMatrix::<f64>::from_fn(steps, p, |_, _| StandardNormal.sample(&mut rng));
    TimeSeries::unnamed(eps * inv)
}

/// Random directed network and a series generated on it.
pub fn synth_network(config: &SynthConfig) -> Result<(TimeSeries, Vec<(usize, usize)>)> {
    let SynthConfig { p, density, steps, seed, .. } = *config;
    if !(0.0..1.0).contains(&density) {
        return Err(Error::param(format!("density={density} must lie in [0, 1)")));
    }
    if p < 2 {
        return Err(Error::param("need at least 2 nodes"));
    }
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let edges: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && rng.gen_bool(density))
        .collect();
    let series = match config.dynamics {
        Dynamics::LinearGaussian => {
            let mut b = DMatrix::<f64>::zeros(p, p);
            for &(i, j) in &edges {
                b[(i, j)] = rng.gen_range(0.5..=1.0);
            }
            for mut col in b.column_iter_mut() {
                let s: f64 = col.sum();
                if s > 0.9 {
                    col *= 0.9 / s;
                }
            }
            linear_sem(&b, steps, derive_seed(seed, 1))?
        }
        Dynamics::Spiking {
            base,
            coupling,
            decay,
            noise,
        } => {
            let mut rng = rng_from_seed(derive_seed(seed, 1));
            let mut parents = vec![Vec::new(); p];
            for &(i, j) in &edges {
                parents[j].push(i);
            }
            let mut spikes = vec![false; p];
            let mut level = vec![0.0; p];
            let mut x = DMatrix::zeros(steps, p);
            for t in 0..steps {
                let next: Vec<bool> = (0..p)
                    .map(|j| {
                        let drive = base + coupling * parents[j].iter().filter(|&&i| spikes[i]).count() as f64;
                        rng.gen_bool(drive.clamp(0.0, 1.0))
                    })
                    .collect();
                for j in 0..p {
                    level[j] = decay * level[j] + f64::from(u8::from(next[j]));
                    let e: f64 = StandardNormal.sample(&mut rng);
                    x[(t, j)] = level[j] + noise * e;
                }
                spikes = next;
            }
            TimeSeries::unnamed(x)?
        }
    };
    Ok((series, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netinfer::partial_correlation;

    #[test]
    fn reproducible_and_edge_count() {
        let cfg = SynthConfig::new(30, 0.05, 100, 11);
        let (a, ea) = synth_network(&cfg).unwrap();
        let (b, eb) = synth_network(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ea, eb);
        // Binomial(870, 0.05): mean 43.5, sd 6.43; 99% band.
        for seed in 0..20 {
            let (_, e) = synth_network(&SynthConfig::new(30, 0.05, 10, seed)).unwrap();
            assert!((27..=60).contains(&e.len()), "{}", e.len());
        }
    }

    #[test]
    fn empty_network_gives_small_partial_correlations() {
        let (s, e) = synth_network(&SynthConfig::new(5, 0.0, 5000, 3)).unwrap();
        assert!(e.is_empty());
        let pc = partial_correlation(&s, None).unwrap();
        assert!(pc.values.iter().all(|v| v.abs() < 0.06));
    }

    #[test]
    fn spiking_series() {
        let cfg = SynthConfig {
            dynamics: Dynamics::spiking(),
            ..SynthConfig::new(6, 0.2, 500, 2)
        };
        let (s, _) = synth_network(&cfg).unwrap();
        assert_eq!(s.n_steps(), 500);
        assert!(s.values().max() > 0.9);
        assert!(synth_network(&SynthConfig::new(6, 1.0, 10, 0)).is_err());
    }
}
