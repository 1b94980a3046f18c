//! Exact joint distributions over categorical variables, finite datasets and
//! the synthetic problems used throughout the crate.

mod dataset;
mod generate;
mod io;

pub use dataset::{Column, ColumnKind, Dataset};
pub use generate::{generate, Problem, DIGIT_SEGMENTS};
pub use io::{load_csv, load_distribution, save_csv, save_distribution};

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Probabilities must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Largest number of input variables accepted by exhaustive (subset
/// enumerating) oracles.
pub const ORACLE_MAX_INPUTS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub cardinality: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ordered: bool,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: u32) -> Self {
        Variable {
            name: name.into(),
            cardinality,
            ordered: false,
        }
    }

    pub fn ordered(name: impl Into<String>, cardinality: u32) -> Self {
        Variable {
            name: name.into(),
            cardinality,
            ordered: true,
        }
    }
}

/// One configuration of all variables with its probability.
///
/// The configuration layout is `[inputs..., output, context?]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub config: Vec<u32>,
    #[serde(rename = "p")]
    pub prob: f64,
}

/// Exact probability table over categorical inputs, an output and an optional
/// context variable. Only configurations with positive probability are
/// stored.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    inputs: Vec<Variable>,
    output: Variable,
    context: Option<Variable>,
    entries: Vec<Entry>,
}

impl JointDistribution {
    /// Builds a distribution, merging duplicate configurations and dropping
    /// zero-probability ones.
    pub fn new(
        inputs: Vec<Variable>,
        output: Variable,
        context: Option<Variable>,
        entries: impl IntoIterator<Item = (Vec<u32>, f64)>,
    ) -> Result<Self> {
        let mut vars: Vec<&Variable> = inputs.iter().collect();
        vars.push(&output);
        if let Some(c) = &context {
            vars.push(c);
        }
        for v in &vars {
            if v.cardinality < 2 {
                return Err(Error::param(format!(
                    "variable {} has cardinality {} (< 2)",
                    v.name, v.cardinality
                )));
            }
        }
        let width = vars.len();
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (config, prob) in entries {
            if config.len() != width {
                return Err(Error::param(format!(
                    "configuration {:?} has {} codes, expected {}",
                    config,
                    config.len(),
                    width
                )));
            }
            if !(prob >= 0.0) || !prob.is_finite() {
                return Err(Error::param(format!("invalid probability {prob}")));
            }
            for (code, v) in config.iter().zip(&vars) {
                if *code >= v.cardinality {
                    return Err(Error::param(format!(
                        "code {code} out of range for {} (cardinality {})",
                        v.name, v.cardinality
                    )));
                }
            }
            *merged.entry(config).or_insert(0.0) += prob;
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::param(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let entries = merged
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(config, prob)| Entry { config, prob })
            .collect();
        Ok(JointDistribution {
            inputs,
            output,
            context,
            entries,
        })
    }

    /// Like [`JointDistribution::new`] but rescales the probabilities to sum
    /// to one first.
    pub fn normalized(
        inputs: Vec<Variable>,
        output: Variable,
        context: Option<Variable>,
        entries: impl IntoIterator<Item = (Vec<u32>, f64)>,
    ) -> Result<Self> {
        let entries: Vec<_> = entries.into_iter().collect();
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if !(total > 0.0) {
            return Err(Error::param("distribution has no mass"));
        }
        Self::new(
            inputs,
            output,
            context,
            entries.into_iter().map(|(c, p)| (c, p / total)),
        )
    }

    pub fn inputs(&self) -> &[Variable] {
        &self.inputs
    }

    pub fn output(&self) -> &Variable {
        &self.output
    }

    pub fn context(&self) -> Option<&Variable> {
        self.context.as_ref()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    /// Position of the output inside a configuration.
    pub fn output_slot(&self) -> usize {
        self.inputs.len()
    }

    /// Position of the context inside a configuration, if any.
    pub fn context_slot(&self) -> Option<usize> {
        self.context.as_ref().map(|_| self.inputs.len() + 1)
    }

    /// Number of codes per configuration.
    pub fn width(&self) -> usize {
        self.inputs.len() + 1 + usize::from(self.context.is_some())
    }

    /// Variable stored at a configuration slot.
    pub fn variable(&self, slot: usize) -> Option<&Variable> {
        let p = self.inputs.len();
        match slot {
            s if s < p => Some(&self.inputs[s]),
            s if s == p => Some(&self.output),
            s if s == p + 1 => self.context.as_ref(),
            _ => None,
        }
    }

    /// Slot of the variable named `name` (inputs, output or context).
    pub fn slot_of(&self, name: &str) -> Result<usize> {
        (0..self.width())
            .find(|&s| self.variable(s).is_some_and(|v| v.name == name))
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.prob).sum()
    }

    /// Probability of the event `config[slot] == value`.
    pub fn prob_of(&self, slot: usize, value: u32) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.config[slot] == value)
            .map(|e| e.prob)
            .sum()
    }

    /// Drops the context variable by marginalizing it out.
    pub fn without_context(&self) -> JointDistribution {
        if self.context.is_none() {
            return self.clone();
        }
        let keep = self.inputs.len() + 1;
        let entries = self
            .entries
            .iter()
            .map(|e| (e.config[..keep].to_vec(), e.prob));
        // Mass is unchanged by marginalization; re-normalizing only absorbs
        // rounding.
        JointDistribution::normalized(self.inputs.clone(), self.output.clone(), None, entries)
            .expect("marginal of a valid distribution is valid")
    }

    /// Distribution of inputs and output given `context == value`, together
    /// with `P(context == value)`. Returns `None` when the event has zero
    /// probability.
    pub fn given_context(&self, value: u32) -> Result<Option<(JointDistribution, f64)>> {
        let slot = self
            .context_slot()
            .ok_or_else(|| Error::param("distribution has no context variable"))?;
        let mass = self.prob_of(slot, value);
        if mass <= 0.0 {
            return Ok(None);
        }
        let keep = self.inputs.len() + 1;
        let entries = self
            .entries
            .iter()
            .filter(|e| e.config[slot] == value)
            .map(|e| (e.config[..keep].to_vec(), e.prob / mass));
        let dist =
            JointDistribution::normalized(self.inputs.clone(), self.output.clone(), None, entries)?;
        Ok(Some((dist, mass)))
    }

    /// Appends an input independent of everything else and uniformly
    /// distributed over its values.
    pub fn with_independent_input(&self, var: Variable) -> Result<JointDistribution> {
        let card = var.cardinality;
        let p = self.inputs.len();
        let mut inputs = self.inputs.clone();
        inputs.push(var);
        let mut entries = Vec::with_capacity(self.entries.len() * card as usize);
        for e in &self.entries {
            for v in 0..card {
                let mut config = Vec::with_capacity(e.config.len() + 1);
                config.extend_from_slice(&e.config[..p]);
                config.push(v);
                config.extend_from_slice(&e.config[p..]);
                entries.push((config, e.prob / card as f64));
            }
        }
        JointDistribution::normalized(inputs, self.output.clone(), self.context.clone(), entries)
    }

    /// Appends an exact copy of input `m` as a new input.
    pub fn with_duplicate_input(&self, m: usize) -> Result<JointDistribution> {
        let p = self.inputs.len();
        if m >= p {
            return Err(Error::UnknownVariable(format!("input #{m}")));
        }
        let mut var = self.inputs[m].clone();
        var.name = format!("{}_copy", var.name);
        let mut inputs = self.inputs.clone();
        inputs.push(var);
        let entries = self.entries.iter().map(|e| {
            let mut config = Vec::with_capacity(e.config.len() + 1);
            config.extend_from_slice(&e.config[..p]);
            config.push(e.config[m]);
            config.extend_from_slice(&e.config[p..]);
            (config, e.prob)
        });
        JointDistribution::new(inputs, self.output.clone(), self.context.clone(), entries)
    }

    /// Draws `n` i.i.d. rows. Deterministic for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::param("sample size must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        let mut cumulative = Vec::with_capacity(self.entries.len());
        let mut acc = 0.0;
        for e in &self.entries {
            acc += e.prob;
            cumulative.push(acc);
        }
        let last = self.entries.len() - 1;
        let picks: Vec<usize> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>() * acc;
                cumulative.partition_point(|&c| c <= u).min(last)
            })
            .collect();
        Ok(self.rows_to_dataset(&picks, None))
    }

    /// One row per configuration, weighted by its probability. Trees grown on
    /// this dataset see the exact distribution instead of a sample.
    pub fn to_exact_dataset(&self) -> Dataset {
        let picks: Vec<usize> = (0..self.entries.len()).collect();
        let weights = self.entries.iter().map(|e| e.prob).collect();
        self.rows_to_dataset(&picks, Some(weights))
    }

    fn rows_to_dataset(&self, picks: &[usize], weights: Option<Vec<f64>>) -> Dataset {
        let columns = (0..self.width())
            .map(|slot| {
                let var = self.variable(slot).expect("slot in range");
                Column {
                    name: var.name.clone(),
                    kind: ColumnKind::Categorical {
                        cardinality: var.cardinality,
                        ordered: var.ordered,
                    },
                    values: picks
                        .iter()
                        .map(|&i| f64::from(self.entries[i].config[slot]))
                        .collect(),
                }
            })
            .collect();
        Dataset::new(columns, self.output_slot(), self.context_slot(), weights)
            .expect("distribution rows form a valid dataset")
    }
}
