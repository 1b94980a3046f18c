//! Randomized decision-tree ensembles and the feature-importance theory built
//! around them.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`] holds exact joint distributions over categorical
//!   variables, finite datasets, the synthetic problem generators and CSV/JSON
//!   I/O.
//! * [`infotheory`] computes entropies and (conditional) mutual informations
//!   exactly, and classifies variable relevance by exhaustive search.
//! * [`tree`] and [`forest`] grow randomized trees and ensembles with
//!   per-node impurity bookkeeping.
//! * [`importance`] turns forests into MDI/MDA/selection-frequency scores and
//!   evaluates the infinite-sample MDI of totally randomized trees exactly.
//! * [`context`] implements context-dependence scores.
//! * [`srs`] implements sequential random subspace selection together with its
//!   convergence calculators.
//! * [`netinfer`] is the partial-correlation / tree-based network inference
//!   pipeline.
//! * [`report`] renders results as CSV, JSON or markdown.

pub mod context;
pub mod distributions;
pub mod error;
pub mod forest;
pub mod importance;
pub mod infotheory;
pub mod netinfer;
pub mod report;
pub mod rng;
pub mod srs;
pub mod tree;

pub use error::{Error, Result};
