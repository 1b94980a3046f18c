use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Categorical { cardinality: u32, ordered: bool },
    Numeric,
}

impl ColumnKind {
    pub fn cardinality(&self) -> Option<u32> {
        match self {
            ColumnKind::Categorical { cardinality, .. } => Some(*cardinality),
            ColumnKind::Numeric => None,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, ColumnKind::Categorical { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<f64>,
}

impl Column {
    pub fn categorical(name: impl Into<String>, cardinality: u32, codes: &[u32]) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical {
                cardinality,
                ordered: false,
            },
            values: codes.iter().map(|&c| f64::from(c)).collect(),
        }
    }

    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            values,
        }
    }
}

/// Column-major table with a designated output column, an optional context
/// column and optional positive row weights.
///
/// Categorical cells hold integer codes stored as `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Column>,
    target: usize,
    context: Option<usize>,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        columns: Vec<Column>,
        target: usize,
        context: Option<usize>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Empty("dataset has no columns".into()));
        }
        let n = columns[0].values.len();
        if n == 0 {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if target >= columns.len() {
            return Err(Error::param(format!("target column {target} out of range")));
        }
        if let Some(c) = context {
            if c >= columns.len() || c == target {
                return Err(Error::param(format!("invalid context column {c}")));
            }
            if !columns[c].kind.is_categorical() {
                return Err(Error::param("context column must be categorical"));
            }
        }
        for (j, col) in columns.iter().enumerate() {
            if col.values.len() != n {
                return Err(Error::Format {
                    row: col.values.len().min(n),
                    column: j,
                    message: format!("column {} has {} rows, expected {n}", col.name, col.values.len()),
                });
            }
            match col.kind {
                ColumnKind::Categorical { cardinality, .. } => {
                    if cardinality < 1 {
                        return Err(Error::param(format!("column {} has zero cardinality", col.name)));
                    }
                    for (i, &v) in col.values.iter().enumerate() {
                        if v < 0.0 || v.fract() != 0.0 || v >= f64::from(cardinality) {
                            return Err(Error::Format {
                                row: i,
                                column: j,
                                message: format!(
                                    "value {v} invalid for column {} (cardinality {cardinality})",
                                    col.name
                                ),
                            });
                        }
                    }
                }
                ColumnKind::Numeric => {
                    if let Some(i) = col.values.iter().position(|v| !v.is_finite()) {
                        return Err(Error::Format {
                            row: i,
                            column: j,
                            message: "non-finite numeric value".into(),
                        });
                    }
                }
            }
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return Err(Error::param("weight vector length mismatch"));
            }
            if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::param("row weights must be positive"));
            }
        }
        Ok(Dataset {
            columns,
            target,
            context,
            weights,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].values.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn context(&self) -> Option<usize> {
        self.context
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, row: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[row])
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col].values[row]
    }

    pub fn code(&self, row: usize, col: usize) -> usize {
        self.columns[col].values[row] as usize
    }

    /// Column indices usable as inputs: everything but the target and the
    /// context.
    pub fn inputs(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| j != self.target && Some(j) != self.context)
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Number of classes when the target is categorical, `None` for a
    /// regression target.
    pub fn n_classes(&self) -> Option<usize> {
        self.columns[self.target]
            .kind
            .cardinality()
            .map(|c| c as usize)
    }

    pub fn is_classification(&self) -> bool {
        self.n_classes().is_some()
    }

    pub fn with_target(mut self, target: usize) -> Result<Self> {
        if target >= self.columns.len() || Some(target) == self.context {
            return Err(Error::param(format!("invalid target column {target}")));
        }
        self.target = target;
        Ok(self)
    }

    pub fn with_context(mut self, context: Option<usize>) -> Result<Self> {
        if let Some(c) = context {
            if c >= self.columns.len() || c == self.target || !self.columns[c].kind.is_categorical() {
                return Err(Error::param(format!("invalid context column {c}")));
            }
        }
        self.context = context;
        Ok(self)
    }

    /// Replaces the values of column `j`; kinds and validation are preserved.
    pub fn with_column_values(&self, j: usize, values: Vec<f64>) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns[j].values = values;
        Dataset::new(columns, self.target, self.context, self.weights.clone())
    }

    /// Appends a column (used for random probes). The new column gets the
    /// last index.
    pub fn with_appended_column(&self, column: Column) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns.push(column);
        Dataset::new(columns, self.target, self.context, self.weights.clone())
    }

    /// Replaces column `j` in place with an already valid column.
    pub(crate) fn set_column(&mut self, j: usize, column: Column) {
        debug_assert_eq!(column.values.len(), self.n_rows());
        self.columns[j] = column;
    }

    pub fn total_weight(&self) -> f64 {
        self.weights
            .as_ref()
            .map_or(self.n_rows() as f64, |w| w.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_codes_and_weights() {
        let ok = Dataset::new(
            vec![Column::categorical("a", 2, &[0, 1]), Column::categorical("y", 2, &[1, 0])],
            1,
            None,
            Some(vec![0.5, 0.5]),
        );
        assert!(ok.is_ok());
        let bad = Dataset::new(
            vec![Column::categorical("a", 2, &[0, 5]), Column::categorical("y", 2, &[1, 0])],
            1,
            None,
            None,
        );
        match bad {
            Err(Error::Format { row, column, .. }) => assert_eq!((row, column), (1, 0)),
            other => panic!("expected format error, got {other:?}"),
        }
        let bad_w = Dataset::new(
            vec![Column::categorical("y", 2, &[1, 0])],
            0,
            None,
            Some(vec![1.0, 0.0]),
        );
        assert!(bad_w.is_err());
    }

    #[test]
    fn inputs_skip_target_and_context() {
        let ds = Dataset::new(
            vec![
                Column::categorical("a", 2, &[0]),
                Column::categorical("c", 2, &[0]),
                Column::categorical("y", 2, &[0]),
            ],
            2,
            Some(1),
            None,
        )
        .unwrap();
        assert_eq!(ds.inputs(), vec![0]);
    }
}
