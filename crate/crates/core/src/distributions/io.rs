//! CSV datasets and JSON distributions.
//!
//! CSV header cells are column names, optionally annotated with the column
//! kind: `name:K` declares a categorical column of cardinality `K`,
//! `name:K:o` an ordered one, `name:num` a numeric column. Unannotated
//! columns are categorical when every cell is a nonnegative integer (with
//! cardinality `max + 1`, at least 2) and numeric otherwise. A column named
//! `__weight` carries row weights. [`save_csv`] always writes annotations, so
//! `load_csv(save_csv(d)) == d`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, Dataset, Entry, JointDistribution, Variable};
use crate::error::{Error, Result};

pub const WEIGHT_COLUMN: &str = "__weight";

#[derive(Debug)]
enum Declared {
    Categorical { cardinality: u32, ordered: bool },
    Numeric,
    Infer,
}

fn parse_header(cell: &str, column: usize) -> Result<(String, Declared)> {
    let mut parts = cell.trim().split(':');
    let name = parts.next().unwrap_or_default().trim().to_string();
    if name.is_empty() {
        return Err(Error::Format {
            row: 0,
            column,
            message: "empty column name".into(),
        });
    }
    let declared = match (parts.next(), parts.next()) {
        (None, _) => Declared::Infer,
        (Some("num"), None) => Declared::Numeric,
        (Some(k), flag) => {
            let cardinality = k.parse::<u32>().map_err(|_| Error::Format {
                row: 0,
                column,
                message: format!("bad kind annotation {cell:?}"),
            })?;
            let ordered = match flag {
                None => false,
                Some("o") => true,
                Some(_) => {
                    return Err(Error::Format {
                        row: 0,
                        column,
                        message: format!("bad kind annotation {cell:?}"),
                    })
                }
            };
            Declared::Categorical {
                cardinality,
                ordered,
            }
        }
    };
    Ok((name, declared))
}

/// Reads a dataset. `target` defaults to the last column other than the
/// weights and the context.
pub fn load_csv(path: impl AsRef<Path>, target: Option<&str>, context: Option<&str>) -> Result<Dataset> {
    let mut text = String::new();
    File::open(path.as_ref())?.read_to_string(&mut text)?;
    parse_csv(&text, target, context)
}

pub(crate) fn parse_csv(text: &str, target: Option<&str>, context: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::Malformed("empty file or missing header".into()));
    }
    let header: Vec<(String, Declared)> = headers
        .iter()
        .enumerate()
        .map(|(j, h)| parse_header(h, j))
        .collect::<Result<_>>()?;
    let width = header.len();
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); width];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != width {
            return Err(Error::Format {
                row,
                column: record.len().min(width),
                message: format!("ragged row: {} cells, expected {width}", record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Format {
                row,
                column: j,
                message: format!("cannot parse {cell:?} in column {}", header[j].0),
            })?;
            raw[j].push(v);
        }
    }
    if raw[0].is_empty() {
        return Err(Error::Malformed("no data rows".into()));
    }

    let mut columns = Vec::with_capacity(width);
    let mut weights = None;
    for (j, ((name, declared), values)) in header.into_iter().zip(raw).enumerate() {
        if name == WEIGHT_COLUMN {
            weights = Some(values);
            continue;
        }
        let integral = values.iter().all(|v| *v >= 0.0 && v.fract() == 0.0);
        let kind = match declared {
            Declared::Numeric => ColumnKind::Numeric,
            Declared::Categorical {
                cardinality,
                ordered,
            } => {
                if let Some((i, v)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| **v < 0.0 || v.fract() != 0.0 || **v >= f64::from(cardinality))
                {
                    return Err(Error::Format {
                        row: i + 1,
                        column: j,
                        message: format!(
                            "code {v} out of range for column {name} (cardinality {cardinality})"
                        ),
                    });
                }
                ColumnKind::Categorical {
                    cardinality,
                    ordered,
                }
            }
            Declared::Infer if integral => {
                let max = values.iter().cloned().fold(0.0, f64::max) as u32;
                ColumnKind::Categorical {
                    cardinality: (max + 1).max(2),
                    ordered: false,
                }
            }
            Declared::Infer => ColumnKind::Numeric,
        };
        columns.push(Column { name, kind, values });
    }
    if columns.is_empty() {
        return Err(Error::Malformed("no data columns".into()));
    }
    let find = |name: &str| {
        columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    };
    let context = context.map(find).transpose()?;
    let target = match target {
        Some(t) => find(t)?,
        None => (0..columns.len())
            .rev()
            .find(|&j| Some(j) != context)
            .ok_or_else(|| Error::Malformed("no column left for the output".into()))?,
    };
    Dataset::new(columns, target, context, weights)
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = File::create(path.as_ref())?;
    out.write_all(to_csv_string(dataset)?.as_bytes())?;
    Ok(())
}

pub(crate) fn to_csv_string(dataset: &Dataset) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = dataset
        .columns()
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Categorical {
                cardinality,
                ordered: false,
            } => format!("{}:{cardinality}", c.name),
            ColumnKind::Categorical {
                cardinality,
                ordered: true,
            } => format!("{}:{cardinality}:o", c.name),
            ColumnKind::Numeric => format!("{}:num", c.name),
        })
        .collect();
    // The target is identified by position on reload, so keep it last when
    // it already is; otherwise callers pass `target` explicitly.
    if dataset.weights().is_some() {
        header.push(WEIGHT_COLUMN.to_string());
    }
    writer.write_record(&header)?;
    for i in 0..dataset.n_rows() {
        let mut record: Vec<String> = dataset
            .columns()
            .iter()
            .map(|c| match c.kind {
                ColumnKind::Categorical { .. } => format!("{}", c.values[i] as u64),
                // `{:?}` prints the shortest representation that round-trips.
                ColumnKind::Numeric => format!("{:?}", c.values[i]),
            })
            .collect();
        if let Some(w) = dataset.weights() {
            record.push(format!("{:?}", w[i]));
        }
        writer.write_record(&record)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Malformed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Malformed(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    variables: Vec<Variable>,
    output: Variable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<Variable>,
    probs: Vec<Entry>,
}

impl Serialize for JointDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionFile {
            variables: self.inputs().to_vec(),
            output: self.output().clone(),
            context: self.context().cloned(),
            probs: self.entries().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = DistributionFile::deserialize(d)?;
        JointDistribution::new(
            file.variables,
            file.output,
            file.context,
            file.probs.into_iter().map(|e| (e.config, e.prob)),
        )
        .map_err(serde::de::Error::custom)
    }
}

pub fn save_distribution(dist: &JointDistribution, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    serde_json::to_writer_pretty(file, dist)?;
    Ok(())
}

pub fn load_distribution(path: impl AsRef<Path>) -> Result<JointDistribution> {
    let file = File::open(path.as_ref())?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}
