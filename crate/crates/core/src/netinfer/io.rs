//! CSV formats: series with one column per node and a header of node names;
//! networks as `src,dst[,weight]` edge lists; scores as `src,dst,score`
//! sorted by decreasing score.

use std::path::Path;

use nalgebra::DMatrix;

use super::{ScoreMatrix, TimeSeries};
use crate::error::{Error, Result};

pub fn load_series(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let mut reader = csv::Reader::from_path(path)?;
    let names: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut values = Vec::new();
    let mut n = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != names.len() {
            return Err(Error::Format {
                row: row + 2,
                column: record.len(),
                message: format!("expected {} fields", names.len()),
            });
        }
        for (column, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Format {
                row: row + 2,
                column: column + 1,
                message: format!("not a number: {field:?}"),
            })?;
            values.push(v);
        }
        n += 1;
    }
    TimeSeries::new(names.clone(), DMatrix::from_row_slice(n, names.len(), &values))
}

pub fn save_series(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(series.names())?;
    for row in series.values().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn resolve(token: &str, names: &[String]) -> Option<usize> {
    let token = token.trim();
    names
        .iter()
        .position(|n| n == token)
        .or_else(|| token.parse::<usize>().ok().filter(|&i| i < names.len()))
}

/// Reads an edge list whose endpoints are node names or 0-based indices.
/// A first line that does not resolve is taken as a header; rows with a
/// nonpositive weight are not edges.
pub fn load_truth(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<(usize, usize)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut edges = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Format {
                row: row + 1,
                column: record.len(),
                message: "expected src,dst[,weight]".into(),
            });
        }
        let (src, dst) = (resolve(&record[0], names), resolve(&record[1], names));
        let (src, dst) = match (src, dst) {
            (Some(s), Some(d)) => (s, d),
            _ if row == 0 => continue,
            _ => {
                return Err(Error::UnknownVariable(format!(
                    "edge {}->{} on line {}",
                    &record[0],
                    &record[1],
                    row + 1
                )))
            }
        };
        if let Some(w) = record.get(2) {
            let w: f64 = w.trim().parse().map_err(|_| Error::Format {
                row: row + 1,
                column: 3,
                message: format!("not a number: {w:?}"),
            })?;
            if w <= 0.0 {
                continue;
            }
        }
        edges.push((src, dst));
    }
    Ok(edges)
}

pub fn save_truth(edges: &[(usize, usize)], names: &[String], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst"])?;
    for &(i, j) in edges {
        w.write_record([&names[i], &names[j]])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_scores(scores: &ScoreMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst", "score"])?;
    for (i, j, s) in scores.ranked_edges() {
        w.write_record([scores.names[i].as_str(), scores.names[j].as_str(), &s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `src,dst,score` list. Nodes are `names` when given, else every
/// endpoint in order of first appearance. A pair listed in one direction
/// only scores the same both ways, as symmetric scores are written once;
/// pairs absent in both directions get the lowest listed score.
pub fn load_scores(path: impl AsRef<Path>, names: Option<&[String]>) -> Result<ScoreMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut nodes: Vec<String> = names.map(<[String]>::to_vec).unwrap_or_default();
    let mut triples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Format {
                row: row + 1,
                column: record.len(),
                message: "expected src,dst,score".into(),
            });
        }
        let score = match record[2].trim().parse::<f64>() {
            Ok(s) => s,
            Err(_) if row == 0 => continue,
            Err(_) => {
                return Err(Error::Format {
                    row: row + 1,
                    column: 3,
                    message: format!("not a number: {:?}", &record[2]),
                })
            }
        };
        let mut endpoint = |token: &str| -> Result<usize> {
            if let Some(i) = resolve(token, &nodes) {
                return Ok(i);
            }
            if names.is_some() {
                return Err(Error::UnknownVariable(format!("{token} on line {}", row + 1)));
            }
            nodes.push(token.trim().to_string());
            Ok(nodes.len() - 1)
        };
        let (i, j) = (endpoint(&record[0])?, endpoint(&record[1])?);
        triples.push((i, j, score));
    }
    if triples.is_empty() {
        return Err(Error::Empty("the score file lists no edge".into()));
    }
    let floor = triples.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
    let p = nodes.len();
    let mut values = DMatrix::from_element(p, p, f64::NAN);
    for &(i, j, s) in &triples {
        values[(i, j)] = s;
    }
    for (i, j, s) in triples {
        if values[(j, i)].is_nan() {
            values[(j, i)] = s;
        }
    }
    values.iter_mut().filter(|v| v.is_nan()).for_each(|v| *v = floor);
    Ok(ScoreMatrix::new(nodes, values, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let s = TimeSeries::unnamed(DMatrix::from_fn(4, 3, |t, i| (t * 3 + i) as f64 / 7.0)).unwrap();
        let path = dir.path().join("s.csv");
        save_series(&s, &path).unwrap();
        assert_eq!(load_series(&path).unwrap(), s);
        let edges = vec![(0, 2), (1, 0)];
        let tp = dir.path().join("t.csv");
        save_truth(&edges, s.names(), &tp).unwrap();
        assert_eq!(load_truth(&tp, s.names()).unwrap(), edges);
        let mut f = std::fs::File::create(&tp).unwrap();
        writeln!(f, "0,1,1\n1,2,-1\nX3,X1").unwrap();
        assert_eq!(load_truth(&tp, s.names()).unwrap(), vec![(0, 1), (2, 0)]);
        let sc = ScoreMatrix::new(s.names().to_vec(), DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64), true);
        let sp = dir.path().join("sc.csv");
        save_scores(&sc, &sp).unwrap();
        let text = std::fs::read_to_string(&sp).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("src,dst,score"));
        assert_eq!(lines.next(), Some("X3,X2,7"));
        assert_eq!(text.lines().count(), 7);
        let back = load_scores(&sp, Some(s.names())).unwrap();
        assert_eq!(back.score(2, 1), 7.0);
        assert_eq!(back.score(0, 1), 1.0);
        let mut f = std::fs::File::create(&sp).unwrap();
        writeln!(f, "a,b,0.5\nb,c,0.2").unwrap();
        let loose = load_scores(&sp, None).unwrap();
        assert_eq!(loose.names, vec!["a", "b", "c"]);
        assert_eq!(loose.score(2, 1), 0.2);
        assert_eq!(loose.score(2, 0), 0.2);
        assert_eq!(loose.score(0, 2), 0.2);
    }
}
