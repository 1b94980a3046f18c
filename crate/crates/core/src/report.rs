//! Text rendering of results as CSV, JSON or markdown tables.

use std::str::FromStr;

use serde::Serialize;

use crate::context::ContextReport;
use crate::error::{Error, Result};
use crate::importance::ImportanceReport;
use crate::netinfer::ScoreMatrix;

pub const DEFAULT_DECIMALS: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(Error::param(format!("unknown format {s:?} (csv, json or markdown)"))),
        }
    }
}

/// Fixed-point number without negative zero.
pub fn fmt_float(v: f64, decimals: usize) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// A table of string cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let line = |cells: &[String]| {
            let escaped: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
            format!("| {} |\n", escaped.join(" | "))
        };
        out.push_str(&line(&self.header));
        out.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }

    /// Array of objects keyed by the header.
    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                self.header
                    .iter()
                    .zip(r)
                    .map(|(h, c)| {
                        let number = c
                            .parse::<i64>()
                            .map(serde_json::Number::from)
                            .ok()
                            .or_else(|| c.parse::<f64>().ok().and_then(serde_json::Number::from_f64));
                        let v = number.map_or_else(|| serde_json::Value::String(c.clone()), serde_json::Value::Number);
                        (h.clone(), v)
                    })
                    .collect()
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
            Format::Markdown => self.to_markdown(),
        }
    }
}

/// `variable,score[,k0,...]`, one row per variable.
pub fn importance_table(report: &ImportanceReport, decimals: usize) -> Table {
    let width = report
        .per_degree
        .as_ref()
        .and_then(|d| d.iter().map(Vec::len).max())
        .unwrap_or(0);
    let mut header = vec!["variable".to_string(), "score".to_string()];
    header.extend((0..width).map(|k| format!("k{k}")));
    let mut table = Table::new(header);
    for (m, name) in report.variables.iter().enumerate() {
        let mut row = vec![name.clone(), fmt_float(report.scores[m], decimals)];
        if let Some(d) = &report.per_degree {
            row.extend((0..width).map(|k| fmt_float(d[m].get(k).copied().unwrap_or(0.0), decimals)));
        }
        table.push(row);
    }
    table
}

pub fn render_importance(report: &ImportanceReport, format: Format, decimals: usize) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("serializable") + "\n",
        _ => importance_table(report, decimals).render(format),
    }
}

/// One row per measure, one column per variable: `Imp`, `Imp|Xc=c` for
/// every `c`, then `Imp^{|c|}` and `Imp^{c}` for every `c`, then
/// `Imp^{Xc}`, and permutation p-values when present.
pub fn context_table(report: &ContextReport, decimals: usize) -> Table {
    let mut header = vec!["measure".to_string()];
    header.extend(report.variables.iter().cloned());
    let mut table = Table::new(header);
    let row = |label: String, values: Vec<f64>| {
        let mut r = vec![label];
        r.extend(values.into_iter().map(|v| fmt_float(v, decimals)));
        r
    };
    let p = report.variables.len();
    let col = |m: &Vec<Vec<f64>>, c: usize| (0..p).map(|i| m[i][c]).collect::<Vec<_>>();
    table.push(row("Imp".into(), report.imp.clone()));
    for (c, xc) in report.context_values.iter().enumerate() {
        table.push(row(format!("Imp|Xc={xc}"), col(&report.imp_given, c)));
    }
    for (c, xc) in report.context_values.iter().enumerate() {
        table.push(row(format!("Imp^{{|{xc}|}}"), col(&report.imp_abs, c)));
        table.push(row(format!("Imp^{{{xc}}}"), col(&report.imp_signed, c)));
    }
    table.push(row("Imp^{Xc}".into(), report.imp_global.clone()));
    if let Some(pv) = &report.p_values {
        for (c, xc) in report.context_values.iter().enumerate() {
            table.push(row(format!("p^{{|{xc}|}}"), col(pv, c)));
        }
    }
    table
}

pub fn render_context(report: &ContextReport, format: Format, decimals: usize) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("serializable") + "\n",
        _ => context_table(report, decimals).render(format),
    }
}

/// `src,dst,score` sorted by decreasing score.
pub fn scores_table(scores: &ScoreMatrix, decimals: usize) -> Table {
    let mut table = Table::new(["src", "dst", "score"]);
    for (i, j, s) in scores.ranked_edges() {
        table.push(vec![scores.names[i].clone(), scores.names[j].clone(), fmt_float(s, decimals)]);
    }
    table
}

pub fn render_scores(scores: &ScoreMatrix, format: Format, decimals: usize) -> String {
    scores_table(scores, decimals).render(format)
}
