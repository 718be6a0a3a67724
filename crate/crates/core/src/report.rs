//! Tabular rendering of analysis results as CSV and JSON.
//!
//! Both renderings come from one `Table`, so they always carry the same
//! values. Missing statistics print as `.` in CSV and `null` in JSON.

use std::io::{self, Write};

use serde_json::{Map, Number, Value};

use crate::discord::{
    CellStats, ConcordanceMatrix, DatasetSummaryRow, GapPair, GapStats, GroupBy, PrevalentMetric,
    SeriesRow, VariabilityRow,
};
use crate::ingest::ProvenanceEdge;

pub const NULL_MARKER: &str = ".";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    /// Value and number of decimals.
    Num(Option<f64>, usize),
}

impl Cell {
    fn num(v: f64, decimals: usize) -> Cell {
        Cell::Num(Some(v), decimals)
    }

    fn render(&self) -> Option<String> {
        match self {
            Cell::Text(s) => Some(s.clone()),
            Cell::Int(i) => Some(i.to_string()),
            Cell::Num(v, d) => v.map(|x| fixed(x, *d)),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Num(None, _) => Value::Null,
            Cell::Num(Some(x), d) => {
                let rounded: f64 = fixed(*x, *d).parse().expect("formatted float parses");
                Number::from_f64(rounded).map_or(Value::Null, Value::Number)
            }
        }
    }
}

/// Fixed-point text without a negative sign on zero.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = crate::canonical::csv_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .map(|c| c.render().unwrap_or_else(|| NULL_MARKER.to_string())),
            )?;
        }
        w.flush()
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }

    /// An array of objects keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        out.write_all(b"\n")
    }
}

fn text(s: &str) -> Cell {
    Cell::Text(s.to_string())
}

fn count(n: usize) -> Cell {
    Cell::Int(n as i64)
}

pub fn variability_table(rows: &[VariabilityRow], group_by: GroupBy) -> Table {
    let mut t = Table::new(&[
        group_by.label(),
        "n_obs",
        "mean_range",
        "mean_sd",
        "median_range",
        "max_range",
    ]);
    for r in rows {
        t.push(vec![
            text(&r.group),
            count(r.n_obs),
            Cell::Num(r.mean_range, 2),
            Cell::Num(r.mean_sd, 2),
            Cell::Num(r.median_range, 2),
            Cell::Num(r.max_range, 2),
        ]);
    }
    t
}

pub fn cells_table(cells: &[CellStats]) -> Table {
    let mut t = Table::new(&[
        "country_iso3",
        "year",
        "n_obs",
        "n_databases",
        "min_pp",
        "max_pp",
        "range_pp",
        "sd_pp",
    ]);
    for c in cells {
        t.push(vec![
            text(&c.country_iso3),
            Cell::Int(c.year.into()),
            count(c.n_obs),
            count(c.n_databases),
            Cell::num(c.min_pp, 4),
            Cell::num(c.max_pp, 4),
            Cell::num(c.range_pp, 4),
            Cell::num(c.sd_pp, 4),
        ]);
    }
    t
}

/// Long form: one row per ordered database pair, including the diagonal.
pub fn concordance_table(matrix: &ConcordanceMatrix) -> Table {
    let mut t = Table::new(&["db_a", "db_b", "n_overlap", "pearson", "mad_pp"]);
    for c in &matrix.cells {
        t.push(vec![
            text(c.db_a.as_str()),
            text(c.db_b.as_str()),
            count(c.n_overlap),
            Cell::Num(c.pearson, 3),
            Cell::Num(c.mad_pp, 2),
        ]);
    }
    t
}

pub fn gaps_table(rows: &[GapStats], group_by: GroupBy) -> Table {
    let mut t = Table::new(&[group_by.label(), "n_pairs", "mean_gap", "median_gap", "p75_gap"]);
    for r in rows {
        t.push(vec![
            text(&r.group),
            count(r.n_pairs),
            Cell::Num(r.mean_gap, 2),
            Cell::Num(r.median_gap, 2),
            Cell::Num(r.p75_gap, 2),
        ]);
    }
    t
}

pub fn summary_table(rows: &[DatasetSummaryRow]) -> Table {
    let mut t = Table::new(&["dataset", "n_obs", "n_countries", "min_year", "max_year", "mean_gini"]);
    for r in rows {
        let year = |y: Option<i32>| y.map_or(Cell::Num(None, 0), |y| Cell::Int(y.into()));
        t.push(vec![
            text(&r.dataset),
            count(r.n_obs),
            count(r.n_countries),
            year(r.min_year),
            year(r.max_year),
            Cell::Num(r.mean_gini, 2),
        ]);
    }
    t
}

pub fn sankey_table(edges: &[ProvenanceEdge]) -> Table {
    let mut t = Table::new(&["origin", "destination", "weight"]);
    for e in edges {
        t.push(vec![
            text(&e.origin),
            text(e.destination.as_str()),
            count(e.weight),
        ]);
    }
    t
}

pub fn metric_map_table(rows: &[(String, PrevalentMetric)]) -> Table {
    let mut t = Table::new(&["country_iso3", "metric"]);
    for (country, metric) in rows {
        t.push(vec![text(country), text(metric.as_str())]);
    }
    t
}

/// Gini values keep the four decimals of the canonical collection.
pub fn scatter_table(pairs: &[GapPair]) -> Table {
    let mut t = Table::new(&["country_iso3", "year", "income_gini", "consumption_gini", "gap_pp"]);
    for p in pairs {
        t.push(vec![
            text(&p.country_iso3),
            Cell::Int(p.year.into()),
            Cell::num(p.income_gini, 4),
            Cell::num(p.consumption_gini, 4),
            Cell::num(p.gap_pp, 4),
        ]);
    }
    t
}

pub fn series_table(country_iso3: &str, rows: &[SeriesRow]) -> Table {
    let mut t = Table::new(&["country_iso3", "year", "n_obs", "min", "q1", "median", "q3", "max"]);
    for r in rows {
        t.push(vec![
            text(country_iso3),
            Cell::Int(r.year.into()),
            count(r.n_obs),
            Cell::num(r.min, 2),
            Cell::num(r.q1, 2),
            Cell::num(r.median, 2),
            Cell::num(r.q3, 2),
            Cell::num(r.max, 2),
        ]);
    }
    t
}
