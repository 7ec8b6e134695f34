use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub m: u32,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidConfig(format!("unknown output format '{other}'"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

pub const CSV_HEADER: [&str; 5] = ["experiment", "m", "seed", "metric", "value"];

/// Rows keyed by `(experiment, m, seed, metric)`, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTable {
    rows: Vec<Row>,
    keys: BTreeSet<(String, u32, u64, String)>,
}

impl ConvergenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        if !row.value.is_finite() {
            return Err(Error::Table(format!("non-finite value for {} at m = {}", row.metric, row.m)));
        }
        let key = (row.experiment.clone(), row.m, row.seed, row.metric.clone());
        if !self.keys.insert(key) {
            return Err(Error::Table(format!(
                "duplicate row {}/{}/{}/{}",
                row.experiment, row.m, row.seed, row.metric
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn record(&mut self, experiment: &str, m: u32, seed: u64, metric: &str, value: f64) -> Result<()> {
        self.push(Row {
            experiment: experiment.to_string(),
            m,
            seed,
            metric: metric.to_string(),
            value,
        })
    }

    pub fn extend(&mut self, other: ConvergenceTable) -> Result<()> {
        other.rows.into_iter().try_for_each(|r| self.push(r))
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of `metric` at level `m`, in row order.
    pub fn values(&self, metric: &str, m: u32) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric && r.m == m)
            .map(|r| r.value)
            .collect()
    }

    /// Median over seeds of `metric`, per level.
    pub fn medians(&self, metric: &str) -> BTreeMap<u32, f64> {
        let mut by_level: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.metric == metric) {
            by_level.entry(r.m).or_default().push(r.value);
        }
        by_level.into_iter().map(|(m, v)| (m, median(v))).collect()
    }

    /// Least-squares slope of `log2(median metric)` against `m`.
    pub fn estimate_rate(&self, metric: &str) -> Result<f64> {
        let medians = self.medians(metric);
        if medians.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "rate of '{metric}' needs 3 levels, table has {}",
                medians.len()
            )));
        }
        if let Some((&level, _)) = medians.iter().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NonPositiveMetric {
                metric: metric.to_string(),
                level,
            });
        }
        let points: Vec<(f64, f64)> = medians.iter().map(|(&m, &v)| (f64::from(m), v.log2())).collect();
        Ok(least_squares_slope(&points))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("writing to memory");
        for r in &self.rows {
            w.write_record([
                r.experiment.as_str(),
                &r.m.to_string(),
                &r.seed.to_string(),
                r.metric.as_str(),
                &format_value(r.value),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Table(e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::Table(format!("unexpected header {header:?}")));
        }
        let mut table = ConvergenceTable::new();
        for row in reader.deserialize::<Row>() {
            table.push(row.map_err(|e| Error::Table(e.to_string()))?)?;
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rows: Vec<Row> = serde_json::from_str(text).map_err(|e| Error::Table(e.to_string()))?;
        let mut table = ConvergenceTable::new();
        rows.into_iter().try_for_each(|r| table.push(r))?;
        Ok(table)
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty(), "median of nothing");
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
