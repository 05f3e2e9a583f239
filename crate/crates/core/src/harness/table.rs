use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the swept axis: a number, or a label such as a structure name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweptValue {
    Number(f64),
    Label(String),
}

impl SweptValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SweptValue::Number(v) => Some(*v),
            SweptValue::Label(_) => None,
        }
    }

    fn parse(s: &str) -> SweptValue {
        match s.parse::<f64>() {
            Ok(v) => SweptValue::Number(v),
            Err(_) => SweptValue::Label(s.to_string()),
        }
    }

    /// Numbers before labels, numbers by value, labels lexicographically.
    pub fn total_cmp(&self, other: &SweptValue) -> Ordering {
        match (self, other) {
            (SweptValue::Number(a), SweptValue::Number(b)) => a.total_cmp(b),
            (SweptValue::Number(_), SweptValue::Label(_)) => Ordering::Less,
            (SweptValue::Label(_), SweptValue::Number(_)) => Ordering::Greater,
            (SweptValue::Label(a), SweptValue::Label(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for SweptValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweptValue::Number(v) => f.write_str(&format_float(*v)),
            SweptValue::Label(s) => f.write_str(s),
        }
    }
}

/// Seventeen significant digits, enough to round-trip any double.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Linear interpolation between order statistics (the "type 7" rule):
/// with `h = (N - 1) q`, the result is
/// `x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])` on the sorted
/// sample. `NaN` for an empty sample or one containing `NaN`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        return sorted[lo];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// `(q25, median, q75)`.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    (quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75))
}

/// Whether every replicate behind a row succeeded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CellStatus {
    Ok,
    Failed { failed: usize, total: usize },
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Ok => f.write_str("ok"),
            CellStatus::Failed { failed, total } => write!(f, "failed:{failed}/{total}"),
        }
    }
}

impl From<CellStatus> for String {
    fn from(s: CellStatus) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for CellStatus {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        if s == "ok" {
            return Ok(CellStatus::Ok);
        }
        let bad = || format!("unrecognized status {s:?}");
        let rest = s.strip_prefix("failed:").ok_or_else(bad)?;
        let (a, b) = rest.split_once('/').ok_or_else(bad)?;
        Ok(CellStatus::Failed {
            failed: a.parse().map_err(|_| bad())?,
            total: b.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub value: SweptValue,
    pub method: String,
    pub metric: String,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub status: CellStatus,
}

impl TableRow {
    pub(crate) fn key_cmp(&self, other: &TableRow) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| self.method.cmp(&other.method))
            .then_with(|| self.metric.cmp(&other.metric))
    }

    /// Bitwise equality, so that `NaN` rows compare equal to themselves.
    pub fn same_as(&self, other: &TableRow) -> bool {
        let value_eq = match (&self.value, &other.value) {
            (SweptValue::Number(a), SweptValue::Number(b)) => a.to_bits() == b.to_bits(),
            (a, b) => a == b,
        };
        value_eq
            && self.method == other.method
            && self.metric == other.metric
            && self.median.to_bits() == other.median.to_bits()
            && self.q25.to_bits() == other.q25.to_bits()
            && self.q75.to_bits() == other.q75.to_bits()
            && self.status == other.status
    }
}

/// One fitted replicate: all metric values, or the error that stopped it.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord {
    pub value: SweptValue,
    pub method: String,
    pub replicate: usize,
    pub seed: u64,
    pub outcome: std::result::Result<Vec<(String, f64)>, String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentTable {
    pub swept_var: String,
    /// Sorted by `(value, method, metric)`.
    pub rows: Vec<TableRow>,
    /// Per-replicate values behind the rows.
    pub raw: Vec<ReplicateRecord>,
}

pub const TABLE_HEADER: [&str; 8] = ["swept_var", "value", "method", "metric", "median", "q25", "q75", "status"];

impl ExperimentTable {
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(TableRow::key_cmp);
    }

    pub fn failed_cells(&self) -> usize {
        self.raw.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn row(&self, value: &SweptValue, method: &str, metric: &str) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.value.total_cmp(value) == Ordering::Equal && r.method == method && r.metric == metric)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        self.write_records(&mut w).map_err(|e| csv_error(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_records(&mut w).expect("writing to memory");
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8")
    }

    fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> csv::Result<()> {
        w.write_record(TABLE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                self.swept_var.clone(),
                r.value.to_string(),
                r.method.clone(),
                r.metric.clone(),
                format_float(r.median),
                format_float(r.q25),
                format_float(r.q75),
                r.status.to_string(),
            ])?;
        }
        Ok(())
    }

    /// Reads the aggregated rows back; the raw replicate values are not part
    /// of the file.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<ExperimentTable> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.iter().ne(TABLE_HEADER) {
            return Err(Error::parse(path, format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
        }
        let mut table = ExperimentTable::default();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let float = |i: usize| {
                let s = &rec[i];
                match s {
                    "NaN" => Ok(f64::NAN),
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    _ => s
                        .parse::<f64>()
                        .map_err(|_| Error::parse(path, format!("row {}: bad number {s:?}", line + 1))),
                }
            };
            if table.swept_var.is_empty() {
                table.swept_var = rec[0].to_string();
            }
            table.rows.push(TableRow {
                value: SweptValue::parse(&rec[1]),
                method: rec[2].to_string(),
                metric: rec[3].to_string(),
                median: float(4)?,
                q25: float(5)?,
                q75: float(6)?,
                status: CellStatus::try_from(rec[7].to_string()).map_err(|m| Error::parse(path, m))?,
            });
        }
        Ok(table)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::parse(path, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        assert_eq!(quartiles(&[4.0]), (4.0, 4.0, 4.0));
        let v = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 1.0);
        assert_eq!(quantile(&v, 0.75), 4.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(quantile(&[0.0, 10.0, 20.0, 30.0], 0.25), 7.5);
        assert!(quantile(&[], 0.5).is_nan());
        assert!(quantile(&[1.0, f64::NAN], 0.5).is_nan());
    }

    #[test]
    fn status_round_trip() {
        for s in [CellStatus::Ok, CellStatus::Failed { failed: 2, total: 30 }] {
            assert_eq!(CellStatus::try_from(s.to_string()).unwrap(), s);
        }
        assert!(CellStatus::try_from("broken".to_string()).is_err());
    }

    #[test]
    fn float_format_is_lossless() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5e-7, f64::MIN_POSITIVE] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ExperimentTable {
            swept_var: "m".into(),
            ..Default::default()
        };
        assert_eq!(t.to_csv_string(), "swept_var,value,method,metric,median,q25,q75,status\n");
    }
}
