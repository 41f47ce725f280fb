//! Yield panels and their CSV formats.
//!
//! Two input layouts are understood:
//!
//! * Treasury quotes: `Date,Open,High,Low,Close,Adj Close,Volume`, one
//!   maturity, values in percent. `NaN` or an empty cell marks a missing
//!   quote.
//! * Panel files (what `simulate` writes): `date,<tenor>,<tenor>,...` with
//!   tenor headers in years and values as decimal yields.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TREASURY_COLUMN: &str = "Adj Close";
/// Maturity of the Treasury series the CSV loader assumes by default.
pub const DEFAULT_TREASURY_TENOR: f64 = 10.0;
/// Daily rows are one trading day apart.
pub const DAILY_DT: f64 = 1.0 / 252.0;

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Quotes such as `6.70`, divided by 100 on ingestion.
    Percent,
    Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSource {
    pub file: Option<String>,
    pub units: Units,
}

/// Date x tenor matrix of decimal yields; `None` marks a missing entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldPanel {
    pub dates: Vec<NaiveDate>,
    pub tenors: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
    pub source: PanelSource,
}

impl YieldPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tenors: Vec<f64>,
        values: Vec<Vec<Option<f64>>>,
        source: PanelSource,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} dates but {} rows of values",
                dates.len(),
                values.len()
            )));
        }
        if tenors.is_empty() {
            return Err(Error::InvalidInput("panel needs at least one tenor".into()));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(format!(
                    "dates must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != tenors.len() {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} values for {} tenors",
                    row.len(),
                    tenors.len()
                )));
            }
            if row.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite observed yield")));
            }
        }
        Ok(YieldPanel {
            dates,
            tenors,
            values,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn observed_entries(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_some()).count()
    }

    pub fn missing_entries(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Rows with at least one observed yield.
    pub fn observed_steps(&self) -> usize {
        self.values.iter().filter(|r| r.iter().any(Option::is_some)).count()
    }

    /// Rows with `from <= date <= to`.
    pub fn window(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> YieldPanel {
        let keep = |d: &NaiveDate| from.is_none_or(|f| *d >= f) && to.is_none_or(|t| *d <= t);
        let (dates, values) = self
            .dates
            .iter()
            .zip(&self.values)
            .filter(|(d, _)| keep(d))
            .map(|(d, v)| (*d, v.clone()))
            .unzip();
        YieldPanel {
            dates,
            tenors: self.tenors.clone(),
            values,
            source: self.source.clone(),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("nan") || c.eq_ignore_ascii_case("null")
}

fn parse_date(cell: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(cell.trim(), DATE_FORMAT).map_err(|e| Error::Csv {
        row: line,
        message: format!("unparseable date {:?}: {e}", cell.trim()),
    })
}

fn parse_value(cell: &str, line: usize, column: &str) -> Result<Option<f64>> {
    if is_missing(cell) {
        return Ok(None);
    }
    let v: f64 = cell.trim().parse().map_err(|_| Error::Csv {
        row: line,
        message: format!("unparseable value {:?} in column {column:?}", cell.trim()),
    })?;
    if !v.is_finite() {
        return Ok(None);
    }
    Ok(Some(v))
}

fn reader_for<R: Read>(rdr: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(rdr)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Csv {
        row: line,
        message: e.to_string(),
    }
}

/// Reads one column of a Treasury quote file as a single-tenor panel.
///
/// Percent quotes are converted to decimals. Error rows are reported by
/// their line number in the file (the header is line 1).
pub fn parse_treasury_csv(path: &Path, column: &str, tenor: f64) -> Result<YieldPanel> {
    let file = File::open(path)?;
    parse_treasury_reader(file, column, tenor, Some(path.display().to_string()))
}

pub fn parse_treasury_reader<R: Read>(rdr: R, column: &str, tenor: f64, file: Option<String>) -> Result<YieldPanel> {
    let mut rdr = reader_for(rdr);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::NoData("no data rows".into()));
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let date_idx = find("Date").ok_or_else(|| Error::Csv {
        row: 1,
        message: "header has no Date column".into(),
    })?;
    let col_idx = find(column).ok_or_else(|| Error::Csv {
        row: 1,
        message: format!("unknown column {column:?}"),
    })?;

    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let date = parse_date(&rec[date_idx], line)?;
        let v = parse_value(&rec[col_idx], line, column)?.map(|pct| pct / 100.0);
        if let Some(y) = v {
            if y < 0.0 {
                return Err(Error::Csv {
                    row: line,
                    message: format!("negative yield {y} after percent conversion"),
                });
            }
        }
        dates.push(date);
        values.push(vec![v]);
    }
    finish(dates, vec![tenor], values, file, Units::Percent)
}

/// Reads a multi-tenor panel file (`date,<tenor>,...`, decimal yields).
pub fn parse_panel_csv(path: &Path) -> Result<YieldPanel> {
    let file = File::open(path)?;
    parse_panel_reader(file, Some(path.display().to_string()))
}

pub fn parse_panel_reader<R: Read>(rdr: R, file: Option<String>) -> Result<YieldPanel> {
    let mut rdr = reader_for(rdr);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::NoData("no data rows".into()));
    }
    if !headers[0].eq_ignore_ascii_case("date") {
        return Err(Error::Csv {
            row: 1,
            message: "first panel column must be date".into(),
        });
    }
    let tenors = headers
        .iter()
        .skip(1)
        .map(|h| {
            h.parse::<f64>().map_err(|_| Error::Csv {
                row: 1,
                message: format!("tenor header {h:?} is not a number of years"),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        dates.push(parse_date(&rec[0], line)?);
        let row = (1..rec.len())
            .map(|j| parse_value(&rec[j], line, &headers[j]))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    finish(dates, tenors, values, file, Units::Decimal)
}

fn finish(
    dates: Vec<NaiveDate>,
    tenors: Vec<f64>,
    values: Vec<Vec<Option<f64>>>,
    file: Option<String>,
    units: Units,
) -> Result<YieldPanel> {
    if dates.is_empty() {
        return Err(Error::NoData("no data rows".into()));
    }
    let panel = YieldPanel::new(dates, tenors, values, PanelSource { file, units })?;
    if panel.observed_entries() == 0 {
        return Err(Error::NoData("no observed yields".into()));
    }
    Ok(panel)
}

/// Dispatches on the header: panel files start with `date`, anything else
/// is read as Treasury quotes.
pub fn load_panel(path: &Path, column: &str, treasury_tenor: f64) -> Result<YieldPanel> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or("").trim();
    let file = Some(path.display().to_string());
    if first.split(',').next().is_some_and(|h| h.trim() == "date") {
        parse_panel_reader(text.as_bytes(), file)
    } else {
        parse_treasury_reader(text.as_bytes(), column, treasury_tenor, file)
    }
}

/// Shortest round-trip float formatting; re-reading gives identical values.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_date(d: NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

pub fn write_panel_csv<W: Write>(panel: &YieldPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(panel.tenors.iter().map(|t| fmt_f64(*t)));
    w.write_record(&header).map_err(csv_err)?;
    for (d, row) in panel.dates.iter().zip(&panel.values) {
        let mut rec = vec![fmt_date(*d)];
        rec.extend(row.iter().map(|v| v.map(fmt_f64).unwrap_or_default()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename, so a failed run leaves no partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
