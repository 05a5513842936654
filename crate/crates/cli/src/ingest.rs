//! CSV ingestion and emission.
//!
//! Three file shapes move through the tool:
//!
//! * **Price tables** — first column a date label, one column per asset
//!   holding strictly positive prices, and optionally a column named
//!   exactly [`RISK_FREE_COLUMN`] holding per-period risk-free rates.
//!   `T+1` price rows yield `T` excess returns.
//! * **Return matrices** — same layout but the values are pre-computed
//!   excess returns and a risk-free column is not allowed.
//! * **Weight files** — `asset_id,weight` rows sorted by descending
//!   weight magnitude.
//!
//! All numeric output uses the shortest decimal representation that
//! parses back to the identical `f64`, so emitting and re-ingesting a
//! matrix reproduces it exactly.

use std::path::Path;

use nalgebra::DMatrix;
use sparsemv_core::ReturnMatrix;

use crate::error::CliError;

/// Header of the optional risk-free-rate column in price tables.
pub const RISK_FREE_COLUMN: &str = "RISK_FREE";

/// A parsed price table: `T+1` dated price rows for `N` assets plus the
/// `T` per-period risk-free rates (zero when the input had no
/// [`RISK_FREE_COLUMN`]).
///
/// The rate stored at index `k` applies to the holding period from date
/// `k` to date `k+1`; the rate quoted on the final price row has no
/// following period and is dropped.
#[derive(Debug, Clone)]
pub struct PriceTable {
    /// Date label per row, strictly increasing.
    pub dates: Vec<String>,
    /// Asset identifier per price column.
    pub asset_ids: Vec<String>,
    /// Prices, one row per date, one column per asset; strictly positive.
    pub prices: DMatrix<f64>,
    /// Risk-free rate per holding period (length `dates.len() - 1`).
    pub risk_free: Vec<f64>,
}

impl PriceTable {
    /// Validates shape, positivity, and date ordering.
    pub fn new(
        dates: Vec<String>,
        asset_ids: Vec<String>,
        prices: DMatrix<f64>,
        risk_free: Vec<f64>,
    ) -> Result<Self, CliError> {
        if dates.len() < 2 {
            return Err(CliError::Data(format!(
                "price table needs at least 2 rows to form one return, found {}",
                dates.len()
            )));
        }
        if asset_ids.is_empty() {
            return Err(CliError::Data("price table has no asset columns".into()));
        }
        if prices.nrows() != dates.len() || prices.ncols() != asset_ids.len() {
            return Err(CliError::Data(format!(
                "price matrix is {}x{} but there are {} dates and {} assets",
                prices.nrows(),
                prices.ncols(),
                dates.len(),
                asset_ids.len()
            )));
        }
        if risk_free.len() != dates.len() - 1 {
            return Err(CliError::Data(format!(
                "risk-free series has {} entries, need one per holding period ({})",
                risk_free.len(),
                dates.len() - 1
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &asset_ids {
            if !seen.insert(id.as_str()) {
                return Err(CliError::Data(format!("duplicate asset column '{id}'")));
            }
        }
        for k in 1..dates.len() {
            if dates[k - 1].as_str() >= dates[k].as_str() {
                return Err(CliError::Data(format!(
                    "dates must be strictly increasing, but '{}' is followed by '{}'",
                    dates[k - 1],
                    dates[k]
                )));
            }
        }
        for r in 0..prices.nrows() {
            for c in 0..prices.ncols() {
                let v = prices[(r, c)];
                if !v.is_finite() {
                    return Err(CliError::Data(format!(
                        "non-finite price at date '{}', asset '{}'",
                        dates[r], asset_ids[c]
                    )));
                }
                if v <= 0.0 {
                    return Err(CliError::Data(format!(
                        "non-positive price {v} at date '{}', asset '{}'",
                        dates[r], asset_ids[c]
                    )));
                }
            }
        }
        for (k, v) in risk_free.iter().enumerate() {
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "non-finite risk-free rate for the period starting '{}'",
                    dates[k]
                )));
            }
        }
        Ok(Self {
            dates,
            asset_ids,
            prices,
            risk_free,
        })
    }

    /// Number of holding periods (`dates.len() - 1`).
    pub fn periods(&self) -> usize {
        self.dates.len() - 1
    }
}

/// Simple returns net of the risk-free rate:
/// `r[k][n] = (s[k+1][n] - s[k][n]) / s[k][n] - rf[k]`.
///
/// The return realized over the period ending at date `k+1` is labeled
/// with that end date.
pub fn compute_excess_returns(table: &PriceTable) -> Result<ReturnMatrix, CliError> {
    let t = table.periods();
    let n = table.asset_ids.len();
    let mut data = DMatrix::zeros(t, n);
    for k in 0..t {
        for c in 0..n {
            let prev = table.prices[(k, c)];
            let next = table.prices[(k + 1, c)];
            data[(k, c)] = (next - prev) / prev - table.risk_free[k];
        }
    }
    ReturnMatrix::new(data, table.asset_ids.clone(), table.dates[1..].to_vec())
        .map_err(CliError::from)
}

/// Reads and validates a CSV price table (see [`PriceTable`]).
pub fn read_price_table(path: &Path) -> Result<PriceTable, CliError> {
    let (labels, headers, columns) = read_table(path)?;
    let mut risk_free_raw: Option<Vec<f64>> = None;
    let mut asset_ids = Vec::new();
    let mut price_cols: Vec<Vec<f64>> = Vec::new();
    for (header, column) in headers.into_iter().zip(columns) {
        if header == RISK_FREE_COLUMN {
            if risk_free_raw.is_some() {
                return Err(CliError::Data(format!(
                    "'{}' has more than one {RISK_FREE_COLUMN} column",
                    path.display()
                )));
            }
            risk_free_raw = Some(column);
        } else {
            asset_ids.push(header);
            price_cols.push(column);
        }
    }
    let rows = labels.len();
    let risk_free = match risk_free_raw {
        // Drop the rate quoted on the final row: it has no following period.
        Some(mut rf) => {
            rf.truncate(rows.saturating_sub(1));
            rf
        }
        None => vec![0.0; rows.saturating_sub(1)],
    };
    let prices = DMatrix::from_fn(rows, price_cols.len(), |r, c| price_cols[c][r]);
    PriceTable::new(labels, asset_ids, prices, risk_free)
}

/// Reads a CSV of pre-computed excess returns: first column a period
/// label, one column per asset. A [`RISK_FREE_COLUMN`] is rejected
/// because excess returns are already net of the risk-free rate.
pub fn read_returns(path: &Path) -> Result<ReturnMatrix, CliError> {
    let (labels, headers, columns) = read_table(path)?;
    if headers.iter().any(|h| h == RISK_FREE_COLUMN) {
        return Err(CliError::Data(format!(
            "'{}' contains a {RISK_FREE_COLUMN} column, which is not allowed in \
             returns mode: excess returns are already net of the risk-free rate",
            path.display()
        )));
    }
    if headers.is_empty() {
        return Err(CliError::Data(format!(
            "'{}' has no asset columns",
            path.display()
        )));
    }
    let data = DMatrix::from_fn(labels.len(), columns.len(), |r, c| columns[c][r]);
    ReturnMatrix::new(data, headers, labels).map_err(CliError::from)
}

/// Writes a return matrix as CSV (`date` column plus one column per
/// asset). [`read_returns`] reproduces the matrix exactly.
pub fn write_returns(path: &Path, returns: &ReturnMatrix) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(returns.asset_ids().iter().cloned());
    write_record(&mut writer, path, &header)?;
    for k in 0..returns.periods() {
        let mut row = vec![returns.period_ids()[k].clone()];
        for c in 0..returns.assets() {
            row.push(format_f64(returns.data()[(k, c)]));
        }
        write_record(&mut writer, path, &row)?;
    }
    finish_writer(writer, path)
}

/// Writes portfolio weights as `asset_id,weight` rows covering every
/// asset, sorted by descending weight magnitude (ties keep input order).
pub fn write_weights(path: &Path, asset_ids: &[String], weights: &[f64]) -> Result<(), CliError> {
    debug_assert_eq!(asset_ids.len(), weights.len());
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].abs().total_cmp(&weights[a].abs()));
    let mut writer = csv_writer(path)?;
    write_record(&mut writer, path, &["asset_id".into(), "weight".into()])?;
    for i in order {
        write_record(
            &mut writer,
            path,
            &[asset_ids[i].clone(), format_f64(weights[i])],
        )?;
    }
    finish_writer(writer, path)
}

/// Reads a weight file written by [`write_weights`], preserving row
/// order.
pub fn read_weights(path: &Path) -> Result<Vec<(String, f64)>, CliError> {
    let mut reader = csv_reader(path)?;
    let mut out = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::Data(format!("'{}' row {}: {e}", path.display(), k + 2)))?;
        if record.len() != 2 {
            return Err(CliError::Data(format!(
                "'{}' row {}: expected 2 fields (asset_id, weight), found {}",
                path.display(),
                k + 2,
                record.len()
            )));
        }
        let weight = parse_f64(&record[1], path, &record[0], "weight")?;
        out.push((record[0].to_string(), weight));
    }
    Ok(out)
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

fn parse_f64(field: &str, path: &Path, row: &str, column: &str) -> Result<f64, CliError> {
    field.parse::<f64>().map_err(|_| {
        CliError::Data(format!(
            "'{}': cannot parse '{field}' as a number at row '{row}', column '{column}'",
            path.display()
        ))
    })
}

/// Row labels, value-column headers, and per-column values of a labeled
/// CSV table.
type LabeledTable = (Vec<String>, Vec<String>, Vec<Vec<f64>>);

/// Reads a labeled CSV table: returns (row labels, value-column headers,
/// value columns). The first header cell names the label column and may
/// be anything; every other column must be numeric throughout.
fn read_table(path: &Path) -> Result<LabeledTable, CliError> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("'{}': {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < 2 {
        return Err(CliError::Data(format!(
            "'{}' needs a label column plus at least one value column, found {} columns",
            path.display(),
            headers.len()
        )));
    }
    let value_headers: Vec<String> = headers[1..].to_vec();
    let mut labels = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); value_headers.len()];
    for (k, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| CliError::Data(format!("'{}' row {}: {e}", path.display(), k + 2)))?;
        let label = record.get(0).unwrap_or_default().to_string();
        for (c, column) in columns.iter_mut().enumerate() {
            let field = record.get(c + 1).ok_or_else(|| {
                CliError::Data(format!(
                    "'{}' row '{label}': missing field for column '{}'",
                    path.display(),
                    value_headers[c]
                ))
            })?;
            column.push(parse_f64(field, path, &label, &value_headers[c])?);
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(CliError::Data(format!(
            "'{}' has a header but no data rows",
            path.display()
        )));
    }
    Ok((labels, value_headers, columns))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read '{}': {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot write '{}': {e}", path.display())))
}

fn write_record(
    writer: &mut csv::Writer<std::fs::File>,
    path: &Path,
    fields: &[String],
) -> Result<(), CliError> {
    writer
        .write_record(fields)
        .map_err(|e| CliError::Data(format!("cannot write '{}': {e}", path.display())))
}

fn finish_writer(mut writer: csv::Writer<std::fs::File>, path: &Path) -> Result<(), CliError> {
    writer
        .flush()
        .map_err(|e| CliError::data_io(format!("cannot flush '{}'", path.display()), e))
}
