//! Core data types: labeled return matrices and solved portfolios.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A panel of asset returns: `T` observation periods (rows) by `N` assets
/// (columns), with string labels for both axes.
///
/// All entries must be finite. Labels are carried through estimation and
/// backtesting so that outputs can name assets rather than column indices.
#[derive(Debug, Clone)]
pub struct ReturnMatrix {
    data: DMatrix<f64>,
    asset_ids: Vec<String>,
    period_ids: Vec<String>,
}

impl ReturnMatrix {
    /// Builds a return matrix from raw data and axis labels.
    ///
    /// Fails if the label counts do not match the matrix shape, if either
    /// dimension is zero, if an entry is non-finite, or if asset labels are
    /// not unique.
    pub fn new(
        data: DMatrix<f64>,
        asset_ids: Vec<String>,
        period_ids: Vec<String>,
    ) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput(
                "return matrix must have at least one row and one column".into(),
            ));
        }
        if asset_ids.len() != data.ncols() {
            return Err(Error::DimensionMismatch {
                context: "asset labels",
                expected: data.ncols(),
                actual: asset_ids.len(),
            });
        }
        if period_ids.len() != data.nrows() {
            return Err(Error::DimensionMismatch {
                context: "period labels",
                expected: data.nrows(),
                actual: period_ids.len(),
            });
        }
        if let Some((r, c)) = first_non_finite(&data) {
            return Err(Error::InvalidInput(format!(
                "non-finite return at period '{}', asset '{}'",
                period_ids[r], asset_ids[c]
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &asset_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate asset label '{id}'")));
            }
        }
        Ok(Self {
            data,
            asset_ids,
            period_ids,
        })
    }

    /// Builds a return matrix with generated labels (`asset_0`, ... and
    /// `period_0`, ...). Useful for synthetic data and tests.
    pub fn from_data(data: DMatrix<f64>) -> Result<Self> {
        let asset_ids = (0..data.ncols()).map(|j| format!("asset_{j}")).collect();
        let period_ids = (0..data.nrows()).map(|t| format!("period_{t}")).collect();
        Self::new(data, asset_ids, period_ids)
    }

    /// Builds a return matrix from rows of per-period observations, with
    /// generated labels.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("no observation rows supplied".into()));
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput(
                "observation rows have inconsistent lengths".into(),
            ));
        }
        let data = DMatrix::from_row_iterator(
            rows.len(),
            ncols,
            rows.iter().flat_map(|r| r.iter().copied()),
        );
        Self::from_data(data)
    }

    /// Number of observation periods (rows).
    pub fn periods(&self) -> usize {
        self.data.nrows()
    }

    /// Number of assets (columns).
    pub fn assets(&self) -> usize {
        self.data.ncols()
    }

    /// The underlying `T x N` matrix.
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Asset labels, one per column.
    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    /// Period labels, one per row.
    pub fn period_ids(&self) -> &[String] {
        &self.period_ids
    }

    /// Copies a contiguous range of periods into a new return matrix,
    /// preserving labels. Used by rolling-window backtests.
    pub fn slice_periods(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.periods() || range.start >= range.end {
            return Err(Error::InvalidInput(format!(
                "period range {}..{} out of bounds for {} periods",
                range.start,
                range.end,
                self.periods()
            )));
        }
        let data = self
            .data
            .rows(range.start, range.end - range.start)
            .into_owned();
        Self::new(
            data,
            self.asset_ids.clone(),
            self.period_ids[range.clone()].to_vec(),
        )
    }
}

fn first_non_finite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if !m[(r, c)].is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

/// A solved portfolio: dense weights, the indices of structurally nonzero
/// weights, and (when produced by a certifying solver) an upper bound on the
/// objective gap to the true optimum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Portfolio {
    /// Portfolio weight per asset. Entries off `support` are exactly zero.
    pub weights: Vec<f64>,
    /// Indices `i` with `weights[i] != 0.0`, ascending.
    pub support: Vec<usize>,
    /// Certified bound on `objective(weights) - objective(optimum)`, when
    /// the producing solver established one.
    pub certified_gap: Option<f64>,
}

impl Portfolio {
    /// Builds a portfolio from a dense weight vector, deriving the support
    /// from exact nonzeros.
    pub fn from_dense(weights: &DVector<f64>, certified_gap: Option<f64>) -> Self {
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            weights: weights.iter().copied().collect(),
            support,
            certified_gap,
        }
    }

    /// The weights as an `nalgebra` vector.
    pub fn weight_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }

    /// Number of nonzero positions.
    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn return_matrix_rejects_non_finite_entries() {
        let data = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, f64::NAN, 0.3]);
        let err = ReturnMatrix::from_data(data).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(err.to_string().contains("period_1"));
        assert!(err.to_string().contains("asset_0"));
    }

    #[test]
    fn return_matrix_rejects_duplicate_asset_labels() {
        let data = DMatrix::from_row_slice(1, 2, &[0.1, 0.2]);
        let err =
            ReturnMatrix::new(data, vec!["A".into(), "A".into()], vec!["p0".into()]).unwrap_err();
        assert!(err.to_string().contains("duplicate asset label"));
    }

    #[test]
    fn return_matrix_rejects_mismatched_labels() {
        let data = DMatrix::from_row_slice(1, 2, &[0.1, 0.2]);
        let err = ReturnMatrix::new(data, vec!["A".into()], vec!["p0".into()]).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                context: "asset labels",
                expected: 2,
                actual: 1
            }
        ));
    }

    #[test]
    fn slice_periods_preserves_labels() {
        let data = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let rm = ReturnMatrix::from_data(data).unwrap();
        let sliced = rm.slice_periods(1..3).unwrap();
        assert_eq!(sliced.periods(), 2);
        assert_eq!(sliced.period_ids(), &["period_1", "period_2"]);
        assert_eq!(sliced.data()[(0, 0)], 2.0);
    }

    #[test]
    fn portfolio_support_tracks_exact_nonzeros() {
        let w = DVector::from_column_slice(&[0.0, 1.5, 0.0, -2.0]);
        let p = Portfolio::from_dense(&w, None);
        assert_eq!(p.support, vec![1, 3]);
        assert_eq!(p.support_size(), 2);
        assert_eq!(p.weight_vector(), w);
    }
}
