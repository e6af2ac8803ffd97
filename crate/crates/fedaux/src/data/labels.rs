//! Auxiliary labels from quantile binning of raw columns.
//!
//! Bin boundaries are fitted on the training split only and then frozen,
//! so validation/test values are binned (and clamped) against the train
//! quantiles.

use crate::error::{Error, Result};

/// Frozen quantile boundaries. A value's bin is the number of boundaries
/// at or below it, which clamps out-of-range values to the edge bins.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBins {
    boundaries: Vec<f64>,
}

impl QuantileBins {
    /// Fits `n_bins` bins to `values` (the training column).
    pub fn fit(values: &[f64], n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::config("quantile binning needs at least 2 bins"));
        }
        if values.len() < n_bins {
            return Err(Error::config(format!(
                "{} values cannot fill {} bins",
                values.len(),
                n_bins
            )));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite column values"));
        if sorted.first() == sorted.last() {
            return Err(Error::config(
                "constant column cannot be quantile-binned; use fewer bins or drop the task",
            ));
        }
        let n = sorted.len();
        let boundaries: Vec<f64> = (1..n_bins).map(|k| sorted[n * k / n_bins]).collect();
        if boundaries.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config(
                "tied quantile boundaries; use fewer bins for this column",
            ));
        }
        Ok(Self { boundaries })
    }

    pub fn n_bins(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn assign(&self, value: f64) -> usize {
        self.boundaries.iter().filter(|b| **b <= value).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tertiles_of_one_through_nine() {
        let values: Vec<f64> = (1..=9).map(|v| v as f64).collect();
        let bins = QuantileBins::fit(&values, 3).unwrap();
        for v in 1..=3 {
            assert_eq!(bins.assign(v as f64), 0);
        }
        for v in 4..=6 {
            assert_eq!(bins.assign(v as f64), 1);
        }
        for v in 7..=9 {
            assert_eq!(bins.assign(v as f64), 2);
        }
    }

    #[test]
    fn median_split_of_two_values() {
        let bins = QuantileBins::fit(&[1.0, 2.0], 2).unwrap();
        assert_eq!(bins.assign(1.0), 0);
        assert_eq!(bins.assign(2.0), 1);
    }

    #[test]
    fn out_of_range_values_clamp_to_edge_bins() {
        let values: Vec<f64> = (1..=9).map(|v| v as f64).collect();
        let bins = QuantileBins::fit(&values, 3).unwrap();
        assert_eq!(bins.assign(-100.0), 0);
        assert_eq!(bins.assign(100.0), 2);
    }

    #[test]
    fn constant_column_is_a_config_error() {
        let err = QuantileBins::fit(&[5.0; 10], 2).unwrap_err();
        assert!(err.to_string().contains("fewer bins"), "{}", err);
    }

    #[test]
    fn fit_ignores_later_data() {
        let train: Vec<f64> = (1..=9).map(|v| v as f64).collect();
        let bins = QuantileBins::fit(&train, 3).unwrap();
        let mut extended = train.clone();
        extended.extend([100.0, 200.0, 300.0]);
        // refitting on extended data would move boundaries; the frozen fit
        // must not
        let frozen = bins.boundaries().to_vec();
        let refit = QuantileBins::fit(&extended, 3).unwrap();
        assert_ne!(refit.boundaries(), frozen.as_slice());
        assert_eq!(bins.boundaries(), frozen.as_slice());
    }

    #[test]
    fn bin_populations_balanced_on_distinct_values() {
        let values: Vec<f64> = (0..103).map(|v| v as f64 * 1.7).collect();
        let bins = QuantileBins::fit(&values, 4).unwrap();
        let mut counts = vec![0usize; 4];
        for v in &values {
            counts[bins.assign(*v)] += 1;
        }
        let max = *counts.iter().max().unwrap();
        let min = *counts.iter().min().unwrap();
        assert!(max - min <= 1, "{:?}", counts);
    }
}
