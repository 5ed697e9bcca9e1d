use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// What an estimate vector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateScale {
    /// Stationary probabilities, proportional to `w`.
    Stationary,
    /// Log-scores `theta`.
    LogScore,
}

/// An estimated score vector, its descending order, and the selected top-K set.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    estimate: Vec<f64>,
    scale: EstimateScale,
    order: Vec<usize>,
    top_k: BTreeSet<usize>,
}

/// Indices sorted by descending value; equal values keep ascending index order.
pub fn ordering_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

impl RankingResult {
    pub fn from_estimate(estimate: Vec<f64>, scale: EstimateScale, k: usize) -> Result<Self> {
        let n = estimate.len();
        if k == 0 || k >= n {
            return Err(Error::BadK { k, n });
        }
        let order = ordering_desc(&estimate);
        let top_k = order[..k].iter().copied().collect();
        Ok(RankingResult {
            estimate,
            scale,
            order,
            top_k,
        })
    }

    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    pub fn scale(&self) -> EstimateScale {
        self.scale
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn top_k(&self) -> &BTreeSet<usize> {
        &self.top_k
    }

    pub fn k(&self) -> usize {
        self.top_k.len()
    }
}
