//! Validated univariate samples and the moment statistics built on them.

use crate::error::{Error, Result};

/// A non-empty univariate sample with all observations finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Wraps `values`, rejecting empty input and non-finite observations.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Domain(format!(
                "non-finite observation {v} at index {i}"
            )));
        }
        Ok(Sample { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Central moment m_r = (1/n) Σ (x_i − x̄)^r.
    pub fn central_moment(&self, order: u32) -> f64 {
        let mean = self.mean();
        let n = self.len() as f64;
        self.values
            .iter()
            .map(|x| (x - mean).powi(order as i32))
            .sum::<f64>()
            / n
    }

    /// Sample variance with divisor n (the second central moment).
    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sample median (mean of the two middle order statistics for even n).
    pub fn median(&self) -> f64 {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        median_of_sorted(&sorted)
    }

    /// Median absolute deviation about the median.
    pub fn mad(&self) -> f64 {
        let med = self.median();
        let mut devs: Vec<f64> = self.values.iter().map(|x| (x - med).abs()).collect();
        devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        median_of_sorted(&devs)
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
