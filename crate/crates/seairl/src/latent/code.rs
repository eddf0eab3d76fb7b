//! The K-dimensional sub-task code: a point on the simplex, one-hot when
//! hard.

use crate::{Error, Result};

pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SubTaskCode(Vec<f64>);

impl SubTaskCode {
    /// Validate simplex membership: non-negative entries summing to one
    /// within `1e-9`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::config("sub-task code must have at least one entry"));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::config("sub-task code entries must be finite and >= 0"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::config(format!(
                "sub-task code sums to {sum}, expected 1 within {SIMPLEX_TOL}"
            )));
        }
        Ok(SubTaskCode(probs))
    }

    pub fn one_hot(index: usize, k: usize) -> Self {
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        SubTaskCode(v)
    }

    pub fn uniform(k: usize) -> Self {
        SubTaskCode(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Argmax with ties broken toward the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Exactly one entry equal to 1?
    pub fn is_hard(&self) -> bool {
        let ones = self.0.iter().filter(|&&p| p == 1.0).count();
        ones == 1 && self.0.iter().all(|&p| p == 0.0 || p == 1.0)
    }
}
