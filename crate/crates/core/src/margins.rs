//! Empirical margins and pseudo-observations.
//!
//! Copula fits use the rescaled ranks `rank / (R + 1)`, which keep every point
//! strictly inside the unit square so log-densities stay finite. The plain
//! empirical cdf (`rank / R` at the sample points) is kept for diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous step function `y -> #{values <= y} / R`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, y: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= y);
        count as f64 / self.sorted.len() as f64
    }
}

pub fn ecdf(values: &[f64]) -> Result<EmpiricalCdf> {
    if values.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("ecdf input must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf { sorted })
}

/// 1-based ranks with ties replaced by their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j (0-based) share ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Epoch-aligned pairs of margin-transformed observations in `(0, 1)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PseudoSample {
    /// Wraps already-uniform pairs, checking they lie in the open unit square.
    pub fn from_uniform(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                left: u.len(),
                right: v.len(),
            });
        }
        if u.iter().chain(&v).any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Validation(
                "pseudo-observations must lie strictly inside (0, 1)".into(),
            ));
        }
        Ok(Self { u, v })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.u.iter().copied().zip(self.v.iter().copied())
    }
}

pub fn pseudo_observations(x: &[f64], y: &[f64]) -> Result<PseudoSample> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "pseudo-observation input must be finite".into(),
        ));
    }
    let scale = 1.0 / (x.len() as f64 + 1.0);
    let u = average_ranks(x).into_iter().map(|r| r * scale).collect();
    let v = average_ranks(y).into_iter().map(|r| r * scale).collect();
    Ok(PseudoSample { u, v })
}
