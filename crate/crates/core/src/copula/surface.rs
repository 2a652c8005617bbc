use serde::{Deserialize, Serialize};

use super::Copula;
use crate::error::{Error, Result};
use crate::margins::PseudoSample;

/// Copula values on the grid `(i/m, j/m)`, `i, j = 1..=m`, stored row-major by `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaSurface {
    pub m: usize,
    pub values: Vec<f64>,
}

impl CopulaSurface {
    /// Value at grid point `(i/m, j/m)` with 1-based `i, j`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(i - 1) * self.m + (j - 1)]
    }

    pub fn grid(&self) -> Vec<f64> {
        (1..=self.m).map(|i| i as f64 / self.m as f64).collect()
    }
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Validation(format!(
            "surface grid size must be at least 2, got {m}"
        )));
    }
    Ok(())
}

pub fn empirical_copula_surface(pseudo: &PseudoSample, m: usize) -> Result<CopulaSurface> {
    check_m(m)?;
    let n = pseudo.len();
    if n < 2 {
        return Err(Error::TooFew { needed: 2, got: n });
    }
    // bucket each point by the first grid cell that contains it, then take a 2-d prefix sum
    let mf = m as f64;
    let cell = |p: f64| {
        let mut i = ((p * mf).ceil() as usize).clamp(1, m);
        // guard against rounding in p * m: keep the exact test p <= i/m
        while i > 1 && p <= (i - 1) as f64 / mf {
            i -= 1;
        }
        while i < m && p > i as f64 / mf {
            i += 1;
        }
        i
    };
    let mut counts = vec![0usize; m * m];
    for (u, v) in pseudo.pairs() {
        counts[(cell(u) - 1) * m + cell(v) - 1] += 1;
    }
    for i in 0..m {
        for j in 0..m {
            let mut c = counts[i * m + j];
            if i > 0 {
                c += counts[(i - 1) * m + j];
            }
            if j > 0 {
                c += counts[i * m + j - 1];
            }
            if i > 0 && j > 0 {
                c -= counts[(i - 1) * m + j - 1];
            }
            counts[i * m + j] = c;
        }
    }
    let values = counts.into_iter().map(|c| c as f64 / n as f64).collect();
    Ok(CopulaSurface { m, values })
}

/// A fitted copula's cdf on the same grid as `empirical_copula_surface`.
pub fn copula_surface(copula: &Copula, m: usize) -> Result<CopulaSurface> {
    check_m(m)?;
    copula.validate()?;
    let mut values = Vec::with_capacity(m * m);
    for i in 1..=m {
        for j in 1..=m {
            values.push(copula.cdf(i as f64 / m as f64, j as f64 / m as f64));
        }
    }
    Ok(CopulaSurface { m, values })
}
