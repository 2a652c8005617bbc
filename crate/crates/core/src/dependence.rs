//! Spectral dependence measures: coherence pooled over epochs, per-epoch band
//! coherence, Kendall rank-based coherence and the Kendall independence test.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceKind {
    Coherence,
    BandCoherence,
    RankCoherence,
}

/// Where along the frequency axis an estimate was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySelector {
    Index(usize),
    Band { lower_hz: f64, upper_hz: f64 },
}

/// A dependence value plus the channels, frequency and epochs it came from.
/// Channels and epoch ranges are 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceEstimate {
    pub kind: DependenceKind,
    pub value: f64,
    pub channels: (usize, usize),
    pub frequency: FrequencySelector,
    pub epochs: (usize, usize),
    /// Second epoch range when two periods of recording are paired.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_epochs: Option<(usize, usize)>,
}

impl DependenceEstimate {
    pub fn in_range(&self) -> bool {
        match self.kind {
            DependenceKind::Coherence | DependenceKind::BandCoherence => (0.0..=1.0).contains(&self.value),
            DependenceKind::RankCoherence => (-1.0..=1.0).contains(&self.value),
        }
    }
}

fn coherence_ratio(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let cross: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    let pa: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let pb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    if pa == 0.0 || pb == 0.0 {
        return Err(Error::UndefinedCoherence);
    }
    // Rounding can push a proportional pair a hair above one.
    Ok((cross.norm_sqr() / (pa * pb)).min(1.0))
}

/// `|sum_r f_l f_l'^*|^2 / (sum_r |f_l|^2 sum_s |f_l'|^2)` over epochs at one frequency.
pub fn coherence_over_epochs(f_l: &[Complex64], f_m: &[Complex64]) -> Result<f64> {
    if f_l.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: f_l.len(),
        });
    }
    coherence_ratio(f_l, f_m)
}

/// The same ratio taken over the frequencies of a band within one epoch.
pub fn band_coherence_per_epoch(f_l: &[Complex64], f_m: &[Complex64]) -> Result<f64> {
    if f_l.len() < 2 {
        return Err(Error::Validation(format!(
            "band coherence needs at least 2 frequency indices, got {}",
            f_l.len()
        )));
    }
    coherence_ratio(f_l, f_m)
}

/// `C - D` (concordant minus discordant pairs) and the pair count `R(R-1)/2`.
///
/// Pairs tied in either coordinate count as neither. Runs in `O(R log R)`:
/// sort by `(x, y)`, then count inversions of `y` with a merge sort, and
/// correct for ties (Knight's method).
pub fn concordance(x: &[f64], y: &[f64]) -> Result<(i64, i64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFew { needed: 2, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation("rank coherence input must be finite".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: i64| t * (t - 1) / 2;
    let mut x_ties = 0i64;
    let mut joint_ties = 0i64;
    let mut run_x = 1i64;
    let mut run_xy = 1i64;
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                joint_ties += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            x_ties += pairs(run_x);
            joint_ties += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    x_ties += pairs(run_x);
    joint_ties += pairs(run_xy);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut scratch = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut scratch);

    let mut y_ties = 0i64;
    let mut run_y = 1i64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            y_ties += pairs(run_y);
            run_y = 1;
        }
    }
    y_ties += pairs(run_y);

    let total = pairs(n as i64);
    Ok((total - x_ties - y_ties + joint_ties - 2 * swaps, total))
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], scratch: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        merge_count(left, sl) + merge_count(right, sr)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            scratch[k] = v[j];
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            scratch[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&scratch[..n]);
    swaps
}

/// Kendall rank-based coherence (tau-a) between two epoch-aligned magnitude vectors.
pub fn rank_coherence(delta_l: &[f64], delta_m: &[f64]) -> Result<f64> {
    let (num, total) = concordance(delta_l, delta_m)?;
    Ok(num as f64 / total as f64)
}

/// Rank coherence within one epoch, pairing magnitudes by frequency index over a band.
pub fn rank_coherence_band(delta_l: &[f64], delta_m: &[f64]) -> Result<f64> {
    if delta_l.len() < 2 {
        return Err(Error::Validation(format!(
            "band rank coherence needs at least 2 frequency indices, got {}",
            delta_l.len()
        )));
    }
    rank_coherence(delta_l, delta_m)
}

/// Below this many epochs the normal approximation is flagged as unreliable.
pub const MIN_EPOCHS_FOR_NORMAL_APPROX: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub epochs: usize,
    pub rank_coherence: f64,
    /// Set when `epochs` is too small for the normal approximation.
    pub small_sample: bool,
}

impl IndependenceTestResult {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Standard normal cdf.
pub fn std_normal_cdf(z: f64) -> f64 {
    crate::copula::special::norm_cdf(z)
}

/// Two-sided test of independence from a Kendall coefficient over `epochs` pairs.
///
/// Under independence `tau * sqrt(9 R (R-1) / (2 (2R+5)))` is asymptotically
/// standard normal.
pub fn independence_test(rank_coherence: f64, epochs: usize) -> Result<IndependenceTestResult> {
    if !(-1.0..=1.0).contains(&rank_coherence) {
        return Err(Error::Validation(format!(
            "rank coherence {rank_coherence} outside [-1, 1]"
        )));
    }
    if epochs < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: epochs,
        });
    }
    let r = epochs as f64;
    let statistic = rank_coherence * (9.0 * r * (r - 1.0) / (2.0 * (2.0 * r + 5.0))).sqrt();
    let p_value = (2.0 * (1.0 - std_normal_cdf(statistic.abs()))).clamp(0.0, 1.0);
    Ok(IndependenceTestResult {
        statistic,
        p_value,
        epochs,
        rank_coherence,
        small_sample: epochs < MIN_EPOCHS_FOR_NORMAL_APPROX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(x: &[f64], y: &[f64]) -> i64 {
        let mut s = 0i64;
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let p = (x[i] - x[j]) * (y[i] - y[j]);
                if p > 0.0 {
                    s += 1;
                } else if p < 0.0 {
                    s -= 1;
                }
            }
        }
        s
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coherence_examples() {
        let f = vec![c(1.0, 2.0), c(-0.5, 0.3), c(2.0, -1.0)];
        let g: Vec<Complex64> = f.iter().map(|z| z * c(0.3, -1.7)).collect();
        assert!((coherence_over_epochs(&f, &g).unwrap() - 1.0).abs() < 1e-12);

        let a = [c(1.0, 0.0), c(0.0, 1.0)];
        let b = [c(1.0, 0.0), c(0.0, -1.0)];
        assert!(coherence_over_epochs(&a, &b).unwrap().abs() < 1e-15);

        let zero = [c(0.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            coherence_over_epochs(&a, &zero),
            Err(Error::UndefinedCoherence)
        ));
    }

    #[test]
    fn band_coherence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f: Vec<Complex64> = (0..4).map(|_| c(rng.random(), rng.random())).collect();
        let g: Vec<Complex64> = (0..4).map(|_| c(rng.random(), rng.random())).collect();
        assert!((band_coherence_per_epoch(&f, &f).unwrap() - 1.0).abs() < 1e-12);
        assert!(band_coherence_per_epoch(&f[..1], &g[..1]).is_err());
        let mut cross = c(0.0, 0.0);
        let (mut pf, mut pg) = (0.0, 0.0);
        for i in 0..4 {
            cross += f[i] * g[i].conj();
            pf += f[i].re * f[i].re + f[i].im * f[i].im;
            pg += g[i].re * g[i].re + g[i].im * g[i].im;
        }
        let oracle = (cross.re * cross.re + cross.im * cross.im) / (pf * pg);
        assert!((band_coherence_per_epoch(&f, &g).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn rank_coherence_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert_eq!(rank_coherence(&x, &y).unwrap(), 1.0);
        assert_eq!(rank_coherence(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let k = rank_coherence(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-15);
        assert!(rank_coherence(&[1.0], &[1.0]).is_err());
        assert!(rank_coherence(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn band_variant_mirrors_epoch_variant() {
        assert_eq!(
            rank_coherence_band(&[0.1, 0.4, 0.9], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        assert_eq!(
            rank_coherence_band(&[0.1, 0.4, 0.9], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        let k = rank_coherence_band(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-15);
        assert!(rank_coherence_band(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn fast_count_equals_naive_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let n = rng.random_range(2..120);
            let levels = rng.random_range(2..10) as f64;
            let x: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * levels).floor()).collect();
            let y: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * levels).floor()).collect();
            assert_eq!(concordance(&x, &y).unwrap().0, naive(&x, &y));
        }
    }

    #[test]
    fn independence_test_points() {
        let t = independence_test(0.041, 600).unwrap();
        assert!((t.statistic - 1.5023).abs() < 1e-3, "{}", t.statistic);
        assert!((t.p_value - 0.13).abs() < 0.01);
        assert_eq!(independence_test(0.0, 50).unwrap().p_value, 1.0);
        assert!(independence_test(0.116, 300).unwrap().p_value < 0.05);
        assert!(independence_test(0.5, 6).unwrap().small_sample);
    }

    proptest! {
        #[test]
        fn coherence_bounded_and_scale_free(
            parts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 2..40),
            sr in 0.1f64..3.0, si in -3.0f64..3.0,
        ) {
            let a: Vec<Complex64> = parts.iter().map(|p| c(p.0, p.1)).collect();
            let b: Vec<Complex64> = parts.iter().map(|p| c(p.2, p.3)).collect();
            let k = coherence_over_epochs(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&k));
            let scaled: Vec<Complex64> = a.iter().map(|z| z * c(sr, si)).collect();
            let k2 = coherence_over_epochs(&scaled, &b).unwrap();
            prop_assert!((k - k2).abs() < 1e-12);
        }

        #[test]
        fn rank_coherence_rank_invariant_and_antisymmetric(
            xs in prop::collection::vec(0.0f64..10.0, 2..80),
            ys in prop::collection::vec(0.0f64..10.0, 80),
        ) {
            let ys = &ys[..xs.len()];
            let k = rank_coherence(&xs, ys).unwrap();
            let ex: Vec<f64> = xs.iter().map(|v| v.ln_1p()).collect();
            let cube: Vec<f64> = ys.iter().map(|v| v * v * v + 2.0).collect();
            prop_assert_eq!(k, rank_coherence(&ex, &cube).unwrap());
            let neg: Vec<f64> = ys.iter().map(|v| -v).collect();
            prop_assert_eq!(-k, rank_coherence(&xs, &neg).unwrap());
        }
    }
}
