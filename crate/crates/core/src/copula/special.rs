//! Univariate distribution functions and quadrature used by the copula families.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta::{beta_reg, inv_beta_reg};
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{digamma, ln_gamma};

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal quantile, refined by one Newton step on the lower tail.
pub fn norm_quantile(p: f64) -> f64 {
    if p > 0.5 {
        return -norm_quantile(1.0 - p);
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() || p == 0.5 {
        return x;
    }
    let dens = norm_log_pdf(x).exp();
    if dens > 0.0 {
        x - (norm_cdf(x) - p) / dens
    } else {
        x
    }
}

pub fn norm_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// Student-t cdf with `nu` degrees of freedom.
pub fn t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x * x));
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn t_log_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

/// Student-t quantile: incomplete-beta inversion polished by Newton steps on
/// the lower tail, where the cdf is evaluated without cancellation.
pub fn t_quantile(p: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -t_quantile(1.0 - p, nu);
    }
    let y = inv_beta_reg(0.5 * nu, 0.5, 2.0 * p);
    let mut x = -(nu * (1.0 - y) / y).sqrt();
    if !x.is_finite() {
        x = norm_quantile(p);
    }
    for _ in 0..4 {
        let f = t_cdf(x, nu) - p;
        let dens = t_log_pdf(x, nu).exp();
        if dens <= 0.0 || !dens.is_finite() {
            break;
        }
        let step = f / dens;
        let next = x - step;
        if !next.is_finite() || next >= 0.0 {
            break;
        }
        x = next;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        // never ask for more than rounding allows
        let half = (0.5 * tol).max(f64::EPSILON * (left + right).abs());
        step(f, a, m, fa, flm, fm, left, half, depth - 1) + step(f, m, b, fm, frm, fb, right, half, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature: the interval with the
/// largest error estimate is bisected until the summed estimate drops below
/// `tol` or the interval budget is spent.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    const MAX_INTERVALS: usize = 2000;
    let (val, err) = gk15(f, a, b);
    let mut parts = vec![(a, b, val, err)];
    let mut total_err = err;
    while total_err > tol && parts.len() < MAX_INTERVALS {
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, v, e) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // cannot refine further; accept this piece as is
            total_err -= e;
            parts.push((lo, hi, v, 0.0));
            continue;
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        total_err += e1 + e2 - e;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// First Debye function `D1(x) = (1/x) int_0^x t / (e^t - 1) dt` for `x > 0`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    let (lo, hi) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
    let integral = adaptive_simpson(&integrand, lo, hi, 1e-13);
    if x > 0.0 {
        integral / x
    } else {
        // int_0^x for x < 0 is -int_x^0
        -integral / x
    }
}

/// Kendall's tau of the Frank copula, `1 - (4/theta) (1 - D1(theta))`.
pub fn frank_tau(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let a = theta.abs();
    let tau = if a < 1e-3 {
        a / 9.0 - a.powi(3) / 900.0
    } else {
        1.0 - 4.0 / a * (1.0 - debye1(a))
    };
    tau.copysign(theta)
}

// psi'(2), psi''(2), psi'''(2)
const TRIGAMMA_2: f64 = PI * PI / 6.0 - 1.0;
const TETRAGAMMA_2: f64 = -0.404_113_806_319_188_6;
const PENTAGAMMA_2: f64 = 0.493_939_402_266_829_1;

/// Kendall's tau of the Joe copula.
///
/// Uses `1 + 2/(2 - theta) (psi(2) - psi(1 + 2/theta))`, which is the closed
/// form of `1 + (4/theta^2) int_0^1 t ln(t) (1-t)^{2(1-theta)/theta} dt`. Near
/// `theta = 2` the ratio is replaced by its Taylor expansion.
pub fn joe_tau(theta: f64) -> f64 {
    if theta <= 1.0 {
        return 0.0;
    }
    let eps = 2.0 / theta - 1.0;
    if eps.abs() < 1e-3 {
        let series = TRIGAMMA_2 + eps * TETRAGAMMA_2 / 2.0 + eps * eps * PENTAGAMMA_2 / 6.0;
        return 1.0 - 2.0 / theta * series;
    }
    1.0 + 2.0 / (2.0 - theta) * (digamma(2.0) - digamma(1.0 + 2.0 / theta))
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
