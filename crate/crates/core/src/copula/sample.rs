use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};

use super::special::{norm_cdf, t_cdf};
use super::Copula;
use crate::error::Result;

/// `n` pairs from `copula`, reproducible from `seed`.
pub fn sample(copula: &Copula, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(copula, n, &mut rng)
}

pub fn sample_with<R: Rng + ?Sized>(copula: &Copula, n: usize, rng: &mut R) -> Result<Vec<(f64, f64)>> {
    copula.validate()?;
    let mut out = Vec::with_capacity(n);
    match *copula {
        Copula::Independent => {
            for _ in 0..n {
                out.push((open01(rng), open01(rng)));
            }
        }
        Copula::Gaussian { rho } => {
            let s = (1.0 - rho * rho).sqrt();
            for _ in 0..n {
                let z1: f64 = StandardNormal.sample(rng);
                let e: f64 = StandardNormal.sample(rng);
                let z2 = rho * z1 + s * e;
                out.push((interior(norm_cdf(z1)), interior(norm_cdf(z2))));
            }
        }
        Copula::StudentT { rho, nu } => {
            let s = (1.0 - rho * rho).sqrt();
            let chi = ChiSquared::new(nu).expect("validated degrees of freedom");
            for _ in 0..n {
                let z1: f64 = StandardNormal.sample(rng);
                let e: f64 = StandardNormal.sample(rng);
                let z2 = rho * z1 + s * e;
                let w = (nu / chi.sample(rng)).sqrt();
                out.push((interior(t_cdf(z1 * w, nu)), interior(t_cdf(z2 * w, nu))));
            }
        }
        Copula::Clayton { theta } => {
            for _ in 0..n {
                let u = open01(rng);
                let w = open01(rng);
                // solve dC/du = w for v
                let inner = u.powf(-theta) * (w.powf(-theta / (1.0 + theta)) - 1.0) + 1.0;
                out.push((u, interior(inner.powf(-1.0 / theta))));
            }
        }
        Copula::Frank { theta } => {
            let d = (-theta).exp_m1();
            for _ in 0..n {
                let u = open01(rng);
                let w = open01(rng);
                let a = (-theta * u).exp();
                let v = -(w * d / (w + a * (1.0 - w))).ln_1p() / theta;
                out.push((u, interior(v)));
            }
        }
        Copula::Gumbel { theta } => {
            // Marshall-Olkin: positive stable frailty with index 1/theta
            let alpha = 1.0 / theta;
            for _ in 0..n {
                let m = positive_stable(alpha, rng);
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                let u = (-(e1 / m).powf(alpha)).exp();
                let v = (-(e2 / m).powf(alpha)).exp();
                out.push((interior(u), interior(v)));
            }
        }
        Copula::Joe { theta } => {
            for _ in 0..n {
                let u = open01(rng);
                let w = open01(rng);
                out.push((u, interior(joe_conditional_inverse(u, w, theta))));
            }
        }
    }
    Ok(out)
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

fn interior(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Positive stable variate with Laplace transform `exp(-t^alpha)` (Kanter's method).
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u = PI * open01(rng);
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha);
    a * b
}

/// Solves `dC/du (u, v) = w` for the Joe copula by bisection on `v`.
fn joe_conditional_inverse(u: f64, w: f64, theta: f64) -> f64 {
    let ub = 1.0 - u;
    let a = ub.powf(theta);
    let h = |v: f64| {
        let b = (1.0 - v).powf(theta);
        let s = a + b - a * b;
        ub.powf(theta - 1.0) * (1.0 - b) * s.powf(1.0 / theta - 1.0)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
