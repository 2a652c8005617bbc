#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scop_core::copula::{tau_of_theta, theta_from_rank_coherence, Copula, Family};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite rule on (0, 1) with panels refined geometrically toward both ends.
pub fn graded_rule(per_panel: usize, levels: i32) -> (Vec<f64>, Vec<f64>) {
    let mut cuts = vec![0.0];
    for k in (1..=levels).rev() {
        cuts.push(0.5f64.powi(k + 1));
    }
    let inner: Vec<f64> = (1..=8).map(|j| 0.25 + 0.0625 * j as f64).collect();
    cuts.extend(&inner[..7]);
    for k in 1..=levels {
        cuts.push(1.0 - 0.5f64.powi(k + 1));
    }
    cuts.push(1.0);
    let (gx, gw) = gauss_legendre(per_panel);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for p in cuts.windows(2) {
        let (a, b) = (p[0], p[1]);
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(0.5 * (a + b) + 0.5 * (b - a) * x);
            ws.push(0.5 * (b - a) * w);
        }
    }
    (xs, ws)
}

/// Three parameter settings per family (the independence copula has none).
pub fn parameter_grid() -> Vec<Copula> {
    vec![
        Copula::Independent,
        Copula::Gaussian { rho: -0.5 },
        Copula::Gaussian { rho: 0.3 },
        Copula::Gaussian { rho: 0.8 },
        Copula::StudentT { rho: 0.5, nu: 2.5 },
        Copula::StudentT { rho: -0.3, nu: 5.0 },
        Copula::StudentT { rho: 0.8, nu: 10.0 },
        Copula::Clayton { theta: 0.5 },
        Copula::Clayton { theta: 2.0 },
        Copula::Clayton { theta: 5.0 },
        Copula::Gumbel { theta: 1.2 },
        Copula::Gumbel { theta: 2.0 },
        Copula::Gumbel { theta: 4.0 },
        Copula::Frank { theta: -5.0 },
        Copula::Frank { theta: 2.0 },
        Copula::Frank { theta: 15.0 },
        Copula::Joe { theta: 1.3 },
        Copula::Joe { theta: 2.0 },
        Copula::Joe { theta: 4.0 },
    ]
}

pub fn frechet_violation(c: &Copula) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        for j in 0..50 {
            let u = (i as f64 + 0.5) / 50.0;
            let v = (j as f64 + 0.5) / 50.0;
            let x = c.cdf(u, v);
            worst = worst.max((u + v - 1.0).max(0.0) - x).max(x - u.min(v));
        }
    }
    worst
}

pub fn boundary_violation(c: &Copula) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        worst = worst
            .max((c.cdf(t, 1.0) - t).abs())
            .max((c.cdf(1.0, t) - t).abs())
            .max(c.cdf(t, 0.0).abs())
            .max(c.cdf(0.0, t).abs());
    }
    // near the edges as well
    for &t in &[1e-9, 1e-4, 0.5, 1.0 - 1e-4] {
        worst = worst
            .max((c.cdf(t, 1.0 - 1e-13) - t).abs())
            .max((c.cdf(1.0 - 1e-13, t) - t).abs());
    }
    worst
}

/// Most negative rectangle volume over random rectangles.
pub fn min_rectangle_volume(c: &Copula, rectangles: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..rectangles {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (p, q): (f64, f64) = (rng.random(), rng.random());
        let (u1, u2) = (a.min(b), a.max(b));
        let (v1, v2) = (p.min(q), p.max(q));
        let vol = c.cdf(u2, v2) - c.cdf(u1, v2) - c.cdf(u2, v1) + c.cdf(u1, v1);
        worst = worst.min(vol);
    }
    worst
}

pub fn density_integral(c: &Copula) -> f64 {
    let (xs, ws) = graded_rule(12, 30);
    let mut total = 0.0;
    for (u, wu) in xs.iter().zip(&ws) {
        for (v, wv) in xs.iter().zip(&ws) {
            total += wu * wv * c.log_density(*u, *v).unwrap().exp();
        }
    }
    total
}

pub const ROUNDTRIP_TAUS: [f64; 18] = [
    0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9,
];

pub fn roundtrip_error(family: Family) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in &ROUNDTRIP_TAUS {
        let theta = theta_from_rank_coherence(family, t).unwrap();
        let nu = (family == Family::StudentT).then_some(4.0);
        worst = worst.max((tau_of_theta(family, theta, nu).unwrap() - t).abs());
    }
    worst
}

/// Naive O(n^2) Kendall tau-a.
pub fn naive_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).partial_cmp(&0.0).unwrap() as i64;
            let b = (y[i] - y[j]).partial_cmp(&0.0).unwrap() as i64;
            s += a * b;
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}
