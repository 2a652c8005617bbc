mod common;

use common::*;
use scop_core::copula::{
    empirical_copula_surface, sample, tau_of_theta, theta_from_rank_coherence, Copula, Family,
};
use scop_core::dependence::rank_coherence;
use scop_core::margins::PseudoSample;

#[test]
fn frechet_bounds_and_boundaries() {
    for c in parameter_grid() {
        assert!(frechet_violation(&c) <= 1e-9, "{c:?}");
        assert!(boundary_violation(&c) <= 1e-9, "{c:?}");
    }
}

#[test]
fn rectangles_have_nonnegative_volume() {
    for (i, c) in parameter_grid().iter().enumerate() {
        let v = min_rectangle_volume(c, 500, 100 + i as u64);
        assert!(v >= -1e-12, "{c:?}: {v}");
    }
}

#[test]
fn densities_integrate_to_one() {
    for c in parameter_grid() {
        let total = density_integral(&c);
        assert!((total - 1.0).abs() <= 1e-3, "{c:?}: {total}");
    }
}

#[test]
fn density_matches_mixed_difference_of_cdf() {
    let h = 1e-4;
    let pts = [(0.3, 0.6), (0.5, 0.5), (0.8, 0.7), (0.15, 0.2), (0.9, 0.1)];
    for c in parameter_grid() {
        for &(u, v) in &pts {
            let fd = (c.cdf(u + h, v + h) - c.cdf(u + h, v - h) - c.cdf(u - h, v + h) + c.cdf(u - h, v - h))
                / (4.0 * h * h);
            let dens = c.log_density(u, v).unwrap().exp();
            assert!(
                (fd - dens).abs() <= 1e-3 * dens,
                "{c:?} at ({u}, {v}): {fd} vs {dens}"
            );
        }
    }
}

#[test]
fn gaussian_density_is_exchangeable() {
    let c = Copula::Gaussian { rho: 0.73 };
    for &(u, v) in &[(0.1, 0.8), (0.33, 0.34), (0.999, 0.2)] {
        let a = c.log_density(u, v).unwrap();
        let b = c.log_density(v, u).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn independence_density_is_zero() {
    for &(u, v) in &[(0.1, 0.8), (0.5, 0.5)] {
        assert_eq!(Copula::Independent.log_density(u, v).unwrap(), 0.0);
    }
}

#[test]
fn tau_round_trips() {
    for f in Family::ALL.into_iter().skip(1) {
        let err = roundtrip_error(f);
        assert!(err <= 1e-6, "{f}: {err}");
    }
}

#[test]
fn tau_increases_with_theta() {
    let grids: [(Family, Vec<f64>); 4] = [
        (Family::Clayton, (1..60).map(|i| i as f64 * 0.5).collect()),
        (Family::Gumbel, (0..60).map(|i| 1.0 + i as f64 * 0.5).collect()),
        (Family::Frank, (1..60).map(|i| i as f64 * 0.8).collect()),
        (Family::Joe, (0..60).map(|i| 1.0 + i as f64 * 0.75).collect()),
    ];
    for (f, grid) in grids {
        let taus: Vec<f64> = grid.iter().map(|&t| tau_of_theta(f, t, None).unwrap()).collect();
        assert!(taus.windows(2).all(|w| w[1] > w[0]), "{f}");
    }
    assert!(tau_of_theta(Family::Frank, 1e-7, None).unwrap().abs() <= 1e-6);
}

#[test]
fn gumbel_inversion_closed_form() {
    let t = theta_from_rank_coherence(Family::Gumbel, 0.4172).unwrap();
    assert!((t - 1.0 / (1.0 - 0.4172)).abs() < 1e-14);
    assert!((t - 1.716).abs() < 1e-3);
}

fn sample_tau(c: &Copula, n: usize, seed: u64) -> f64 {
    let pts = sample(c, n, seed).unwrap();
    assert!(pts.iter().all(|&(u, v)| u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0));
    let (u, v): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    rank_coherence(&u, &v).unwrap()
}

#[test]
fn sampling_reproduces_kendall_tau() {
    assert!(sample_tau(&Copula::Independent, 100_000, 1).abs() <= 0.01);
    assert!((sample_tau(&Copula::Clayton { theta: 2.0 }, 100_000, 2) - 0.5).abs() <= 0.02);
    let g = Copula::Gaussian { rho: 0.9 };
    let want = std::f64::consts::FRAC_2_PI * 0.9f64.asin();
    assert!((sample_tau(&g, 100_000, 3) - want).abs() <= 0.02);
    for (i, c) in parameter_grid().iter().enumerate() {
        let got = sample_tau(c, 20_000, 50 + i as u64);
        assert!((got - c.kendall_tau()).abs() <= 0.02, "{c:?}: {got}");
    }
}

#[test]
fn sampling_is_seed_deterministic() {
    let c = Copula::Joe { theta: 2.5 };
    assert_eq!(sample(&c, 100, 9).unwrap(), sample(&c, 100, 9).unwrap());
    assert_ne!(sample(&c, 100, 9).unwrap(), sample(&c, 100, 10).unwrap());
}

#[test]
fn empirical_surface_examples() {
    let r = 1000;
    let x: Vec<f64> = (1..=r).map(|i| i as f64 / (r as f64 + 1.0)).collect();
    let comonotone = PseudoSample::from_uniform(x.clone(), x).unwrap();
    let m = 40;
    let s = empirical_copula_surface(&comonotone, m).unwrap();
    let g = s.grid();
    for i in 1..=m {
        for j in 1..=m {
            let want = g[i - 1].min(g[j - 1]);
            assert!((s.at(i, j) - want).abs() <= 1.0 / r as f64 + 1.0 / m as f64);
        }
    }
    assert_eq!(s.at(m, m), 1.0);

    let pts = sample(&Copula::Independent, 2000, 77).unwrap();
    let (u, v): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let ind = PseudoSample::from_uniform(u, v).unwrap();
    let s = empirical_copula_surface(&ind, 25).unwrap();
    let g = s.grid();
    let mut sup: f64 = 0.0;
    for i in 1..=25 {
        for j in 1..=25 {
            sup = sup.max((s.at(i, j) - g[i - 1] * g[j - 1]).abs());
        }
    }
    assert!(sup <= 0.05, "{sup}");
    assert!(s.values.windows(2).all(|w| (0.0..=1.0).contains(&w[0])));
    assert!(empirical_copula_surface(&ind, 1).is_err());
}

#[test]
fn surface_matches_brute_force_count() {
    let pts = sample(&Copula::Frank { theta: 4.0 }, 300, 5).unwrap();
    let (u, v): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let p = PseudoSample::from_uniform(u.clone(), v.clone()).unwrap();
    let m = 7;
    let s = empirical_copula_surface(&p, m).unwrap();
    for i in 1..=m {
        for j in 1..=m {
            let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
            let count = u.iter().zip(&v).filter(|(x, y)| **x <= a && **y <= b).count();
            assert_eq!(s.at(i, j), count as f64 / 300.0);
        }
    }
}
