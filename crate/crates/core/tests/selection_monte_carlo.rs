use rayon::prelude::*;
use scop_core::copula::{sample, Copula, Family};
use scop_core::margins::{pseudo_observations, PseudoSample};
use scop_core::selection::{fit_family, select_best, FitMethod};

fn pseudo(c: &Copula, n: usize, seed: u64) -> PseudoSample {
    let (u, v): (Vec<f64>, Vec<f64>) = sample(c, n, seed).unwrap().into_iter().unzip();
    pseudo_observations(&u, &v).unwrap()
}

fn share_won(truth: &Copula, candidates: &[Family], reruns: u64, n: usize, seed0: u64) -> f64 {
    let wins: usize = (0..reruns)
        .into_par_iter()
        .map(|b| {
            let p = pseudo(truth, n, seed0 + b);
            let sel = select_best(&p, candidates, FitMethod::MaxPseudoLikelihood).unwrap();
            usize::from(sel.best().family == truth.family())
        })
        .sum();
    wins as f64 / reruns as f64
}

#[test]
fn frank_self_selection() {
    let share = share_won(&Copula::Frank { theta: 23.45 }, &Family::ALL, 200, 500, 1_000);
    assert!(share >= 0.95, "{share}");
}

#[test]
fn independence_self_selection() {
    let share = share_won(&Copula::Independent, &Family::ALL, 100, 500, 2_000);
    assert!(share > 0.5, "{share}");
}

#[test]
fn gumbel_beats_frank_on_gumbel_data() {
    let share = share_won(
        &Copula::Gumbel { theta: 1.65 },
        &[Family::Gumbel, Family::Frank],
        200,
        500,
        3_000,
    );
    assert!(share > 0.5, "{share}");
}

#[test]
fn clayton_ml_large_sample() {
    let p = pseudo(&Copula::Clayton { theta: 2.0 }, 100_000, 4);
    let fit = fit_family(Family::Clayton, &p, FitMethod::MaxPseudoLikelihood).unwrap();
    let t = fit.theta.unwrap();
    assert!((1.9..=2.1).contains(&t), "{t}");
}

#[test]
fn ml_is_consistent_for_each_family() {
    let truths = [
        Copula::Gaussian { rho: 0.5 },
        Copula::Clayton { theta: 1.5 },
        Copula::Gumbel { theta: 1.8 },
        Copula::Frank { theta: 5.0 },
        Copula::Joe { theta: 2.0 },
    ];
    for (i, truth) in truths.iter().enumerate() {
        let mut est: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|b| {
                let p = pseudo(truth, 10_000, 10_000 * (i as u64 + 1) + b);
                fit_family(truth.family(), &p, FitMethod::MaxPseudoLikelihood)
                    .unwrap()
                    .theta
                    .unwrap()
            })
            .collect();
        est.sort_by(f64::total_cmp);
        let median = 0.5 * (est[24] + est[25]);
        let want = truth.theta().unwrap();
        assert!((median - want).abs() <= 0.05 * want, "{truth:?}: median {median}");
    }
}

#[test]
fn student_t_profile_recovers_heavy_tails() {
    let truth = Copula::StudentT { rho: 0.6, nu: 4.0 };
    let p = pseudo(&truth, 5_000, 99);
    let fit = fit_family(Family::StudentT, &p, FitMethod::MaxPseudoLikelihood).unwrap();
    assert!((fit.theta.unwrap() - 0.6).abs() < 0.03);
    assert!((3.0..=7.0).contains(&fit.nu.unwrap()), "{:?}", fit.nu);
    assert_eq!(fit.parameter_count, 2);
}
