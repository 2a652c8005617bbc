//! Pseudo-likelihood fits and AIC ranking of candidate copula families.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::special::{norm_quantile, t_log_pdf, t_quantile};
use crate::copula::{
    gaussian_log_density_q, student_log_const, student_log_density_q, theta_from_rank_coherence, Copula,
    Family, STUDENT_T_DF_GRID,
};
use crate::dependence::rank_coherence;
use crate::error::{Error, Result};
use crate::margins::PseudoSample;

/// Smallest sample accepted by `fit_family`.
pub const MIN_FIT_SIZE: usize = 10;

const GOLDEN_TOL: f64 = 1e-8;
const COARSE_POINTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    TauInversion,
    #[default]
    MaxPseudoLikelihood,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::TauInversion => "tau_inversion",
            FitMethod::MaxPseudoLikelihood => "max_pseudo_likelihood",
        })
    }
}

impl FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "tau_inversion" | "tau" | "inversion" => Ok(FitMethod::TauInversion),
            "max_pseudo_likelihood" | "ml" | "mpl" => Ok(FitMethod::MaxPseudoLikelihood),
            _ => Err(Error::Validation(format!("unknown fit method '{s}'"))),
        }
    }
}

/// A fitted family. `aic = 2k - 2 log_likelihood` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaFit {
    pub family: Family,
    pub theta: Option<f64>,
    pub nu: Option<f64>,
    pub log_likelihood: f64,
    pub parameter_count: usize,
    pub aic: f64,
    pub fit_method: FitMethod,
}

impl CopulaFit {
    fn new(copula: Copula, log_likelihood: f64, fit_method: FitMethod) -> Self {
        let k = copula.family().parameter_count();
        Self {
            family: copula.family(),
            theta: copula.theta(),
            nu: copula.nu(),
            log_likelihood,
            parameter_count: k,
            aic: 2.0 * k as f64 - 2.0 * log_likelihood,
            fit_method,
        }
    }

    pub fn copula(&self) -> Copula {
        match self.family {
            Family::Independent => Copula::Independent,
            f => Copula::new(f, self.theta.unwrap_or(0.0), self.nu)
                .expect("fits only hold admissible parameters"),
        }
    }
}

/// A family that could not be fitted to the sample, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InadmissibleFamily {
    pub family: Family,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Sample Kendall tau of the pseudo-observations.
    pub sample_tau: f64,
    /// Best first.
    pub ranked: Vec<CopulaFit>,
    pub inadmissible: Vec<InadmissibleFamily>,
}

impl Selection {
    pub fn best(&self) -> &CopulaFit {
        &self.ranked[0]
    }
}

/// `sum_r log c(u_r, v_r)`.
pub fn pseudo_log_likelihood(copula: &Copula, pseudo: &PseudoSample) -> Result<f64> {
    copula.validate()?;
    let mut total = 0.0;
    for (u, v) in pseudo.pairs() {
        total += copula.log_density(u, v)?;
    }
    Ok(total)
}

/// Quantile transforms shared by the likelihood evaluations of one sample.
struct Prepared<'a> {
    pseudo: &'a PseudoSample,
    tau: f64,
    normal: Vec<(f64, f64)>,
}

impl<'a> Prepared<'a> {
    fn new(pseudo: &'a PseudoSample) -> Result<Self> {
        if pseudo.len() < MIN_FIT_SIZE {
            return Err(Error::TooFew {
                needed: MIN_FIT_SIZE,
                got: pseudo.len(),
            });
        }
        // validates the interior condition once
        PseudoSample::from_uniform(pseudo.u.clone(), pseudo.v.clone())?;
        let tau = rank_coherence(&pseudo.u, &pseudo.v)?;
        Ok(Self {
            pseudo,
            tau,
            normal: Vec::new(),
        })
    }

    fn normal(&mut self) -> &[(f64, f64)] {
        if self.normal.is_empty() {
            self.normal = self
                .pseudo
                .pairs()
                .map(|(u, v)| (norm_quantile(u), norm_quantile(v)))
                .collect();
        }
        &self.normal
    }
}

fn gaussian_ll(q: &[(f64, f64)], rho: f64) -> f64 {
    q.iter().map(|&(x, y)| gaussian_log_density_q(x, y, rho)).sum()
}

struct StudentQuantiles {
    nu: f64,
    q: Vec<(f64, f64)>,
    marginal: f64,
    log_const: f64,
}

impl StudentQuantiles {
    fn new(pseudo: &PseudoSample, nu: f64) -> Self {
        let q: Vec<(f64, f64)> = pseudo
            .pairs()
            .map(|(u, v)| (t_quantile(u, nu), t_quantile(v, nu)))
            .collect();
        let marginal = q.iter().map(|&(x, y)| t_log_pdf(x, nu) + t_log_pdf(y, nu)).sum();
        Self {
            nu,
            q,
            marginal,
            log_const: student_log_const(nu),
        }
    }

    fn ll(&self, rho: f64) -> f64 {
        let joint: f64 = self
            .q
            .iter()
            .map(|&(x, y)| student_log_density_q(x, y, rho, self.nu, self.log_const))
            .sum();
        joint - self.marginal
    }
}

fn direct_ll(copula: &Copula, pseudo: &PseudoSample) -> f64 {
    pseudo
        .pairs()
        .map(|(u, v)| copula.log_density_interior(u, v))
        .sum()
}

/// Maximises `f` on `[lo, hi]`: coarse grid (plus `start`), then golden-section
/// search on the bracket around the best grid point.
fn maximise(f: impl Fn(f64) -> f64, lo: f64, hi: f64, start: Option<f64>, grid: &[f64]) -> (f64, f64) {
    let mut pts: Vec<f64> = grid.iter().copied().filter(|x| *x >= lo && *x <= hi).collect();
    pts.push(lo);
    pts.push(hi);
    if let Some(s) = start {
        pts.push(s.clamp(lo, hi));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let best = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    let mut a = pts[best.saturating_sub(1)];
    let mut b = pts[(best + 1).min(pts.len() - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // keep the grid optimum if the refinement did not improve on it
    if fx.is_finite() && fx >= vals[best] || !vals[best].is_finite() {
        (x, fx)
    } else {
        (pts[best], vals[best])
    }
}

fn coarse_grid(family: Family, lo: f64, hi: f64) -> Vec<f64> {
    let n = COARSE_POINTS;
    let frac = |i: usize| (i as f64 + 0.5) / n as f64;
    match family {
        Family::Gaussian | Family::StudentT => (0..n)
            .map(|i| (hi.atanh() * (2.0 * frac(i) - 1.0)).tanh())
            .collect(),
        // geometric in the distance from the lower end of the range
        _ => {
            let (a, b) = (lo.abs().max(1e-6), hi.abs());
            if family == Family::Frank || family == Family::Clayton {
                let s = if hi > 0.0 { 1.0 } else { -1.0 };
                (0..n).map(|i| s * a * (b / a).powf(frac(i))).collect()
            } else {
                (0..n)
                    .map(|i| 1.0 + 1e-4 * ((b - 1.0) / 1e-4).powf(frac(i)))
                    .collect()
            }
        }
    }
}

fn fit_prepared(family: Family, prep: &mut Prepared<'_>, method: FitMethod) -> Result<CopulaFit> {
    let tau = prep.tau;
    if family == Family::Independent {
        return Ok(CopulaFit::new(Copula::Independent, 0.0, method));
    }
    let start = theta_from_rank_coherence(family, tau)?;
    let (mut lo, mut hi) = family.parameter_bounds();
    if family == Family::Frank {
        // search on the side of zero that matches the sample dependence
        if tau > 0.0 {
            lo = 1e-6;
        } else {
            hi = -1e-6;
        }
    }
    let fit = match (family, method) {
        (Family::Gaussian, FitMethod::TauInversion) => {
            let ll = gaussian_ll(prep.normal(), start);
            CopulaFit::new(Copula::Gaussian { rho: start }, ll, method)
        }
        (Family::Gaussian, FitMethod::MaxPseudoLikelihood) => {
            let q = prep.normal();
            let grid = coarse_grid(family, lo, hi);
            let (rho, ll) = maximise(|r| gaussian_ll(q, r), lo, hi, Some(start), &grid);
            CopulaFit::new(Copula::Gaussian { rho }, ll, method)
        }
        (Family::StudentT, _) => {
            let grid = coarse_grid(family, lo, hi);
            let candidates: Vec<(f64, f64, f64)> = STUDENT_T_DF_GRID
                .par_iter()
                .map(|&nu| {
                    let sq = StudentQuantiles::new(prep.pseudo, nu);
                    let (rho, ll) = match method {
                        FitMethod::TauInversion => (start, sq.ll(start)),
                        FitMethod::MaxPseudoLikelihood => maximise(|r| sq.ll(r), lo, hi, Some(start), &grid),
                    };
                    (nu, rho, ll)
                })
                .collect();
            // first maximum in grid order keeps the choice deterministic
            let mut best = candidates[0];
            for &c in &candidates[1..] {
                if c.2 > best.2 {
                    best = c;
                }
            }
            CopulaFit::new(
                Copula::StudentT {
                    rho: best.1,
                    nu: best.0,
                },
                best.2,
                method,
            )
        }
        (_, FitMethod::TauInversion) => {
            let c = Copula::new(family, start, None)?;
            CopulaFit::new(c, direct_ll(&c, prep.pseudo), method)
        }
        (_, FitMethod::MaxPseudoLikelihood) => {
            let grid = coarse_grid(family, lo, hi);
            let pseudo = prep.pseudo;
            let f = |t: f64| match Copula::new(family, t, None) {
                Ok(c) => direct_ll(&c, pseudo),
                Err(_) => f64::NEG_INFINITY,
            };
            let (theta, ll) = maximise(f, lo, hi, Some(start), &grid);
            CopulaFit::new(Copula::new(family, theta, None)?, ll, method)
        }
    };
    if !fit.log_likelihood.is_finite() {
        return Err(Error::Degenerate(format!(
            "{family} pseudo-likelihood is not finite"
        )));
    }
    Ok(fit)
}

pub fn fit_family(family: Family, pseudo: &PseudoSample, method: FitMethod) -> Result<CopulaFit> {
    let mut prep = Prepared::new(pseudo)?;
    fit_prepared(family, &mut prep, method)
}

/// Fits every candidate and ranks them by AIC, then parameter count, then the
/// fixed family order.
pub fn select_best(pseudo: &PseudoSample, candidates: &[Family], method: FitMethod) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Validation("candidate family list is empty".into()));
    }
    let mut families = candidates.to_vec();
    families.sort();
    families.dedup();
    let prep = Prepared::new(pseudo)?;
    let tau = prep.tau;
    let normal: Vec<(f64, f64)> = if families.contains(&Family::Gaussian) {
        pseudo
            .pairs()
            .map(|(u, v)| (norm_quantile(u), norm_quantile(v)))
            .collect()
    } else {
        Vec::new()
    };
    let results: Vec<(Family, Result<CopulaFit>)> = families
        .par_iter()
        .map(|&f| {
            let mut local = Prepared {
                pseudo,
                tau,
                normal: normal.clone(),
            };
            (f, fit_prepared(f, &mut local, method))
        })
        .collect();
    let mut ranked = Vec::new();
    let mut inadmissible = Vec::new();
    for (family, r) in results {
        match r {
            Ok(fit) => ranked.push(fit),
            Err(e) => inadmissible.push(InadmissibleFamily {
                family,
                reason: e.to_string(),
            }),
        }
    }
    if ranked.is_empty() {
        return Err(Error::NoAdmissibleFamily);
    }
    ranked.sort_by(|a, b| {
        a.aic
            .total_cmp(&b.aic)
            .then(a.parameter_count.cmp(&b.parameter_count))
            .then(a.family.cmp(&b.family))
    });
    Ok(Selection {
        sample_tau: tau,
        ranked,
        inadmissible,
    })
}
