//! Bivariate copula families used to model spectral dependence.
//!
//! Every family is immutable once built; evaluation is pure and can be shared
//! across threads.

pub mod bvn;
mod sample;
pub mod special;
mod surface;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use special::{frank_tau, joe_tau, log_add_exp, norm_quantile, t_cdf, t_log_pdf, t_quantile};

pub use sample::{sample, sample_with};
pub use surface::{copula_surface, empirical_copula_surface, CopulaSurface};

/// Inputs to `cdf` and `log_density` are clamped to `[EDGE, 1 - EDGE]`.
pub const EDGE: f64 = 1e-12;

/// Degrees of freedom profiled when fitting the Student-t family.
pub const STUDENT_T_DF_GRID: [f64; 9] = [2.5, 3.0, 4.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0];

/// Largest |theta| searched for Frank.
pub const FRANK_MAX: f64 = 50.0;
/// Largest theta searched for Joe.
pub const JOE_MAX: f64 = 100.0;
/// Largest theta searched for Clayton and Gumbel by likelihood.
pub const ARCHIMEDEAN_MAX: f64 = 100.0;
/// Largest |rho| searched for the elliptical families.
pub const RHO_MAX: f64 = 0.9999;

const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independent,
    Gaussian,
    StudentT,
    Clayton,
    Gumbel,
    Frank,
    Joe,
}

impl Family {
    /// Candidate list in the fixed tie-breaking order.
    pub const ALL: [Family; 7] = [
        Family::Independent,
        Family::Gaussian,
        Family::StudentT,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Joe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independent => "independent",
            Family::Gaussian => "gaussian",
            Family::StudentT => "student_t",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Joe => "joe",
        }
    }

    /// Number of free parameters counted by AIC.
    pub fn parameter_count(self) -> usize {
        match self {
            Family::Independent => 0,
            Family::StudentT => 2,
            _ => 1,
        }
    }

    /// Families that can only express positive dependence.
    pub fn positive_only(self) -> bool {
        matches!(self, Family::Clayton | Family::Gumbel | Family::Joe)
    }

    /// Search interval for the dependence parameter.
    pub fn parameter_bounds(self) -> (f64, f64) {
        match self {
            Family::Independent => (0.0, 0.0),
            Family::Gaussian | Family::StudentT => (-RHO_MAX, RHO_MAX),
            Family::Clayton => (1e-6, ARCHIMEDEAN_MAX),
            Family::Gumbel => (1.0, ARCHIMEDEAN_MAX),
            Family::Frank => (-FRANK_MAX, FRANK_MAX),
            Family::Joe => (1.0, JOE_MAX),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        match key.as_str() {
            "independent" | "independence" => Ok(Family::Independent),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "student_t" | "student" | "t" => Ok(Family::StudentT),
            "clayton" => Ok(Family::Clayton),
            "gumbel" => Ok(Family::Gumbel),
            "frank" => Ok(Family::Frank),
            "joe" => Ok(Family::Joe),
            _ => Err(Error::Validation(format!("unknown copula family '{s}'"))),
        }
    }
}

/// A copula family with a validated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Copula {
    Independent,
    Gaussian { rho: f64 },
    StudentT { rho: f64, nu: f64 },
    Clayton { theta: f64 },
    Gumbel { theta: f64 },
    Frank { theta: f64 },
    Joe { theta: f64 },
}

fn check(ok: bool, family: Family, value: f64) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            family: family.name(),
            value,
        })
    }
}

impl Copula {
    /// Builds a copula; `theta` is the correlation for the elliptical families
    /// and is ignored for the independence copula. `nu` is required for Student-t.
    pub fn new(family: Family, theta: f64, nu: Option<f64>) -> Result<Self> {
        let c = match family {
            Family::Independent => Copula::Independent,
            Family::Gaussian => Copula::Gaussian { rho: theta },
            Family::StudentT => Copula::StudentT {
                rho: theta,
                nu: nu
                    .ok_or_else(|| Error::Validation("student_t copula needs degrees of freedom".into()))?,
            },
            Family::Clayton => Copula::Clayton { theta },
            Family::Gumbel => Copula::Gumbel { theta },
            Family::Frank => Copula::Frank { theta },
            Family::Joe => Copula::Joe { theta },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.family();
        match *self {
            Copula::Independent => Ok(()),
            Copula::Gaussian { rho } => check(rho.abs() < 1.0, f, rho),
            Copula::StudentT { rho, nu } => {
                check(rho.abs() < 1.0, f, rho)?;
                check(nu > 2.0, f, nu)
            }
            Copula::Clayton { theta } => check(theta > 0.0, f, theta),
            Copula::Gumbel { theta } | Copula::Joe { theta } => check(theta >= 1.0, f, theta),
            Copula::Frank { theta } => check(theta != 0.0, f, theta),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Copula::Independent => Family::Independent,
            Copula::Gaussian { .. } => Family::Gaussian,
            Copula::StudentT { .. } => Family::StudentT,
            Copula::Clayton { .. } => Family::Clayton,
            Copula::Gumbel { .. } => Family::Gumbel,
            Copula::Frank { .. } => Family::Frank,
            Copula::Joe { .. } => Family::Joe,
        }
    }

    /// Dependence parameter (correlation for elliptical families).
    pub fn theta(&self) -> Option<f64> {
        match *self {
            Copula::Independent => None,
            Copula::Gaussian { rho } | Copula::StudentT { rho, .. } => Some(rho),
            Copula::Clayton { theta }
            | Copula::Gumbel { theta }
            | Copula::Frank { theta }
            | Copula::Joe { theta } => Some(theta),
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match *self {
            Copula::StudentT { nu, .. } => Some(nu),
            _ => None,
        }
    }

    /// Kendall's tau implied by the parameter.
    pub fn kendall_tau(&self) -> f64 {
        match *self {
            Copula::Independent => 0.0,
            Copula::Gaussian { rho } | Copula::StudentT { rho, .. } => {
                std::f64::consts::FRAC_2_PI * rho.asin()
            }
            Copula::Clayton { theta } => theta / (theta + 2.0),
            Copula::Gumbel { theta } => 1.0 - 1.0 / theta,
            Copula::Frank { theta } => frank_tau(theta),
            Copula::Joe { theta } => joe_tau(theta),
        }
    }

    /// `C(u, v)`. Exact on the boundary of the unit square, clamped inside.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u.is_nan() || v.is_nan() {
            return f64::NAN;
        }
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        let u = u.clamp(EDGE, 1.0 - EDGE);
        let v = v.clamp(EDGE, 1.0 - EDGE);
        let c = match *self {
            Copula::Independent => u * v,
            Copula::Gaussian { rho } => bvn::bivariate_normal_cdf(norm_quantile(u), norm_quantile(v), rho),
            Copula::StudentT { rho, nu } => student_cdf(u, v, rho, nu),
            Copula::Clayton { theta } => (-clayton_log_s(u, v, theta) / theta).exp(),
            Copula::Gumbel { theta } => (-gumbel_a(u, v, theta).0).exp(),
            Copula::Frank { theta } => frank_cdf(u, v, theta),
            Copula::Joe { theta } => joe_cdf(u, v, theta),
        };
        c.clamp((u + v - 1.0).max(0.0), u.min(v))
    }

    /// `log c(u, v)` for `(u, v)` strictly inside the unit square.
    pub fn log_density(&self, u: f64, v: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(Error::Validation(format!(
                "density needs interior points, got ({u}, {v})"
            )));
        }
        Ok(self.log_density_interior(u, v))
    }

    pub(crate) fn log_density_interior(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(EDGE, 1.0 - EDGE);
        let v = v.clamp(EDGE, 1.0 - EDGE);
        match *self {
            Copula::Independent => 0.0,
            Copula::Gaussian { rho } => gaussian_log_density_q(norm_quantile(u), norm_quantile(v), rho),
            Copula::StudentT { rho, nu } => {
                let (x, y) = (t_quantile(u, nu), t_quantile(v, nu));
                student_log_density_q(x, y, rho, nu, student_log_const(nu))
                    - t_log_pdf(x, nu)
                    - t_log_pdf(y, nu)
            }
            Copula::Clayton { theta } => {
                theta.ln_1p()
                    - (1.0 + theta) * (u.ln() + v.ln())
                    - (2.0 + 1.0 / theta) * clayton_log_s(u, v, theta)
            }
            Copula::Gumbel { theta } => gumbel_log_density(u, v, theta),
            Copula::Frank { theta } => frank_log_density(u, v, theta),
            Copula::Joe { theta } => joe_log_density(u, v, theta),
        }
    }
}

pub fn tau_of_theta(family: Family, theta: f64, nu: Option<f64>) -> Result<f64> {
    let nu = match family {
        Family::StudentT => Some(nu.unwrap_or(STUDENT_T_DF_GRID[0])),
        _ => nu,
    };
    Ok(Copula::new(family, theta, nu)?.kendall_tau())
}

/// Dependence parameter whose Kendall tau equals the rank coherence `k`.
pub fn theta_from_rank_coherence(family: Family, k: f64) -> Result<f64> {
    let domain = || Error::InversionDomain {
        family: family.name(),
        tau: k,
    };
    if !(k.is_finite() && k.abs() < 1.0) {
        return Err(domain());
    }
    match family {
        Family::Independent => Err(Error::Validation(
            "the independence copula has no parameter to invert".into(),
        )),
        Family::Gaussian | Family::StudentT => Ok((std::f64::consts::FRAC_PI_2 * k).sin()),
        Family::Clayton if k > 0.0 => Ok(2.0 * k / (1.0 - k)),
        Family::Gumbel if k > 0.0 => Ok(1.0 / (1.0 - k)),
        Family::Frank if k != 0.0 => {
            if k.abs() > frank_tau(FRANK_MAX) {
                return Err(domain());
            }
            let t = bisect_increasing(frank_tau, k.abs(), 0.0, FRANK_MAX);
            Ok(t.copysign(k))
        }
        Family::Joe if k > 0.0 => {
            if k > joe_tau(JOE_MAX) {
                return Err(domain());
            }
            Ok(bisect_increasing(joe_tau, k, 1.0, JOE_MAX))
        }
        _ => Err(domain()),
    }
}

fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// How a coherence value is mapped to a Gaussian correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceLink {
    /// Use the coherence itself as the correlation.
    #[default]
    Direct,
    /// Use its square root, treating coherence as a squared correlation.
    Sqrt,
}

impl FromStr for CoherenceLink {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" | "paper" => Ok(CoherenceLink::Direct),
            "sqrt" => Ok(CoherenceLink::Sqrt),
            _ => Err(Error::Validation(format!("unknown coherence link '{s}'"))),
        }
    }
}

pub fn rho_from_coherence(kappa: f64, link: CoherenceLink) -> Result<f64> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::Validation(format!("coherence {kappa} outside [0, 1]")));
    }
    if kappa == 1.0 {
        return Err(Error::Degenerate(
            "coherence 1 gives a singular Gaussian copula".into(),
        ));
    }
    Ok(match link {
        CoherenceLink::Direct => kappa,
        CoherenceLink::Sqrt => kappa.sqrt(),
    })
}

// ---- family internals ----

pub(crate) fn gaussian_log_density_q(x: f64, y: f64, rho: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    -0.5 * one_m.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * one_m)
}

/// Normalising constant of the bivariate t density in `student_log_density_q`.
pub(crate) fn student_log_const(nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 2.0)) - ln_gamma(0.5 * nu) - (nu * std::f64::consts::PI).ln()
}

/// Bivariate t log-density at quantiles `(x, y)`; subtract the two marginal
/// log-densities to obtain the copula log-density.
pub(crate) fn student_log_density_q(x: f64, y: f64, rho: f64, nu: f64, log_const: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    let q = (x * x + y * y - 2.0 * rho * x * y) / (nu * one_m);
    log_const - 0.5 * one_m.ln() - 0.5 * (nu + 2.0) * q.ln_1p()
}

fn student_cdf(u: f64, v: f64, rho: f64, nu: f64) -> f64 {
    if rho == 0.0 {
        return u * v;
    }
    let x = t_quantile(u, nu);
    let y = t_quantile(v, nu);
    let scale = ((1.0 - rho * rho) / (nu + 1.0)).sqrt();
    // conditional cdf of the second coordinate given the first equals s
    let h = |s: f64| t_cdf((y - rho * s) / (scale * (nu + s * s).sqrt()), nu + 1.0);
    let dens = |s: f64| t_log_pdf(s, nu).exp();
    let c = x.abs().max(1.0);
    // C = int_{-inf}^x f(s) h(s) ds for x <= 0, else v - int_x^inf f(s) h(s) ds
    let lower = x <= 0.0;
    let map = |w: f64| {
        let off = c * (1.0 - w) / w;
        if lower {
            x - off
        } else {
            x + off
        }
    };
    let integrand = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let s = map(w);
        dens(s) * h(s) * c / (w * w)
    };
    // split where the conditional cdf changes fastest
    let s_star = y / rho;
    let mut cuts = vec![0.0, 1.0];
    let off = if lower { x - s_star } else { s_star - x };
    if off > 0.0 {
        cuts.insert(1, c / (c + off));
    }
    let total: f64 = cuts
        .windows(2)
        .map(|p| special::gauss_kronrod(&integrand, p[0], p[1], 1e-15))
        .sum();
    if lower {
        total
    } else {
        v - total
    }
}

/// `ln(u^-theta + v^-theta - 1)`.
fn clayton_log_s(u: f64, v: f64, theta: f64) -> f64 {
    let a = -theta * u.ln();
    let b = -theta * v.ln();
    let m = a.max(b);
    if m > 30.0 {
        m + ((a.min(b) - m).exp() - (-m).exp()).ln_1p()
    } else {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    }
}

/// Returns `(A, ln s)` with `s = (-ln u)^theta + (-ln v)^theta` and `A = s^(1/theta)`.
fn gumbel_a(u: f64, v: f64, theta: f64) -> (f64, f64) {
    let lx = (-u.ln()).ln();
    let ly = (-v.ln()).ln();
    let ls = log_add_exp(theta * lx, theta * ly);
    ((ls / theta).exp(), ls)
}

fn gumbel_log_density(u: f64, v: f64, theta: f64) -> f64 {
    let (a, ls) = gumbel_a(u, v, theta);
    let lx = (-u.ln()).ln();
    let ly = (-v.ln()).ln();
    -a - u.ln() - v.ln() + (theta - 1.0) * (lx + ly) + (1.0 / theta - 2.0) * ls + (a + theta - 1.0).ln()
}

/// `D = 1 - e^-theta - (1 - e^-theta u)(1 - e^-theta v)` for `theta > 0`, evaluated
/// in the form that keeps relative accuracy.
fn frank_d(u: f64, v: f64, theta: f64) -> f64 {
    if theta <= 1.0 {
        -(-theta).exp_m1() - (-theta * u).exp_m1() * (-theta * v).exp_m1()
    } else {
        let a = (-theta * u).exp();
        let b = (-theta * v).exp();
        a + b * (1.0 - a) - (-theta).exp()
    }
}

fn frank_cdf(u: f64, v: f64, theta: f64) -> f64 {
    if theta < 0.0 {
        // C_theta(u, v) = u - C_{-theta}(u, 1 - v)
        return u - frank_cdf(u, 1.0 - v, -theta);
    }
    let d = frank_d(u, v, theta);
    -(d.ln() - (-(-theta).exp_m1()).ln()) / theta
}

fn frank_log_density(u: f64, v: f64, theta: f64) -> f64 {
    if theta < 0.0 {
        return frank_log_density(u, 1.0 - v, -theta);
    }
    let d = frank_d(u, v, theta);
    theta.ln() + (-(-theta).exp_m1()).ln() - theta * (u + v) - 2.0 * d.ln()
}

/// `ln(a + b - ab)` with `a = (1-u)^theta`, `b = (1-v)^theta`.
fn joe_log_s(u: f64, v: f64, theta: f64) -> f64 {
    let la = theta * (-u).ln_1p();
    let lb = theta * (-v).ln_1p();
    // p = (1 - a)(1 - b), s = 1 - p
    let p = la.exp_m1() * lb.exp_m1();
    if p < 0.5 {
        (-p).ln_1p()
    } else {
        let a = la.exp();
        let b = lb.exp();
        (a + b * (1.0 - a)).ln()
    }
}

fn joe_cdf(u: f64, v: f64, theta: f64) -> f64 {
    -(joe_log_s(u, v, theta) / theta).exp_m1()
}

fn joe_log_density(u: f64, v: f64, theta: f64) -> f64 {
    let ls = joe_log_s(u, v, theta);
    (1.0 / theta - 2.0) * ls + (theta - 1.0) * ((-u).ln_1p() + (-v).ln_1p()) + (theta - 1.0 + ls.exp()).ln()
}
