//! Plot-ready CSV data: pseudo-observation scatter, copula surfaces on an
//! `m x m` grid and theoretical AR(2) spectra. Nothing is rendered here.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::PairReport;
use crate::copula::{copula_surface, empirical_copula_surface, Copula, CopulaSurface};
use crate::error::{Error, Result};
use crate::margins::PseudoSample;
use crate::output::{csv_text, fmt_float, write_atomic};
use crate::signal::ar2_theoretical_spectrum;
use crate::simstudy::{Ar2Spec, ScenarioConfig, SimReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scatter,
    Surface,
    Spectrum,
    All,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scatter" => Ok(PlotKind::Scatter),
            "surface" => Ok(PlotKind::Surface),
            "spectrum" => Ok(PlotKind::Spectrum),
            "all" => Ok(PlotKind::All),
            _ => Err(Error::Validation(format!("unknown plot kind '{s}'"))),
        }
    }
}

impl PlotKind {
    fn wants(self, other: PlotKind) -> bool {
        self == PlotKind::All || self == other
    }
}

pub fn scatter_csv(u: &[f64], v: &[f64]) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = u
        .iter()
        .zip(v)
        .map(|(a, b)| vec![fmt_float(*a), fmt_float(*b)])
        .collect();
    csv_text(&["u", "v"], &rows)
}

/// `m^2` rows of `(u, v, empirical, model)`; `model` is blank without a copula.
pub fn surface_csv(empirical: &CopulaSurface, model: Option<&Copula>) -> Result<Vec<u8>> {
    let m = empirical.m;
    let fitted = model.map(|c| copula_surface(c, m)).transpose()?;
    let grid = empirical.grid();
    let mut rows = Vec::with_capacity(m * m);
    for i in 1..=m {
        for j in 1..=m {
            rows.push(vec![
                fmt_float(grid[i - 1]),
                fmt_float(grid[j - 1]),
                fmt_float(empirical.at(i, j)),
                fitted.as_ref().map(|s| fmt_float(s.at(i, j))).unwrap_or_default(),
            ]);
        }
    }
    csv_text(&["u", "v", "empirical", "model"], &rows)
}

/// Theoretical spectrum at every Fourier frequency `k fs / T`, `k = 0..=T/2`.
pub fn spectrum_csv(spec: &Ar2Spec, samples: usize, sampling_rate: f64) -> Result<Vec<u8>> {
    if samples < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let sigma2 = spec.innovation_sd * spec.innovation_sd;
    let rows = (0..=samples / 2)
        .map(|k| {
            let omega = k as f64 / samples as f64;
            let s = ar2_theoretical_spectrum(spec.phi1, spec.phi2, sigma2, omega)?;
            Ok(vec![
                fmt_float(omega * sampling_rate),
                fmt_float(omega),
                fmt_float(s),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    csv_text(&["frequency_hz", "omega", "spectrum"], &rows)
}

/// A report that plot data can be drawn from.
#[derive(Debug, Clone)]
pub enum ReportSource {
    Pair(Box<PairReport>),
    Sim(Box<SimReport>),
}

impl ReportSource {
    /// Reads a pair report or simulation report from JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("replicates").is_some() {
            Ok(ReportSource::Sim(Box::new(serde_json::from_value(value)?)))
        } else {
            Ok(ReportSource::Pair(Box::new(serde_json::from_value(value)?)))
        }
    }
}

fn hz_tag(hz: f64) -> String {
    format!("{hz}hz").replace('.', "p")
}

/// Writes the requested plot data into `dir` and returns the written paths in
/// a fixed order. `grid` sets the surface resolution for simulation reports.
pub fn emit_plot_data(
    source: &ReportSource,
    kind: PlotKind,
    dir: &Path,
    grid: usize,
) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    match source {
        ReportSource::Pair(r) => {
            if kind == PlotKind::Spectrum {
                return Err(Error::Validation(
                    "pair reports carry no AR(2) model; spectrum data needs a simulation report".into(),
                ));
            }
            if kind.wants(PlotKind::Scatter) {
                files.push((dir.join("scatter.csv"), scatter_csv(&r.scatter.u, &r.scatter.v)?));
            }
            if kind.wants(PlotKind::Surface) {
                files.push((
                    dir.join("surface.csv"),
                    surface_csv(&r.surface, r.selected.as_ref())?,
                ));
            }
        }
        ReportSource::Sim(r) => {
            if kind.wants(PlotKind::Scatter) {
                files.push((dir.join("scatter.csv"), r.scatter_csv()?));
            }
            if kind.wants(PlotKind::Surface) {
                for s in &r.scatter {
                    let pseudo = PseudoSample::from_uniform(s.u.clone(), s.v.clone())?;
                    let emp = empirical_copula_surface(&pseudo, grid)?;
                    let model = r.frequency(s.frequency_hz).and_then(|f| {
                        let fam = f.modal_family?;
                        let theta = f.mean_theta.or(f.theta_at_mean_rank_coherence).unwrap_or(0.0);
                        Copula::new(fam, theta, student_nu(r, fam)).ok()
                    });
                    let name = format!("surface_{}.csv", hz_tag(s.frequency_hz));
                    files.push((dir.join(name), surface_csv(&emp, model.as_ref())?));
                }
            }
            if kind.wants(PlotKind::Spectrum) {
                let (specs, samples, fs) = match &r.config {
                    ScenarioConfig::Sim1(c) => (vec![c.latent.clone()], c.samples, c.sampling_rate),
                    ScenarioConfig::Sim2(c) => {
                        let (a, b) = c.latent()?;
                        (vec![a, b], c.samples, c.sampling_rate)
                    }
                };
                for spec in specs {
                    let name = format!("spectrum_{}.csv", spec.label);
                    files.push((dir.join(name), spectrum_csv(&spec, samples, fs)?));
                }
            }
        }
    }
    for (path, bytes) in &files {
        write_atomic(path, bytes)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Median degrees of freedom among replicates that selected Student-t.
fn student_nu(report: &SimReport, family: crate::copula::Family) -> Option<f64> {
    if family != crate::copula::Family::StudentT {
        return None;
    }
    let mut nus: Vec<f64> = report
        .replicates
        .iter()
        .flat_map(|r| &r.frequencies)
        .filter(|f| f.selected == Some(family))
        .filter_map(|f| f.nu)
        .collect();
    nus.sort_by(f64::total_cmp);
    nus.get(nus.len() / 2).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_rows_cover_zero_to_nyquist() {
        let spec = Ar2Spec::new(0.5, -0.3, 1.0, "x").unwrap();
        let text = String::from_utf8(spectrum_csv(&spec, 100, 1000.0).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "frequency_hz,omega,spectrum");
        assert_eq!(lines.len(), 1 + 51);
        let hz = |l: &str| l.split(',').next().unwrap().parse::<f64>().unwrap();
        assert_eq!(hz(lines[1]), 0.0);
        assert_eq!(hz(lines[2]), 10.0);
        assert_eq!(hz(lines[51]), 500.0);
    }

    #[test]
    fn surface_has_m_squared_rows() {
        let s = copula_surface(&Copula::Clayton { theta: 2.0 }, 6).unwrap();
        let text = String::from_utf8(surface_csv(&s, Some(&Copula::Independent)).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1 + 36);
        assert!(text.starts_with("u,v,empirical,model\n"));
    }
}
