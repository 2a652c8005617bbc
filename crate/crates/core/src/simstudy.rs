//! Replication harness for the two simulation scenarios.
//!
//! Scenario 1 drives two noisy, lagged copies of one narrow-band AR(2) process
//! and compares Kendall tau on the raw samples with the rank coherence at the
//! spectral peak. Scenario 2 mixes a 12 Hz and a 40 Hz latent process, the
//! second entering one channel through a strongly non-linear map, and records
//! which copula family AIC picks at each frequency.
//!
//! Replicate `b` (0-based) draws from a ChaCha8 stream seeded with
//! `replicate_seed(master, b)`, so results do not depend on scheduling.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{theta_from_rank_coherence, Family};
use crate::dependence::rank_coherence;
use crate::error::{Error, Result};
use crate::margins::pseudo_observations;
use crate::output::{csv_text, fmt_float, write_atomic};
use crate::selection::{select_best, FitMethod};
use crate::signal::{ar2_is_stationary, hz_to_index, BinEvaluator};

/// Samples discarded at the start of every simulated epoch.
pub const BURN_IN: usize = 500;

/// `Z_t = phi1 Z_{t-1} + phi2 Z_{t-2} + W_t`, `W_t ~ N(0, innovation_sd^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar2Spec {
    pub phi1: f64,
    pub phi2: f64,
    pub innovation_sd: f64,
    pub label: String,
}

impl Ar2Spec {
    pub fn new(phi1: f64, phi2: f64, innovation_sd: f64, label: impl Into<String>) -> Result<Self> {
        let spec = Self {
            phi1,
            phi2,
            innovation_sd,
            label: label.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Process whose characteristic polynomial has the complex roots
    /// `magnitude * exp(+-i 2 pi peak_hz / fs)`.
    pub fn from_root(
        magnitude: f64,
        peak_hz: f64,
        sampling_rate: f64,
        innovation_sd: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if magnitude.is_nan() || magnitude <= 1.0 {
            return Err(Error::Validation(format!(
                "root magnitude must exceed 1, got {magnitude}"
            )));
        }
        let phase = 2.0 * std::f64::consts::PI * peak_hz / sampling_rate;
        Self::new(
            2.0 * phase.cos() / magnitude,
            -1.0 / (magnitude * magnitude),
            innovation_sd,
            label,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !ar2_is_stationary(self.phi1, self.phi2) {
            return Err(Error::NonStationary {
                phi1: self.phi1,
                phi2: self.phi2,
            });
        }
        if !(self.innovation_sd.is_finite() && self.innovation_sd > 0.0) {
            return Err(Error::Validation(format!(
                "innovation sd must be positive, got {}",
                self.innovation_sd
            )));
        }
        Ok(())
    }

    /// Variance of the stationary process.
    pub fn stationary_variance(&self) -> f64 {
        let (p1, p2) = (self.phi1, self.phi2);
        self.innovation_sd.powi(2) * (1.0 - p2) / ((1.0 + p2) * ((1.0 - p2).powi(2) - p1 * p1))
    }
}

/// `R` independent epochs of length `T`, flattened epoch after epoch.
pub fn gen_ar2_flat<G: Rng + ?Sized>(spec: &Ar2Spec, epochs: usize, samples: usize, rng: &mut G) -> Vec<f64> {
    let mut out = Vec::with_capacity(epochs * samples);
    for _ in 0..epochs {
        let (mut z1, mut z2) = (0.0, 0.0);
        for t in 0..BURN_IN + samples {
            let w: f64 = StandardNormal.sample(rng);
            let z = spec.phi1 * z1 + spec.phi2 * z2 + spec.innovation_sd * w;
            z2 = z1;
            z1 = z;
            if t >= BURN_IN {
                out.push(z);
            }
        }
    }
    out
}

pub fn gen_ar2(spec: &Ar2Spec, epochs: usize, samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat = gen_ar2_flat(spec, epochs, samples, &mut rng);
    Ok(flat.chunks(samples.max(1)).map(<[f64]>::to_vec).collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `b`: output `b + 1` of a SplitMix64 sequence started at `master`.
pub fn replicate_seed(master: u64, b: u64) -> u64 {
    splitmix64(master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(b + 1)))
}

fn noise<G: Rng + ?Sized>(n: usize, sd: f64, rng: &mut G) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

fn bin_magnitudes(flat: &[f64], samples: usize, k: usize) -> Vec<f64> {
    let bin = BinEvaluator::new(samples, k);
    flat.chunks(samples).map(|e| bin.eval(e).norm()).collect()
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Order-independent: computed from the sorted values.
    pub fn from_values(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                median: f64::NAN,
                variance: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let variance = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            median,
            variance,
            min: v[0],
            max: v[n - 1],
        }
    }
}

/// One frequency of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRecord {
    pub frequency_hz: f64,
    pub index: usize,
    pub rank_coherence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// AIC of every admissible family, in the fixed family order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aic: Vec<(Family, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_raw: Option<f64>,
    pub frequencies: Vec<FrequencyRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySummary {
    pub frequency_hz: f64,
    pub rank_coherence: Stats,
    /// Selection counts for all seven families in the fixed order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selection_counts: Vec<(Family, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modal_family: Option<Family>,
    /// Mean fitted parameter over the replicates that chose the modal family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_theta: Option<f64>,
    /// The modal family's parameter obtained by inverting the mean rank coherence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_at_mean_rank_coherence: Option<f64>,
}

/// Pseudo-observation pairs of one replicate at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSet {
    pub frequency_hz: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Sim1(Sim1Config),
    Sim2(Sim2Config),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: ScenarioConfig,
    pub replicate_count: usize,
    pub replicates: Vec<ReplicateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_raw: Option<Stats>,
    pub frequencies: Vec<FrequencySummary>,
    /// Scatter data taken from the first replicate.
    pub scatter: Vec<ScatterSet>,
}

impl SimReport {
    fn assemble(
        config: ScenarioConfig,
        mut replicates: Vec<ReplicateRecord>,
        scatter: Vec<ScatterSet>,
    ) -> Self {
        replicates.sort_by_key(|r| r.replicate);
        let taus: Vec<f64> = replicates.iter().filter_map(|r| r.tau_raw).collect();
        let tau_raw = (!taus.is_empty()).then(|| Stats::from_values(&taus));
        let nfreq = replicates.first().map_or(0, |r| r.frequencies.len());
        let frequencies = (0..nfreq).map(|j| summarise_frequency(&replicates, j)).collect();
        Self {
            config,
            replicate_count: replicates.len(),
            replicates,
            tau_raw,
            frequencies,
            scatter,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn frequency(&self, hz: f64) -> Option<&FrequencySummary> {
        self.frequencies.iter().find(|f| f.frequency_hz == hz)
    }

    /// Table-1 layout: one row per dependence measure.
    pub fn table1_csv(&self) -> Result<Vec<u8>> {
        let mut rows = Vec::new();
        let row = |name: String, s: &Stats| {
            vec![
                name,
                fmt_float(s.mean),
                fmt_float(s.median),
                fmt_float(s.variance),
                fmt_float(s.min),
                fmt_float(s.max),
            ]
        };
        if let Some(t) = &self.tau_raw {
            rows.push(row("tau_raw".into(), t));
        }
        for f in &self.frequencies {
            rows.push(row(
                format!("rank_coherence_{}hz", f.frequency_hz),
                &f.rank_coherence,
            ));
        }
        csv_text(&["measure", "mean", "median", "variance", "min", "max"], &rows)
    }

    /// Table-2 layout: mean rank coherence, modal family and its mean parameter.
    pub fn table2_csv(&self) -> Result<Vec<u8>> {
        let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        let rows: Vec<Vec<String>> = self
            .frequencies
            .iter()
            .filter(|f| !f.selection_counts.is_empty())
            .map(|f| {
                vec![
                    fmt_float(f.frequency_hz),
                    fmt_float(f.rank_coherence.mean),
                    f.modal_family.map(|m| m.name().to_string()).unwrap_or_default(),
                    opt(f.mean_theta),
                    opt(f.theta_at_mean_rank_coherence),
                ]
            })
            .collect();
        csv_text(
            &[
                "frequency_hz",
                "mean_rank_coherence",
                "selected_family",
                "mean_theta",
                "theta_at_mean_rank_coherence",
            ],
            &rows,
        )
    }

    /// Table-3 layout: selection counts per family.
    pub fn table3_csv(&self) -> Result<Vec<u8>> {
        let mut header = vec!["frequency_hz"];
        header.extend(Family::ALL.iter().map(|f| f.name()));
        let rows: Vec<Vec<String>> = self
            .frequencies
            .iter()
            .filter(|f| !f.selection_counts.is_empty())
            .map(|f| {
                let mut r = vec![fmt_float(f.frequency_hz)];
                r.extend(f.selection_counts.iter().map(|(_, c)| c.to_string()));
                r
            })
            .collect();
        csv_text(&header, &rows)
    }

    pub fn scatter_csv(&self) -> Result<Vec<u8>> {
        let mut rows = Vec::new();
        for s in &self.scatter {
            for (u, v) in s.u.iter().zip(&s.v) {
                rows.push(vec![fmt_float(s.frequency_hz), fmt_float(*u), fmt_float(*v)]);
            }
        }
        csv_text(&["frequency_hz", "u", "v"], &rows)
    }

    /// Writes `report.json`, the table CSVs and the scatter CSV into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("report.json"), self.to_json()?.as_bytes())?;
        write_atomic(&dir.join("table1.csv"), &self.table1_csv()?)?;
        if self.frequencies.iter().any(|f| !f.selection_counts.is_empty()) {
            write_atomic(&dir.join("table2.csv"), &self.table2_csv()?)?;
            write_atomic(&dir.join("table3.csv"), &self.table3_csv()?)?;
        }
        write_atomic(&dir.join("scatter.csv"), &self.scatter_csv()?)?;
        Ok(())
    }
}

fn summarise_frequency(reps: &[ReplicateRecord], j: usize) -> FrequencySummary {
    let recs: Vec<&FrequencyRecord> = reps.iter().map(|r| &r.frequencies[j]).collect();
    let ks: Vec<f64> = recs.iter().map(|r| r.rank_coherence).collect();
    let rank_coherence = Stats::from_values(&ks);
    let frequency_hz = recs[0].frequency_hz;
    if recs.iter().all(|r| r.selected.is_none()) {
        return FrequencySummary {
            frequency_hz,
            rank_coherence,
            selection_counts: Vec::new(),
            modal_family: None,
            mean_theta: None,
            theta_at_mean_rank_coherence: None,
        };
    }
    let mut counts: BTreeMap<Family, usize> = Family::ALL.iter().map(|&f| (f, 0)).collect();
    for r in &recs {
        if let Some(f) = r.selected {
            *counts.get_mut(&f).expect("all families present") += 1;
        }
    }
    // ties go to the earlier family in the fixed order
    let modal = Family::ALL
        .iter()
        .copied()
        .max_by(|a, b| counts[a].cmp(&counts[b]).then(b.cmp(a)))
        .expect("non-empty");
    let thetas: Vec<f64> = recs
        .iter()
        .filter(|r| r.selected == Some(modal))
        .filter_map(|r| r.theta)
        .collect();
    let mean_theta = (!thetas.is_empty()).then(|| Stats::from_values(&thetas).mean);
    let theta_at_mean_rank_coherence = theta_from_rank_coherence(modal, rank_coherence.mean).ok();
    FrequencySummary {
        frequency_hz,
        rank_coherence,
        selection_counts: counts.into_iter().collect(),
        modal_family: Some(modal),
        mean_theta,
        theta_at_mean_rank_coherence,
    }
}

// ---------------------------------------------------------------- scenario 1

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim1Config {
    pub replicates: usize,
    pub epochs: usize,
    pub samples: usize,
    pub sampling_rate: f64,
    pub frequency_hz: f64,
    pub latent: Ar2Spec,
    /// Observation noise sd as a multiple of the latent stationary sd.
    pub sigma_eps: f64,
    /// Raw-sample tau is computed on at most this many pooled pairs.
    pub raw_tau_max_pairs: usize,
    pub seed: u64,
}

/// Root magnitude and peak of the scenario-1 latent process.
pub const SIM1_ROOT_MAGNITUDE: f64 = 1.005;
pub const SIM1_PEAK_HZ: f64 = 12.0;
/// Noise multiple calibrated so the raw-sample tau averages about 0.29.
pub const SIM1_DEFAULT_SIGMA_EPS: f64 = 1.0;

impl Sim1Config {
    pub fn latent_default(sampling_rate: f64) -> Ar2Spec {
        Ar2Spec::from_root(SIM1_ROOT_MAGNITUDE, SIM1_PEAK_HZ, sampling_rate, 1.0, "Z")
            .expect("fixed stationary root")
    }

    /// The coefficients printed for scenario 1, (1.989, -0.990). Their roots
    /// have phase 0.0313 rad, so the spectrum peaks near 7.4 Hz at 1500 Hz.
    pub fn latent_literal() -> Ar2Spec {
        Ar2Spec::new(1.989, -0.990, 1.0, "Z literal").expect("stationary")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 || self.epochs < 2 || self.samples < 2 {
            return Err(Error::Validation(
                "scenario 1 needs B >= 1, R >= 2 and T >= 2".into(),
            ));
        }
        if !(self.sigma_eps.is_finite() && self.sigma_eps >= 0.0) {
            return Err(Error::Validation(format!(
                "sigma_eps must be >= 0, got {}",
                self.sigma_eps
            )));
        }
        if self.sampling_rate.is_nan() || self.sampling_rate <= 0.0 || self.raw_tau_max_pairs < 2 {
            return Err(Error::Validation(
                "invalid sampling rate or tau subsample size".into(),
            ));
        }
        self.latent.validate()
    }
}

impl Default for Sim1Config {
    fn default() -> Self {
        Self {
            replicates: 100,
            epochs: 400,
            samples: 1500,
            sampling_rate: 1500.0,
            frequency_hz: SIM1_PEAK_HZ,
            latent: Self::latent_default(1500.0),
            sigma_eps: SIM1_DEFAULT_SIGMA_EPS,
            raw_tau_max_pairs: 100_000,
            seed: 20_240_501,
        }
    }
}

/// The two observed channels of one scenario-1 replicate, flattened by epoch.
pub fn sim1_signals<G: Rng + ?Sized>(cfg: &Sim1Config, rng: &mut G) -> (Vec<f64>, Vec<f64>) {
    let (r, t) = (cfg.epochs, cfg.samples);
    // one extra latent sample per epoch feeds the lag in X
    let z = gen_ar2_flat(&cfg.latent, r, t + 1, rng);
    let sd = cfg.sigma_eps * cfg.latent.stationary_variance().sqrt();
    let ex = noise(r * t, sd, rng);
    let ey = noise(r * t, sd, rng);
    let mut x = Vec::with_capacity(r * t);
    let mut y = Vec::with_capacity(r * t);
    for e in 0..r {
        let zs = &z[e * (t + 1)..(e + 1) * (t + 1)];
        for i in 0..t {
            x.push(0.90 * zs[i] + ex[e * t + i]);
            y.push(0.85 * zs[i + 1] + ey[e * t + i]);
        }
    }
    (x, y)
}

fn sim1_replicate(cfg: &Sim1Config, k: usize, b: usize) -> Result<(ReplicateRecord, Vec<ScatterSet>)> {
    let seed = replicate_seed(cfg.seed, b as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y) = sim1_signals(cfg, &mut rng);
    let n = x.len();
    let tau_raw = if n > cfg.raw_tau_max_pairs {
        let mut idx = index::sample(&mut rng, n, cfg.raw_tau_max_pairs).into_vec();
        idx.sort_unstable();
        let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        rank_coherence(&xs, &ys)?
    } else {
        rank_coherence(&x, &y)?
    };
    let dx = bin_magnitudes(&x, cfg.samples, k);
    let dy = bin_magnitudes(&y, cfg.samples, k);
    let kk = rank_coherence(&dx, &dy)?;
    let scatter = if b == 0 {
        let p = pseudo_observations(&dx, &dy)?;
        vec![ScatterSet {
            frequency_hz: cfg.frequency_hz,
            u: p.u,
            v: p.v,
        }]
    } else {
        Vec::new()
    };
    let rec = ReplicateRecord {
        replicate: b + 1,
        seed,
        tau_raw: Some(tau_raw),
        frequencies: vec![FrequencyRecord {
            frequency_hz: cfg.frequency_hz,
            index: k,
            rank_coherence: kk,
            selected: None,
            theta: None,
            nu: None,
            aic: Vec::new(),
        }],
    };
    Ok((rec, scatter))
}

pub fn run_sim1(cfg: &Sim1Config) -> Result<SimReport> {
    cfg.validate()?;
    let k = hz_to_index(cfg.frequency_hz, cfg.samples, cfg.sampling_rate)?;
    let results: Vec<(ReplicateRecord, Vec<ScatterSet>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| sim1_replicate(cfg, k, b))
        .collect::<Result<_>>()?;
    let mut scatter = Vec::new();
    let mut reps = Vec::with_capacity(results.len());
    for (r, s) in results {
        scatter.extend(s);
        reps.push(r);
    }
    Ok(SimReport::assemble(
        ScenarioConfig::Sim1(cfg.clone()),
        reps,
        scatter,
    ))
}

// ---------------------------------------------------------------- scenario 2

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim2Config {
    pub replicates: usize,
    pub epochs: usize,
    pub samples: usize,
    pub sampling_rate: f64,
    pub alpha_hz: f64,
    pub beta_hz: f64,
    /// Modulus of the characteristic roots of both latent processes.
    pub root_magnitude: f64,
    /// Innovation sd of both latent processes.
    pub innovation_sd: f64,
    /// Weight of the non-linear term `Z_beta^4 sin(Z_beta)`.
    pub eta: f64,
    /// Noise variance as a fraction of the pooled sample variance of `Z_beta`.
    pub noise_fraction: f64,
    /// Drop the latent signals and keep only the noise.
    pub noise_only: bool,
    pub fit_method: FitMethod,
    pub candidates: Vec<Family>,
    pub seed: u64,
}

/// Calibrated so the mean rank coherences land near 0.84 (12 Hz) and 0.42 (40 Hz).
pub const SIM2_ROOT_MAGNITUDE: f64 = 1.0025;
pub const SIM2_INNOVATION_SD: f64 = 1.5;

impl Default for Sim2Config {
    fn default() -> Self {
        Self {
            replicates: 100,
            epochs: 500,
            samples: 1000,
            sampling_rate: 1000.0,
            alpha_hz: 12.0,
            beta_hz: 40.0,
            root_magnitude: SIM2_ROOT_MAGNITUDE,
            innovation_sd: SIM2_INNOVATION_SD,
            eta: 1e-5,
            noise_fraction: 0.01,
            noise_only: false,
            fit_method: FitMethod::MaxPseudoLikelihood,
            candidates: Family::ALL.to_vec(),
            seed: 20_240_502,
        }
    }
}

impl Sim2Config {
    pub fn latent(&self) -> Result<(Ar2Spec, Ar2Spec)> {
        let a = Ar2Spec::from_root(
            self.root_magnitude,
            self.alpha_hz,
            self.sampling_rate,
            self.innovation_sd,
            "Z_alpha",
        )?;
        let b = Ar2Spec::from_root(
            self.root_magnitude,
            self.beta_hz,
            self.sampling_rate,
            self.innovation_sd,
            "Z_beta",
        )?;
        Ok((a, b))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 || self.epochs < crate::selection::MIN_FIT_SIZE || self.samples < 2 {
            return Err(Error::Validation(
                "scenario 2 needs B >= 1, R >= 10 and T >= 2".into(),
            ));
        }
        if self.candidates.is_empty() {
            return Err(Error::Validation("scenario 2 needs candidate families".into()));
        }
        if !(self.noise_fraction > 0.0 && self.eta.is_finite()) {
            return Err(Error::Validation("noise fraction must be positive".into()));
        }
        self.latent().map(|_| ())
    }
}

/// The two observed channels of one scenario-2 replicate, flattened by epoch.
pub fn sim2_signals<G: Rng + ?Sized>(cfg: &Sim2Config, rng: &mut G) -> Result<(Vec<f64>, Vec<f64>)> {
    let (sa, sb) = cfg.latent()?;
    let (r, t) = (cfg.epochs, cfg.samples);
    let za = gen_ar2_flat(&sa, r, t, rng);
    let zb = gen_ar2_flat(&sb, r, t, rng);
    let n = zb.len() as f64;
    let mean = zb.iter().sum::<f64>() / n;
    let var = zb.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = (cfg.noise_fraction * var).sqrt();
    let e1 = noise(r * t, sd, rng);
    let e2 = noise(r * t, sd, rng);
    if cfg.noise_only {
        return Ok((e1, e2));
    }
    let x1 = (0..r * t).map(|i| za[i] + zb[i] + e1[i]).collect();
    let x2 = (0..r * t)
        .map(|i| 1.5 * za[i] + cfg.eta * zb[i].powi(4) * zb[i].sin() + e2[i])
        .collect();
    Ok((x1, x2))
}

fn sim2_replicate(
    cfg: &Sim2Config,
    bins: &[(f64, usize)],
    b: usize,
) -> Result<(ReplicateRecord, Vec<ScatterSet>)> {
    let seed = replicate_seed(cfg.seed, b as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x1, x2) = sim2_signals(cfg, &mut rng)?;
    let mut freqs = Vec::with_capacity(bins.len());
    let mut scatter = Vec::new();
    for &(hz, k) in bins {
        let d1 = bin_magnitudes(&x1, cfg.samples, k);
        let d2 = bin_magnitudes(&x2, cfg.samples, k);
        let kk = rank_coherence(&d1, &d2)?;
        let p = pseudo_observations(&d1, &d2)?;
        let sel = select_best(&p, &cfg.candidates, cfg.fit_method)?;
        let best = sel.best();
        let mut aic: Vec<(Family, f64)> = sel.ranked.iter().map(|f| (f.family, f.aic)).collect();
        aic.sort_by_key(|a| a.0);
        freqs.push(FrequencyRecord {
            frequency_hz: hz,
            index: k,
            rank_coherence: kk,
            selected: Some(best.family),
            theta: best.theta,
            nu: best.nu,
            aic,
        });
        if b == 0 {
            scatter.push(ScatterSet {
                frequency_hz: hz,
                u: p.u,
                v: p.v,
            });
        }
    }
    let rec = ReplicateRecord {
        replicate: b + 1,
        seed,
        tau_raw: None,
        frequencies: freqs,
    };
    Ok((rec, scatter))
}

pub fn run_sim2(cfg: &Sim2Config) -> Result<SimReport> {
    cfg.validate()?;
    let bins = [
        (
            cfg.alpha_hz,
            hz_to_index(cfg.alpha_hz, cfg.samples, cfg.sampling_rate)?,
        ),
        (
            cfg.beta_hz,
            hz_to_index(cfg.beta_hz, cfg.samples, cfg.sampling_rate)?,
        ),
    ];
    let results: Vec<(ReplicateRecord, Vec<ScatterSet>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| sim2_replicate(cfg, &bins, b))
        .collect::<Result<_>>()?;
    let mut scatter = Vec::new();
    let mut reps = Vec::with_capacity(results.len());
    for (r, s) in results {
        scatter.extend(s);
        reps.push(r);
    }
    Ok(SimReport::assemble(
        ScenarioConfig::Sim2(cfg.clone()),
        reps,
        scatter,
    ))
}
