//! Pairwise workflow on recorded data: magnitudes at a frequency or band,
//! coherence and rank coherence, the independence gate, copula selection and
//! diagnostic surface/scatter data.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{
    empirical_copula_surface, rho_from_coherence, CoherenceLink, Copula, CopulaSurface, Family,
};
use crate::dependence::{
    band_coherence_per_epoch, coherence_over_epochs, independence_test, rank_coherence, DependenceEstimate,
    DependenceKind, FrequencySelector, IndependenceTestResult,
};
use crate::error::{Error, Result};
use crate::margins::pseudo_observations;
use crate::output::{csv_text, fmt_float, write_atomic};
use crate::plots;
use crate::selection::{select_best, CopulaFit, FitMethod, InadmissibleFamily, MIN_FIT_SIZE};
use crate::signal::{band_indices, coefficients_at, hz_to_index, index_to_hz, EpochedSeries, FrequencyBand};

pub const DEFAULT_LEVEL: f64 = 0.05;
pub const DEFAULT_SURFACE_GRID: usize = 20;

/// Inclusive 1-based epoch range `start:end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRange {
    pub start: usize,
    pub end: usize,
}

impl EpochRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start < 1 || end < start {
            return Err(Error::Validation(format!("bad epoch range {start}:{end}")));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check(&self, epochs: usize) -> Result<()> {
        if self.end > epochs {
            return Err(Error::OutOfRange {
                what: "epoch",
                index: self.end,
                limit: epochs,
            });
        }
        Ok(())
    }

    fn zero_based(&self) -> std::ops::Range<usize> {
        self.start - 1..self.end
    }
}

impl FromStr for EpochRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::Validation(format!("epoch range '{s}' is not of the form r:s")))?;
        let num = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::Validation(format!("bad epoch index '{x}'")))
        };
        Self::new(num(a)?, num(b)?)
    }
}

impl fmt::Display for EpochRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// A single frequency in Hz (snapped to the nearest bin) or a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyChoice {
    Hz(f64),
    Band(FrequencyBand),
}

impl FrequencyChoice {
    /// Parses a number as Hz, anything else as a band name or `LOW-HIGH`.
    pub fn parse(text: &str, sampling_rate: f64) -> Result<Self> {
        match text.trim().parse::<f64>() {
            Ok(hz) => Ok(FrequencyChoice::Hz(hz)),
            Err(_) => FrequencyBand::parse(text, sampling_rate).map(FrequencyChoice::Band),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// 1-based channel pair.
    pub channels: (usize, usize),
    pub frequency: FrequencyChoice,
    /// All epochs when absent.
    pub epochs: Option<EpochRange>,
    /// Second range for the first channel's partner, pairing epochs entrywise.
    pub paired_epochs: Option<EpochRange>,
    pub candidates: Vec<Family>,
    pub fit_method: FitMethod,
    pub level: f64,
    /// Fit copulas even when the independence test does not reject.
    pub force_fit: bool,
    pub coherence_link: CoherenceLink,
    pub surface_grid: usize,
    /// Recorded in the report; the analysis itself draws no random numbers.
    pub seed: u64,
}

impl AnalysisConfig {
    pub fn new(channels: (usize, usize), frequency: FrequencyChoice) -> Self {
        Self {
            channels,
            frequency,
            epochs: None,
            paired_epochs: None,
            candidates: Family::ALL.to_vec(),
            fit_method: FitMethod::default(),
            level: DEFAULT_LEVEL,
            force_fit: false,
            coherence_link: CoherenceLink::default(),
            surface_grid: DEFAULT_SURFACE_GRID,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub channels: (usize, usize),
    pub frequency: FrequencySelector,
    /// Frequency of the analysed bin, or the band edges for band analyses.
    pub frequency_hz: Option<f64>,
    pub epochs: EpochRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_epochs: Option<EpochRange>,
    /// Pooled coherence at a bin, or the mean per-epoch coherence over a band.
    pub coherence: Option<DependenceEstimate>,
    pub rank_coherence: DependenceEstimate,
    pub independence_test: IndependenceTestResult,
    pub level: f64,
    /// Gaussian copula whose correlation comes from the coherence.
    pub coherence_gaussian: Option<Copula>,
    pub fit_method: FitMethod,
    /// The reported model: the best-ranked fit, the independence copula when
    /// the test does not reject, or nothing for degenerate samples.
    pub selected: Option<Copula>,
    pub fits: Vec<CopulaFit>,
    pub inadmissible: Vec<InadmissibleFamily>,
    pub surface: CopulaSurface,
    pub scatter: Scatter,
    pub warnings: Vec<String>,
    pub seed: u64,
}

impl PairReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn fits_csv(&self) -> Result<Vec<u8>> {
        let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        let rows: Vec<Vec<String>> = self
            .fits
            .iter()
            .enumerate()
            .map(|(i, f)| {
                vec![
                    (i + 1).to_string(),
                    f.family.name().to_string(),
                    opt(f.theta),
                    opt(f.nu),
                    fmt_float(f.log_likelihood),
                    f.parameter_count.to_string(),
                    fmt_float(f.aic),
                    f.fit_method.to_string(),
                ]
            })
            .collect();
        csv_text(
            &[
                "rank",
                "family",
                "theta",
                "nu",
                "log_likelihood",
                "parameters",
                "aic",
                "fit_method",
            ],
            &rows,
        )
    }

    /// Writes `pair_report.json`, `fits.csv`, `scatter.csv` and `surface.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("pair_report.json"), self.to_json()?.as_bytes())?;
        write_atomic(&dir.join("fits.csv"), &self.fits_csv()?)?;
        write_atomic(
            &dir.join("scatter.csv"),
            &plots::scatter_csv(&self.scatter.u, &self.scatter.v)?,
        )?;
        write_atomic(
            &dir.join("surface.csv"),
            &plots::surface_csv(&self.surface, self.selected.as_ref())?,
        )?;
        Ok(())
    }
}

struct Spectral {
    selector: FrequencySelector,
    hz: Option<f64>,
    indices: Vec<usize>,
}

fn resolve(series: &EpochedSeries, choice: &FrequencyChoice) -> Result<Spectral> {
    let (t, fs) = (series.samples_per_epoch(), series.sampling_rate());
    match choice {
        FrequencyChoice::Hz(hz) => {
            let k = hz_to_index(*hz, t, fs)?;
            Ok(Spectral {
                selector: FrequencySelector::Index(k),
                hz: Some(index_to_hz(k, t, fs)),
                indices: vec![k],
            })
        }
        FrequencyChoice::Band(band) => Ok(Spectral {
            selector: FrequencySelector::Band {
                lower_hz: band.lower,
                upper_hz: band.upper,
            },
            hz: None,
            indices: band_indices(band, t, fs)?,
        }),
    }
}

/// Coefficients of one channel: `[epoch][band index]` over a range.
fn coefficients(
    series: &EpochedSeries,
    channel: usize,
    indices: &[usize],
    range: EpochRange,
) -> Result<Vec<Vec<Complex64>>> {
    let per_k: Vec<Vec<Complex64>> = indices
        .iter()
        .map(|&k| coefficients_at(series, channel, k))
        .collect::<Result<_>>()?;
    Ok(range
        .zero_based()
        .map(|r| per_k.iter().map(|c| c[r]).collect())
        .collect())
}

/// Per-epoch magnitudes, summed over the band when there is more than one index.
fn summed_magnitudes(coefs: &[Vec<Complex64>]) -> Vec<f64> {
    coefs.iter().map(|e| e.iter().map(|c| c.norm()).sum()).collect()
}

fn check_channel(series: &EpochedSeries, channel: usize) -> Result<usize> {
    if channel < 1 || channel > series.channel_count() {
        return Err(Error::OutOfRange {
            what: "channel",
            index: channel,
            limit: series.channel_count(),
        });
    }
    Ok(channel - 1)
}

pub fn analyze_pair(series: &EpochedSeries, config: &AnalysisConfig) -> Result<PairReport> {
    let (a, b) = config.channels;
    let (ca, cb) = (check_channel(series, a)?, check_channel(series, b)?);
    let first = match config.epochs {
        Some(r) => r,
        None => EpochRange::new(1, series.epoch_count())?,
    };
    first.check(series.epoch_count())?;
    let second = config.paired_epochs.unwrap_or(first);
    second.check(series.epoch_count())?;
    if first.len() != second.len() {
        return Err(Error::Validation(format!(
            "paired epoch ranges must have equal length, got {first} ({}) and {second} ({})",
            first.len(),
            second.len()
        )));
    }
    if first.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: first.len(),
        });
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::Validation(format!(
            "test level {} outside (0, 1)",
            config.level
        )));
    }
    if config.candidates.is_empty() {
        return Err(Error::Validation("candidate family list is empty".into()));
    }

    let spectral = resolve(series, &config.frequency)?;
    let fa = coefficients(series, ca, &spectral.indices, first)?;
    let fb = coefficients(series, cb, &spectral.indices, second)?;
    let mut warnings = Vec::new();

    let estimate = |kind, value| DependenceEstimate {
        kind,
        value,
        channels: (a, b),
        frequency: spectral.selector.clone(),
        epochs: (first.start, first.end),
        paired_epochs: config.paired_epochs.map(|p| (p.start, p.end)),
    };

    let kappa = if spectral.indices.len() == 1 {
        let xa: Vec<Complex64> = fa.iter().map(|e| e[0]).collect();
        let xb: Vec<Complex64> = fb.iter().map(|e| e[0]).collect();
        coherence_over_epochs(&xa, &xb).map(|v| (DependenceKind::Coherence, v))
    } else {
        fa.iter()
            .zip(&fb)
            .map(|(x, y)| band_coherence_per_epoch(x, y))
            .collect::<Result<Vec<f64>>>()
            .map(|v| {
                (
                    DependenceKind::BandCoherence,
                    v.iter().sum::<f64>() / v.len() as f64,
                )
            })
    };
    let coherence = match kappa {
        Ok((kind, v)) => Some(estimate(kind, v)),
        Err(e) => {
            warnings.push(format!("coherence not reported: {e}"));
            None
        }
    };
    let coherence_gaussian = coherence.as_ref().and_then(|c| {
        let rho = rho_from_coherence(c.value, config.coherence_link).ok()?;
        Copula::new(Family::Gaussian, rho, None).ok()
    });

    let da = summed_magnitudes(&fa);
    let db = summed_magnitudes(&fb);
    let k_hat = rank_coherence(&da, &db)?;
    let test = independence_test(k_hat, da.len())?;
    if test.small_sample {
        warnings.push(format!(
            "only {} epochs; the normal approximation of the independence test is unreliable",
            da.len()
        ));
    }
    let pseudo = pseudo_observations(&da, &db)?;
    let surface = empirical_copula_surface(&pseudo, config.surface_grid)?;

    let mut fits = Vec::new();
    let mut inadmissible = Vec::new();
    let selected = if k_hat.abs() == 1.0 {
        warnings.push(format!(
            "degenerate dependence: rank coherence is {k_hat}; no parametric copula is fitted"
        ));
        None
    } else if !test.rejects_at(config.level) && !config.force_fit {
        warnings.push(format!(
            "independence not rejected (p = {:.4} >= {}); reporting the independence copula",
            test.p_value, config.level
        ));
        Some(Copula::Independent)
    } else if pseudo.len() < MIN_FIT_SIZE {
        warnings.push(format!(
            "only {} epochs; at least {MIN_FIT_SIZE} are needed to fit copulas",
            pseudo.len()
        ));
        None
    } else {
        match select_best(&pseudo, &config.candidates, config.fit_method) {
            Ok(sel) => {
                fits = sel.ranked;
                inadmissible = sel.inadmissible;
                Some(fits[0].copula())
            }
            Err(Error::NoAdmissibleFamily) => {
                warnings.push("no candidate family is admissible for this sample".into());
                None
            }
            Err(e) => return Err(e),
        }
    };

    Ok(PairReport {
        channels: (a, b),
        frequency: spectral.selector.clone(),
        frequency_hz: spectral.hz,
        epochs: first,
        paired_epochs: config.paired_epochs,
        coherence,
        rank_coherence: estimate(DependenceKind::RankCoherence, k_hat),
        independence_test: test,
        level: config.level,
        coherence_gaussian,
        fit_method: config.fit_method,
        selected,
        fits,
        inadmissible,
        surface,
        scatter: Scatter {
            u: pseudo.u,
            v: pseudo.v,
        },
        warnings,
        seed: config.seed,
    })
}

/// Rank coherence and independence p-value for every channel pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub channel_count: usize,
    pub frequency: FrequencySelector,
    pub epochs: EpochRange,
    /// Row-major `d x d`, symmetric.
    pub rank_coherence: Vec<f64>,
    pub p_value: Vec<f64>,
}

impl MatrixReport {
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.rank_coherence[(a - 1) * self.channel_count + (b - 1)]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per unordered pair `a < b`.
    pub fn pairs_csv(&self) -> Result<Vec<u8>> {
        let d = self.channel_count;
        let mut rows = Vec::new();
        for a in 0..d {
            for b in a + 1..d {
                rows.push(vec![
                    (a + 1).to_string(),
                    (b + 1).to_string(),
                    fmt_float(self.rank_coherence[a * d + b]),
                    fmt_float(self.p_value[a * d + b]),
                ]);
            }
        }
        csv_text(&["channel_a", "channel_b", "rank_coherence", "p_value"], &rows)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("matrix.json"), self.to_json()?.as_bytes())?;
        write_atomic(&dir.join("matrix.csv"), &self.pairs_csv()?)?;
        Ok(())
    }
}

pub fn rank_coherence_matrix(
    series: &EpochedSeries,
    frequency: &FrequencyChoice,
    epochs: Option<EpochRange>,
) -> Result<MatrixReport> {
    let range = match epochs {
        Some(r) => r,
        None => EpochRange::new(1, series.epoch_count())?,
    };
    range.check(series.epoch_count())?;
    let spectral = resolve(series, frequency)?;
    let d = series.channel_count();
    let deltas: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|c| coefficients(series, c, &spectral.indices, range).map(|f| summed_magnitudes(&f)))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a..d).map(move |b| (a, b))).collect();
    let values: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let k = rank_coherence(&deltas[a], &deltas[b])?;
            Ok((k, independence_test(k, range.len())?.p_value))
        })
        .collect::<Result<_>>()?;
    let mut rank = vec![0.0; d * d];
    let mut p = vec![0.0; d * d];
    for (&(a, b), &(k, pv)) in pairs.iter().zip(&values) {
        rank[a * d + b] = k;
        rank[b * d + a] = k;
        p[a * d + b] = pv;
        p[b * d + a] = pv;
    }
    Ok(MatrixReport {
        channel_count: d,
        frequency: spectral.selector,
        epochs: range,
        rank_coherence: rank,
        p_value: p,
    })
}
