//! Epoched multichannel series, the normalized DFT, frequency bookkeeping and
//! AR(2) theoretical spectra.
//!
//! Fourier coefficients use the unitary normalization
//! `f[k] = T^{-1/2} * sum_t x[t] * exp(-i 2 pi k t / T)` with `t = 0..T-1`.
//! Starting the time index at 1 instead would only rotate each coefficient by a
//! unit-modulus phase, so every magnitude is unaffected.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `d x R x T` block of samples: `d` channels, `R` epochs of `T` samples each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochedSeries {
    channels: usize,
    epochs: usize,
    samples: usize,
    sampling_rate: f64,
    /// Row-major `[channel][epoch][time]`.
    data: Vec<f64>,
}

impl EpochedSeries {
    pub fn new(
        channels: usize,
        epochs: usize,
        samples: usize,
        sampling_rate: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if channels < 1 {
            return Err(Error::Validation("at least one channel is required".into()));
        }
        if epochs < 2 {
            return Err(Error::TooFew {
                needed: 2,
                got: epochs,
            });
        }
        if samples < 2 {
            return Err(Error::Validation(format!(
                "epochs need at least 2 samples, got {samples}"
            )));
        }
        if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
            return Err(Error::Validation(format!(
                "sampling rate must be positive, got {sampling_rate}"
            )));
        }
        let expected = channels * epochs * samples;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: expected,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite sample at flat position {pos}"
            )));
        }
        Ok(Self {
            channels,
            epochs,
            samples,
            sampling_rate,
            data,
        })
    }

    /// Builds a series from per-channel `R x T` matrices (outer index = epoch).
    pub fn from_channels(channels: &[Vec<Vec<f64>>], sampling_rate: f64) -> Result<Self> {
        let d = channels.len();
        let r = channels.first().map_or(0, Vec::len);
        let t = channels.first().and_then(|c| c.first()).map_or(0, Vec::len);
        let mut data = Vec::with_capacity(d * r * t);
        for ch in channels {
            if ch.len() != r {
                return Err(Error::LengthMismatch {
                    left: ch.len(),
                    right: r,
                });
            }
            for epoch in ch {
                if epoch.len() != t {
                    return Err(Error::LengthMismatch {
                        left: epoch.len(),
                        right: t,
                    });
                }
                data.extend_from_slice(epoch);
            }
        }
        Self::new(d, r, t, sampling_rate, data)
    }

    /// Cuts continuous per-channel recordings into epochs of `epoch_len`
    /// samples whose starts are `stride` samples apart. `stride == epoch_len`
    /// gives contiguous non-overlapping epochs; a smaller stride overlaps them.
    pub fn from_continuous(
        recordings: &[Vec<f64>],
        sampling_rate: f64,
        epoch_len: usize,
        stride: usize,
    ) -> Result<Self> {
        if stride == 0 || epoch_len == 0 {
            return Err(Error::Validation(
                "epoch length and stride must be positive".into(),
            ));
        }
        let len = recordings.first().map_or(0, Vec::len);
        if let Some(bad) = recordings.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: len,
            });
        }
        if len < epoch_len {
            return Err(Error::TooFew {
                needed: epoch_len,
                got: len,
            });
        }
        let epochs = (len - epoch_len) / stride + 1;
        let mut data = Vec::with_capacity(recordings.len() * epochs * epoch_len);
        for rec in recordings {
            for e in 0..epochs {
                let start = e * stride;
                data.extend_from_slice(&rec[start..start + epoch_len]);
            }
        }
        Self::new(recordings.len(), epochs, epoch_len, sampling_rate, data)
    }

    /// Concatenates each channel's epochs and re-segments with a new epoch
    /// length and stride.
    pub fn re_epoch(&self, epoch_len: usize, stride: usize) -> Result<Self> {
        let recordings: Vec<Vec<f64>> = (0..self.channels)
            .map(|c| {
                let per = self.epochs * self.samples;
                self.data[c * per..(c + 1) * per].to_vec()
            })
            .collect();
        Self::from_continuous(&recordings, self.sampling_rate, epoch_len, stride)
    }

    pub fn channel_count(&self) -> usize {
        self.channels
    }

    pub fn epoch_count(&self) -> usize {
        self.epochs
    }

    pub fn samples_per_epoch(&self) -> usize {
        self.samples
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn nyquist(&self) -> f64 {
        self.sampling_rate / 2.0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Samples of one epoch of one channel (both 0-based).
    pub fn epoch(&self, channel: usize, epoch: usize) -> Result<&[f64]> {
        self.check_channel(channel)?;
        if epoch >= self.epochs {
            return Err(Error::OutOfRange {
                what: "epoch",
                index: epoch,
                limit: self.epochs,
            });
        }
        let start = (channel * self.epochs + epoch) * self.samples;
        Ok(&self.data[start..start + self.samples])
    }

    fn check_channel(&self, channel: usize) -> Result<()> {
        if channel >= self.channels {
            return Err(Error::OutOfRange {
                what: "channel",
                index: channel,
                limit: self.channels,
            });
        }
        Ok(())
    }

    fn check_frequency(&self, k: usize) -> Result<()> {
        if k >= self.samples {
            return Err(Error::OutOfRange {
                what: "frequency",
                index: k,
                limit: self.samples,
            });
        }
        Ok(())
    }
}

/// All Fourier coefficients of one channel: an `R x T` complex matrix.
#[derive(Debug, Clone)]
pub struct FourierCoefficients {
    pub channel: usize,
    epochs: usize,
    samples: usize,
    values: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn epoch(&self, r: usize) -> &[Complex64] {
        &self.values[r * self.samples..(r + 1) * self.samples]
    }

    /// The length-`R` vector of coefficients at frequency index `k`.
    pub fn at(&self, k: usize) -> Vec<Complex64> {
        (0..self.epochs)
            .map(|r| self.values[r * self.samples + k])
            .collect()
    }

    pub fn epoch_count(&self) -> usize {
        self.epochs
    }

    pub fn samples_per_epoch(&self) -> usize {
        self.samples
    }
}

/// Magnitudes `|f_k^{(r)}|` of one channel at one frequency index, over epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMagnitudes {
    pub channel: usize,
    pub frequency_index: usize,
    pub values: Vec<f64>,
}

fn check_finite(x: &[f64]) -> Result<()> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("non-finite sample at position {pos}")));
    }
    Ok(())
}

/// Normalized DFT of one epoch.
pub fn dft_epoch(x: &[f64]) -> Result<Vec<Complex64>> {
    if x.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: x.len(),
        });
    }
    check_finite(x)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(x.len());
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let scale = 1.0 / (x.len() as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= scale);
    Ok(buf)
}

/// Evaluates a single DFT bin for many epochs of the same length.
///
/// Twiddles are tabulated once as `exp(-i 2 pi m / T)` for `m = 0..T-1` and
/// looked up at `m = (k t) mod T`, so every term uses an exactly reduced angle.
#[derive(Debug, Clone)]
pub struct BinEvaluator {
    k: usize,
    twiddles: Vec<Complex64>,
    scale: f64,
}

impl BinEvaluator {
    pub fn new(samples: usize, k: usize) -> Self {
        let twiddles = (0..samples)
            .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / samples as f64))
            .collect();
        Self {
            k,
            twiddles,
            scale: 1.0 / (samples as f64).sqrt(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.twiddles.len());
        let n = self.twiddles.len();
        let step = self.k % n;
        let mut idx = 0usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for &v in x {
            acc += self.twiddles[idx] * v;
            idx += step;
            if idx >= n {
                idx -= n;
            }
        }
        acc * self.scale
    }
}

/// Full DFT of every epoch of one channel.
pub fn fourier_coefficients(series: &EpochedSeries, channel: usize) -> Result<FourierCoefficients> {
    series.check_channel(channel)?;
    let t = series.samples;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(t);
    let scale = 1.0 / (t as f64).sqrt();
    let mut values = Vec::with_capacity(series.epochs * t);
    for r in 0..series.epochs {
        let mut buf: Vec<Complex64> = series
            .epoch(channel, r)?
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft.process(&mut buf);
        values.extend(buf.into_iter().map(|c| c * scale));
    }
    Ok(FourierCoefficients {
        channel,
        epochs: series.epochs,
        samples: t,
        values,
    })
}

/// Length-`R` vector of coefficients of one channel at frequency index `k`.
pub fn coefficients_at(series: &EpochedSeries, channel: usize, k: usize) -> Result<Vec<Complex64>> {
    series.check_channel(channel)?;
    series.check_frequency(k)?;
    let bin = BinEvaluator::new(series.samples, k);
    (0..series.epochs)
        .map(|r| series.epoch(channel, r).map(|x| bin.eval(x)))
        .collect()
}

/// `delta_{l, k}`: magnitudes of channel `channel` at frequency index `k` over all epochs.
pub fn magnitudes(series: &EpochedSeries, channel: usize, k: usize) -> Result<SpectralMagnitudes> {
    let values = coefficients_at(series, channel, k)?
        .into_iter()
        .map(|c| c.norm())
        .collect();
    Ok(SpectralMagnitudes {
        channel,
        frequency_index: k,
        values,
    })
}

/// Per-epoch sum of magnitudes over the frequency indices of a band.
pub fn band_magnitudes(series: &EpochedSeries, channel: usize, indices: &[usize]) -> Result<Vec<f64>> {
    let mut sums = vec![0.0; series.epochs];
    for &k in indices {
        let m = magnitudes(series, channel, k)?;
        sums.iter_mut().zip(m.values).for_each(|(s, v)| *s += v);
    }
    Ok(sums)
}

/// Nearest frequency index for `hz`: `round(hz * T / fs)`.
pub fn hz_to_index(hz: f64, samples: usize, sampling_rate: f64) -> Result<usize> {
    let nyquist = sampling_rate / 2.0;
    if !(hz.is_finite() && (0.0..=nyquist).contains(&hz)) {
        return Err(Error::AboveNyquist { hz, nyquist });
    }
    Ok((hz * samples as f64 / sampling_rate).round() as usize)
}

/// Frequency in Hz of index `k`.
pub fn index_to_hz(k: usize, samples: usize, sampling_rate: f64) -> f64 {
    k as f64 * sampling_rate / samples as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
    Custom,
}

/// A half-open frequency interval `[lower, upper)` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub name: BandName,
    pub lower: f64,
    pub upper: f64,
}

impl FrequencyBand {
    pub fn delta() -> Self {
        Self::named(BandName::Delta, 0.0, 4.0)
    }

    pub fn theta() -> Self {
        Self::named(BandName::Theta, 4.0, 8.0)
    }

    pub fn alpha() -> Self {
        Self::named(BandName::Alpha, 8.0, 12.0)
    }

    pub fn beta() -> Self {
        Self::named(BandName::Beta, 12.0, 30.0)
    }

    /// Gamma has no upper edge of its own; it runs up to Nyquist.
    pub fn gamma(sampling_rate: f64) -> Self {
        Self::named(BandName::Gamma, 30.0, sampling_rate / 2.0)
    }

    pub fn custom(lower: f64, upper: f64) -> Self {
        Self::named(BandName::Custom, lower, upper)
    }

    fn named(name: BandName, lower: f64, upper: f64) -> Self {
        Self { name, lower, upper }
    }

    /// Parses `delta`, `theta`, `alpha`, `beta`, `gamma` or `LOW-HIGH` (Hz).
    pub fn parse(text: &str, sampling_rate: f64) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "delta" => Ok(Self::delta()),
            "theta" => Ok(Self::theta()),
            "alpha" => Ok(Self::alpha()),
            "beta" => Ok(Self::beta()),
            "gamma" => Ok(Self::gamma(sampling_rate)),
            other => {
                let (lo, hi) = other
                    .split_once('-')
                    .ok_or_else(|| Error::Validation(format!("unknown band '{text}'")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Validation(format!("bad band edge '{s}'")))
                };
                Ok(Self::custom(parse(lo)?, parse(hi)?))
            }
        }
    }

    pub fn validate(&self, sampling_rate: f64) -> Result<()> {
        let nyquist = sampling_rate / 2.0;
        if !(self.lower >= 0.0 && self.lower < self.upper && self.upper <= nyquist) {
            return Err(Error::Validation(format!(
                "band [{}, {}) must satisfy 0 <= lower < upper <= {nyquist}",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Every `k` with `lower <= k fs / T < upper`.
pub fn band_indices(band: &FrequencyBand, samples: usize, sampling_rate: f64) -> Result<Vec<usize>> {
    band.validate(sampling_rate)?;
    let resolution = sampling_rate / samples as f64;
    let indices: Vec<usize> = (0..=samples / 2)
        .filter(|&k| {
            let hz = k as f64 * resolution;
            hz >= band.lower && hz < band.upper
        })
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptyBand {
            lower: band.lower,
            upper: band.upper,
            resolution,
        });
    }
    Ok(indices)
}

/// Both roots of `1 - phi1 z - phi2 z^2` lie strictly outside the unit circle.
pub fn ar2_is_stationary(phi1: f64, phi2: f64) -> bool {
    phi1.is_finite() && phi2.is_finite() && phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0 && phi2.abs() < 1.0
}

/// Spectral density of an AR(2) process at `omega` cycles per sample:
/// `sigma2 / |1 - phi1 e^{-i 2 pi omega} - phi2 e^{-i 4 pi omega}|^2`.
pub fn ar2_theoretical_spectrum(phi1: f64, phi2: f64, sigma2: f64, omega: f64) -> Result<f64> {
    if !ar2_is_stationary(phi1, phi2) {
        return Err(Error::NonStationary { phi1, phi2 });
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Validation(format!(
            "innovation variance must be positive, got {sigma2}"
        )));
    }
    let z1 = Complex64::from_polar(1.0, -2.0 * PI * omega);
    let z2 = Complex64::from_polar(1.0, -4.0 * PI * omega);
    let denom = Complex64::new(1.0, 0.0) - z1 * phi1 - z2 * phi2;
    Ok(sigma2 / denom.norm_sqr())
}

/// Frequency (cycles/sample, in `[0, 0.5]`) where an AR(2) spectrum peaks.
///
/// The interior maximum satisfies `cos(2 pi omega) = phi1 (phi2 - 1) / (4 phi2)`;
/// when that lies outside `[-1, 1]` the peak is at an endpoint.
pub fn ar2_peak_frequency(phi1: f64, phi2: f64) -> Result<f64> {
    if !ar2_is_stationary(phi1, phi2) {
        return Err(Error::NonStationary { phi1, phi2 });
    }
    let at = |w: f64| ar2_theoretical_spectrum(phi1, phi2, 1.0, w);
    let mut best = if at(0.0)? >= at(0.5)? { 0.0 } else { 0.5 };
    if phi2 != 0.0 {
        let c = phi1 * (phi2 - 1.0) / (4.0 * phi2);
        if (-1.0..=1.0).contains(&c) {
            let w = c.acos() / (2.0 * PI);
            if at(w)? > at(best)? {
                best = w;
            }
        }
    }
    Ok(best)
}
