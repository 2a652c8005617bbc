//! Readers and writers for epoched multichannel data.
//!
//! Two layouts are supported:
//!
//! * CSV in long format with the header `channel,epoch,t,value`. Channel,
//!   epoch and sample indices are 1-based. Every `(channel, epoch, t)` cell of
//!   the implied `d x R x T` block must appear exactly once, in any order. The
//!   sampling rate is not part of the file and is supplied by the caller.
//! * Flat binary: a 32-byte header followed by little-endian `f64` samples in
//!   row-major `[channel][epoch][time]` order. Header layout:
//!
//!   | bytes  | content                       |
//!   |--------|-------------------------------|
//!   | 0..8   | magic `SCOP0001`              |
//!   | 8..12  | `d` as little-endian `u32`    |
//!   | 12..16 | `R` as little-endian `u32`    |
//!   | 16..20 | `T` as little-endian `u32`    |
//!   | 20..24 | reserved, must be zero        |
//!   | 24..32 | `fs` as little-endian `f64`   |

use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IngestCode, IngestError, Result};
use crate::output::{csv_text, fmt_float};
use crate::signal::EpochedSeries;

pub const MAGIC: &[u8; 8] = b"SCOP0001";
pub const HEADER_LEN: usize = 32;
pub const CSV_HEADER: [&str; 4] = ["channel", "epoch", "t", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Binary,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "bin" | "binary" => Ok(Format::Binary),
            _ => Err(Error::Validation(format!("unknown data format '{s}'"))),
        }
    }
}

impl Format {
    /// Guesses the format from the file contents, then the extension.
    pub fn detect(path: &Path) -> Result<Self> {
        let mut head = [0u8; 8];
        let n = fs::File::open(path)?.read(&mut head)?;
        if head[..n] == MAGIC[..] {
            return Ok(Format::Binary);
        }
        let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase());
        Ok(match ext.as_deref() {
            Some("bin" | "scop") => Format::Binary,
            _ => Format::Csv,
        })
    }
}

/// Reads a data file. `sampling_rate` is required for CSV and, when given for
/// binary input, must agree with the header.
pub fn ingest(path: &Path, format: Option<Format>, sampling_rate: Option<f64>) -> Result<EpochedSeries> {
    let format = match format {
        Some(f) => f,
        None => Format::detect(path)?,
    };
    let bytes = fs::read(path)?;
    match format {
        Format::Binary => {
            let series = read_binary(&bytes)?;
            if let Some(fs) = sampling_rate {
                if fs != series.sampling_rate() {
                    return Err(Error::Validation(format!(
                        "sampling rate {fs} disagrees with the file header ({})",
                        series.sampling_rate()
                    )));
                }
            }
            Ok(series)
        }
        Format::Csv => {
            let fs =
                sampling_rate.ok_or_else(|| Error::Validation("CSV input needs a sampling rate".into()))?;
            read_csv(&bytes, fs)
        }
    }
}

fn header_error(message: impl Into<String>) -> Error {
    IngestError::new(IngestCode::MalformedHeader, message).into()
}

pub fn read_binary(bytes: &[u8]) -> Result<EpochedSeries> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(IngestError::new(IngestCode::BadMagic, "file does not start with SCOP0001").into());
    }
    if bytes.len() < HEADER_LEN {
        return Err(header_error(format!(
            "header is {} bytes, expected {HEADER_LEN}",
            bytes.len()
        )));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (d, r, t) = (word(8), word(12), word(16));
    if bytes[20..24] != [0; 4] {
        return Err(header_error("reserved header bytes 20..24 are not zero"));
    }
    let fs = f64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    if !(fs.is_finite() && fs > 0.0) {
        return Err(header_error(format!("sampling rate {fs} is not positive")));
    }
    check_shape(d, r, t).map_err(header_error)?;
    let count = d
        .checked_mul(r)
        .and_then(|x| x.checked_mul(t))
        .ok_or_else(|| header_error("dimensions overflow"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * 8 {
        return Err(IngestError::new(
            IngestCode::CountMismatch,
            format!(
                "header declares {d} x {r} x {t} = {count} samples but the body holds {} bytes ({} samples)",
                body.len(),
                body.len() as f64 / 8.0
            ),
        )
        .into());
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in body.chunks_exact(8).enumerate() {
        let x = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !x.is_finite() {
            let (c, rest) = (i / (r * t), i % (r * t));
            return Err(IngestError::new(
                IngestCode::NonFinite,
                format!(
                    "channel {}, epoch {}, t {} holds {x}",
                    c + 1,
                    rest / t + 1,
                    rest % t + 1
                ),
            )
            .into());
        }
        data.push(x);
    }
    EpochedSeries::new(d, r, t, fs, data)
}

fn check_shape(d: usize, r: usize, t: usize) -> std::result::Result<(), String> {
    if d < 1 {
        return Err("at least one channel is required".into());
    }
    if r < 2 {
        return Err(format!("at least 2 epochs are required, got {r}"));
    }
    if t < 2 {
        return Err(format!("at least 2 samples per epoch are required, got {t}"));
    }
    Ok(())
}

pub fn read_csv(bytes: &[u8], sampling_rate: f64) -> Result<EpochedSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| header_error(format!("unreadable header: {e}")))?
        .clone();
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != CSV_HEADER {
        return Err(IngestError::at_row(
            IngestCode::MalformedHeader,
            1,
            format!(
                "expected header {}, found {}",
                CSV_HEADER.join(","),
                names.join(",")
            ),
        )
        .into());
    }

    let mut cells: Vec<(usize, usize, usize, f64, usize)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i + 2, |p| p.line() as usize);
            IngestError::at_row(IngestCode::BadValue, line, e.to_string())
        })?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        if rec.len() != 4 {
            return Err(IngestError::at_row(
                IngestCode::BadValue,
                line,
                format!("expected 4 fields, found {}", rec.len()),
            )
            .into());
        }
        let index = |j: usize| -> Result<usize> {
            match rec[j].parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(IngestError::at_row(
                    IngestCode::BadValue,
                    line,
                    format!("{} '{}' is not a positive integer", CSV_HEADER[j], &rec[j]),
                )
                .into()),
            }
        };
        let (c, e, t) = (index(0)?, index(1)?, index(2)?);
        let value: f64 = rec[3].parse().map_err(|_| {
            IngestError::at_row(
                IngestCode::BadValue,
                line,
                format!("value '{}' is not a number", &rec[3]),
            )
        })?;
        if !value.is_finite() {
            return Err(IngestError::at_row(IngestCode::NonFinite, line, format!("value is {value}")).into());
        }
        cells.push((c, e, t, value, line));
    }
    if cells.is_empty() {
        return Err(IngestError::new(IngestCode::CountMismatch, "no data rows").into());
    }
    let d = cells.iter().map(|c| c.0).max().expect("non-empty") + 1;
    let r = cells.iter().map(|c| c.1).max().expect("non-empty") + 1;
    let t = cells.iter().map(|c| c.2).max().expect("non-empty") + 1;
    check_shape(d, r, t).map_err(|m| Error::from(IngestError::new(IngestCode::CountMismatch, m)))?;

    let mut data = vec![0.0; d * r * t];
    let mut seen = vec![false; d * r * t];
    for &(c, e, s, value, line) in &cells {
        let at = (c * r + e) * t + s;
        if seen[at] {
            return Err(IngestError::at_row(
                IngestCode::DuplicateSample,
                line,
                format!("channel {}, epoch {}, t {} appears twice", c + 1, e + 1, s + 1),
            )
            .into());
        }
        seen[at] = true;
        data[at] = value;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let (c, rest) = (missing / (r * t), missing % (r * t));
        return Err(IngestError::new(
            IngestCode::MissingSample,
            format!(
                "{} of {} cells present; first missing is channel {}, epoch {}, t {}",
                cells.len(),
                d * r * t,
                c + 1,
                rest / t + 1,
                rest % t + 1
            ),
        )
        .into());
    }
    EpochedSeries::new(d, r, t, sampling_rate, data)
}

pub fn to_binary(series: &EpochedSeries) -> Result<Vec<u8>> {
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| Error::Validation(format!("dimension {n} does not fit in 32 bits")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * series.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&dim(series.channel_count())?.to_le_bytes());
    out.extend_from_slice(&dim(series.epoch_count())?.to_le_bytes());
    out.extend_from_slice(&dim(series.samples_per_epoch())?.to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&series.sampling_rate().to_le_bytes());
    for x in series.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

/// Long-format CSV; values are written with 17 significant digits so reading
/// the file back reproduces every sample exactly.
pub fn to_csv(series: &EpochedSeries) -> Result<Vec<u8>> {
    let (r, t) = (series.epoch_count(), series.samples_per_epoch());
    let rows: Vec<Vec<String>> = series
        .data()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let (c, rest) = (i / (r * t), i % (r * t));
            vec![
                (c + 1).to_string(),
                (rest / t + 1).to_string(),
                (rest % t + 1).to_string(),
                fmt_float(*x),
            ]
        })
        .collect();
    csv_text(&CSV_HEADER, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EpochedSeries {
        let data: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin() * 1e3 + 0.1).collect();
        EpochedSeries::new(2, 3, 4, 250.0, data).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let s = small();
        let bytes = to_binary(&s).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 24 * 8);
        assert_eq!(read_binary(&bytes).unwrap(), s);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = small();
        let back = read_csv(&to_csv(&s).unwrap(), 250.0).unwrap();
        assert_eq!(back.channel_count(), 2);
        assert_eq!(back.epoch_count(), 3);
        assert_eq!(back.samples_per_epoch(), 4);
        assert!(back
            .data()
            .iter()
            .zip(s.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    fn code(err: Error) -> (IngestCode, Option<usize>) {
        match err {
            Error::Ingest(e) => (e.code, e.row),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn binary_errors_have_distinct_codes() {
        let good = to_binary(&small()).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(code(read_binary(&bad).unwrap_err()).0, IngestCode::BadMagic);
        assert_eq!(
            code(read_binary(&good[..20]).unwrap_err()).0,
            IngestCode::MalformedHeader
        );
        let mut zero_epochs = good.clone();
        zero_epochs[12..16].copy_from_slice(&0u32.to_le_bytes());
        assert_eq!(
            code(read_binary(&zero_epochs).unwrap_err()).0,
            IngestCode::MalformedHeader
        );
        assert_eq!(
            code(read_binary(&good[..good.len() - 8]).unwrap_err()).0,
            IngestCode::CountMismatch
        );
        let mut nan = good;
        nan[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(code(read_binary(&nan).unwrap_err()).0, IngestCode::NonFinite);
    }

    #[test]
    fn csv_errors_report_rows() {
        let text = "channel,epoch,t,value\n1,1,1,0.5\n1,1,2,NaN\n";
        assert_eq!(
            code(read_csv(text.as_bytes(), 1.0).unwrap_err()),
            (IngestCode::NonFinite, Some(3))
        );
        let text = "chan,epoch,t,value\n1,1,1,0.5\n";
        assert_eq!(
            code(read_csv(text.as_bytes(), 1.0).unwrap_err()).0,
            IngestCode::MalformedHeader
        );
        let text = "channel,epoch,t,value\n1,1,1,0.5\n1,1,2,1\n1,2,1,1\n";
        assert_eq!(
            code(read_csv(text.as_bytes(), 1.0).unwrap_err()).0,
            IngestCode::MissingSample
        );
        let text = "channel,epoch,t,value\n1,1,1,0.5\n1,1,2,1\n1,2,1,1\n1,2,2,1\n1,1,2,3\n";
        assert_eq!(
            code(read_csv(text.as_bytes(), 1.0).unwrap_err()),
            (IngestCode::DuplicateSample, Some(6))
        );
        let text = "channel,epoch,t,value\n1,1,x,0.5\n";
        assert_eq!(
            code(read_csv(text.as_bytes(), 1.0).unwrap_err()),
            (IngestCode::BadValue, Some(2))
        );
    }
}
