//! File formats: spectra CSV, spectrum ingestion, JSON reports, checksums.
//!
//! All numeric output is serialized with 12 significant digits so reruns are
//! byte-comparable while staying far above solver noise.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::Spectrum;
use crate::solver::PortSpectra;
use crate::units;

/// Significant digits used in every exported table and report.
pub const OUTPUT_SIG_DIGITS: usize = 12;

/// Formats with [`OUTPUT_SIG_DIGITS`] significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{:.*e}", OUTPUT_SIG_DIGITS - 1, x)
}

/// Rounds to [`OUTPUT_SIG_DIGITS`] significant digits (for JSON payloads).
pub fn round_sig(x: f64) -> f64 {
    format_sig(x).parse().unwrap_or(x)
}

/// Mandatory header of the spectra CSV.
pub const SPECTRA_HEADER: [&str; 6] = [
    "frequency_THz",
    "detuning_GHz",
    "port",
    "re_amplitude",
    "im_amplitude",
    "intensity",
];

/// Writes a [`PortSpectra`] as CSV: one row per (frequency, port).
pub fn write_port_spectra_csv(spectra: &PortSpectra, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(SPECTRA_HEADER)?;
    for i in 0..spectra.detunings_ghz.len() {
        for (k, port) in spectra.ports.iter().enumerate() {
            let amp = spectra.amplitudes[k][i];
            writer.write_record(&[
                format_sig(spectra.frequency_thz(i)),
                format_sig(spectra.detunings_ghz[i]),
                port.name().to_string(),
                format_sig(amp.re),
                format_sig(amp.im),
                format_sig(amp.norm_sqr()),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Reads back a spectra CSV into per-port intensity tables.
pub struct SpectraTable {
    pub ports: Vec<String>,
    pub detunings_ghz: Vec<f64>,
    pub frequencies_thz: Vec<f64>,
    /// `intensity[k][i]` for port `k`, grid point `i`.
    pub intensity: Vec<Vec<f64>>,
}

pub fn read_port_spectra_csv(path: &Path) -> Result<SpectraTable> {
    let mut reader = csv::Reader::from_path(path)?;
    {
        let headers = reader.headers()?;
        if headers.iter().ne(SPECTRA_HEADER.iter().copied()) {
            return Err(Error::Interface(format!(
                "unexpected spectra CSV header: {headers:?}"
            )));
        }
    }
    let mut ports: Vec<String> = Vec::new();
    let mut detunings: Vec<f64> = Vec::new();
    let mut frequencies: Vec<f64> = Vec::new();
    let mut intensity: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::Interface("short CSV row".into()))?
                .parse::<f64>()
                .map_err(|e| Error::Interface(format!("bad number in CSV: {e}")))
        };
        let freq = parse(0)?;
        let det = parse(1)?;
        let port = record
            .get(2)
            .ok_or_else(|| Error::Interface("short CSV row".into()))?
            .to_string();
        let value = parse(5)?;
        let k = match ports.iter().position(|p| *p == port) {
            Some(k) => k,
            None => {
                ports.push(port);
                intensity.push(Vec::new());
                ports.len() - 1
            }
        };
        if k == 0 {
            detunings.push(det);
            frequencies.push(freq);
        }
        intensity[k].push(value);
    }
    if intensity.iter().any(|col| col.len() != detunings.len()) {
        return Err(Error::Interface(
            "ports do not share one frequency grid in the CSV".into(),
        ));
    }
    Ok(SpectraTable {
        ports,
        detunings_ghz: detunings,
        frequencies_thz: frequencies,
        intensity,
    })
}

/// Ingests a measured spectrum CSV with columns `frequency_THz` (or
/// `detuning_GHz` plus a declared origin), `intensity`, optional `sigma`.
pub fn read_spectrum_csv(path: &Path, origin_thz: Option<f64>) -> Result<Spectrum> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let freq_col = col("frequency_THz");
    let det_col = col("detuning_GHz");
    let int_col = col("intensity")
        .ok_or_else(|| Error::Interface("spectrum CSV needs an 'intensity' column".into()))?;
    let sigma_col = col("sigma");

    let mut detunings = Vec::new();
    let mut freqs = Vec::new();
    let mut intensity = Vec::new();
    let mut sigma = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::Interface("short CSV row".into()))?
                .parse::<f64>()
                .map_err(|e| Error::Interface(format!("bad number in CSV: {e}")))
        };
        if let Some(c) = freq_col {
            freqs.push(parse(c)?);
        } else if let Some(c) = det_col {
            detunings.push(parse(c)?);
        } else {
            return Err(Error::Interface(
                "spectrum CSV needs 'frequency_THz' or 'detuning_GHz'".into(),
            ));
        }
        intensity.push(parse(int_col)?);
        if let Some(c) = sigma_col {
            sigma.push(parse(c)?);
        }
    }
    let spectrum = if let Some(_c) = freq_col {
        Spectrum::from_frequencies(&freqs, intensity)?
    } else {
        let origin = origin_thz.ok_or_else(|| {
            Error::Interface(
                "detuning_GHz data needs a declared origin (pass --origin-thz)".into(),
            )
        })?;
        Spectrum::from_detunings(origin, detunings, intensity)?
    };
    if sigma.is_empty() {
        Ok(spectrum)
    } else {
        spectrum.with_sigma(sigma)
    }
}

/// SHA-256 of a file, hex-encoded.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(sha256_bytes(&bytes))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Convenience: spectra table → fit [`Spectrum`] for one port.
pub fn spectrum_from_table(table: &SpectraTable, port: &str) -> Result<Spectrum> {
    let k = table
        .ports
        .iter()
        .position(|p| p == port)
        .ok_or_else(|| Error::Interface(format!("port '{port}' not present in table")))?;
    let origin = table.frequencies_thz[0] - units::ghz_to_thz(table.detunings_ghz[0]);
    Spectrum::from_detunings(
        origin,
        table.detunings_ghz.clone(),
        table.intensity[k].clone(),
    )
}
