//! Named reproduction scenarios, deterministic output bundles, and
//! simulated-vs-reference comparison.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::background::BackgroundModel;
use crate::fit::fano::{fit_fano, FanoFitOptions, FanoFitResult};
use crate::fit::waterfall::{track_waterfall, WaterfallOptions};
use crate::fit::Spectrum;
use crate::io::{
    format_sig, read_port_spectra_csv, round_sig, sha256_bytes, sha256_file,
    write_port_spectra_csv, SpectraTable,
};
use crate::metrics::{metrics_from_linewidth, metrics_from_model, Provenance, QedMetrics};
use crate::model::{apply_stark, linspace, save_model, DriveSpec, Port, SystemModel};
use crate::solver::{effective_emitter_response, port_spectrum};
use crate::units;

/// Environment variable overriding the worker-pool size.
pub const WORKERS_ENV: &str = "DISC_QED_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// One spectrum over the model's own drive grid.
    LaserFrequency,
    /// Move the resonator (all pairs rigidly), hold the emitters, Fano-fit
    /// the drop spectrum at every detuning Δ = ω_m − ω_r (GHz).
    CavityDetuning { detunings_ghz: Vec<f64> },
    /// Apply each voltage and record the drop spectrum (volts, increasing).
    StarkVoltage { voltages_v: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PostProcessing {
    pub fit_drop: bool,
    pub metrics: bool,
    pub waterfall: bool,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: SystemModel,
    pub axis: SweepAxis,
    pub ports: Vec<Port>,
    pub post: PostProcessing,
}

/// Names accepted by [`Scenario::preset`].
pub const PRESET_NAMES: [&str; 5] = ["fig1c", "fig2a", "fig2d", "fig3a", "fig3ef"];

impl Scenario {
    /// A named preset applied to a base model.
    pub fn preset(name: &str, model: &SystemModel) -> Result<Scenario> {
        let model = model.clone();
        match name {
            "fig1c" => Ok(Scenario {
                name: name.into(),
                model,
                axis: SweepAxis::LaserFrequency,
                ports: vec![Port::Drop, Port::Add, Port::Transmission],
                post: PostProcessing::default(),
            }),
            "fig2a" => Ok(Scenario {
                name: name.into(),
                model,
                axis: SweepAxis::LaserFrequency,
                ports: vec![
                    Port::Drop,
                    Port::Add,
                    Port::Transmission,
                    Port::Interferometer1,
                    Port::Interferometer2,
                ],
                post: PostProcessing {
                    fit_drop: true,
                    metrics: true,
                    waterfall: false,
                },
            }),
            "fig2d" => {
                if model.emitters.is_empty() {
                    return Err(Error::Validation(
                        "fig2d needs a model with at least one emitter".into(),
                    ));
                }
                let kappa = model.fundamental().total_linewidth_ghz;
                Ok(Scenario {
                    name: name.into(),
                    model,
                    axis: SweepAxis::CavityDetuning {
                        detunings_ghz: linspace(-8.0 * kappa, 8.0 * kappa, 65),
                    },
                    ports: vec![Port::Drop],
                    post: PostProcessing {
                        fit_drop: true,
                        metrics: false,
                        waterfall: false,
                    },
                })
            }
            "fig3a" => Ok(Scenario {
                name: name.into(),
                model,
                axis: SweepAxis::StarkVoltage {
                    voltages_v: linspace(-160.0, 0.0, 33),
                },
                ports: vec![Port::Drop],
                post: PostProcessing {
                    fit_drop: false,
                    metrics: false,
                    waterfall: true,
                },
            }),
            "fig3ef" => Ok(Scenario {
                name: name.into(),
                model,
                axis: SweepAxis::LaserFrequency,
                ports: vec![Port::Drop, Port::Interferometer1],
                post: PostProcessing::default(),
            }),
            other => Err(Error::Interface(format!(
                "unknown scenario preset '{other}' (available: {PRESET_NAMES:?})"
            ))),
        }
    }

    /// A custom scenario: the model's own drive grid and an explicit port list.
    pub fn custom(model: &SystemModel, ports: Vec<Port>) -> Scenario {
        Scenario {
            name: "custom".into(),
            model: model.clone(),
            axis: SweepAxis::LaserFrequency,
            ports,
            post: PostProcessing::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.ports.is_empty() {
            return Err(Error::Validation("scenario has an empty port list".into()));
        }
        if self.ports.contains(&Port::Input) {
            return Err(Error::Validation("'input' is not an output port".into()));
        }
        match &self.axis {
            SweepAxis::LaserFrequency => {}
            SweepAxis::CavityDetuning { detunings_ghz: g } | SweepAxis::StarkVoltage { voltages_v: g } => {
                if g.is_empty() {
                    return Err(Error::Validation("sweep grid is empty".into()));
                }
                if g.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation(
                        "sweep grid must be strictly increasing".into(),
                    ));
                }
            }
        }
        if matches!(self.axis, SweepAxis::CavityDetuning { .. }) && self.model.emitters.is_empty() {
            return Err(Error::Validation(
                "cavity-detuning sweeps need at least one emitter".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Manifest and reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub tool_version: String,
    pub config_sha256: String,
    /// Relative output path → SHA-256 of the file bytes.
    pub outputs: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitErrors {
    pub omega_m_thz: f64,
    pub gamma_mhz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub port: String,
    pub omega_m_thz: f64,
    pub gamma_mhz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
    pub errors: FitErrors,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub under_resolved: bool,
}

impl FitReport {
    pub fn from_result(port: &str, fit: &FanoFitResult) -> FitReport {
        let line = fit.line();
        FitReport {
            port: port.to_string(),
            omega_m_thz: round_sig(line.omega_m_thz),
            gamma_mhz: round_sig(line.gamma_mhz),
            amplitude: round_sig(line.amplitude),
            phase_rad: round_sig(line.phase_rad),
            errors: FitErrors {
                omega_m_thz: round_sig(line.omega_m_error_thz),
                gamma_mhz: round_sig(line.gamma_error_mhz),
                amplitude: round_sig(line.amplitude_error),
                phase_rad: round_sig(line.phase_error_rad),
            },
            residual_norm: round_sig(fit.residual_norm),
            iterations: fit.iterations,
            converged: fit.converged,
            under_resolved: fit.under_resolved,
        }
    }
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .filter(|n| *n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Drop-port spectrum divided by its molecule-free twin: the exact resonator
/// profile drops out and the Fano factor is fit against a unit background.
fn drop_ratio_spectrum(model: &SystemModel) -> Result<Spectrum> {
    let with = port_spectrum(model, &[Port::Drop])?;
    let mut bare_model = model.clone();
    bare_model.emitters.clear();
    let bare = port_spectrum(&bare_model, &[Port::Drop])?;
    let with_i = with.intensities(Port::Drop).unwrap();
    let bare_i = bare.intensities(Port::Drop).unwrap();
    let ratio: Vec<f64> = with_i
        .iter()
        .zip(&bare_i)
        .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
        .collect();
    Spectrum::from_detunings(with.origin_thz, with.detunings_ghz.clone(), ratio)
}

fn fit_drop_line(model: &SystemModel) -> Result<FanoFitResult> {
    let ratio = drop_ratio_spectrum(model)?;
    fit_fano(
        &ratio,
        &BackgroundModel::constant(1.0),
        &FanoFitOptions::default(),
    )
}

struct Bundle {
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
    timings: BTreeMap<String, f64>,
}

impl Bundle {
    fn new(dir: &Path) -> Result<Bundle> {
        std::fs::create_dir_all(dir)?;
        std::fs::create_dir_all(dir.join("spectra"))?;
        Ok(Bundle {
            dir: dir.to_path_buf(),
            outputs: BTreeMap::new(),
            timings: BTreeMap::new(),
        })
    }

    fn record(&mut self, rel: &str) -> Result<()> {
        let hash = sha256_file(&self.dir.join(rel))?;
        self.outputs.insert(rel.to_string(), hash);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(self.dir.join(rel), text)?;
        self.record(rel)
    }
}

/// Runs a scenario into `out_dir`, returning the manifest (also written as
/// `manifest.json`). Sweep points are dispatched to a dedicated worker pool;
/// outputs are assembled in grid order, so reruns are byte-identical
/// regardless of `workers`.
pub fn run_scenario(
    scenario: &Scenario,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<RunManifest> {
    scenario.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(workers))
        .build()
        .map_err(|e| Error::Interface(format!("worker pool: {e}")))?;
    pool.install(|| run_scenario_inner(scenario, out_dir))
}

fn run_scenario_inner(scenario: &Scenario, out_dir: &Path) -> Result<RunManifest> {
    let mut bundle = Bundle::new(out_dir)?;
    let started = Instant::now();
    let model = &scenario.model;

    match &scenario.axis {
        SweepAxis::LaserFrequency => {
            let t0 = Instant::now();
            let spectra = port_spectrum(model, &scenario.ports)?;
            bundle
                .timings
                .insert("solve_ms".into(), t0.elapsed().as_secs_f64() * 1e3);
            write_port_spectra_csv(&spectra, &bundle.dir.join("spectra/step_000.csv"))?;
            bundle.record("spectra/step_000.csv")?;

            if scenario.post.fit_drop {
                let t0 = Instant::now();
                let fit = fit_drop_line(model)?;
                bundle
                    .timings
                    .insert("fit_ms".into(), t0.elapsed().as_secs_f64() * 1e3);
                let report = FitReport::from_result("drop", &fit);
                bundle.write_json("fits.json", &report)?;
                if scenario.post.metrics {
                    let reports = build_metrics(model, Some(&fit))?;
                    bundle.write_json("metrics.json", &reports)?;
                }
            } else if scenario.post.metrics {
                let reports = build_metrics(model, None)?;
                bundle.write_json("metrics.json", &reports)?;
            }
        }
        SweepAxis::CavityDetuning { detunings_ghz } => {
            let t0 = Instant::now();
            let rows: Vec<DetuningRow> = detunings_ghz
                .par_iter()
                .map(|delta| detuning_row(model, *delta))
                .collect::<Result<Vec<_>>>()?;
            bundle
                .timings
                .insert("sweep_ms".into(), t0.elapsed().as_secs_f64() * 1e3);
            write_detuning_csv(&rows, &bundle.dir.join("linewidth_vs_detuning.csv"))?;
            bundle.record("linewidth_vs_detuning.csv")?;
            let fits: Vec<&FitReport> = rows.iter().map(|r| &r.fit).collect();
            bundle.write_json("fits.json", &fits)?;
        }
        SweepAxis::StarkVoltage { voltages_v } => {
            let t0 = Instant::now();
            let spectra: Vec<_> = voltages_v
                .par_iter()
                .map(|v| -> Result<_> {
                    let shifted = apply_stark(model, *v)?;
                    port_spectrum(&shifted, &scenario.ports)
                })
                .collect::<Result<Vec<_>>>()?;
            bundle
                .timings
                .insert("sweep_ms".into(), t0.elapsed().as_secs_f64() * 1e3);
            for (s, spectrum) in spectra.iter().enumerate() {
                let rel = format!("spectra/step_{s:03}.csv");
                write_port_spectra_csv(spectrum, &bundle.dir.join(&rel))?;
                bundle.record(&rel)?;
            }
            if scenario.post.waterfall {
                let t0 = Instant::now();
                let series: Vec<Spectrum> = spectra
                    .iter()
                    .map(|sp| {
                        let drop = sp.intensities(Port::Drop).ok_or_else(|| {
                            Error::Validation("waterfall needs the drop port".into())
                        })?;
                        Spectrum::from_detunings(sp.origin_thz, sp.detunings_ghz.clone(), drop)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let waterfall = track_waterfall(
                    &series,
                    &WaterfallOptions {
                        n_molecules: model.emitters.len().max(1),
                        ..Default::default()
                    },
                )?;
                bundle
                    .timings
                    .insert("waterfall_ms".into(), t0.elapsed().as_secs_f64() * 1e3);
                write_waterfall_csv(voltages_v, &waterfall, &bundle.dir.join("waterfall.csv"))?;
                bundle.record("waterfall.csv")?;
            }
        }
    }

    bundle
        .timings
        .insert("total_ms".into(), started.elapsed().as_secs_f64() * 1e3);
    let manifest = RunManifest {
        scenario: scenario.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_bytes(save_model(model)?.as_bytes()),
        outputs: bundle.outputs.clone(),
        timings_ms: bundle.timings.clone(),
    };
    std::fs::write(
        bundle.dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize)]
struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    fitted: Option<QedMetrics>,
    configured: Vec<QedMetrics>,
}

fn build_metrics(model: &SystemModel, fit: Option<&FanoFitResult>) -> Result<MetricsReport> {
    let fitted = match (fit, model.emitters.first()) {
        (Some(f), Some(e)) => Some(metrics_from_linewidth(
            f.line().gamma_mhz,
            e.free_space_linewidth_mhz + 2.0 * e.pure_dephasing_mhz,
            e.free_space_branching,
            Provenance::Fitted,
        )?),
        _ => None,
    };
    let configured = (0..model.emitters.len())
        .map(|j| metrics_from_model(model, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport { fitted, configured })
}

struct DetuningRow {
    detuning_ghz: f64,
    gamma_fit_mhz: f64,
    gamma_eliminated_mhz: f64,
    lamb_shift_mhz: f64,
    center_offset_mhz: f64,
    fit: FitReport,
}

/// One point of the linewidth-vs-detuning curve: shift the resonator, window
/// the drive around the molecule, fit the simulated drop line.
fn detuning_row(model: &SystemModel, delta_ghz: f64) -> Result<DetuningRow> {
    let response = effective_emitter_response(model, 0, delta_ghz)?;
    let omega_m = model.emitters[0].transition_frequency_thz;

    let mut probe = model.clone();
    let fundamental = probe.fundamental_index();
    let target = omega_m - units::ghz_to_thz(delta_ghz);
    let shift = target - probe.mode_pairs[fundamental].center_frequency_thz;
    for pair in &mut probe.mode_pairs {
        pair.center_frequency_thz += shift;
    }
    let window = (15.0 * units::mhz_to_ghz(response.gamma_eff_mhz)).clamp(0.35, 2.5);
    probe.drive = DriveSpec::grid(omega_m, -window, window, 601);

    let fit = fit_drop_line(&probe)?;
    let line = fit.line();
    Ok(DetuningRow {
        detuning_ghz: delta_ghz,
        gamma_fit_mhz: line.gamma_mhz,
        gamma_eliminated_mhz: response.gamma_eff_mhz,
        lamb_shift_mhz: response.lamb_shift_mhz,
        center_offset_mhz: units::ghz_to_mhz(units::detuning_ghz(line.omega_m_thz, omega_m)),
        fit: FitReport::from_result("drop", &fit),
    })
}

fn write_detuning_csv(rows: &[DetuningRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "detuning_GHz",
        "gamma_fit_MHz",
        "gamma_eliminated_MHz",
        "lamb_shift_MHz",
        "center_offset_MHz",
    ])?;
    for row in rows {
        writer.write_record(&[
            format_sig(row.detuning_ghz),
            format_sig(row.gamma_fit_mhz),
            format_sig(row.gamma_eliminated_mhz),
            format_sig(row.lamb_shift_mhz),
            format_sig(row.center_offset_mhz),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn write_waterfall_csv(
    voltages: &[f64],
    waterfall: &crate::fit::waterfall::Waterfall,
    path: &Path,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "voltage_V",
        "molecule",
        "found",
        "omega_m_THz",
        "gamma_MHz",
        "amplitude",
    ])?;
    for (s, voltage) in voltages.iter().enumerate() {
        for (t, track) in waterfall.tracks.iter().enumerate() {
            match &track[s] {
                Some(p) => writer.write_record(&[
                    format_sig(*voltage),
                    t.to_string(),
                    "1".into(),
                    format_sig(p.omega_m_thz),
                    format_sig(p.gamma_mhz),
                    format_sig(p.amplitude),
                ])?,
                None => writer.write_record(&[
                    format_sig(*voltage),
                    t.to_string(),
                    "0".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?,
            }
        }
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Reference comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
pub struct ToleranceSpec {
    /// Maximum |deviation| / max(reference intensity), per port.
    pub max_rel: Option<f64>,
    /// RMS deviation / max(reference intensity), per port.
    pub rms_rel: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PortDeviation {
    pub port: String,
    pub max_abs: f64,
    pub rms_abs: f64,
    pub max_rel: f64,
    pub rms_rel: f64,
    pub pass: bool,
    /// Detuning (GHz) where the largest deviation sits.
    pub worst_detuning_ghz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub ports: Vec<PortDeviation>,
    pub pass: bool,
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// Compares a simulated spectra table against a reference table, port by
/// port. Without `interpolate` the grids must agree exactly.
pub fn compare_tables(
    simulated: &SpectraTable,
    reference: &SpectraTable,
    tol: &ToleranceSpec,
    interpolate: bool,
) -> Result<ComparisonReport> {
    let grids_match = simulated.detunings_ghz.len() == reference.detunings_ghz.len()
        && simulated
            .detunings_ghz
            .iter()
            .zip(&reference.detunings_ghz)
            .all(|(a, b)| (a - b).abs() <= 1e-9);
    if !grids_match && !interpolate {
        return Err(Error::Interface(
            "frequency grids differ; enable interpolation to compare".into(),
        ));
    }
    let mut ports = Vec::new();
    for (k_ref, port) in reference.ports.iter().enumerate() {
        let k_sim = simulated
            .ports
            .iter()
            .position(|p| p == port)
            .ok_or_else(|| Error::Interface(format!("port '{port}' missing from simulation")))?;
        let ref_i = &reference.intensity[k_ref];
        let sim_i: Vec<f64> = if grids_match {
            simulated.intensity[k_sim].clone()
        } else {
            reference
                .detunings_ghz
                .iter()
                .map(|d| {
                    interp_linear(&simulated.detunings_ghz, &simulated.intensity[k_sim], *d)
                })
                .collect()
        };
        let scale = ref_i.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-30);
        let mut max_abs = 0.0_f64;
        let mut worst = 0.0_f64;
        let mut sum_sq = 0.0_f64;
        for ((s, r), d) in sim_i.iter().zip(ref_i).zip(&reference.detunings_ghz) {
            let dev = (s - r).abs();
            if dev > max_abs {
                max_abs = dev;
                worst = *d;
            }
            sum_sq += dev * dev;
        }
        let rms_abs = (sum_sq / ref_i.len() as f64).sqrt();
        let max_rel = max_abs / scale;
        let rms_rel = rms_abs / scale;
        let pass = tol.max_rel.map(|t| max_rel <= t).unwrap_or(true)
            && tol.rms_rel.map(|t| rms_rel <= t).unwrap_or(true);
        ports.push(PortDeviation {
            port: port.clone(),
            max_abs: round_sig(max_abs),
            rms_abs: round_sig(rms_abs),
            max_rel: round_sig(max_rel),
            rms_rel: round_sig(rms_rel),
            pass,
            worst_detuning_ghz: round_sig(worst),
        });
    }
    let pass = ports.iter().all(|p| p.pass);
    Ok(ComparisonReport { ports, pass })
}

/// File-level variant: both sides are spectra CSVs in the standard schema.
pub fn compare_reference(
    simulated_csv: &Path,
    reference_csv: &Path,
    tol: &ToleranceSpec,
    interpolate: bool,
) -> Result<ComparisonReport> {
    let simulated = read_port_spectra_csv(simulated_csv)?;
    let reference = read_port_spectra_csv(reference_csv)?;
    compare_tables(&simulated, &reference, tol, interpolate)
}
