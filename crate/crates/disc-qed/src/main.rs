//! Command-line front end: `simulate`, `fit`, and `metrics` subcommands over
//! the library. Exit codes: 0 success, 2 validation error, 3 fit
//! non-convergence, 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use disc_qed::error::{Error, Result};
use disc_qed::fit::{fit_background, fit_fano, BackgroundModel, FanoFitOptions};
use disc_qed::io::{read_spectrum_csv, round_sig};
use disc_qed::metrics::{metrics_from_linewidth, Provenance};
use disc_qed::model::{load_model, Port};
use disc_qed::scenario::{run_scenario, FitReport, Scenario};

#[derive(Parser)]
#[command(name = "disc-qed", version, about = "Microdisc cavity-QED simulator and fitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario (or a custom sweep) on a configuration.
    Simulate {
        /// System configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Preset name (fig1c, fig2a, fig2d, fig3a, fig3ef) or "custom".
        #[arg(long)]
        scenario: String,
        /// Comma-separated output ports for custom scenarios
        /// (drop,add,transmission,int1,int2).
        #[arg(long, value_delimiter = ',')]
        ports: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a background and a complex Fano line to a measured spectrum.
    Fit {
        /// Spectrum CSV (frequency_THz or detuning_GHz, intensity[, sigma]).
        #[arg(long)]
        data: PathBuf,
        /// Fit initialization JSON (see README).
        #[arg(long)]
        init: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Derived figures of merit from a fit report or a configuration.
    Metrics {
        /// Either a fit.json produced by `fit` or a configuration JSON.
        #[arg(long)]
        from: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Free-space linewidth γ⁰ (MHz) when deriving from a fit report.
        #[arg(long, default_value_t = 33.0)]
        gamma0_mhz: f64,
        /// Free-space branching ratio α⁰ when deriving from a fit report.
        #[arg(long, default_value_t = 1.0 / 3.0)]
        alpha0: f64,
    },
}

/// Initialization document for the `fit` subcommand.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitInit {
    /// Origin (THz) when the data column is detuning_GHz.
    #[serde(default)]
    origin_thz: Option<f64>,
    /// Number of Lorentzian background components (0..=2).
    #[serde(default = "default_components")]
    background_components: usize,
    /// Mask (GHz window) excluded from the background fit.
    #[serde(default)]
    background_mask_ghz: Option<(f64, f64)>,
    /// Refit the background together with the line.
    #[serde(default)]
    co_fit_background: bool,
    /// Optional explicit line seed.
    #[serde(default)]
    line: Option<LineInit>,
}

fn default_components() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineInit {
    center_ghz: f64,
    fwhm_ghz: f64,
    amplitude: f64,
    phase_rad: f64,
}

fn cmd_simulate(config: &PathBuf, name: &str, ports: &[String], out: &PathBuf) -> Result<()> {
    let model = load_model(config)?;
    let scenario = if name == "custom" {
        let ports = ports
            .iter()
            .map(|p| Port::parse(p))
            .collect::<Result<Vec<_>>>()?;
        Scenario::custom(&model, ports)
    } else {
        let mut s = Scenario::preset(name, &model)?;
        if !ports.is_empty() {
            s.ports = ports
                .iter()
                .map(|p| Port::parse(p))
                .collect::<Result<Vec<_>>>()?;
        }
        s
    };
    let manifest = run_scenario(&scenario, out, None)?;
    println!(
        "scenario '{}' wrote {} output file(s) to {}",
        manifest.scenario,
        manifest.outputs.len(),
        out.display()
    );
    Ok(())
}

fn cmd_fit(data: &PathBuf, init: &PathBuf, out: &PathBuf) -> Result<()> {
    let init: FitInit = serde_json::from_str(&std::fs::read_to_string(init)?)
        .map_err(|e| Error::schema(init.display().to_string(), e.to_string()))?;
    let spectrum = read_spectrum_csv(data, init.origin_thz)?;

    let background = if init.background_components == 0 {
        let mean = spectrum.intensity.iter().sum::<f64>() / spectrum.len() as f64;
        BackgroundModel::constant(mean)
    } else {
        let seed =
            disc_qed::fit::background::auto_background_init(&spectrum, init.background_components);
        fit_background(&spectrum, &seed, init.background_mask_ghz)?
    };

    let options = FanoFitOptions {
        co_fit_background: init.co_fit_background,
        init: init.line.as_ref().map(|l| {
            vec![disc_qed::fit::FanoLine {
                center_ghz: l.center_ghz,
                fwhm_ghz: l.fwhm_ghz,
                amplitude: l.amplitude,
                phase_rad: l.phase_rad,
            }]
        }),
        phase_multistart: init.line.is_none(),
        ..Default::default()
    };
    let fit = fit_fano(&spectrum, &background, &options)?;
    std::fs::create_dir_all(out)?;
    let report = FitReport::from_result("data", &fit);
    std::fs::write(
        out.join("fit.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "fit: ω_m = {} THz, γ = {} MHz, A = {}, φ = {} rad ({} iterations)",
        round_sig(report.omega_m_thz),
        round_sig(report.gamma_mhz),
        round_sig(report.amplitude),
        round_sig(report.phase_rad),
        report.iterations
    );
    Ok(())
}

fn cmd_metrics(from: &PathBuf, out: &PathBuf, gamma0_mhz: f64, alpha0: f64) -> Result<()> {
    let text = std::fs::read_to_string(from)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::schema(from.display().to_string(), e.to_string()))?;
    std::fs::create_dir_all(out)?;

    let report = if value.get("mode_pairs").is_some() {
        // configuration document
        let model = load_model(from)?;
        if model.emitters.is_empty() {
            return Err(Error::Validation(
                "metrics from a configuration need at least one emitter".into(),
            ));
        }
        let per_emitter = (0..model.emitters.len())
            .map(|j| disc_qed::metrics::metrics_from_model(&model, j))
            .collect::<Result<Vec<_>>>()?;
        serde_json::to_value(per_emitter)?
    } else if value.get("gamma_mhz").is_some() {
        // fit report
        let fit: FitReport = serde_json::from_str(&text)
            .map_err(|e| Error::schema(from.display().to_string(), e.to_string()))?;
        let metrics = metrics_from_linewidth(fit.gamma_mhz, gamma0_mhz, alpha0, Provenance::Fitted)?;
        serde_json::to_value(vec![metrics])?
    } else {
        return Err(Error::Interface(format!(
            "{} is neither a configuration nor a fit report",
            from.display()
        )));
    };
    std::fs::write(out.join("metrics.json"), serde_json::to_string_pretty(&report)?)?;
    println!("metrics written to {}", out.join("metrics.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            config,
            scenario,
            ports,
            out,
        } => cmd_simulate(config, scenario, ports, out),
        Command::Fit { data, init, out } => cmd_fit(data, init, out),
        Command::Metrics {
            from,
            out,
            gamma0_mhz,
            alpha0,
        } => cmd_metrics(from, out, *gamma0_mhz, *alpha0),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
