//! Scratch: inspect the fit at one waterfall step.

use disc_qed::fit::background::{BackgroundModel, LorentzComponent};
use disc_qed::fit::fano::{fit_fano_multi, FanoFitOptions, FanoLine};
use disc_qed::fit::{LmOptions, Spectrum};
use disc_qed::model::{apply_stark, Port};
use disc_qed::presets;
use disc_qed::solver::port_spectrum;

fn main() -> disc_qed::Result<()> {
    let model = presets::stark_pair_model();
    let mut seeds: Option<Vec<FanoLine>> = None;
    for v in [-160.0, -155.0] {
        let shifted = apply_stark(&model, v)?;
        let sp = port_spectrum(&shifted, &[Port::Drop])?;
        let spectrum = Spectrum::from_detunings(
            sp.origin_thz,
            sp.detunings_ghz.clone(),
            sp.intensities(Port::Drop).unwrap(),
        )?;
        let grid = &spectrum.detunings_ghz;
        let span = grid[grid.len() - 1] - grid[0];
        let mid = (grid[grid.len() - 1] + grid[0]) / 2.0;
        let mut sorted = spectrum.intensity.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let peak = sorted[sorted.len() - 1];
        let background = BackgroundModel {
            offset: median,
            slope_per_ghz: 0.0,
            components: vec![LorentzComponent {
                center_ghz: mid,
                fwhm_ghz: 3.0 * span,
                amplitude: peak - median,
            }],
        };
        let init = seeds.clone().unwrap_or_else(|| {
            disc_qed::fit::fano::auto_line_init(
                &spectrum,
                &BackgroundModel::constant(median),
                2,
            )
        });
        println!("V={v}: init = {init:?}");
        for tau in [0.0, 1e-6, 1e-3] {
            let probe = fit_fano_multi(
                &spectrum,
                &background,
                &FanoFitOptions {
                    n_lines: 2,
                    co_fit_background: true,
                    init: Some(init.clone()),
                    phase_multistart: false,
                    lm: LmOptions {
                        max_iterations: 400,
                        tau,
                        ..LmOptions::default()
                    },
                },
            );
            match &probe {
                Ok(r) => println!(
                    "  tau={tau:.0e}: ok, {} iters, residual {:.3e}",
                    r.iterations, r.residual_norm
                ),
                Err(e) => println!("  tau={tau:.0e}: {e}"),
            }
        }
        let fit = fit_fano_multi(
            &spectrum,
            &background,
            &FanoFitOptions {
                n_lines: 2,
                co_fit_background: true,
                init: Some(init.clone()),
                phase_multistart: false,
                lm: LmOptions {
                    max_iterations: 400,
                    tau: 1e-3,
                    ..LmOptions::default()
                },
            },
        );
        match fit {
            Ok(result) => {
                println!(
                    "  fit ok ({} iters, residual {:.3e}):",
                    result.iterations, result.residual_norm
                );
                let mut new_seeds = Vec::new();
                for line in &result.lines {
                    println!(
                        "    center {:+.4} GHz γ {:.1} MHz A {:.4} φ {:+.4}",
                        (line.omega_m_thz - sp.origin_thz) * 1e3,
                        line.gamma_mhz,
                        line.amplitude,
                        line.phase_rad
                    );
                    new_seeds.push(FanoLine {
                        center_ghz: (line.omega_m_thz - sp.origin_thz) * 1e3,
                        fwhm_ghz: line.gamma_mhz / 1e3,
                        amplitude: line.amplitude,
                        phase_rad: line.phase_rad,
                    });
                }
                seeds = Some(new_seeds);
            }
            Err(e) => println!("  fit FAILED: {e}"),
        }
    }
    Ok(())
}
