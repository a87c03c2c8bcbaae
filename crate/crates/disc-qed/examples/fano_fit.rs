//! Background + complex Fano line fitting on a noisy synthetic spectrum:
//! generate, fit, and compare against the ground truth.

use disc_qed::fit::background::{auto_background_init, LorentzComponent};
use disc_qed::fit::fano::{fano_intensity, FanoLine};
use disc_qed::fit::{fit_background, fit_fano, BackgroundModel, FanoFitOptions, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> disc_qed::Result<()> {
    let truth_background = BackgroundModel {
        offset: 0.01,
        slope_per_ghz: 2e-4,
        components: vec![LorentzComponent {
            center_ghz: 0.4,
            fwhm_ghz: 27.0,
            amplitude: 0.05,
        }],
    };
    let truth_line = FanoLine {
        center_ghz: -0.06,
        fwhm_ghz: 0.125,
        amplitude: 0.37,
        phase_rad: 0.25,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let detunings: Vec<f64> = (0..1600).map(|i| -3.0 + 6.0 * i as f64 / 1599.0).collect();
    let clean: Vec<f64> = detunings
        .iter()
        .map(|d| fano_intensity(&truth_background, &[truth_line], *d))
        .collect();
    let peak = clean.iter().cloned().fold(0.0_f64, f64::max);
    let noisy: Vec<f64> = clean
        .iter()
        .map(|y| {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            y + 0.005 * peak * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect();
    let spectrum = Spectrum::from_detunings(404.935, detunings, noisy)?;

    // background first (molecule window masked), then the line on top
    let seed = auto_background_init(&spectrum, 1);
    let background = fit_background(&spectrum, &seed, Some((-0.5, 0.4)))?;
    let fit = fit_fano(
        &spectrum,
        &background,
        &FanoFitOptions {
            co_fit_background: true,
            ..Default::default()
        },
    )?;
    let line = fit.line();
    println!("truth:  γ = {:.2} MHz, A = {:.3}, φ = {:.3} rad", truth_line.fwhm_ghz * 1e3, truth_line.amplitude, truth_line.phase_rad);
    println!(
        "fitted: γ = {:.2} ± {:.2} MHz, A = {:.3} ± {:.3}, φ = {:.3} ± {:.3} rad",
        line.gamma_mhz,
        line.gamma_error_mhz,
        line.amplitude,
        line.amplitude_error,
        line.phase_rad,
        line.phase_error_rad
    );
    println!(
        "center recovered {:.3} MHz from truth ({} iterations, residual norm {:.3e})",
        (line.omega_m_thz - (404.935 + truth_line.center_ghz * 1e-3)).abs() * 1e6,
        fit.iterations,
        fit.residual_norm
    );
    Ok(())
}
