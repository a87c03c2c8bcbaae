//! Complex Fano lineshape fitting.
//!
//! The fitted intensity model is
//!
//! ```text
//! I(ω_L) = f_r(ω_L − ω_r) · |1 − Σ_j A_j·e^{iφ_j} / (1 + 2i(ω_L − ω_m,j)/γ_j)|²
//! ```
//!
//! with a real resonator profile `f_r` and one complex Lorentzian per
//! molecular line. The single-line case is the workhorse; the multi-line
//! variant feeds the waterfall tracker.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::background::BackgroundModel;
use crate::fit::lm::{lm_minimize, Convergence, LeastSquaresProblem, LmOptions, LmResult};
use crate::fit::Spectrum;
use crate::units;

/// One molecular line in detuning parameterization (GHz relative to the
/// spectrum origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoLine {
    pub center_ghz: f64,
    pub fwhm_ghz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

impl FanoLine {
    /// Complex response at one detuning.
    fn response(&self, detuning_ghz: f64) -> Complex64 {
        let u = 2.0 * (detuning_ghz - self.center_ghz) / self.fwhm_ghz;
        Complex64::from_polar(self.amplitude, self.phase_rad) / Complex64::new(1.0, u)
    }
}

/// Intensity of the full model at one detuning.
pub fn fano_intensity(background: &BackgroundModel, lines: &[FanoLine], detuning_ghz: f64) -> f64 {
    let mut m = Complex64::from(1.0);
    for line in lines {
        m -= line.response(detuning_ghz);
    }
    background.evaluate(detuning_ghz) * m.norm_sqr()
}

#[derive(Debug, Clone)]
pub struct FanoFitOptions {
    /// Number of molecular lines to fit.
    pub n_lines: usize,
    /// Refit the background parameters together with the lines.
    pub co_fit_background: bool,
    /// Initial lines; auto-initialized from the data when absent.
    pub init: Option<Vec<FanoLine>>,
    /// Try the four canonical phase seeds and keep the best fit.
    pub phase_multistart: bool,
    pub lm: LmOptions,
}

impl Default for FanoFitOptions {
    fn default() -> Self {
        FanoFitOptions {
            n_lines: 1,
            co_fit_background: false,
            init: None,
            phase_multistart: true,
            lm: default_fano_lm(),
        }
    }
}

/// LM settings for Fano problems: a damped first step keeps far-off phase
/// seeds from jumping into a bad basin.
pub fn default_fano_lm() -> LmOptions {
    LmOptions {
        tau: 1e-3,
        max_iterations: 400,
        ..LmOptions::default()
    }
}

/// Fitted line with standard errors, reported in the spec's physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedLine {
    /// Line center ω_m (THz).
    pub omega_m_thz: f64,
    /// FWHM γ (MHz), > 0.
    pub gamma_mhz: f64,
    /// Relative amplitude A ≥ 0.
    pub amplitude: f64,
    /// Phase φ in (−π, π].
    pub phase_rad: f64,
    pub omega_m_error_thz: f64,
    pub gamma_error_mhz: f64,
    pub amplitude_error: f64,
    pub phase_error_rad: f64,
}

#[derive(Debug, Clone)]
pub struct FanoFitResult {
    pub lines: Vec<FittedLine>,
    /// Background actually used (refitted when co-fit was requested).
    pub background: BackgroundModel,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when a fitted width collapsed towards the grid spacing.
    pub under_resolved: bool,
    pub covariance: DMatrix<f64>,
    pub covariance_singular: bool,
}

impl FanoFitResult {
    /// The (first) line — the fields of the single-line fit.
    pub fn line(&self) -> &FittedLine {
        &self.lines[0]
    }
}

struct FanoProblem<'a> {
    spectrum: &'a Spectrum,
    background: &'a BackgroundModel,
    n_lines: usize,
    co_fit_background: bool,
}

impl FanoProblem<'_> {
    fn n_params(&self) -> usize {
        4 * self.n_lines
            + if self.co_fit_background {
                self.background.n_params()
            } else {
                0
            }
    }

    fn lines_of(&self, params: &[f64]) -> Vec<FanoLine> {
        (0..self.n_lines)
            .map(|j| FanoLine {
                center_ghz: params[4 * j],
                fwhm_ghz: params[4 * j + 1],
                amplitude: params[4 * j + 2],
                phase_rad: params[4 * j + 3],
            })
            .collect()
    }

    fn background_of(&self, params: &[f64]) -> BackgroundModel {
        if self.co_fit_background {
            self.background.unpack(&params[4 * self.n_lines..])
        } else {
            self.background.clone()
        }
    }
}

impl LeastSquaresProblem for FanoProblem<'_> {
    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        let lines = self.lines_of(params);
        let background = self.background_of(params);
        self.spectrum
            .detunings_ghz
            .iter()
            .zip(&self.spectrum.intensity)
            .enumerate()
            .map(|(i, (d, y))| {
                let v = fano_intensity(&background, &lines, *d) - y;
                match &self.spectrum.sigma {
                    Some(s) => v / s[i],
                    None => v,
                }
            })
            .collect()
    }

    fn jacobian(&self, params: &[f64]) -> Option<DMatrix<f64>> {
        let lines = self.lines_of(params);
        let n = self.n_params();
        let npts = self.spectrum.len();
        let mut jac = DMatrix::zeros(npts, n);
        let bg_params = &params[4 * self.n_lines..];
        let mut bg_grad = vec![0.0; if self.co_fit_background { bg_params.len() } else { 0 }];

        for (i, d) in self.spectrum.detunings_ghz.iter().enumerate() {
            let mut m = Complex64::from(1.0);
            let mut responses = Vec::with_capacity(lines.len());
            for line in &lines {
                let r = line.response(*d);
                responses.push(r);
                m -= r;
            }
            let f = if self.co_fit_background {
                self.background
                    .evaluate_with_gradient(bg_params, *d, &mut bg_grad)
            } else {
                self.background.evaluate(*d)
            };
            let w = self.spectrum.sigma.as_ref().map(|s| s[i]).unwrap_or(1.0);
            let m_sq = m.norm_sqr();

            for (j, line) in lines.iter().enumerate() {
                // z = A·e^{iφ}·L with L = 1/(1+iu); dL/du = −i·L²
                let u = 2.0 * (d - line.center_ghz) / line.fwhm_ghz;
                let l = Complex64::from(1.0) / Complex64::new(1.0, u);
                let e = Complex64::from_polar(1.0, line.phase_rad);
                let z = responses[j];
                let dz_da = e * l;
                let dz_dphi = Complex64::new(0.0, 1.0) * z;
                let dz_du = Complex64::new(0.0, -1.0) * z * l;
                let dz_dc = dz_du * (-2.0 / line.fwhm_ghz);
                let dz_dw = dz_du * (-u / line.fwhm_ghz);
                // ∂|M|²/∂p = 2·Re(conj(M)·∂M/∂p), ∂M/∂p = −∂z/∂p
                let chain = |dz: Complex64| -> f64 { f * 2.0 * (m.conj() * (-dz)).re / w };
                jac[(i, 4 * j)] = chain(dz_dc);
                jac[(i, 4 * j + 1)] = chain(dz_dw);
                jac[(i, 4 * j + 2)] = chain(dz_da);
                jac[(i, 4 * j + 3)] = chain(dz_dphi);
            }
            if self.co_fit_background {
                for (k, dfd) in bg_grad.iter().enumerate() {
                    jac[(i, 4 * self.n_lines + k)] = dfd * m_sq / w;
                }
            }
        }
        Some(jac)
    }
}

/// Analytic Jacobian of the residual vector with respect to the packed
/// parameters `[c₀, w₀, A₀, φ₀, …][, background params]` (background columns
/// present when `co_fit_background`). Exposed for uncertainty diagnostics and
/// derivative verification.
pub fn intensity_jacobian(
    spectrum: &Spectrum,
    background: &BackgroundModel,
    lines: &[FanoLine],
    co_fit_background: bool,
) -> DMatrix<f64> {
    let problem = FanoProblem {
        spectrum,
        background,
        n_lines: lines.len(),
        co_fit_background,
    };
    let mut params = Vec::with_capacity(problem.n_params());
    for line in lines {
        params.extend_from_slice(&[
            line.center_ghz,
            line.fwhm_ghz,
            line.amplitude,
            line.phase_rad,
        ]);
    }
    if co_fit_background {
        background.pack(&mut params);
    }
    problem
        .jacobian(&params)
        .expect("Fano problems always carry an analytic Jacobian")
}

/// Default line initialization: center at the extremum of data−background,
/// width from the second moment of the residual peak, amplitude from the
/// extremum depth, phase π/2 (the resonant-scatterer value).
pub fn auto_line_init(spectrum: &Spectrum, background: &BackgroundModel, n_lines: usize) -> Vec<FanoLine> {
    let d = &spectrum.detunings_ghz;
    let mut residual: Vec<f64> = d
        .iter()
        .zip(&spectrum.intensity)
        .map(|(x, y)| {
            let b = background.evaluate(*x).max(1e-30);
            (y - b) / b
        })
        .collect();
    let mut lines = Vec::with_capacity(n_lines);
    let spacing = spectrum.grid_spacing_ghz().max(1e-9);
    for _ in 0..n_lines {
        let (idx, extremum) = residual
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, v)| (i, *v))
            .unwrap_or((0, 0.0));
        // second moment of the |residual| peak around the extremum
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, r) in d.iter().zip(&residual) {
            let weight = r.abs();
            if weight > extremum.abs() * 0.2 {
                num += weight * (x - d[idx]) * (x - d[idx]);
                den += weight;
            }
        }
        let sigma = if den > 0.0 { (num / den).sqrt() } else { spacing };
        let fwhm = (2.355 * sigma).max(2.0 * spacing);
        let amplitude = extremum.abs().min(1.5).max(1e-3);
        lines.push(FanoLine {
            center_ghz: d[idx],
            fwhm_ghz: fwhm,
            amplitude,
            phase_rad: std::f64::consts::FRAC_PI_2,
        });
        // clear the claimed window before seeding the next line
        for (x, r) in d.iter().zip(residual.iter_mut()) {
            if (x - d[idx]).abs() < fwhm {
                *r = 0.0;
            }
        }
    }
    lines
}

/// Removes the parameter degeneracies of the intensity model:
/// (A, φ) → (−A, φ+π), (γ, φ) → (−γ, −φ), and the conjugate-zero branch.
///
/// With x = 2(ω−ω_m)/γ the line factor is
/// `[(1 − A·cosφ)² + (x − A·sinφ)²] / (x² + 1)`, so `1 − A·cosφ` only enters
/// squared: (A·cosφ ↔ 2 − A·cosφ) yields the identical curve. The reported
/// line is the minimum branch `A·cosφ ≤ 1`, which is the unique
/// representative with A ≤ 1 whenever one exists.
fn normalize_line(line: &mut FanoLine) {
    if line.fwhm_ghz < 0.0 {
        line.fwhm_ghz = -line.fwhm_ghz;
        line.phase_rad = -line.phase_rad;
    }
    if line.amplitude < 0.0 {
        line.amplitude = -line.amplitude;
        line.phase_rad += std::f64::consts::PI;
    }
    let a_cos = line.amplitude * line.phase_rad.cos();
    if a_cos > 1.0 {
        let re = 2.0 - a_cos;
        let im = line.amplitude * line.phase_rad.sin();
        line.amplitude = (re * re + im * im).sqrt();
        line.phase_rad = im.atan2(re);
    }
    let mut phi = line.phase_rad.rem_euclid(std::f64::consts::TAU);
    if phi > std::f64::consts::PI {
        phi -= std::f64::consts::TAU;
    }
    line.phase_rad = phi;
}

fn run_single(
    problem: &FanoProblem<'_>,
    init_lines: &[FanoLine],
    options: &FanoFitOptions,
) -> Result<LmResult> {
    let mut params = Vec::with_capacity(problem.n_params());
    for line in init_lines {
        params.extend_from_slice(&[
            line.center_ghz,
            line.fwhm_ghz,
            line.amplitude,
            line.phase_rad,
        ]);
    }
    if problem.co_fit_background {
        problem.background.pack(&mut params);
    }
    lm_minimize(problem, &params, &options.lm)
}

/// Fits `options.n_lines` Fano lines (default one) on the given background.
pub fn fit_fano(
    spectrum: &Spectrum,
    background: &BackgroundModel,
    options: &FanoFitOptions,
) -> Result<FanoFitResult> {
    fit_fano_multi(spectrum, background, options)
}

/// Multi-line variant of [`fit_fano`]; the single-line call is an alias.
pub fn fit_fano_multi(
    spectrum: &Spectrum,
    background: &BackgroundModel,
    options: &FanoFitOptions,
) -> Result<FanoFitResult> {
    if options.n_lines == 0 {
        return Err(Error::Interface("fit_fano needs at least one line".into()));
    }
    let problem = FanoProblem {
        spectrum,
        background,
        n_lines: options.n_lines,
        co_fit_background: options.co_fit_background,
    };
    let base_init = match &options.init {
        Some(lines) => {
            if lines.len() != options.n_lines {
                return Err(Error::Interface(format!(
                    "init provides {} line(s) but n_lines = {}",
                    lines.len(),
                    options.n_lines
                )));
            }
            lines.clone()
        }
        None => auto_line_init(spectrum, background, options.n_lines),
    };

    let phase_seeds: &[f64] = if options.phase_multistart {
        &[
            std::f64::consts::FRAC_PI_2,
            0.0,
            -std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
        ]
    } else {
        &[base_init[0].phase_rad]
    };

    let mut best: Option<LmResult> = None;
    for seed in phase_seeds {
        let mut init = base_init.clone();
        if options.init.is_none() || options.phase_multistart {
            for line in &mut init {
                line.phase_rad = *seed;
            }
        }
        let result = run_single(&problem, &init, options)?;
        let better = match &best {
            Some(b) => result.residual_norm < b.residual_norm,
            None => true,
        };
        if better {
            best = Some(result);
        }
    }
    let result = best.expect("at least one phase seed ran");
    if result.converged == Convergence::MaxIterations {
        return Err(Error::FitNonConvergence {
            message: "Fano fit hit the iteration limit".into(),
            last_residual_norm: result.residual_norm,
        });
    }

    let errors = result.standard_errors();
    let spacing = spectrum.grid_spacing_ghz();
    let mut lines = Vec::with_capacity(options.n_lines);
    let mut under_resolved = false;
    for j in 0..options.n_lines {
        let mut line = FanoLine {
            center_ghz: result.params[4 * j],
            fwhm_ghz: result.params[4 * j + 1],
            amplitude: result.params[4 * j + 2],
            phase_rad: result.params[4 * j + 3],
        };
        normalize_line(&mut line);
        if line.fwhm_ghz < 2.0 * spacing {
            under_resolved = true;
        }
        lines.push(FittedLine {
            omega_m_thz: spectrum.origin_thz + units::ghz_to_thz(line.center_ghz),
            gamma_mhz: units::ghz_to_mhz(line.fwhm_ghz),
            amplitude: line.amplitude,
            phase_rad: line.phase_rad,
            omega_m_error_thz: units::ghz_to_thz(errors[4 * j]),
            gamma_error_mhz: units::ghz_to_mhz(errors[4 * j + 1]),
            amplitude_error: errors[4 * j + 2],
            phase_error_rad: errors[4 * j + 3],
        });
    }
    let fitted_background = problem.background_of(&result.params);
    Ok(FanoFitResult {
        lines,
        background: fitted_background,
        residual_norm: result.residual_norm,
        iterations: result.iterations,
        converged: true,
        under_resolved,
        covariance: result.covariance,
        covariance_singular: result.covariance_singular,
    })
}
