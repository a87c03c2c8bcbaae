//! Resonator background model: up to two Lorentzian responses on an affine
//! baseline, fitted in the absence (or with masking) of molecular lines.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::lm::{lm_minimize, Convergence, LeastSquaresProblem, LmOptions};
use crate::fit::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzComponent {
    /// Center relative to the spectrum origin (GHz).
    pub center_ghz: f64,
    /// FWHM (GHz).
    pub fwhm_ghz: f64,
    /// Signed amplitude at the center (peak > 0, dip < 0).
    pub amplitude: f64,
}

/// Real, positive resonator profile `f_r` on the fit window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BackgroundModel {
    pub offset: f64,
    pub slope_per_ghz: f64,
    /// Up to two resonator responses.
    pub components: Vec<LorentzComponent>,
}

impl BackgroundModel {
    pub fn constant(offset: f64) -> Self {
        BackgroundModel {
            offset,
            slope_per_ghz: 0.0,
            components: Vec::new(),
        }
    }

    pub fn evaluate(&self, detuning_ghz: f64) -> f64 {
        let mut value = self.offset + self.slope_per_ghz * detuning_ghz;
        for c in &self.components {
            let q = detuning_ghz - c.center_ghz;
            let h2 = (c.fwhm_ghz / 2.0) * (c.fwhm_ghz / 2.0);
            value += c.amplitude * h2 / (q * q + h2);
        }
        value
    }

    pub(crate) fn n_params(&self) -> usize {
        2 + 3 * self.components.len()
    }

    pub(crate) fn pack(&self, out: &mut Vec<f64>) {
        out.push(self.offset);
        out.push(self.slope_per_ghz);
        for c in &self.components {
            out.push(c.center_ghz);
            out.push(c.fwhm_ghz);
            out.push(c.amplitude);
        }
    }

    pub(crate) fn unpack(&self, params: &[f64]) -> BackgroundModel {
        let mut components = Vec::with_capacity(self.components.len());
        for k in 0..self.components.len() {
            components.push(LorentzComponent {
                center_ghz: params[2 + 3 * k],
                fwhm_ghz: params[3 + 3 * k].abs(),
                amplitude: params[4 + 3 * k],
            });
        }
        BackgroundModel {
            offset: params[0],
            slope_per_ghz: params[1],
            components,
        }
    }

    /// Value and gradient with respect to the packed parameters.
    pub(crate) fn evaluate_with_gradient(&self, params: &[f64], detuning_ghz: f64, grad: &mut [f64]) -> f64 {
        let mut value = params[0] + params[1] * detuning_ghz;
        grad[0] = 1.0;
        grad[1] = detuning_ghz;
        for k in 0..self.components.len() {
            let c = params[2 + 3 * k];
            let w = params[3 + 3 * k];
            let a = params[4 + 3 * k];
            let q = detuning_ghz - c;
            let h = w / 2.0;
            let h2 = h * h;
            let d = q * q + h2;
            value += a * h2 / d;
            grad[2 + 3 * k] = a * h2 * 2.0 * q / (d * d);
            grad[3 + 3 * k] = a * h * q * q / (d * d);
            grad[4 + 3 * k] = h2 / d;
        }
        value
    }
}

struct BackgroundProblem<'a> {
    template: &'a BackgroundModel,
    detunings: Vec<f64>,
    intensity: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl LeastSquaresProblem for BackgroundProblem<'_> {
    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; params.len()];
        self.detunings
            .iter()
            .zip(&self.intensity)
            .enumerate()
            .map(|(i, (d, y))| {
                let v = self.template.evaluate_with_gradient(params, *d, &mut grad) - y;
                match &self.weights {
                    Some(w) => v / w[i],
                    None => v,
                }
            })
            .collect()
    }

    fn jacobian(&self, params: &[f64]) -> Option<DMatrix<f64>> {
        let n = params.len();
        let mut jac = DMatrix::zeros(self.detunings.len(), n);
        let mut grad = vec![0.0; n];
        for (i, d) in self.detunings.iter().enumerate() {
            self.template.evaluate_with_gradient(params, *d, &mut grad);
            let w = self.weights.as_ref().map(|w| w[i]).unwrap_or(1.0);
            for j in 0..n {
                jac[(i, j)] = grad[j] / w;
            }
        }
        Some(jac)
    }
}

/// First guess for a background: affine baseline from the spectrum edges plus
/// up to `n_components` Lorentzians seeded at the strongest features.
pub fn auto_background_init(spectrum: &Spectrum, n_components: usize) -> BackgroundModel {
    let y = &spectrum.intensity;
    let d = &spectrum.detunings_ghz;
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut model = BackgroundModel {
        offset: median,
        slope_per_ghz: 0.0,
        components: Vec::new(),
    };
    let mut residual: Vec<f64> = y.iter().map(|v| v - median).collect();
    for _ in 0..n_components.min(2) {
        let (idx, extremum) = residual
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, v)| (i, *v))
            .unwrap_or((0, 0.0));
        if extremum.abs() < 1e-12 {
            break;
        }
        // crude width: span where |residual| exceeds half the extremum
        let half = extremum.abs() / 2.0;
        let mut lo = idx;
        while lo > 0 && residual[lo].abs() > half {
            lo -= 1;
        }
        let mut hi = idx;
        while hi + 1 < residual.len() && residual[hi].abs() > half {
            hi += 1;
        }
        let width = (d[hi] - d[lo]).max(spectrum.grid_spacing_ghz().max(1e-6) * 4.0);
        model.components.push(LorentzComponent {
            center_ghz: d[idx],
            fwhm_ghz: width,
            amplitude: extremum,
        });
        let added = model.components.last().unwrap();
        for (i, det) in d.iter().enumerate() {
            let q = det - added.center_ghz;
            let h2 = (added.fwhm_ghz / 2.0).powi(2);
            residual[i] -= added.amplitude * h2 / (q * q + h2);
        }
    }
    model
}

/// Least-squares background fit. Points whose detuning falls inside `mask`
/// (a molecule window, GHz) are excluded.
pub fn fit_background(
    spectrum: &Spectrum,
    init: &BackgroundModel,
    mask_ghz: Option<(f64, f64)>,
) -> Result<BackgroundModel> {
    let keep: Vec<usize> = spectrum
        .detunings_ghz
        .iter()
        .enumerate()
        .filter(|(_, d)| match mask_ghz {
            Some((lo, hi)) => !(**d >= lo && **d <= hi),
            None => true,
        })
        .map(|(i, _)| i)
        .collect();
    if keep.len() < init.n_params() {
        return Err(Error::Interface(format!(
            "background fit needs at least {} unmasked points, found {}",
            init.n_params(),
            keep.len()
        )));
    }
    let problem = BackgroundProblem {
        template: init,
        detunings: keep.iter().map(|i| spectrum.detunings_ghz[*i]).collect(),
        intensity: keep.iter().map(|i| spectrum.intensity[*i]).collect(),
        weights: spectrum
            .sigma
            .as_ref()
            .map(|s| keep.iter().map(|i| s[*i]).collect()),
    };
    let mut params = Vec::with_capacity(init.n_params());
    init.pack(&mut params);
    let result = lm_minimize(&problem, &params, &LmOptions::default())?;
    if result.converged == Convergence::MaxIterations {
        return Err(Error::FitNonConvergence {
            message: "background fit hit the iteration limit".into(),
            last_residual_norm: result.residual_norm,
        });
    }
    let fitted = init.unpack(&result.params);
    // the resonator profile must stay positive on the window
    let min_value = spectrum
        .detunings_ghz
        .iter()
        .map(|d| fitted.evaluate(*d))
        .fold(f64::INFINITY, f64::min);
    if min_value <= 0.0 {
        return Err(Error::Validation(format!(
            "fitted background is not positive on the window (min {min_value:.3e})"
        )));
    }
    Ok(fitted)
}
