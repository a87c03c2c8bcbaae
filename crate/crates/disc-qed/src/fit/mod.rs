//! Spectral fitting: resonator backgrounds, complex Fano lines, waterfall
//! tracking, all on top of a self-contained Levenberg-Marquardt engine.

pub mod background;
pub mod fano;
pub mod lm;
pub mod waterfall;

pub use background::{fit_background, BackgroundModel, LorentzComponent};
pub use fano::{fit_fano, fit_fano_multi, FanoFitOptions, FanoFitResult, FanoLine};
pub use lm::{lm_minimize, Convergence, LeastSquaresProblem, LmOptions, LmResult};
pub use waterfall::{track_waterfall, TrackPoint, Waterfall, WaterfallOptions};

use crate::error::{Error, Result};
use crate::units;

/// One measured or simulated intensity spectrum on a strictly increasing
/// frequency grid, held as detunings (GHz) from a declared origin (THz).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub origin_thz: f64,
    pub detunings_ghz: Vec<f64>,
    pub intensity: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl Spectrum {
    pub fn from_detunings(
        origin_thz: f64,
        detunings_ghz: Vec<f64>,
        intensity: Vec<f64>,
    ) -> Result<Self> {
        let s = Spectrum {
            origin_thz,
            detunings_ghz,
            intensity,
            sigma: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Builds from absolute frequencies; the grid midpoint becomes the origin.
    pub fn from_frequencies(frequencies_thz: &[f64], intensity: Vec<f64>) -> Result<Self> {
        if frequencies_thz.is_empty() {
            return Err(Error::Interface("empty frequency grid".into()));
        }
        let origin = frequencies_thz[frequencies_thz.len() / 2];
        let detunings = frequencies_thz
            .iter()
            .map(|f| units::detuning_ghz(*f, origin))
            .collect();
        Spectrum::from_detunings(origin, detunings, intensity)
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != self.intensity.len() {
            return Err(Error::Interface(
                "sigma column length does not match the spectrum".into(),
            ));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Interface("sigma values must be positive".into()));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.detunings_ghz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings_ghz.is_empty()
    }

    /// Median grid spacing (GHz).
    pub fn grid_spacing_ghz(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let mut steps: Vec<f64> = self
            .detunings_ghz
            .windows(2)
            .map(|w| w[1] - w[0])
            .collect();
        steps.sort_by(f64::total_cmp);
        steps[steps.len() / 2]
    }

    fn validate(&self) -> Result<()> {
        if self.detunings_ghz.len() != self.intensity.len() {
            return Err(Error::Interface(
                "frequency and intensity columns differ in length".into(),
            ));
        }
        if self.detunings_ghz.is_empty() {
            return Err(Error::Interface("empty spectrum".into()));
        }
        if self.detunings_ghz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Interface(
                "spectrum grid must be strictly increasing".into(),
            ));
        }
        if self
            .intensity
            .iter()
            .chain(self.detunings_ghz.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Interface("spectrum contains non-finite values".into()));
        }
        Ok(())
    }
}
