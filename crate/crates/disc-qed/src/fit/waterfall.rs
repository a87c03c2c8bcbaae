//! Waterfall tracking: follows molecular line centers through a series of
//! spectra that share one frequency grid (a Stark sweep).
//!
//! Every step gets a joint multi-line Fano fit seeded from the previous step,
//! which keeps track identity through crossings. A track whose fitted line
//! jumps more than a few linewidths or loses its dip is marked as a gap for
//! that step instead of guessing.

use crate::error::{Error, Result};
use crate::fit::background::{BackgroundModel, LorentzComponent};
use crate::fit::fano::{auto_line_init, fit_fano_multi, FanoFitOptions, FanoLine};
use crate::fit::lm::LmOptions;
use crate::fit::Spectrum;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub omega_m_thz: f64,
    pub gamma_mhz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct Waterfall {
    /// `tracks[t][s]`: molecule `t` at sweep step `s`; `None` marks a gap.
    pub tracks: Vec<Vec<Option<TrackPoint>>>,
}

impl Waterfall {
    pub fn n_steps(&self) -> usize {
        self.tracks.first().map(|t| t.len()).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WaterfallOptions {
    /// Declared molecule count.
    pub n_molecules: usize,
    /// Minimum fitted amplitude for a line to count as found.
    pub amplitude_threshold: f64,
    /// Maximum allowed jump between steps, in units of the line's width.
    pub max_jump_linewidths: f64,
}

impl Default for WaterfallOptions {
    fn default() -> Self {
        WaterfallOptions {
            n_molecules: 1,
            amplitude_threshold: 0.01,
            max_jump_linewidths: 5.0,
        }
    }
}

/// Assigns fitted lines to tracks, minimizing the total continuity cost in
/// (center, width, amplitude). At an exact crossing frequency continuity is
/// degenerate; width and amplitude keep the identities apart.
fn best_assignment(seeds: &[FanoLine], lines: &[FanoLine]) -> Vec<usize> {
    let n = seeds.len();
    let cost = |t: usize, l: usize| -> f64 {
        let seed = &seeds[t];
        let line = &lines[l];
        let df = (line.center_ghz - seed.center_ghz) / (5.0 * seed.fwhm_ghz).max(1e-3);
        let dw = (line.fwhm_ghz - seed.fwhm_ghz) / seed.fwhm_ghz.max(1e-6);
        let da = (line.amplitude - seed.amplitude) / seed.amplitude.max(1e-2);
        df * df + dw * dw + da * da
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut current = vec![0usize; n];
    let mut used = vec![false; n];
    fn recurse(
        t: usize,
        n: usize,
        acc: f64,
        cost: &dyn Fn(usize, usize) -> f64,
        current: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if t == n {
            if best.as_ref().map(|(c, _)| acc < *c).unwrap_or(true) {
                *best = Some((acc, current.clone()));
            }
            return;
        }
        if let Some((c, _)) = best {
            if acc >= *c {
                return;
            }
        }
        for l in 0..n {
            if !used[l] {
                used[l] = true;
                current[t] = l;
                recurse(t + 1, n, acc + cost(t, l), cost, current, used, best);
                used[l] = false;
            }
        }
    }
    recurse(0, n, 0.0, &cost, &mut current, &mut used, &mut best);
    best.map(|(_, a)| a).unwrap_or_else(|| (0..n).collect())
}

/// Tracks `options.n_molecules` lines through the spectra series.
pub fn track_waterfall(spectra: &[Spectrum], options: &WaterfallOptions) -> Result<Waterfall> {
    if spectra.is_empty() {
        return Err(Error::Interface("empty spectra series".into()));
    }
    if options.n_molecules == 0 {
        return Err(Error::Interface("declare at least one molecule".into()));
    }
    let origin = spectra[0].origin_thz;
    let grid = &spectra[0].detunings_ghz;
    for (s, spectrum) in spectra.iter().enumerate() {
        if spectrum.origin_thz != origin || spectrum.detunings_ghz != *grid {
            return Err(Error::Interface(format!(
                "spectrum {s} does not share the common frequency grid"
            )));
        }
    }

    let n = options.n_molecules;
    let mut tracks: Vec<Vec<Option<TrackPoint>>> = vec![Vec::with_capacity(spectra.len()); n];
    // seeds carry the last known line per track, whether or not the previous
    // step produced an accepted point
    let mut seeds: Option<Vec<FanoLine>> = None;
    let span = grid[grid.len() - 1] - grid[0];
    let mid = (grid[grid.len() - 1] + grid[0]) / 2.0;

    for spectrum in spectra {
        // seed the resonator profile as one broad component on an affine
        // baseline; the narrow molecular lines are co-fitted, never absorbed
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
        let init = match &seeds {
            Some(lines) => lines.clone(),
            None => auto_line_init(spectrum, &BackgroundModel::constant(median.max(1e-30)), n),
        };
        // continuity seeds are good starting points: run the engine undamped
        let fit = fit_fano_multi(
            spectrum,
            &background,
            &FanoFitOptions {
                n_lines: n,
                co_fit_background: true,
                init: Some(init.clone()),
                phase_multistart: false,
                lm: LmOptions {
                    max_iterations: 400,
                    ..LmOptions::default()
                },
            },
        );
        match fit {
            Ok(result) => {
                let fitted: Vec<FanoLine> = result
                    .lines
                    .iter()
                    .map(|line| FanoLine {
                        center_ghz: units::detuning_ghz(line.omega_m_thz, origin),
                        fwhm_ghz: units::mhz_to_ghz(line.gamma_mhz),
                        amplitude: line.amplitude,
                        phase_rad: line.phase_rad,
                    })
                    .collect();
                let assignment = best_assignment(&init, &fitted);
                let mut new_seeds = Vec::with_capacity(n);
                for t in 0..n {
                    let line = &fitted[assignment[t]];
                    let center_ghz = line.center_ghz;
                    let gamma_ghz = line.fwhm_ghz;
                    let jump = (center_ghz - init[t].center_ghz).abs();
                    let max_jump = options.max_jump_linewidths * init[t].fwhm_ghz.max(gamma_ghz);
                    // a line that fits wider than the window has dissolved
                    // into the background; that is a lost dip, not a point
                    let found = line.amplitude >= options.amplitude_threshold
                        && gamma_ghz <= span
                        && jump <= max_jump
                        && center_ghz >= grid[0]
                        && center_ghz <= grid[grid.len() - 1];
                    if found {
                        tracks[t].push(Some(TrackPoint {
                            omega_m_thz: origin + units::ghz_to_thz(center_ghz),
                            gamma_mhz: units::ghz_to_mhz(gamma_ghz),
                            amplitude: line.amplitude,
                        }));
                        new_seeds.push(FanoLine {
                            fwhm_ghz: gamma_ghz.max(1e-4),
                            ..*line
                        });
                    } else {
                        // gap: keep the previous seed, do not guess a point
                        tracks[t].push(None);
                        new_seeds.push(init[t]);
                    }
                }
                seeds = Some(new_seeds);
            }
            Err(_) => {
                for track in &mut tracks {
                    track.push(None);
                }
                // keep old seeds
                if seeds.is_none() {
                    seeds = Some(init);
                }
            }
        }
    }
    Ok(Waterfall { tracks })
}
