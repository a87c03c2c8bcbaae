//! Ready-made models of the measured circuit.
//!
//! All couplings are calibrated from linewidths: `coupling_from_linewidth`
//! fixes g so that the on-resonance emitter linewidth (equivalently its
//! coupling efficiency β) matches the quoted value under this crate's
//! convention that the two travelling modes together add `8g²/κ` to the
//! emitter linewidth.

use crate::model::{
    coupling_from_linewidth, CircuitTopology, DriveSpec, Emitter, ModeLabel, ModePair, SystemModel,
};
use crate::units;

/// Center frequency of the resonance used throughout (THz).
pub const RESONANCE_THZ: f64 = 404.935;
/// Total linewidth κ of the fundamental pair (GHz).
pub const KAPPA_GHZ: f64 = 27.0;
/// Free spectral range (THz).
pub const FSR_THZ: f64 = 6.3;
/// DBT free-space linewidth γ⁰ (MHz).
pub const GAMMA0_MHZ: f64 = 33.0;
/// DBT free-space branching ratio α⁰.
pub const ALPHA0: f64 = 1.0 / 3.0;

/// External coupling per waveguide for the under-coupled split that produces
/// a 40% transmission dip: κ_ext/κ = (1 − √0.6)/2 on each waveguide.
pub fn external_coupling_ghz() -> f64 {
    KAPPA_GHZ * (1.0 - 0.6_f64.sqrt()) / 2.0
}

fn fundamental_pair(backscatter_ghz: f64) -> ModePair {
    let ext = external_coupling_ghz();
    ModePair {
        label: ModeLabel::Fundamental,
        center_frequency_thz: RESONANCE_THZ,
        total_linewidth_ghz: KAPPA_GHZ,
        intrinsic_loss_ghz: KAPPA_GHZ - 2.0 * ext,
        external_coupling_ghz: [ext, ext],
        backscatter_coupling_ghz: backscatter_ghz,
        azimuthal_order: 38,
    }
}

/// Second-order radial mode pair: 10× broader, the extra width all intrinsic,
/// sitting 40 GHz above the fundamental in the scan window.
fn second_order_pair() -> ModePair {
    let ext = external_coupling_ghz();
    let kappa2 = 10.0 * KAPPA_GHZ;
    ModePair {
        label: ModeLabel::SecondOrder,
        center_frequency_thz: RESONANCE_THZ + units::ghz_to_thz(40.0),
        total_linewidth_ghz: kappa2,
        intrinsic_loss_ghz: kappa2 - 2.0 * ext,
        external_coupling_ghz: [ext, ext],
        backscatter_coupling_ghz: 0.0,
        azimuthal_order: 39,
    }
}

/// Coupling (MHz) that gives efficiency β for an emitter with linewidth
/// γ⁰ (MHz) on double resonance with a mode pair of linewidth κ (GHz).
pub fn coupling_for_beta(beta: f64, gamma0_mhz: f64, kappa_ghz: f64) -> f64 {
    let cavity_rate_mhz = gamma0_mhz * beta / (1.0 - beta);
    coupling_from_linewidth(gamma0_mhz + cavity_rate_mhz, gamma0_mhz, kappa_ghz)
        .expect("β in (0,1) always yields a valid calibration")
}

fn molecule(
    freq_thz: f64,
    coupling_mhz: Vec<f64>,
    azimuth_rad: Option<f64>,
    phase_rad: Option<f64>,
    stark_mhz_per_v: f64,
) -> Emitter {
    Emitter {
        transition_frequency_thz: freq_thz,
        free_space_linewidth_mhz: GAMMA0_MHZ,
        free_space_branching: ALPHA0,
        pure_dephasing_mhz: 0.0,
        coupling_mhz,
        azimuthal_angle_rad: azimuth_rad,
        coupling_phase_rad: phase_rad,
        stark_coefficient_mhz_per_v: stark_mhz_per_v,
    }
}

/// Bare resonator with both radial mode pairs; wide scan for port spectra.
pub fn resonator_model() -> SystemModel {
    SystemModel {
        mode_pairs: vec![fundamental_pair(0.0), second_order_pair()],
        emitters: vec![],
        topology: CircuitTopology::default(),
        drive: DriveSpec::grid(RESONANCE_THZ, -120.0, 120.0, 1201),
    }
}

/// Molecule M1 on double resonance with the fundamental pair, β = 0.75.
pub fn m1_model() -> SystemModel {
    let g = coupling_for_beta(0.75, GAMMA0_MHZ, KAPPA_GHZ);
    SystemModel {
        mode_pairs: vec![fundamental_pair(0.0)],
        emitters: vec![molecule(RESONANCE_THZ, vec![g], Some(0.0), None, 20.0)],
        topology: CircuitTopology::default(),
        drive: DriveSpec::grid(RESONANCE_THZ, -1.5, 1.5, 1501),
    }
}

/// M1 calibrated to the on-resonance linewidth γ′ = 125 MHz instead of β.
pub fn m1_gamma125_model() -> SystemModel {
    let g = coupling_from_linewidth(125.0, GAMMA0_MHZ, KAPPA_GHZ).unwrap();
    let mut model = m1_model();
    model.emitters[0].coupling_mhz = vec![g];
    model
}

/// M1 with the second-order pair and a weak fundamental backscattering;
/// the model behind the linewidth-vs-detuning curve.
pub fn m1_two_pair_model() -> SystemModel {
    let g = coupling_for_beta(0.75, GAMMA0_MHZ, KAPPA_GHZ);
    SystemModel {
        mode_pairs: vec![fundamental_pair(1.5), second_order_pair()],
        emitters: vec![molecule(
            RESONANCE_THZ,
            vec![g, 0.5 * g],
            Some(0.0),
            None,
            20.0,
        )],
        topology: CircuitTopology::default(),
        drive: DriveSpec::grid(RESONANCE_THZ, -1.5, 1.5, 1501),
    }
}

/// M1 and M2 with opposite-sign Stark coefficients. At 0 V they sit 4.96 GHz
/// apart; at −110 V they meet (residual detuning 10 MHz) 4 GHz below the
/// resonator center. M2 sits almost diametrically opposite M1 so that the
/// coupling phases differ by π/2 (mod 2π).
pub fn stark_pair_model() -> SystemModel {
    let g1 = coupling_for_beta(0.75, GAMMA0_MHZ, KAPPA_GHZ);
    let g2 = coupling_for_beta(0.56, GAMMA0_MHZ, KAPPA_GHZ);
    // 38 · (36.5π/38) = 36.5π ≡ π/2 (mod 2π)
    let azimuth2 = 36.5 * std::f64::consts::PI / 38.0;
    SystemModel {
        mode_pairs: vec![fundamental_pair(0.0)],
        emitters: vec![
            molecule(
                RESONANCE_THZ - units::ghz_to_thz(1.8),
                vec![g1],
                Some(0.0),
                None,
                20.0,
            ),
            molecule(
                RESONANCE_THZ - units::ghz_to_thz(6.76),
                vec![g2],
                Some(azimuth2),
                None,
                -25.0,
            ),
        ],
        topology: CircuitTopology::default(),
        drive: DriveSpec::grid(RESONANCE_THZ, -8.5, 1.5, 1001),
    }
}

/// M1 (β = 0.75) and M2 (β = 0.56) tuned into resonance with each other and
/// with the resonator, 10 MHz residual detuning, coupling phases π/2 apart so
/// the back-scattered fields accumulate a phase difference of π.
pub fn resonant_pair_model() -> SystemModel {
    let g1 = coupling_for_beta(0.75, GAMMA0_MHZ, KAPPA_GHZ);
    let g2 = coupling_for_beta(0.56, GAMMA0_MHZ, KAPPA_GHZ);
    SystemModel {
        mode_pairs: vec![fundamental_pair(0.0)],
        emitters: vec![
            molecule(
                RESONANCE_THZ + units::ghz_to_thz(0.005),
                vec![g1],
                None,
                Some(0.0),
                20.0,
            ),
            molecule(
                RESONANCE_THZ - units::ghz_to_thz(0.005),
                vec![g2],
                None,
                Some(std::f64::consts::FRAC_PI_2),
                -25.0,
            ),
        ],
        topology: CircuitTopology::default(),
        drive: DriveSpec::grid(RESONANCE_THZ, -0.8, 0.8, 8001),
    }
}

/// Two identical emitters with coupling efficiency `beta` each and coupling
/// phases 0 and `delta_phi_rad`, degenerate with the resonator.
pub fn symmetric_pair_model(beta: f64, delta_phi_rad: f64) -> SystemModel {
    let g = coupling_for_beta(beta, GAMMA0_MHZ, KAPPA_GHZ);
    SystemModel {
        mode_pairs: vec![fundamental_pair(0.0)],
        emitters: vec![
            molecule(RESONANCE_THZ, vec![g], None, Some(0.0), 20.0),
            molecule(RESONANCE_THZ, vec![g], None, Some(delta_phi_rad), -25.0),
        ],
        topology: CircuitTopology::default(),
        drive: DriveSpec::grid(RESONANCE_THZ, -1.5, 1.5, 1501),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for model in [
            resonator_model(),
            m1_model(),
            m1_gamma125_model(),
            m1_two_pair_model(),
            stark_pair_model(),
            resonant_pair_model(),
            symmetric_pair_model(0.99, std::f64::consts::FRAC_PI_2),
        ] {
            model.validate().unwrap();
        }
    }

    #[test]
    fn coupling_for_beta_reproduces_quoted_scale() {
        // β = 0.75 → g ≈ 578 MHz; β = 0.56 → g ≈ 376 MHz
        assert!((coupling_for_beta(0.75, 33.0, 27.0) - 578.035466).abs() < 1e-3);
        assert!((coupling_for_beta(0.56, 33.0, 27.0) - 376.497012).abs() < 1e-3);
    }
}
