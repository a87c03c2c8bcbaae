//! Derived cavity-QED figures of merit, from fitted linewidths or model
//! parameters.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::solver::emitter_effective_matrix;
use crate::units;

/// Purcell factor and branching/coupling efficiencies from an enhanced
/// linewidth: `F = (γ′−γ⁰)/(α⁰γ⁰)`, `α′ = (1+F)α⁰γ⁰/γ′`, `β = F·α⁰γ⁰/γ′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurcellResult {
    pub purcell_factor: f64,
    pub enhanced_branching: f64,
    pub coupling_efficiency: f64,
}

pub fn purcell_from_linewidth(
    enhanced_linewidth_mhz: f64,
    free_space_linewidth_mhz: f64,
    free_space_branching: f64,
) -> Result<PurcellResult> {
    if !(free_space_linewidth_mhz > 0.0) {
        return Err(Error::Validation("γ⁰ must be > 0".into()));
    }
    if enhanced_linewidth_mhz < free_space_linewidth_mhz {
        return Err(Error::Validation(format!(
            "γ′ = {enhanced_linewidth_mhz} MHz < γ⁰ = {free_space_linewidth_mhz} MHz: \
             no de-enhancement in this model"
        )));
    }
    if !(free_space_branching > 0.0 && free_space_branching <= 1.0) {
        return Err(Error::Validation("α⁰ must lie in (0, 1]".into()));
    }
    let zpl = free_space_branching * free_space_linewidth_mhz;
    let f = (enhanced_linewidth_mhz - free_space_linewidth_mhz) / zpl;
    Ok(PurcellResult {
        purcell_factor: f,
        enhanced_branching: (1.0 + f) * zpl / enhanced_linewidth_mhz,
        coupling_efficiency: f * zpl / enhanced_linewidth_mhz,
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Validation(format!(
            "β must lie in [0, 1] (got {beta})"
        )));
    }
    Ok(())
}

/// Residual drop-port transmission of a ring/disc resonator at the molecular
/// resonance: `(1 − β/2)²` (each travelling mode takes β/2).
pub fn extinction_ring(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok((1.0 - beta / 2.0).powi(2))
}

/// Residual transmission of a Fabry-Perot (single-mode) cavity: `(1 − β)²`.
pub fn extinction_fabry_perot(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok((1.0 - beta).powi(2))
}

/// Standing-wave figures: `g_eff = √2·g`, `C = 4g_eff²/(κγ⁰)`, `J = g_eff²/κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollectiveCoupling {
    pub g_eff_ghz: f64,
    pub cooperativity: f64,
    pub exchange_mhz: f64,
}

pub fn cooperativity_exchange(g_ghz: f64, kappa_ghz: f64, gamma0_ghz: f64) -> Result<CollectiveCoupling> {
    for (name, v) in [("g", g_ghz), ("κ", kappa_ghz), ("γ⁰", gamma0_ghz)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Validation(format!("{name} must be ≥ 0 (got {v})")));
        }
    }
    if kappa_ghz == 0.0 || gamma0_ghz == 0.0 {
        return Err(Error::Validation("κ and γ⁰ must be > 0".into()));
    }
    let g_eff = std::f64::consts::SQRT_2 * g_ghz;
    Ok(CollectiveCoupling {
        g_eff_ghz: g_eff,
        cooperativity: 4.0 * g_eff * g_eff / (kappa_ghz * gamma0_ghz),
        exchange_mhz: units::ghz_to_mhz(g_eff * g_eff / kappa_ghz),
    })
}

/// Super- and subradiant linewidths of two degenerate emitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperSub {
    pub gamma_super_mhz: f64,
    pub gamma_sub_mhz: f64,
}

/// Eigenvalue linewidths of the 2×2 effective emitter matrix after
/// eliminating all cavity modes. `delta_phi_rad` is the coupling-phase
/// difference between the two emitters; `cavity_detuning_ghz` positions the
/// degenerate pair relative to the fundamental mode (Δ = ω_m − ω_r).
pub fn super_sub_linewidths(
    model: &SystemModel,
    delta_phi_rad: f64,
    cavity_detuning_ghz: f64,
) -> Result<SuperSub> {
    if model.emitters.len() != 2 {
        return Err(Error::Validation(format!(
            "super/sub linewidths need exactly two emitters (model has {})",
            model.emitters.len()
        )));
    }
    let f0 = model.emitters[0].transition_frequency_thz;
    let f1 = model.emitters[1].transition_frequency_thz;
    let rel = units::detuning_ghz(f0, f1).abs()
        / units::mhz_to_ghz(model.emitters[0].free_space_linewidth_mhz).max(1e-12);
    if rel > 1e-6 {
        return Err(Error::Validation(format!(
            "emitters are not degenerate (split {} GHz); use the full solver instead",
            units::detuning_ghz(f0, f1)
        )));
    }

    // probe model: both emitters at the common frequency, phases 0 and Δφ,
    // fundamental center at ω_m − Δ (other pairs rigidly shifted)
    let mut probe = model.clone();
    let omega_m = f0;
    probe.emitters[1].transition_frequency_thz = omega_m;
    probe.emitters[0].azimuthal_angle_rad = None;
    probe.emitters[0].coupling_phase_rad = Some(0.0);
    probe.emitters[1].azimuthal_angle_rad = None;
    probe.emitters[1].coupling_phase_rad = Some(delta_phi_rad);
    let fundamental = probe.fundamental_index();
    let target = omega_m - units::ghz_to_thz(cavity_detuning_ghz);
    let shift = target - probe.mode_pairs[fundamental].center_frequency_thz;
    for pair in &mut probe.mode_pairs {
        pair.center_frequency_thz += shift;
    }

    let e = emitter_effective_matrix(&probe, omega_m)?;
    // eigenvalues of a 2×2 complex matrix
    let tr = e[(0, 0)] + e[(1, 1)];
    let det = e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(1, 0)];
    let disc = (tr * tr - Complex64::from(4.0) * det).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    let w1 = units::ghz_to_mhz(-2.0 * l1.re);
    let w2 = units::ghz_to_mhz(-2.0 * l2.re);
    Ok(SuperSub {
        gamma_super_mhz: w1.max(w2),
        gamma_sub_mhz: w1.min(w2),
    })
}

/// Relative fluorescence signal `(γ_ref/γ)²`.
pub fn fluorescence_scaling(gamma_mhz: f64, gamma_ref_mhz: f64) -> Result<f64> {
    if !(gamma_mhz > 0.0 && gamma_ref_mhz > 0.0) {
        return Err(Error::Validation("linewidths must be > 0".into()));
    }
    Ok((gamma_ref_mhz / gamma_mhz).powi(2))
}

// ---------------------------------------------------------------------------
// Aggregated report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Fitted,
    Configured,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub unit: &'static str,
    pub provenance: Provenance,
}

/// Every figure of merit for one emitter, keyed for the JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct QedMetrics {
    pub purcell_factor: MetricValue,
    pub enhanced_branching: MetricValue,
    pub coupling_efficiency: MetricValue,
    pub ring_transmission: MetricValue,
    pub fabry_perot_transmission: MetricValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_eff: Option<MetricValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cooperativity: Option<MetricValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exchange: Option<MetricValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_super: Option<MetricValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_sub: Option<MetricValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<MetricValue>,
}

/// Metrics from a fitted (or otherwise measured) enhanced linewidth.
pub fn metrics_from_linewidth(
    enhanced_linewidth_mhz: f64,
    free_space_linewidth_mhz: f64,
    free_space_branching: f64,
    provenance: Provenance,
) -> Result<QedMetrics> {
    let p = purcell_from_linewidth(
        enhanced_linewidth_mhz,
        free_space_linewidth_mhz,
        free_space_branching,
    )?;
    let beta = p.coupling_efficiency;
    Ok(QedMetrics {
        purcell_factor: MetricValue {
            value: p.purcell_factor,
            unit: "dimensionless",
            provenance,
        },
        enhanced_branching: MetricValue {
            value: p.enhanced_branching,
            unit: "dimensionless",
            provenance,
        },
        coupling_efficiency: MetricValue {
            value: beta,
            unit: "dimensionless",
            provenance,
        },
        ring_transmission: MetricValue {
            value: extinction_ring(beta)?,
            unit: "dimensionless",
            provenance,
        },
        fabry_perot_transmission: MetricValue {
            value: extinction_fabry_perot(beta)?,
            unit: "dimensionless",
            provenance,
        },
        g_eff: None,
        cooperativity: None,
        exchange: None,
        gamma_super: None,
        gamma_sub: None,
        visibility: None,
    })
}

/// Metrics of one configured emitter, evaluated on double resonance with the
/// fundamental pair.
pub fn metrics_from_model(model: &SystemModel, emitter_index: usize) -> Result<QedMetrics> {
    let emitter = model
        .emitters
        .get(emitter_index)
        .ok_or_else(|| Error::Interface(format!("no emitter {emitter_index}")))?;
    let response = crate::solver::effective_emitter_response(model, emitter_index, 0.0)?;
    let mut metrics = metrics_from_linewidth(
        response.gamma_eff_mhz,
        emitter.free_space_linewidth_mhz + 2.0 * emitter.pure_dephasing_mhz,
        emitter.free_space_branching,
        Provenance::Configured,
    )?;
    let fundamental = model.fundamental_index();
    let collective = cooperativity_exchange(
        emitter.coupling_ghz(fundamental),
        model.mode_pairs[fundamental].total_linewidth_ghz,
        units::mhz_to_ghz(emitter.free_space_linewidth_mhz),
    )?;
    metrics.g_eff = Some(MetricValue {
        value: collective.g_eff_ghz,
        unit: "GHz",
        provenance: Provenance::Configured,
    });
    metrics.cooperativity = Some(MetricValue {
        value: collective.cooperativity,
        unit: "dimensionless",
        provenance: Provenance::Configured,
    });
    metrics.exchange = Some(MetricValue {
        value: collective.exchange_mhz,
        unit: "MHz",
        provenance: Provenance::Configured,
    });
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn purcell_for_m1_quoted_numbers() {
        let p = purcell_from_linewidth(125.0, 33.0, 1.0 / 3.0).unwrap();
        assert!((p.purcell_factor - 8.36).abs() < 0.05, "{}", p.purcell_factor);
        assert!((p.enhanced_branching - 0.82).abs() < 0.01);
        assert!((p.coupling_efficiency - 0.74).abs() < 0.01);
    }

    #[test]
    fn purcell_degenerate_and_asymptotic_cases() {
        let p = purcell_from_linewidth(33.0, 33.0, 0.4).unwrap();
        assert_eq!(p.purcell_factor, 0.0);
        assert_relative_eq!(p.enhanced_branching, 0.4, max_relative = 1e-12);
        assert_eq!(p.coupling_efficiency, 0.0);
        let huge = purcell_from_linewidth(3.3e7, 33.0, 0.4).unwrap();
        assert!(huge.enhanced_branching > 0.999);
        assert!(huge.coupling_efficiency > 0.999);
        assert!(purcell_from_linewidth(30.0, 33.0, 0.4).is_err());
    }

    #[test]
    fn purcell_round_trip_is_exact_inverse() {
        for (gp, g0, a0) in [(125.0, 33.0, 1.0 / 3.0), (132.0, 33.0, 0.25), (45.0, 33.0, 0.8)] {
            let p = purcell_from_linewidth(gp, g0, a0).unwrap();
            let zpl = a0 * g0;
            let red = (1.0 - a0) * g0;
            let reconstructed = (1.0 + p.purcell_factor) * zpl + red;
            assert_relative_eq!(reconstructed, gp, max_relative = 1e-12);
        }
    }

    #[test]
    fn extinction_values() {
        assert_eq!(extinction_ring(1.0).unwrap(), 0.25);
        assert_relative_eq!(extinction_ring(0.75).unwrap(), 0.390625, max_relative = 1e-12);
        assert_relative_eq!(extinction_ring(0.56).unwrap(), 0.5184, max_relative = 1e-12);
        assert_eq!(extinction_ring(0.0).unwrap(), 1.0);
        assert_eq!(extinction_fabry_perot(1.0).unwrap(), 0.0);
        assert_eq!(extinction_fabry_perot(0.0).unwrap(), 1.0);
        assert_eq!(extinction_fabry_perot(0.5).unwrap(), 0.25);
        assert!(extinction_ring(1.2).is_err());
        assert!(extinction_fabry_perot(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn ring_beats_fabry_perot_and_both_decrease(beta in 1e-6..1.0f64, d in 1e-6..0.2f64) {
            let ring = extinction_ring(beta).unwrap();
            let fp = extinction_fabry_perot(beta).unwrap();
            prop_assert!(ring > fp);
            let beta2 = (beta + d).min(1.0);
            prop_assert!(extinction_ring(beta2).unwrap() <= ring);
            prop_assert!(extinction_fabry_perot(beta2).unwrap() <= fp);
        }
    }

    #[test]
    fn cooperativity_exchange_quoted_numbers() {
        let c = cooperativity_exchange(0.49, 27.0, 0.03).unwrap();
        assert_relative_eq!(c.g_eff_ghz, 0.6929646456, max_relative = 1e-9);
        assert_relative_eq!(c.cooperativity, 2.3713580246913575, max_relative = 1e-9);
        assert_relative_eq!(c.exchange_mhz, 17.785185185185185, max_relative = 1e-9);
        let zero = cooperativity_exchange(0.0, 27.0, 0.03).unwrap();
        assert_eq!(zero.cooperativity, 0.0);
        assert_eq!(zero.exchange_mhz, 0.0);
        let bad_cavity = cooperativity_exchange(0.49, 27000.0, 0.03).unwrap();
        assert!(bad_cavity.cooperativity < 0.01);
        assert!(bad_cavity.exchange_mhz < 0.02);
    }

    #[test]
    fn super_sub_at_zero_and_one_kappa_detuning() {
        let model = presets::symmetric_pair_model(0.75, 0.0);
        let on = super_sub_linewidths(&model, 0.0, 0.0).unwrap();
        assert_relative_eq!(on.gamma_super_mhz, 231.0, max_relative = 1e-9);
        assert_relative_eq!(on.gamma_sub_mhz, 33.0, max_relative = 1e-9);
        let off = super_sub_linewidths(&model, 0.0, presets::KAPPA_GHZ).unwrap();
        assert_relative_eq!(off.gamma_super_mhz, 72.6, max_relative = 1e-9);
        assert_relative_eq!(off.gamma_sub_mhz, 33.0, max_relative = 1e-9);
    }

    #[test]
    fn super_sub_quarter_phase_is_degenerate_at_single_emitter_rate() {
        let model = presets::symmetric_pair_model(0.75, 0.0);
        let r = super_sub_linewidths(&model, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        // each emitter keeps its single-emitter enhanced linewidth (132 MHz)
        assert_relative_eq!(r.gamma_super_mhz, 132.0, max_relative = 1e-9);
        assert_relative_eq!(r.gamma_sub_mhz, 132.0, max_relative = 1e-9);
    }

    #[test]
    fn super_sub_g_zero_returns_gamma0_exactly() {
        let mut model = presets::symmetric_pair_model(0.75, 0.0);
        for e in &mut model.emitters {
            e.coupling_mhz = vec![0.0];
        }
        let r = super_sub_linewidths(&model, 0.0, 0.0).unwrap();
        assert_eq!(r.gamma_super_mhz, 33.0);
        assert_eq!(r.gamma_sub_mhz, 33.0);
    }

    #[test]
    fn super_sub_rejects_non_degenerate_pairs() {
        let model = presets::resonant_pair_model(); // 10 MHz residual split
        assert!(matches!(
            super_sub_linewidths(&model, 0.0, 0.0),
            Err(Error::Validation(_))
        ));
        let single = presets::m1_model();
        assert!(super_sub_linewidths(&single, 0.0, 0.0).is_err());
    }

    #[test]
    fn fluorescence_scaling_values() {
        assert_eq!(fluorescence_scaling(33.0, 33.0).unwrap(), 1.0);
        assert_eq!(fluorescence_scaling(66.0, 33.0).unwrap(), 0.25);
        assert!(fluorescence_scaling(0.0, 33.0).is_err());
    }

    #[test]
    fn fluorescence_overlay_matches_product_of_factors() {
        // excitation efficiency ∝ 1/γ and red-branch probability ∝ 1/γ:
        // simulated confocal signal = (γ⁰/γ)·(γ⁰_red/γ scaled) ∝ 1/γ²
        let model = presets::m1_model();
        let gamma0 = presets::GAMMA0_MHZ;
        for delta in [-54.0, -13.5, 0.0, 27.0, 81.0] {
            let gamma = crate::solver::effective_emitter_response(&model, 0, delta)
                .unwrap()
                .gamma_eff_mhz;
            let excitation = gamma0 / gamma;
            let red_branch = (model.emitters[0].red_linewidth_mhz() / gamma)
                / (model.emitters[0].red_linewidth_mhz() / gamma0);
            let confocal = excitation * red_branch;
            assert_relative_eq!(
                confocal,
                fluorescence_scaling(gamma, gamma0).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn solver_consistency_dip_vs_beta() {
        // drop dip from the full solver vs 1−(1−β/2)² with β from the
        // eliminated response (single pair, h = 0, on resonance)
        for model in [presets::m1_model(), presets::m1_gamma125_model()] {
            let gamma_eff = crate::solver::effective_emitter_response(&model, 0, 0.0)
                .unwrap()
                .gamma_eff_mhz;
            let beta = (gamma_eff - presets::GAMMA0_MHZ) / gamma_eff;
            let system =
                crate::solver::assemble_linear_system(&model, presets::RESONANCE_THZ).unwrap();
            let state = crate::solver::solve_steady_state(&system).unwrap();
            let with = crate::solver::output_amplitude(&model, &state, crate::model::Port::Drop)
                .unwrap()
                .norm_sqr();
            let bare_model = {
                let mut m = model.clone();
                m.emitters.clear();
                m
            };
            let bare_sys =
                crate::solver::assemble_linear_system(&bare_model, presets::RESONANCE_THZ).unwrap();
            let bare =
                crate::solver::output_amplitude(&bare_model, &crate::solver::solve_steady_state(&bare_sys).unwrap(), crate::model::Port::Drop)
                    .unwrap()
                    .norm_sqr();
            let dip = 1.0 - with / bare;
            let predicted = 1.0 - extinction_ring(beta).unwrap();
            assert!((dip - predicted).abs() < 0.01, "dip {dip} vs {predicted}");
        }
    }

    #[test]
    fn report_builders() {
        let fitted = metrics_from_linewidth(125.0, 33.0, 1.0 / 3.0, Provenance::Fitted).unwrap();
        assert_eq!(fitted.purcell_factor.provenance, Provenance::Fitted);
        let configured = metrics_from_model(&presets::m1_model(), 0).unwrap();
        assert_eq!(configured.purcell_factor.provenance, Provenance::Configured);
        assert!((configured.purcell_factor.value - 9.0).abs() < 1e-6);
        assert!(configured.cooperativity.is_some());
    }
}
