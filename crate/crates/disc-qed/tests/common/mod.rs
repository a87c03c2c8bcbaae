//! Shared helpers for integration tests: a seeded random-model generator and
//! dip extraction.

use disc_qed::model::{
    CircuitTopology, DriveSpec, Emitter, ModeLabel, ModePair, Port, SystemModel,
};
use disc_qed::solver::port_spectrum;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random, valid, dynamically stable model. Rates are kept within a
/// moderate stiffness range so the time-domain oracle stays cheap.
pub fn random_model(rng: &mut ChaCha8Rng) -> SystemModel {
    let n_pairs = if rng.gen_bool(0.5) { 1 } else { 2 };
    let mut mode_pairs = Vec::with_capacity(n_pairs);
    for p in 0..n_pairs {
        let kappa: f64 = rng.gen_range(5.0..30.0);
        let ext = [
            kappa * rng.gen_range(0.05..0.40),
            kappa * rng.gen_range(0.05..0.40),
        ];
        mode_pairs.push(ModePair {
            label: if p == 0 {
                ModeLabel::Fundamental
            } else {
                ModeLabel::SecondOrder
            },
            center_frequency_thz: 404.935
                + if p == 0 {
                    0.0
                } else {
                    rng.gen_range(-0.06..0.06)
                },
            total_linewidth_ghz: kappa,
            intrinsic_loss_ghz: kappa - ext[0] - ext[1],
            external_coupling_ghz: ext,
            backscatter_coupling_ghz: rng.gen_range(0.0..kappa / 4.0),
            azimuthal_order: rng.gen_range(20..40),
        });
    }
    let kappa1 = mode_pairs[0].total_linewidth_ghz;
    let n_emitters = rng.gen_range(0..=3);
    let emitters = (0..n_emitters)
        .map(|_| Emitter {
            transition_frequency_thz: 404.935 + rng.gen_range(-2.0 * kappa1..2.0 * kappa1) * 1e-3,
            free_space_linewidth_mhz: rng.gen_range(500.0..5000.0),
            free_space_branching: rng.gen_range(0.1..1.0),
            pure_dephasing_mhz: rng.gen_range(0.0..500.0),
            coupling_mhz: (0..n_pairs).map(|_| rng.gen_range(0.0..2000.0)).collect(),
            azimuthal_angle_rad: Some(rng.gen_range(0.0..std::f64::consts::TAU)),
            coupling_phase_rad: None,
            stark_coefficient_mhz_per_v: 0.0,
        })
        .collect();
    let model = SystemModel {
        mode_pairs,
        emitters,
        topology: CircuitTopology::default(),
        drive: DriveSpec::grid(404.935, -2.5 * kappa1, 2.5 * kappa1, 5),
    };
    model.validate().expect("generator produces valid models");
    model
}

/// Relative drop-port dip of `model` against its molecule-free twin over the
/// model's own drive grid.
pub fn drop_dip(model: &SystemModel) -> f64 {
    let with = port_spectrum(model, &[Port::Drop]).unwrap();
    let mut bare_model = model.clone();
    bare_model.emitters.clear();
    let bare = port_spectrum(&bare_model, &[Port::Drop]).unwrap();
    let with_i = with.intensities(Port::Drop).unwrap();
    let bare_i = bare.intensities(Port::Drop).unwrap();
    1.0 - with_i
        .iter()
        .zip(&bare_i)
        .map(|(a, b)| a / b)
        .fold(f64::INFINITY, f64::min)
}
