//! Cross-check of the frequency-domain steady state against the independent
//! time-domain integration from zero initial conditions, plus the power
//! bookkeeping across all real and virtual ports.

use disc_qed::presets;
use disc_qed::solver::{
    assemble_linear_system, passivity_report, solve_steady_state, time_domain_oracle,
};
use disc_qed::units;

fn main() -> disc_qed::Result<()> {
    let model = presets::m1_gamma125_model();
    for det_ghz in [-0.4, 0.0, 0.25] {
        let freq = presets::RESONANCE_THZ + units::ghz_to_thz(det_ghz);
        let system = assemble_linear_system(&model, freq)?;
        let direct = solve_steady_state(&system)?;
        let oracle = time_domain_oracle(&model, freq, 400.0, 1e-9)?;
        let dev = (direct.cw[0] - oracle.cw[0]).norm() / direct.cw[0].norm();
        println!(
            "detuning {det_ghz:+.2} GHz: |a| = {:.6e}, time-domain deviation {dev:.2e}",
            direct.cw[0].norm()
        );

        let report = passivity_report(&model, &direct);
        println!(
            "  power out: transmission {:.4}, drop {:.4}, add {:.4}, backward {:.4}, \
             intrinsic {:.4}, emitter {:.4} → imbalance {:.2e}",
            report.transmitted,
            report.waveguide2_cw,
            report.waveguide2_ccw,
            report.waveguide1_backward,
            report.intrinsic,
            report
                .emitter_channels
                .iter()
                .map(|(a, b, c)| a + b + c)
                .sum::<f64>(),
            report.relative_imbalance
        );
    }
    Ok(())
}
