//! Bare-resonator port spectra: both radial mode pairs seen at the drop, add
//! and transmission ports, plus the headline finesse and Q figures.

use disc_qed::model::{resonator_figures, Port};
use disc_qed::presets;
use disc_qed::scenario::{run_scenario, Scenario};

fn main() -> disc_qed::Result<()> {
    let model = presets::resonator_model();
    let figures = resonator_figures(presets::RESONANCE_THZ, presets::KAPPA_GHZ, presets::FSR_THZ)?;
    println!(
        "fundamental resonance: κ = {} GHz, FSR = {} THz → finesse {:.1}, Q {:.0}",
        presets::KAPPA_GHZ,
        presets::FSR_THZ,
        figures.finesse,
        figures.quality_factor
    );

    let out = std::env::temp_dir().join("disc-qed-examples/resonator_ports");
    let scenario = Scenario::preset("fig1c", &model)?;
    let manifest = run_scenario(&scenario, &out, None)?;
    println!("port spectra written to {}", out.display());
    for file in manifest.outputs.keys() {
        println!("  {file}");
    }

    // on-resonance sanity numbers
    let spectra = disc_qed::solver::port_spectrum(&model, &[Port::Transmission, Port::Drop])?;
    let mid = spectra.detunings_ghz.len() / 2;
    let t = spectra.intensities(Port::Transmission).unwrap()[mid];
    println!("transmission dip on resonance: {:.1}%", 100.0 * (1.0 - t));
    Ok(())
}
