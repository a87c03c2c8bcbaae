//! Simulated-vs-measured comparison: simulate a spectrum, forge a noisy
//! "measurement" from the same model, and check the deviation report.

use disc_qed::io::{read_port_spectra_csv, write_port_spectra_csv};
use disc_qed::model::Port;
use disc_qed::presets;
use disc_qed::scenario::{compare_tables, run_scenario, Scenario, ToleranceSpec};
use disc_qed::solver::port_spectrum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> disc_qed::Result<()> {
    let model = presets::m1_model();
    let out = std::env::temp_dir().join("disc-qed-examples/compare_reference");
    run_scenario(&Scenario::custom(&model, vec![Port::Drop]), &out, None)?;
    let simulated = read_port_spectra_csv(&out.join("spectra/step_000.csv"))?;

    // synthetic measurement: same model, 1% multiplicative noise
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut reference = port_spectrum(&model, &[Port::Drop])?;
    for amp in &mut reference.amplitudes[0] {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let noise = 0.005 * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        *amp *= 1.0 + noise; // ~1% intensity noise
    }
    let ref_path = out.join("reference.csv");
    write_port_spectra_csv(&reference, &ref_path)?;
    let reference = read_port_spectra_csv(&ref_path)?;

    let tol = ToleranceSpec {
        max_rel: Some(0.05),
        rms_rel: Some(0.02),
    };
    let report = compare_tables(&simulated, &reference, &tol, false)?;
    for port in &report.ports {
        println!(
            "port {}: max deviation {:.2e} (rel {:.2e}), rms {:.2e} (rel {:.2e}) → {}",
            port.port,
            port.max_abs,
            port.max_rel,
            port.rms_abs,
            port.rms_rel,
            if port.pass { "pass" } else { "FAIL" }
        );
    }
    println!("overall: {}", if report.pass { "pass" } else { "FAIL" });
    Ok(())
}
