//! Intracavity standing wave formed by back-scattering off a well-coupled
//! molecule: field profile around the rim, visibility, and the node pinned to
//! the molecule's position.

use disc_qed::presets;
use disc_qed::solver::{assemble_linear_system, intracavity_field, solve_steady_state};

fn main() -> disc_qed::Result<()> {
    let model = presets::m1_model();
    let system = assemble_linear_system(&model, presets::RESONANCE_THZ)?;
    let state = solve_steady_state(&system)?;

    let grid: Vec<f64> = (0..14400)
        .map(|i| i as f64 * std::f64::consts::TAU / 14400.0)
        .collect();
    let field = intracavity_field(&model, &state, 0, &grid)?;
    println!("standing-wave visibility: {:.4}", field.visibility);
    println!(
        "node at azimuth {:.4} rad (molecule sits at {:.4} rad)",
        field.node_azimuth_rad,
        model.emitters[0].azimuthal_angle_rad.unwrap_or(0.0)
    );

    let out = std::env::temp_dir().join("disc-qed-examples/standing_wave");
    std::fs::create_dir_all(&out)?;
    let path = out.join("field_vs_azimuth.csv");
    let mut w = csv::Writer::from_path(&path).map_err(disc_qed::Error::from)?;
    w.write_record(["azimuth_rad", "re_field", "im_field", "intensity"])
        .map_err(disc_qed::Error::from)?;
    for (phi, f) in field.azimuth_rad.iter().zip(&field.field) {
        w.write_record(&[
            format!("{phi:.6}"),
            format!("{:.6e}", f.re),
            format!("{:.6e}", f.im),
            format!("{:.6e}", f.norm_sqr()),
        ])
        .map_err(disc_qed::Error::from)?;
    }
    w.flush()?;
    println!("field profile written to {}", path.display());
    Ok(())
}
