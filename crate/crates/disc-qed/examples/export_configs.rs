//! Regenerates the shipped configuration documents in `configs/` from the
//! preset models, so files and code cannot drift apart.

use std::path::PathBuf;

use disc_qed::model::save_model;
use disc_qed::presets;

fn main() -> disc_qed::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    std::fs::create_dir_all(&dir)?;
    let entries = [
        ("resonator.json", presets::resonator_model()),
        ("m1.json", presets::m1_model()),
        ("m1_gamma125.json", presets::m1_gamma125_model()),
        ("m1_two_pair.json", presets::m1_two_pair_model()),
        ("stark_pair.json", presets::stark_pair_model()),
        ("resonant_pair.json", presets::resonant_pair_model()),
        (
            "symmetric_pair_beta99.json",
            presets::symmetric_pair_model(0.99, std::f64::consts::FRAC_PI_2),
        ),
    ];
    for (name, model) in entries {
        let path = dir.join(name);
        std::fs::write(&path, save_model(&model)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
