//! Stark sweep of two molecules with opposite-sign tuning coefficients: drop
//! spectra for every voltage, tracked line centers, and the crossing voltage
//! recovered from the linear trajectories.

use disc_qed::presets;
use disc_qed::scenario::{run_scenario, Scenario};

/// Least-squares line y = a + b·x.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (sy / n - b * sx / n, b)
}

fn main() -> disc_qed::Result<()> {
    let model = presets::stark_pair_model();
    let out = std::env::temp_dir().join("disc-qed-examples/stark_waterfall");
    let scenario = Scenario::preset("fig3a", &model)?;
    run_scenario(&scenario, &out, None)?;
    println!("waterfall bundle written to {}", out.display());

    // read the tracked trajectories back and intersect their linear fits
    let text = std::fs::read_to_string(out.join("waterfall.csv"))?;
    let mut per_track: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![], vec![]); 2];
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[2] == "1" {
            let track: usize = cols[1].parse().unwrap_or(0);
            per_track[track].0.push(cols[0].parse().unwrap_or(f64::NAN));
            per_track[track].1.push(cols[3].parse().unwrap_or(f64::NAN));
        }
    }
    let (a1, b1) = linear_fit(&per_track[0].0, &per_track[0].1);
    let (a2, b2) = linear_fit(&per_track[1].0, &per_track[1].1);
    println!("track slopes: {:+.2} and {:+.2} MHz/V", b1 * 1e6, b2 * 1e6);
    println!("trajectories cross at V = {:.1} V", (a2 - a1) / (b1 - b2));
    Ok(())
}
