//! Domain types, configuration loading, validation and model-level operations.
//!
//! A [`SystemModel`] is an immutable value describing one driven circuit:
//! one or two counter-propagating mode pairs of a disc resonator, any number
//! of two-level emitters on its rim, the port topology of the two bus
//! waveguides, and the laser drive. All fields are stored in the same units
//! the configuration document uses (THz / GHz / MHz / radians / volts), so a
//! save/load round trip is bit-identical.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Relative tolerance for the loss-channel closure check
/// `κ = κ_int + Σ_w κ_ext[w]`.
pub const CLOSURE_REL_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Mode pairs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    Fundamental,
    SecondOrder,
}

/// One degenerate pair of counter-propagating (CW/CCW) resonator modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModePair {
    pub label: ModeLabel,
    /// Center frequency ω_r (THz).
    pub center_frequency_thz: f64,
    /// Total linewidth κ (GHz, FWHM).
    pub total_linewidth_ghz: f64,
    /// Intrinsic loss κ_int (GHz).
    pub intrinsic_loss_ghz: f64,
    /// External coupling κ_ext per waveguide `[wg1, wg2]` (GHz).
    pub external_coupling_ghz: [f64; 2],
    /// Backscattering h mixing CW and CCW (GHz, real, ≥ 0).
    #[serde(default)]
    pub backscatter_coupling_ghz: f64,
    /// Azimuthal order m of the travelling mode.
    pub azimuthal_order: u32,
}

impl ModePair {
    pub fn external_total_ghz(&self) -> f64 {
        self.external_coupling_ghz[0] + self.external_coupling_ghz[1]
    }

    fn validate(&self, path: &str) -> Result<()> {
        let k = self.total_linewidth_ghz;
        if !(self.center_frequency_thz > 0.0) {
            return Err(Error::Validation(format!(
                "{path}: center_frequency_thz must be > 0 (got {})",
                self.center_frequency_thz
            )));
        }
        for (name, v) in [
            ("total_linewidth_ghz", k),
            ("intrinsic_loss_ghz", self.intrinsic_loss_ghz),
            ("external_coupling_ghz[0]", self.external_coupling_ghz[0]),
            ("external_coupling_ghz[1]", self.external_coupling_ghz[1]),
            ("backscatter_coupling_ghz", self.backscatter_coupling_ghz),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "{path}: {name} must be finite and ≥ 0 (got {v})"
                )));
            }
        }
        if self.azimuthal_order == 0 {
            return Err(Error::Validation(format!(
                "{path}: azimuthal_order must be > 0"
            )));
        }
        let sum = self.intrinsic_loss_ghz + self.external_total_ghz();
        let scale = k.abs().max(1e-30);
        if ((k - sum) / scale).abs() > CLOSURE_REL_TOL {
            return Err(Error::Validation(format!(
                "{path}: loss channels do not close: total_linewidth_ghz = {k} but \
                 intrinsic_loss_ghz + sum(external_coupling_ghz) = {sum}"
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

/// How an emitter's coupling phase to the travelling modes is specified.
///
/// The phase entering the coupled-mode equations is `χ_p = m_p · φ_az` for
/// mode pair `p`. When only the relative phase is known (the azimuthal order
/// of the disc is not), a direct `coupling_phase` can be given instead; it is
/// then used verbatim for every mode pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmitterPhase {
    /// Position on the disc rim (radians in `[0, 2π)`).
    Azimuth(f64),
    /// Coupling phase χ used directly for all mode pairs (radians).
    Direct(f64),
}

/// A two-level emitter (one molecule) on the disc rim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emitter {
    /// Transition frequency ω_m (THz).
    pub transition_frequency_thz: f64,
    /// Free-space total linewidth γ⁰ (MHz).
    pub free_space_linewidth_mhz: f64,
    /// Free-space branching ratio α⁰ = γ⁰_zpl/γ⁰, in (0, 1].
    pub free_space_branching: f64,
    /// Pure dephasing γ* (MHz); broadens the coherence decay by 2γ*.
    #[serde(default)]
    pub pure_dephasing_mhz: f64,
    /// Coupling g to each mode pair (MHz), aligned with `mode_pairs`.
    pub coupling_mhz: Vec<f64>,
    /// Position on the rim (radians). Exactly one of this and
    /// `coupling_phase_rad` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuthal_angle_rad: Option<f64>,
    /// Direct coupling phase (radians), alternative to a position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_phase_rad: Option<f64>,
    /// Linear Stark coefficient k_S (MHz/V).
    #[serde(default)]
    pub stark_coefficient_mhz_per_v: f64,
}

impl Emitter {
    /// ZPL share of the free-space linewidth, γ⁰_zpl = α⁰·γ⁰ (MHz).
    pub fn zpl_linewidth_mhz(&self) -> f64 {
        self.free_space_branching * self.free_space_linewidth_mhz
    }

    /// Red-shifted share, γ⁰_red = (1−α⁰)·γ⁰ (MHz).
    pub fn red_linewidth_mhz(&self) -> f64 {
        (1.0 - self.free_space_branching) * self.free_space_linewidth_mhz
    }

    /// Coherence decay rate (γ⁰ + 2γ*) in GHz, the damping of σ in the
    /// steady-state equations.
    pub fn coherence_decay_ghz(&self) -> f64 {
        units::mhz_to_ghz(self.free_space_linewidth_mhz + 2.0 * self.pure_dephasing_mhz)
    }

    pub fn phase(&self) -> EmitterPhase {
        match (self.azimuthal_angle_rad, self.coupling_phase_rad) {
            (Some(a), None) => EmitterPhase::Azimuth(a),
            (None, Some(c)) => EmitterPhase::Direct(c),
            // unreachable after validation; default to a node-free phase
            _ => EmitterPhase::Direct(0.0),
        }
    }

    /// Coupling phase χ to mode pair `pair` (radians).
    pub fn coupling_phase(&self, pair: &ModePair) -> f64 {
        match self.phase() {
            EmitterPhase::Azimuth(a) => f64::from(pair.azimuthal_order) * a,
            EmitterPhase::Direct(c) => c,
        }
    }

    /// Coupling to mode pair `p` in GHz.
    pub fn coupling_ghz(&self, p: usize) -> f64 {
        units::mhz_to_ghz(self.coupling_mhz[p])
    }

    fn validate(&self, path: &str, n_pairs: usize) -> Result<()> {
        if !(self.transition_frequency_thz > 0.0) {
            return Err(Error::Validation(format!(
                "{path}: transition_frequency_thz must be > 0"
            )));
        }
        if !self.free_space_linewidth_mhz.is_finite() || self.free_space_linewidth_mhz < 0.0 {
            return Err(Error::Validation(format!(
                "{path}: free_space_linewidth_mhz must be ≥ 0"
            )));
        }
        if !(self.free_space_branching > 0.0 && self.free_space_branching <= 1.0) {
            return Err(Error::Validation(format!(
                "{path}: free_space_branching must lie in (0, 1] (got {})",
                self.free_space_branching
            )));
        }
        if !self.pure_dephasing_mhz.is_finite() || self.pure_dephasing_mhz < 0.0 {
            return Err(Error::Validation(format!(
                "{path}: pure_dephasing_mhz must be ≥ 0"
            )));
        }
        if self.coupling_mhz.len() != n_pairs {
            return Err(Error::Validation(format!(
                "{path}: coupling_mhz has {} entries but the model declares {} mode pair(s)",
                self.coupling_mhz.len(),
                n_pairs
            )));
        }
        if self.coupling_mhz.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Validation(format!(
                "{path}: coupling_mhz entries must be ≥ 0"
            )));
        }
        match (self.azimuthal_angle_rad, self.coupling_phase_rad) {
            (Some(a), None) => {
                if !(0.0..std::f64::consts::TAU).contains(&a) {
                    return Err(Error::Validation(format!(
                        "{path}: azimuthal_angle_rad must lie in [0, 2π) (got {a})"
                    )));
                }
            }
            (None, Some(c)) => {
                if !c.is_finite() {
                    return Err(Error::Validation(format!(
                        "{path}: coupling_phase_rad must be finite"
                    )));
                }
            }
            (Some(_), Some(_)) => {
                return Err(Error::Validation(format!(
                    "{path}: give either azimuthal_angle_rad or coupling_phase_rad, not both"
                )));
            }
            (None, None) => {
                return Err(Error::Validation(format!(
                    "{path}: one of azimuthal_angle_rad or coupling_phase_rad is required"
                )));
            }
        }
        if !self.stark_coefficient_mhz_per_v.is_finite() {
            return Err(Error::Validation(format!(
                "{path}: stark_coefficient_mhz_per_v must be finite"
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Topology and ports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Phase-matched to the clockwise travelling mode.
    Cw,
    /// Phase-matched to the counter-clockwise travelling mode.
    Ccw,
}

/// The six physical ports of the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    Input,
    Transmission,
    Drop,
    Add,
    #[serde(rename = "int1")]
    Interferometer1,
    #[serde(rename = "int2")]
    Interferometer2,
}

impl Port {
    pub const OUTPUTS: [Port; 5] = [
        Port::Transmission,
        Port::Drop,
        Port::Add,
        Port::Interferometer1,
        Port::Interferometer2,
    ];

    pub fn parse(name: &str) -> Result<Port> {
        match name.trim() {
            "input" => Ok(Port::Input),
            "transmission" => Ok(Port::Transmission),
            "drop" => Ok(Port::Drop),
            "add" => Ok(Port::Add),
            "int1" => Ok(Port::Interferometer1),
            "int2" => Ok(Port::Interferometer2),
            other => Err(Error::Interface(format!(
                "unknown port name '{other}' (expected one of input, transmission, drop, add, int1, int2)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Port::Input => "input",
            Port::Transmission => "transmission",
            Port::Drop => "drop",
            Port::Add => "add",
            Port::Interferometer1 => "int1",
            Port::Interferometer2 => "int2",
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortAssignment {
    /// Waveguide index, 1 or 2.
    pub waveguide: u8,
    pub direction: Direction,
}

impl PortAssignment {
    const fn new(waveguide: u8, direction: Direction) -> Self {
        PortAssignment {
            waveguide,
            direction,
        }
    }
}

/// Reference arm of the on-chip interferometer: a tap of the input with
/// amplitude ratio `r_ref` and phase `θ_ref`, combined 50/50 with the
/// CCW light out-coupled into waveguide 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerReference {
    pub amplitude_ratio: f64,
    pub phase_rad: f64,
}

impl Default for InterferometerReference {
    fn default() -> Self {
        InterferometerReference {
            amplitude_ratio: 0.1,
            phase_rad: 0.0,
        }
    }
}

/// Routing of the six physical ports onto (waveguide, direction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitTopology {
    pub input: PortAssignment,
    pub transmission: PortAssignment,
    pub drop: PortAssignment,
    pub add: PortAssignment,
    pub interferometer_1: PortAssignment,
    pub interferometer_2: PortAssignment,
    pub interferometer_reference: InterferometerReference,
}

impl Default for CircuitTopology {
    fn default() -> Self {
        CircuitTopology {
            input: PortAssignment::new(1, Direction::Cw),
            transmission: PortAssignment::new(1, Direction::Cw),
            drop: PortAssignment::new(2, Direction::Cw),
            add: PortAssignment::new(2, Direction::Ccw),
            interferometer_1: PortAssignment::new(1, Direction::Ccw),
            interferometer_2: PortAssignment::new(1, Direction::Ccw),
            interferometer_reference: InterferometerReference::default(),
        }
    }
}

impl CircuitTopology {
    pub fn assignment(&self, port: Port) -> PortAssignment {
        match port {
            Port::Input => self.input,
            Port::Transmission => self.transmission,
            Port::Drop => self.drop,
            Port::Add => self.add,
            Port::Interferometer1 => self.interferometer_1,
            Port::Interferometer2 => self.interferometer_2,
        }
    }

    fn validate(&self) -> Result<()> {
        for port in [
            Port::Input,
            Port::Transmission,
            Port::Drop,
            Port::Add,
            Port::Interferometer1,
            Port::Interferometer2,
        ] {
            let a = self.assignment(port);
            if a.waveguide != 1 && a.waveguide != 2 {
                return Err(Error::Validation(format!(
                    "topology.{port}: waveguide must be 1 or 2 (got {})",
                    a.waveguide
                )));
            }
        }
        if self.input.waveguide != 1 || self.transmission.waveguide != 1 {
            return Err(Error::Validation(
                "topology: input and transmission must share waveguide 1".into(),
            ));
        }
        if self.drop.waveguide != 2 || self.add.waveguide != 2 {
            return Err(Error::Validation(
                "topology: drop and add must share waveguide 2".into(),
            ));
        }
        let r = self.interferometer_reference.amplitude_ratio;
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Validation(format!(
                "topology.interferometer_reference.amplitude_ratio must be ≥ 0 (got {r})"
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Drive
// ---------------------------------------------------------------------------

/// Laser drive: either a single frequency or a detuning grid about a declared
/// origin. The input amplitude is fixed at unit power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laser_frequency_thz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_ghz: Option<GridSpec>,
    /// Origin of the detuning grid (THz). Required with `detuning_ghz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_thz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Linspace { start: f64, stop: f64, points: usize },
    Explicit(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Linspace {
                start,
                stop,
                points,
            } => linspace(*start, *stop, *points),
            GridSpec::Explicit(v) => v.clone(),
        }
    }
}

/// Evenly spaced grid, endpoint inclusive, deterministic.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

impl DriveSpec {
    pub fn single(laser_frequency_thz: f64) -> Self {
        DriveSpec {
            laser_frequency_thz: Some(laser_frequency_thz),
            detuning_ghz: None,
            origin_thz: None,
        }
    }

    pub fn grid(origin_thz: f64, start_ghz: f64, stop_ghz: f64, points: usize) -> Self {
        DriveSpec {
            laser_frequency_thz: None,
            detuning_ghz: Some(GridSpec::Linspace {
                start: start_ghz,
                stop: stop_ghz,
                points,
            }),
            origin_thz: Some(origin_thz),
        }
    }

    /// The declared origin for detunings (THz). For a single-frequency drive
    /// this is the laser frequency itself.
    pub fn origin_thz(&self) -> f64 {
        match (self.laser_frequency_thz, self.origin_thz) {
            (Some(f), _) => f,
            (None, Some(o)) => o,
            (None, None) => 0.0, // unreachable after validation
        }
    }

    /// Materialised laser-frequency grid in THz.
    pub fn frequencies_thz(&self) -> Vec<f64> {
        match (&self.laser_frequency_thz, &self.detuning_ghz) {
            (Some(f), _) => vec![*f],
            (None, Some(grid)) => {
                let origin = self.origin_thz();
                grid.values()
                    .iter()
                    .map(|d| origin + units::ghz_to_thz(*d))
                    .collect()
            }
            (None, None) => Vec::new(),
        }
    }

    /// Detunings (GHz) relative to the declared origin.
    pub fn detunings_ghz(&self) -> Vec<f64> {
        match (&self.laser_frequency_thz, &self.detuning_ghz) {
            (Some(_), _) => vec![0.0],
            (None, Some(grid)) => grid.values(),
            (None, None) => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        match (&self.laser_frequency_thz, &self.detuning_ghz) {
            (Some(f), None) => {
                if !(f.is_finite() && *f > 0.0) {
                    return Err(Error::Validation(format!(
                        "drive.laser_frequency_thz must be finite and > 0 (got {f})"
                    )));
                }
                if self.origin_thz.is_some() {
                    return Err(Error::Validation(
                        "drive.origin_thz only applies to a detuning grid".into(),
                    ));
                }
            }
            (None, Some(grid)) => {
                let origin = self.origin_thz.ok_or_else(|| {
                    Error::Validation("drive.origin_thz is required with a detuning grid".into())
                })?;
                if !(origin.is_finite() && origin > 0.0) {
                    return Err(Error::Validation(format!(
                        "drive.origin_thz must be finite and > 0 (got {origin})"
                    )));
                }
                let values = grid.values();
                if values.is_empty() {
                    return Err(Error::Validation("drive grid must be non-empty".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation("drive grid contains non-finite values".into()));
                }
                if values.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation(
                        "drive grid must be strictly increasing".into(),
                    ));
                }
            }
            (Some(_), Some(_)) => {
                return Err(Error::Validation(
                    "drive: give either laser_frequency_thz or detuning_ghz, not both".into(),
                ));
            }
            (None, None) => {
                return Err(Error::Validation(
                    "drive: one of laser_frequency_thz or detuning_ghz is required".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// SystemModel
// ---------------------------------------------------------------------------

/// Full parameterization of one driven resonator-emitter circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemModel {
    pub mode_pairs: Vec<ModePair>,
    #[serde(default)]
    pub emitters: Vec<Emitter>,
    #[serde(default)]
    pub topology: CircuitTopology,
    pub drive: DriveSpec,
}

impl SystemModel {
    /// Index of the fundamental mode pair, if present; otherwise pair 0.
    pub fn fundamental_index(&self) -> usize {
        self.mode_pairs
            .iter()
            .position(|p| p.label == ModeLabel::Fundamental)
            .unwrap_or(0)
    }

    pub fn fundamental(&self) -> &ModePair {
        &self.mode_pairs[self.fundamental_index()]
    }

    /// Checks every structural invariant; total over all constructible models.
    pub fn validate(&self) -> Result<()> {
        if self.mode_pairs.is_empty() {
            return Err(Error::Validation("mode_pairs must not be empty".into()));
        }
        let n_fundamental = self
            .mode_pairs
            .iter()
            .filter(|p| p.label == ModeLabel::Fundamental)
            .count();
        if n_fundamental > 1 {
            return Err(Error::Validation(
                "at most one mode pair may be labeled 'fundamental'".into(),
            ));
        }
        for (i, pair) in self.mode_pairs.iter().enumerate() {
            pair.validate(&format!("mode_pairs[{i}]"))?;
        }
        for (j, emitter) in self.emitters.iter().enumerate() {
            emitter.validate(&format!("emitters[{j}]"), self.mode_pairs.len())?;
        }
        self.topology.validate()?;
        self.drive.validate()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Parses and validates a configuration document.
pub fn load_model_str(json: &str) -> Result<SystemModel> {
    let model: SystemModel = serde_json::from_str(json).map_err(|e| Error::Schema {
        path: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    model.validate()?;
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path)?;
    load_model_str(&text)
}

/// Serializes a model back to its configuration document. Loading the result
/// reproduces the model bit-for-bit.
pub fn save_model(model: &SystemModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(model)?)
}

/// Shifts every emitter's transition frequency by `k_S · V`; all other fields
/// are unchanged. Additive in the applied voltage.
pub fn apply_stark(model: &SystemModel, voltage_v: f64) -> Result<SystemModel> {
    if !voltage_v.is_finite() {
        return Err(Error::Validation(format!(
            "stark voltage must be finite (got {voltage_v})"
        )));
    }
    let mut shifted = model.clone();
    for emitter in &mut shifted.emitters {
        let shift_thz =
            units::ghz_to_thz(units::mhz_to_ghz(emitter.stark_coefficient_mhz_per_v)) * voltage_v;
        emitter.transition_frequency_thz += shift_thz;
    }
    Ok(shifted)
}

/// Recovers a linear Stark coefficient (MHz/V) from transition frequencies
/// observed at two voltages.
pub fn stark_coefficient_from_two_points(
    freq_at_v1_thz: f64,
    v1: f64,
    freq_at_v2_thz: f64,
    v2: f64,
) -> Result<f64> {
    if v1 == v2 {
        return Err(Error::Validation(
            "stark calibration needs two distinct voltages".into(),
        ));
    }
    let slope_thz_per_v = (freq_at_v2_thz - freq_at_v1_thz) / (v2 - v1);
    Ok(units::ghz_to_mhz(units::thz_to_ghz(slope_thz_per_v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonatorFigures {
    pub finesse: f64,
    pub quality_factor: f64,
}

/// Finesse = FSR/κ and Q = ω_r/κ.
pub fn resonator_figures(
    center_frequency_thz: f64,
    total_linewidth_ghz: f64,
    free_spectral_range_thz: f64,
) -> Result<ResonatorFigures> {
    for (name, v) in [
        ("center_frequency_thz", center_frequency_thz),
        ("total_linewidth_ghz", total_linewidth_ghz),
        ("free_spectral_range_thz", free_spectral_range_thz),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Validation(format!("{name} must be > 0 (got {v})")));
        }
    }
    Ok(ResonatorFigures {
        finesse: units::thz_to_ghz(free_spectral_range_thz) / total_linewidth_ghz,
        quality_factor: units::thz_to_ghz(center_frequency_thz) / total_linewidth_ghz,
    })
}

/// Coupling g (MHz) that reproduces a target Purcell-enhanced linewidth γ′ for
/// an emitter on double resonance with a single mode pair (h = 0), under the
/// convention that both travelling modes together add `8g²/κ` to the
/// linewidth.
pub fn coupling_from_linewidth(
    enhanced_linewidth_mhz: f64,
    free_space_linewidth_mhz: f64,
    total_linewidth_ghz: f64,
) -> Result<f64> {
    if enhanced_linewidth_mhz < free_space_linewidth_mhz {
        return Err(Error::Validation(format!(
            "enhanced linewidth ({enhanced_linewidth_mhz} MHz) must be ≥ the free-space linewidth \
             ({free_space_linewidth_mhz} MHz)"
        )));
    }
    if !(total_linewidth_ghz > 0.0) {
        return Err(Error::Validation("total_linewidth_ghz must be > 0".into()));
    }
    let cavity_rate_ghz = units::mhz_to_ghz(enhanced_linewidth_mhz - free_space_linewidth_mhz);
    Ok(units::ghz_to_mhz(
        (cavity_rate_ghz * total_linewidth_ghz / 8.0).sqrt(),
    ))
}
