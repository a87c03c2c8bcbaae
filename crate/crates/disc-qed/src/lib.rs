//! Steady-state simulation and spectral fitting for waveguide-coupled
//! microdisc resonators hosting two-level emitters (single dye molecules).
//!
//! The crate covers the full chain from a JSON system description to derived
//! cavity-QED figures of merit:
//!
//! * [`model`] — domain types, configuration documents, validation, Stark
//!   tuning, resonator figures.
//! * [`solver`] — the coupled-mode steady state in the rotating frame: port
//!   spectra, intracavity standing waves, adiabatic elimination, a
//!   time-domain verification oracle, and a passivity audit.
//! * [`fit`] — resonator backgrounds and complex Fano lines on top of a
//!   self-contained Levenberg-Marquardt engine, plus waterfall tracking.
//! * [`metrics`] — Purcell factor, branching, extinction, cooperativity,
//!   exchange rate, super/subradiant linewidths.
//! * [`scenario`] — named reproduction scenarios with deterministic output
//!   bundles and reference comparison.
//! * [`presets`] — the calibrated models behind the shipped configurations.
//!
//! See the crate examples for one runnable program per capability.

pub mod error;
pub mod fit;
pub mod io;
pub mod metrics;
pub mod model;
pub mod presets;
pub mod scenario;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
pub use fit::{
    fit_background, fit_fano, lm_minimize, track_waterfall, BackgroundModel, FanoFitOptions,
    FanoFitResult, LmOptions, Spectrum,
};
pub use metrics::{
    cooperativity_exchange, extinction_fabry_perot, extinction_ring, fluorescence_scaling,
    purcell_from_linewidth, super_sub_linewidths, QedMetrics,
};
pub use model::{
    apply_stark, load_model, load_model_str, resonator_figures, save_model, DriveSpec, Emitter,
    ModePair, Port, SystemModel,
};
pub use scenario::{compare_reference, run_scenario, RunManifest, Scenario, ToleranceSpec};
pub use solver::{
    assemble_linear_system, effective_emitter_response, intracavity_field, passivity_report,
    port_spectrum, solve_steady_state, time_domain_oracle, LinearSystem, PortSpectra,
    StateAmplitudes,
};
