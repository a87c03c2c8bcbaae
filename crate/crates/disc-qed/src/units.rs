//! Unit conventions and conversions.
//!
//! Every rate in this crate is an ordinary-frequency value: a linewidth quoted
//! as `2π·27 GHz` elsewhere is stored as `27.0`. No angular-frequency factor
//! appears anywhere outside this module. Absolute optical frequencies are THz,
//! resonator-scale rates are GHz, emitter-scale rates are MHz; the conversions
//! between those live here and nowhere else.

use std::f64::consts::TAU;

pub const GHZ_PER_THZ: f64 = 1.0e3;
pub const MHZ_PER_GHZ: f64 = 1.0e3;

#[inline]
pub fn mhz_to_ghz(x: f64) -> f64 {
    x / MHZ_PER_GHZ
}

#[inline]
pub fn ghz_to_mhz(x: f64) -> f64 {
    x * MHZ_PER_GHZ
}

#[inline]
pub fn ghz_to_thz(x: f64) -> f64 {
    x / GHZ_PER_THZ
}

#[inline]
pub fn thz_to_ghz(x: f64) -> f64 {
    x * GHZ_PER_THZ
}

/// Difference of two absolute frequencies (THz), returned as a detuning in GHz.
#[inline]
pub fn detuning_ghz(freq_thz: f64, origin_thz: f64) -> f64 {
    (freq_thz - origin_thz) * GHZ_PER_THZ
}

/// Angular decay rate (rad/ns) of an ordinary-frequency rate in GHz.
///
/// Only the time-domain integrator needs real time; everything else works with
/// ordinary frequencies directly.
#[inline]
pub fn angular_rad_per_ns(rate_ghz: f64) -> f64 {
    TAU * rate_ghz
}
