//! Boundary conversions between cyclic (MHz, Hz) and angular (rad·µs⁻¹) units.

use std::f64::consts::TAU;

/// Cyclic MHz to angular rad·µs⁻¹.
#[inline]
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Angular rad·µs⁻¹ to cyclic MHz.
#[inline]
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / TAU
}

/// Microseconds to seconds.
#[inline]
pub fn us_to_s(t_us: f64) -> f64 {
    t_us * 1e-6
}

/// Electron gyromagnetic ratio, cyclic MHz per gauss.
pub const GAMMA_E_MHZ_PER_G: f64 = 2.8;

/// Electron gyromagnetic ratio, cyclic Hz per nT (1 G = 10⁵ nT).
pub const GAMMA_E_HZ_PER_NT: f64 = GAMMA_E_MHZ_PER_G * 1e6 / 1e5;

/// NV ground-state zero-field splitting, cyclic MHz.
pub const ZERO_FIELD_SPLITTING_MHZ: f64 = 2870.0;
