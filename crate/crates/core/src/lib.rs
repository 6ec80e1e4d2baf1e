//! Simulation of biphoton joint spectral amplitudes generated in a nonlinear
//! waveguide and reshaped by an evanescent taper coupler, together with the
//! Hong-Ou-Mandel, metrology and pair-counting observables derived from them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counts;
pub mod coupler;
pub mod dispersion;
pub mod error;
pub mod hom;
pub mod jsa;
pub mod metrology;
pub mod numerics;
pub mod workbench;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const PUMP_WAVELENGTH: f64 = 780e-9;
pub const DEGENERACY_WAVELENGTH: f64 = 1560e-9;

/// ω = 2πc/λ.
pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength
}

/// Converts a small wavelength interval around `center_wavelength` to an
/// angular-frequency interval, |dω| = 2πc dλ / λ².
pub fn wavelength_span_to_omega(span: f64, center_wavelength: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * span / (center_wavelength * center_wavelength)
}
