//! Natural units: Γ = 1, c = 1, λ = 1.

use std::f64::consts::PI;

pub const WAVELENGTH: f64 = 1.0;
pub const DECAY_RATE: f64 = 1.0;
pub const WAVENUMBER: f64 = 2.0 * PI / WAVELENGTH;

/// Atom-photon coupling g with g² = 3Γλ²/(8π).
pub fn photon_coupling() -> f64 {
    (3.0 * DECAY_RATE * WAVELENGTH * WAVELENGTH / (8.0 * PI)).sqrt()
}
