//! Disc-shaped square lattices and the paraxial Gaussian probe.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVec, C64, I};
use crate::units::{WAVELENGTH, WAVENUMBER};

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn length(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Orientation of the |g⟩–|e⟩ transition dipole, a unit complex 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarization([C64; 3]);

impl Polarization {
    /// Normalizes `v`; rejects the zero vector.
    pub fn new(v: [C64; 3]) -> Result<Self> {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain(
                "polarization",
                "vector must be nonzero and finite",
            ));
        }
        Ok(Self(v.map(|z| z / n)))
    }

    /// (x̂ + iŷ)/√2
    pub fn circular() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self([C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, 0.0)])
    }

    /// Linear polarization in the array plane at angle `phi` from x̂.
    pub fn linear_in_plane(phi: f64) -> Self {
        Self([
            C64::new(phi.cos(), 0.0),
            C64::new(phi.sin(), 0.0),
            C64::new(0.0, 0.0),
        ])
    }

    pub fn linear_z() -> Self {
        Self([C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
    }

    pub fn components(&self) -> &[C64; 3] {
        &self.0
    }

    /// |p · r̂|² for a real unit vector `rhat`.
    pub fn projection_sqr(&self, rhat: &Vec3) -> f64 {
        let d: C64 = self.0.iter().zip(rhat).map(|(p, r)| p * r).sum();
        d.norm_sqr()
    }
}

impl Default for Polarization {
    fn default() -> Self {
        Self::circular()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    positions: Vec<Vec3>,
    a: f64,
    diameter_sites: usize,
    polarization: Polarization,
}

impl Lattice {
    /// All square-lattice sites inside a disc of diameter `l·a`.
    ///
    /// Odd `l` centers the disc on a site, even `l` on a plaquette, so a
    /// principal axis holds exactly `l` sites. Sites are ordered row-major
    /// by y then x.
    pub fn disc(l: usize, a: f64, polarization: Polarization) -> Result<Self> {
        if l == 0 {
            return Err(Error::domain("diameter_sites", "must be at least 1"));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain(
                "a",
                format!("lattice constant must be positive, got {a}"),
            ));
        }
        let li = l as i64;
        let mut positions = Vec::new();
        for j in 0..li {
            let q = 2 * j - (li - 1);
            for i in 0..li {
                let p = 2 * i - (li - 1);
                if p * p + q * q <= li * li {
                    positions.push([p as f64 * a / 2.0, q as f64 * a / 2.0, 0.0]);
                }
            }
        }
        Ok(Self {
            positions,
            a,
            diameter_sites: l,
            polarization,
        })
    }

    /// Builds a lattice from explicit positions, checking the invariants.
    pub fn from_positions(
        positions: Vec<Vec3>,
        a: f64,
        diameter_sites: usize,
        polarization: Polarization,
    ) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain(
                "a",
                format!("lattice constant must be positive, got {a}"),
            ));
        }
        let radius = diameter_sites as f64 * a / 2.0;
        for (k, r) in positions.iter().enumerate() {
            if r[2] != 0.0 || !r.iter().all(|x| x.is_finite()) {
                return Err(Error::domain(
                    "positions",
                    format!("site {k} not in the z=0 plane"),
                ));
            }
            if length(r) > radius + 1e-12 {
                return Err(Error::domain(
                    "positions",
                    format!("site {k} outside the disc"),
                ));
            }
            for (m, s) in positions.iter().enumerate().take(k) {
                if length(&sub(r, s)) < a - 1e-12 {
                    return Err(Error::domain(
                        "positions",
                        format!("sites {m} and {k} closer than the lattice constant"),
                    ));
                }
            }
        }
        Ok(Self {
            positions,
            a,
            diameter_sites,
            polarization,
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn lattice_constant(&self) -> f64 {
        self.a
    }

    pub fn diameter_sites(&self) -> usize {
        self.diameter_sites
    }

    pub fn polarization(&self) -> &Polarization {
        &self.polarization
    }

    /// The same lattice with site `j` left empty.
    pub fn without_site(&self, j: usize) -> Result<Self> {
        if j >= self.len() {
            return Err(Error::domain("site", format!("index {j} out of range")));
        }
        let mut positions = self.positions.clone();
        positions.remove(j);
        Ok(Self {
            positions,
            ..self.clone()
        })
    }
}

/// Fundamental paraxial Gaussian mode with its waist at `focus_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeMode {
    power: f64,
    waist: f64,
    focus_z: f64,
}

impl ProbeMode {
    pub fn new(power: f64, waist: f64) -> Result<Self> {
        Self::with_focus(power, waist, 0.0)
    }

    pub fn with_focus(power: f64, waist: f64, focus_z: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::domain(
                "power",
                format!("must be positive, got {power}"),
            ));
        }
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::domain(
                "w0",
                format!("must be positive, got {waist}"),
            ));
        }
        if !focus_z.is_finite() {
            return Err(Error::domain("focus_z", "must be finite"));
        }
        Ok(Self {
            power,
            waist,
            focus_z,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn focus_z(&self) -> f64 {
        self.focus_z
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / WAVELENGTH
    }

    /// Beam radius w(z).
    pub fn width_at(&self, z: f64) -> f64 {
        let dz = z - self.focus_z;
        (self.waist.powi(2) + (WAVELENGTH * dz / (PI * self.waist)).powi(2)).sqrt()
    }

    /// Complex field, normalized so that ∫|E|² d²r⊥ = P in every plane.
    pub fn amplitude(&self, r: &Vec3) -> C64 {
        let zr = self.rayleigh_range();
        let q = C64::new(r[2] - self.focus_z, -zr);
        let rho2 = r[0] * r[0] + r[1] * r[1];
        let envelope = -I * zr / q * (I * WAVENUMBER * rho2 / (2.0 * q)).exp();
        envelope * (2.0 * self.power / (PI * self.waist * self.waist)).sqrt()
    }

    pub fn field_on(&self, lattice: &Lattice) -> CVec {
        CVec::from_iter(lattice.positions().iter().map(|r| self.amplitude(r)))
    }
}

/// Sampling probabilities p_j ∝ |E(r_j)|².
pub fn defect_weights(lattice: &Lattice, mode: &ProbeMode) -> Result<Vec<f64>> {
    if lattice.is_empty() {
        return Err(Error::Degenerate(
            "defect weights of an empty lattice".into(),
        ));
    }
    let w: Vec<f64> = lattice
        .positions()
        .iter()
        .map(|r| mode.amplitude(r).norm_sqr())
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Degenerate(
            "probe field vanishes on every site".into(),
        ));
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}
