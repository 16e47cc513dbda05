//! Photon-mediated dipole-dipole couplings.

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};

use crate::error::{Error, Result};
use crate::geometry::{length, sub, Lattice, Polarization, Vec3};
use crate::linalg::{dotc, norm, CMat, CVec, C64, I};
use crate::units::{DECAY_RATE, WAVENUMBER};

/// Coherent exchange J_ij and cooperative decay Γ_ij between two dipoles.
pub fn pair_coupling(ri: &Vec3, rj: &Vec3, pol: &Polarization) -> Result<(f64, f64)> {
    let d = sub(ri, rj);
    let r = length(&d);
    if !(r > 0.0) {
        return Err(Error::domain(
            "separation",
            "coincident positions have no pair coupling",
        ));
    }
    let rhat = [d[0] / r, d[1] / r, d[2] / r];
    let proj = pol.projection_sqr(&rhat);
    let kr = WAVENUMBER * r;
    let (s, c) = kr.sin_cos();
    let transverse = 1.0 - proj;
    let longitudinal = 1.0 - 3.0 * proj;
    let gamma =
        1.5 * DECAY_RATE * (transverse * s / kr + longitudinal * (c / kr.powi(2) - s / kr.powi(3)));
    let j = 0.75
        * DECAY_RATE
        * (-transverse * c / kr + longitudinal * (s / kr.powi(2) + c / kr.powi(3)));
    Ok((j, gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    j: Array2<f64>,
    gamma: Array2<f64>,
}

impl CouplingMatrix {
    pub fn new(lattice: &Lattice) -> Result<Self> {
        let n = lattice.len();
        let mut j = Array2::zeros((n, n));
        let mut gamma = Array2::zeros((n, n));
        let pos = lattice.positions();
        for a in 0..n {
            gamma[[a, a]] = DECAY_RATE;
            for b in a + 1..n {
                let (jab, gab) = pair_coupling(&pos[a], &pos[b], lattice.polarization())?;
                j[[a, b]] = jab;
                j[[b, a]] = jab;
                gamma[[a, b]] = gab;
                gamma[[b, a]] = gab;
            }
        }
        Self::from_parts(j, gamma)
    }

    /// Wraps explicit matrices after checking symmetry, the diagonal and
    /// positive semidefiniteness of Γ.
    pub fn from_parts(j: Array2<f64>, gamma: Array2<f64>) -> Result<Self> {
        let n = j.nrows();
        if j.dim() != (n, n) || gamma.dim() != (n, n) {
            return Err(Error::Dimension {
                context: "coupling matrices",
                expected: n,
                got: gamma.nrows(),
            });
        }
        if !j.iter().chain(gamma.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("coupling matrices".into()));
        }
        for a in 0..n {
            if j[[a, a]] != 0.0 || gamma[[a, a]] != DECAY_RATE {
                return Err(Error::Data(format!("bad diagonal at site {a}")));
            }
            for b in 0..a {
                if j[[a, b]] != j[[b, a]] || gamma[[a, b]] != gamma[[b, a]] {
                    return Err(Error::Data(format!(
                        "asymmetric coupling between {a} and {b}"
                    )));
                }
            }
        }
        if n > 0 {
            let min = gamma
                .eigvalsh(UPLO::Lower)
                .map_err(|e| Error::Backend {
                    context: "dissipator spectrum",
                    detail: e.to_string(),
                })?
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min < -1e-10 * DECAY_RATE {
                return Err(Error::Data(format!(
                    "dissipative coupling not positive semidefinite (min eigenvalue {min:e})"
                )));
            }
        }
        Ok(Self { j, gamma })
    }

    pub fn len(&self) -> usize {
        self.j.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exchange(&self) -> &Array2<f64> {
        &self.j
    }

    pub fn decay(&self) -> &Array2<f64> {
        &self.gamma
    }

    /// A = −J − (i/2)Γ, the photon-mediated part of the single-excitation
    /// generator.
    pub fn collective_operator(&self) -> CMat {
        let n = self.len();
        CMat::from_shape_fn((n, n), |(a, b)| {
            -C64::from(self.j[[a, b]]) - I * 0.5 * self.gamma[[a, b]]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveParams {
    pub delta_c: f64,
    pub gamma_c: f64,
}

/// Collective shift and width of the mode matched to the drive profile.
///
/// Δc is the resonance frequency of that mode: the probe detuning at which
/// the response peaks.
pub fn collective_params(coupling: &CouplingMatrix, field: &CVec) -> Result<CollectiveParams> {
    if field.len() != coupling.len() {
        return Err(Error::Dimension {
            context: "collective parameters",
            expected: coupling.len(),
            got: field.len(),
        });
    }
    let fnorm = norm(field.view());
    if !(fnorm > 0.0) {
        return Err(Error::Degenerate(
            "drive mode has no overlap with the lattice".into(),
        ));
    }
    let v = field.mapv(|z| z / fnorm);
    let a = coupling.collective_operator();
    let expect = dotc(v.view(), a.dot(&v).view());
    Ok(CollectiveParams {
        delta_c: -expect.re,
        gamma_c: -2.0 * expect.im,
    })
}
