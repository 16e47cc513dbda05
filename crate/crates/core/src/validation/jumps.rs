use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{Eigh, UPLO};

use crate::dipole::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Eigenvalues of Γ below this are treated as rounding and clamped to zero.
pub const RATE_FLOOR: f64 = -1e-10;

/// Diagonal form of the collective dissipator: ĉ_m = √γ_m Σ_j u_jm σ_ge^(j).
#[derive(Debug, Clone)]
pub struct JumpChannels {
    rates: Array1<f64>,
    vectors: Array2<f64>,
}

pub fn diagonalize_dissipator(coupling: &CouplingMatrix) -> Result<JumpChannels> {
    let (values, vectors) = coupling
        .decay()
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Backend {
            context: "dissipator eigendecomposition",
            detail: e.to_string(),
        })?;
    if let Some(bad) = values.iter().find(|&&v| v < RATE_FLOOR) {
        return Err(Error::Data(format!(
            "decay matrix has negative eigenvalue {bad}"
        )));
    }
    Ok(JumpChannels {
        rates: values.mapv(|v| v.max(0.0)),
        vectors,
    })
}

impl JumpChannels {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rates(&self) -> &Array1<f64> {
        &self.rates
    }

    /// Column m holds the atomic weights u_jm of channel m.
    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn rate_sum(&self) -> f64 {
        self.rates.sum()
    }

    /// Amplitude Σ_j u_jm x_j carried into channel m by single excitations x.
    pub fn project(&self, m: usize, excited: ArrayView1<C64>) -> C64 {
        self.vectors
            .column(m)
            .iter()
            .zip(excited)
            .map(|(u, x)| x * *u)
            .sum()
    }

    /// ‖ĉ_m ψ‖² for every channel, given the single-excitation amplitudes.
    pub fn weights(&self, excited: ArrayView1<C64>) -> Vec<f64> {
        (0..self.len())
            .map(|m| self.rates[m] * self.project(m, excited).norm_sqr())
            .collect()
    }
}
