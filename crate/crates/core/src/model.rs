//! An illuminated array: lattice, probe mode, couplings and the
//! input-output relations for the forward and backward modes.

use ndarray::{s, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dipole::{collective_params, CollectiveParams, CouplingMatrix};
use crate::error::{Error, Result};
use crate::geometry::{Lattice, ProbeMode};
use crate::hilbert::{Blockade, DriveParams, EffectiveOperator, TruncatedBasis};
use crate::linalg::{CVec, C64, I};
use crate::units::photon_coupling;

/// Output mode of the probe: transmitted (→) or reflected (←).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Forward,
    Backward,
}

impl Channel {
    pub fn symbol(&self) -> &'static str {
        match self {
            Channel::Forward => "f",
            Channel::Backward => "b",
        }
    }
}

/// â_α = δ_{α,→}√P + i(g/√P) Σ_j E*(r_j) σ_ge^(j).
#[derive(Debug, Clone)]
pub struct OutputCoupling {
    field_conj: CVec,
    sqrt_power: f64,
    kernel: C64,
}

impl OutputCoupling {
    pub fn new(field: &CVec, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::domain(
                "power",
                format!("must be positive, got {power}"),
            ));
        }
        let sqrt_power = power.sqrt();
        Ok(Self {
            field_conj: field.mapv(|z| z.conj()),
            sqrt_power,
            kernel: I * photon_coupling() / sqrt_power,
        })
    }

    pub fn sqrt_power(&self) -> f64 {
        self.sqrt_power
    }

    pub fn kernel(&self) -> C64 {
        self.kernel
    }

    /// Coherent input amplitude carried by the channel.
    pub fn incident(&self, ch: Channel) -> f64 {
        match ch {
            Channel::Forward => self.sqrt_power,
            Channel::Backward => 0.0,
        }
    }

    /// Field radiated by the dipoles, i(g/√P) Σ_j E*_j x_j.
    pub fn radiated(&self, excited: ArrayView1<C64>) -> C64 {
        self.kernel
            * self
                .field_conj
                .iter()
                .zip(excited)
                .map(|(e, x)| e * x)
                .sum::<C64>()
    }

    pub(crate) fn field_conj(&self) -> &CVec {
        &self.field_conj
    }
}

#[derive(Debug, Clone)]
pub struct Mirror {
    lattice: Lattice,
    mode: ProbeMode,
    coupling: CouplingMatrix,
    field: CVec,
}

impl Mirror {
    pub fn new(lattice: Lattice, mode: ProbeMode) -> Result<Self> {
        let coupling = CouplingMatrix::new(&lattice)?;
        let field = mode.field_on(&lattice);
        Ok(Self {
            lattice,
            mode,
            coupling,
            field,
        })
    }

    /// Same array under a different probe, reusing the couplings.
    pub fn with_mode(&self, mode: ProbeMode) -> Self {
        Self {
            field: mode.field_on(&self.lattice),
            mode,
            lattice: self.lattice.clone(),
            coupling: self.coupling.clone(),
        }
    }

    /// Same beam shape with the power chosen so that max_j |b_j| = `peak`.
    pub fn with_peak_drive(&self, peak: f64) -> Result<Self> {
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(Error::domain(
                "peak drive",
                format!("must be positive, got {peak}"),
            ));
        }
        let current = self
            .drive_vector()
            .iter()
            .map(|b| b.norm())
            .fold(0.0, f64::max);
        if !(current > 0.0) {
            return Err(Error::Degenerate(
                "probe field vanishes on every site".into(),
            ));
        }
        let power = self.mode.power() * (peak / current).powi(2);
        Ok(self.with_mode(ProbeMode::with_focus(
            power,
            self.mode.waist(),
            self.mode.focus_z(),
        )?))
    }

    /// The array with site `j` left empty.
    pub fn without_site(&self, j: usize) -> Result<Self> {
        let lattice = self.lattice.without_site(j)?;
        let keep: Vec<usize> = (0..self.lattice.len()).filter(|&k| k != j).collect();
        let pick = |m: &ndarray::Array2<f64>| {
            m.select(ndarray::Axis(0), &keep)
                .select(ndarray::Axis(1), &keep)
        };
        let coupling = CouplingMatrix::from_parts(
            pick(self.coupling.exchange()),
            pick(self.coupling.decay()),
        )?;
        let field = self.field.select(ndarray::Axis(0), &keep);
        Ok(Self {
            lattice,
            mode: self.mode,
            coupling,
            field,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mode(&self) -> &ProbeMode {
        &self.mode
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn field(&self) -> &CVec {
        &self.field
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Drive matrix elements ⟨e_j|H|G⟩ = −g E(r_j).
    pub fn drive_vector(&self) -> CVec {
        let g = photon_coupling();
        self.field.mapv(|e| -e * g)
    }

    pub fn operator(&self, params: &DriveParams, blockade: Blockade) -> Result<EffectiveOperator> {
        let basis = TruncatedBasis::enumerate(self.len(), blockade)?;
        EffectiveOperator::assemble(
            basis,
            &self.lattice,
            &self.coupling,
            params,
            self.drive_vector(),
        )
    }

    pub fn outputs(&self) -> Result<OutputCoupling> {
        OutputCoupling::new(&self.field, self.mode.power())
    }

    pub fn collective(&self) -> Result<CollectiveParams> {
        collective_params(&self.coupling, &self.field)
    }
}

pub(crate) fn excited_part(c1: &CVec, atoms: usize) -> ArrayView1<'_, C64> {
    c1.slice(s![..atoms])
}
