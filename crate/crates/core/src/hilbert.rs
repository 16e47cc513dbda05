//! Excitation-truncated basis and the sector-resolved effective Hamiltonian.
//!
//! Sector 1 is ordered (e_1..e_N, s_1..s_N). Sector 2 is ordered ee pairs
//! (i<j), then es pairs (e on i, s on j, i≠j), then ss pairs (i<j) when
//! the blockade mode keeps them.

use std::collections::HashMap;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::dipole::CouplingMatrix;
use crate::error::{Error, Result};
use crate::geometry::{length, sub, Lattice};
use crate::linalg::{CMat, CVec, C64, I, ZERO};
use crate::units::DECAY_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Blockade {
    /// No two Rydberg excitations anywhere in the array.
    Full,
    /// Pairs of Rydberg excitations shifted by C6/r⁶.
    Vdw { c6: f64 },
    /// Non-interacting Rydberg excitations.
    Off,
}

impl Blockade {
    pub fn keeps_double_rydberg(&self) -> bool {
        !matches!(self, Blockade::Full)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisState {
    Ground,
    E(usize),
    S(usize),
    EE(usize, usize),
    ES(usize, usize),
    SS(usize, usize),
}

#[derive(Debug, Clone)]
pub struct TruncatedBasis {
    atoms: usize,
    blockade: Blockade,
    sectors: [Vec<BasisState>; 3],
    index: HashMap<BasisState, usize>,
}

impl TruncatedBasis {
    pub fn enumerate(atoms: usize, blockade: Blockade) -> Result<Self> {
        if atoms == 0 {
            return Err(Error::domain("atoms", "basis needs at least one atom"));
        }
        let n = atoms;
        let s0 = vec![BasisState::Ground];
        let s1: Vec<_> = (0..n)
            .map(BasisState::E)
            .chain((0..n).map(BasisState::S))
            .collect();
        let mut s2 = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                s2.push(BasisState::EE(i, j));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s2.push(BasisState::ES(i, j));
                }
            }
        }
        if blockade.keeps_double_rydberg() {
            for i in 0..n {
                for j in i + 1..n {
                    s2.push(BasisState::SS(i, j));
                }
            }
        }
        let mut index = HashMap::new();
        for sector in [&s0, &s1, &s2] {
            for (k, st) in sector.iter().enumerate() {
                index.insert(*st, k);
            }
        }
        Ok(Self {
            atoms,
            blockade,
            sectors: [s0, s1, s2],
            index,
        })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn blockade(&self) -> Blockade {
        self.blockade
    }

    pub fn dim(&self, sector: usize) -> usize {
        self.sectors[sector].len()
    }

    pub fn states(&self, sector: usize) -> &[BasisState] {
        &self.sectors[sector]
    }

    /// Index of a state within its sector. Pair labels are canonicalized,
    /// so `EE(3, 1)` finds `EE(1, 3)`.
    pub fn index_of(&self, state: BasisState) -> Option<usize> {
        let canon = match state {
            BasisState::EE(i, j) if i > j => BasisState::EE(j, i),
            BasisState::SS(i, j) if i > j => BasisState::SS(j, i),
            other => other,
        };
        self.index.get(&canon).copied()
    }
}

/// Probe and control parameters in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// One-photon probe detuning Δ.
    pub delta: f64,
    /// Control coupling Ω between |e⟩ and |s⟩.
    pub omega: f64,
    /// Two-photon detuning δ, the energy of |s⟩.
    pub two_photon_detuning: f64,
    /// Optional Rydberg dephasing rate.
    pub rydberg_dephasing: f64,
}

impl DriveParams {
    pub fn two_level(delta: f64) -> Self {
        Self {
            delta,
            omega: 0.0,
            two_photon_detuning: 0.0,
            rydberg_dephasing: 0.0,
        }
    }

    pub fn eit(delta: f64, omega: f64, two_photon_detuning: f64) -> Self {
        Self {
            delta,
            omega,
            two_photon_detuning,
            rydberg_dephasing: 0.0,
        }
    }
}

/// Sector-2 amplitudes stored as pair matrices.
///
/// `ee[(i,j)]` is symmetric, `es[(i,j)]` holds e on atom i and s on atom j,
/// `ss` is symmetric and absent under full blockade. Diagonals are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAmplitudes {
    pub ee: CMat,
    pub es: CMat,
    pub ss: Option<CMat>,
}

impl PairAmplitudes {
    pub fn zeros(atoms: usize, with_ss: bool) -> Self {
        Self {
            ee: CMat::zeros((atoms, atoms)),
            es: CMat::zeros((atoms, atoms)),
            ss: with_ss.then(|| CMat::zeros((atoms, atoms))),
        }
    }

    pub fn atoms(&self) -> usize {
        self.ee.nrows()
    }

    /// Squared norm in the orthonormal pair basis.
    pub fn norm_sqr(&self) -> f64 {
        let n = self.atoms();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    acc += self.ee[[i, j]].norm_sqr();
                    if let Some(ss) = &self.ss {
                        acc += ss[[i, j]].norm_sqr();
                    }
                }
                acc += self.es[[i, j]].norm_sqr();
            }
        }
        acc
    }

    pub fn to_vector(&self, basis: &TruncatedBasis) -> CVec {
        CVec::from_iter(basis.states(2).iter().map(|st| match *st {
            BasisState::EE(i, j) => self.ee[[i, j]],
            BasisState::ES(i, j) => self.es[[i, j]],
            BasisState::SS(i, j) => self.ss.as_ref().map_or(ZERO, |m| m[[i, j]]),
            _ => unreachable!("sector 2 holds pair states only"),
        }))
    }

    pub fn from_vector(basis: &TruncatedBasis, v: &CVec) -> Result<Self> {
        if v.len() != basis.dim(2) {
            return Err(Error::Dimension {
                context: "sector-2 vector",
                expected: basis.dim(2),
                got: v.len(),
            });
        }
        let mut out = Self::zeros(basis.atoms(), basis.blockade().keeps_double_rydberg());
        for (st, &x) in basis.states(2).iter().zip(v.iter()) {
            match *st {
                BasisState::EE(i, j) => {
                    out.ee[[i, j]] = x;
                    out.ee[[j, i]] = x;
                }
                BasisState::ES(i, j) => out.es[[i, j]] = x,
                BasisState::SS(i, j) => {
                    let ss = out.ss.as_mut().expect("basis keeps ss states");
                    ss[[i, j]] = x;
                    ss[[j, i]] = x;
                }
                _ => unreachable!("sector 2 holds pair states only"),
            }
        }
        Ok(out)
    }

    #[cfg(test)]
    fn scaled_add(&mut self, other: &Self, f: C64) {
        self.ee.scaled_add(f, &other.ee);
        self.es.scaled_add(f, &other.es);
        if let (Some(a), Some(b)) = (self.ss.as_mut(), other.ss.as_ref()) {
            a.scaled_add(f, b);
        }
    }

    #[cfg(test)]
    pub(crate) fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.scaled_add(other, C64::new(-1.0, 0.0));
        out
    }
}

pub(crate) fn zero_diagonal(m: &mut CMat) {
    for k in 0..m.nrows() {
        m[[k, k]] = ZERO;
    }
}

/// Sector-resolved effective generator H = H_herm − (i/2)Σ Γ_ij σ_eg^i σ_ge^j
/// with the probe drive coupling neighbouring sectors.
#[derive(Debug, Clone)]
pub struct EffectiveOperator {
    basis: TruncatedBasis,
    he: CMat,
    omega: f64,
    rydberg: C64,
    drive: CVec,
    vdw: Option<Array2<f64>>,
}

impl EffectiveOperator {
    /// `drive[j]` is the matrix element ⟨e_j|H|G⟩.
    pub fn assemble(
        basis: TruncatedBasis,
        lattice: &Lattice,
        coupling: &CouplingMatrix,
        params: &DriveParams,
        drive: CVec,
    ) -> Result<Self> {
        let n = basis.atoms();
        for (got, ctx) in [
            (lattice.len(), "operator assembly (lattice)"),
            (coupling.len(), "operator assembly (coupling)"),
            (drive.len(), "operator assembly (drive)"),
        ] {
            if got != n {
                return Err(Error::Dimension {
                    context: ctx,
                    expected: n,
                    got,
                });
            }
        }
        for (v, name) in [
            (params.delta, "delta"),
            (params.omega, "omega"),
            (params.two_photon_detuning, "two_photon_detuning"),
            (params.rydberg_dephasing, "rydberg_dephasing"),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("drive parameter {name}")));
            }
        }
        if params.rydberg_dephasing < 0.0 {
            return Err(Error::domain("rydberg_dephasing", "must be nonnegative"));
        }
        if !drive.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("drive vector".into()));
        }
        let mut he = coupling.collective_operator();
        for k in 0..n {
            he[[k, k]] += params.delta;
        }
        let vdw = match basis.blockade() {
            Blockade::Vdw { c6 } => {
                if !c6.is_finite() {
                    return Err(Error::NonFinite("c6".into()));
                }
                let pos = lattice.positions();
                Some(Array2::from_shape_fn((n, n), |(i, j)| {
                    if i == j {
                        0.0
                    } else {
                        c6 / length(&sub(&pos[i], &pos[j])).powi(6)
                    }
                }))
            }
            _ => None,
        };
        Ok(Self {
            basis,
            he,
            omega: params.omega,
            rydberg: C64::new(params.two_photon_detuning, -0.5 * params.rydberg_dephasing),
            drive,
            vdw,
        })
    }

    pub fn basis(&self) -> &TruncatedBasis {
        &self.basis
    }

    pub fn atoms(&self) -> usize {
        self.basis.atoms()
    }

    /// N×N block acting on a single e excitation.
    pub fn excited_block(&self) -> &CMat {
        &self.he
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Complex energy of a Rydberg excitation, δ − iγ_s/2.
    pub fn rydberg_energy(&self) -> C64 {
        self.rydberg
    }

    pub fn drive(&self) -> &CVec {
        &self.drive
    }

    pub fn blockade(&self) -> Blockade {
        self.basis.blockade()
    }

    /// Rescales the drive, e.g. to change the probe amplitude.
    pub fn with_drive(&self, drive: CVec) -> Result<Self> {
        if drive.len() != self.atoms() {
            return Err(Error::Dimension {
                context: "drive",
                expected: self.atoms(),
                got: drive.len(),
            });
        }
        Ok(Self {
            drive,
            ..self.clone()
        })
    }

    pub fn h1(&self) -> CMat {
        let n = self.atoms();
        let mut h = CMat::zeros((2 * n, 2 * n));
        h.slice_mut(s![..n, ..n]).assign(&self.he);
        for k in 0..n {
            h[[k, n + k]] = C64::from(self.omega);
            h[[n + k, k]] = C64::from(self.omega);
            h[[n + k, n + k]] = self.rydberg;
        }
        h
    }

    pub fn d01(&self) -> CVec {
        let n = self.atoms();
        let mut d = CVec::zeros(2 * n);
        d.slice_mut(s![..n]).assign(&self.drive);
        d
    }

    fn vdw_shift(&self, i: usize, j: usize) -> f64 {
        self.vdw.as_ref().map_or(0.0, |v| v[[i, j]])
    }

    /// Structured action of H2 on pair amplitudes.
    pub fn apply_h2(&self, x: &PairAmplitudes) -> PairAmplitudes {
        let om = C64::from(self.omega);
        let hp = self.he.dot(&x.ee);
        let mut ee = &hp + &hp.t();
        ee.scaled_add(om, &x.es);
        ee.scaled_add(om, &x.es.t());
        zero_diagonal(&mut ee);

        let mut es = self.he.dot(&x.es);
        es.scaled_add(self.rydberg, &x.es);
        es.scaled_add(om, &x.ee);
        let ss = x.ss.as_ref().map(|ss| {
            es.scaled_add(om, ss);
            let n = self.atoms();
            let mut out = CMat::from_shape_fn((n, n), |(i, j)| {
                (self.rydberg * 2.0 + self.vdw_shift(i, j)) * ss[[i, j]]
            });
            out.scaled_add(om, &x.es);
            out.scaled_add(om, &x.es.t());
            zero_diagonal(&mut out);
            out
        });
        zero_diagonal(&mut es);
        PairAmplitudes { ee, es, ss }
    }

    /// Sector-2 part of the drive applied to a sector-1 state.
    pub fn d12(&self, c1: &CVec) -> PairAmplitudes {
        let n = self.atoms();
        let b = &self.drive;
        let ce = c1.slice(s![..n]);
        let cs = c1.slice(s![n..]);
        let mut out = PairAmplitudes::zeros(n, self.basis.blockade().keeps_double_rydberg());
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out.ee[[i, j]] = b[i] * ce[j] + b[j] * ce[i];
                    out.es[[i, j]] = b[i] * cs[j];
                }
            }
        }
        out
    }

    /// Adjoint of [`Self::d12`]: drive de-excitation from sector 2 to 1.
    pub fn d12_adjoint(&self, c2: &PairAmplitudes) -> CVec {
        let n = self.atoms();
        let bc = self.drive.mapv(|z| z.conj());
        let mut out = CVec::zeros(2 * n);
        for j in 0..n {
            let mut e = ZERO;
            let mut s_ = ZERO;
            for i in 0..n {
                if i != j {
                    e += bc[i] * c2.ee[[i, j]];
                    s_ += bc[i] * c2.es[[i, j]];
                }
            }
            out[j] = e;
            out[n + j] = s_;
        }
        out
    }

    /// Explicit sector-2 matrix assembled state by state.
    pub fn h2_dense(&self) -> CMat {
        let basis = &self.basis;
        let dim = basis.dim(2);
        let n = self.atoms();
        let mut h = CMat::zeros((dim, dim));
        let om = C64::from(self.omega);
        let he = &self.he;
        for (col, st) in basis.states(2).iter().enumerate() {
            let mut put = |target: BasisState, val: C64| {
                if let Some(row) = basis.index_of(target) {
                    h[[row, col]] += val;
                }
            };
            match *st {
                BasisState::EE(i, j) => {
                    // hopping of either e excitation onto a free atom
                    for k in 0..n {
                        if k != j {
                            put(BasisState::EE(k, j), he[[k, i]]);
                        }
                        if k != i {
                            put(BasisState::EE(i, k), he[[k, j]]);
                        }
                    }
                    put(BasisState::ES(i, j), om);
                    put(BasisState::ES(j, i), om);
                }
                BasisState::ES(i, j) => {
                    for k in 0..n {
                        if k != j {
                            put(BasisState::ES(k, j), he[[k, i]]);
                        }
                    }
                    put(BasisState::ES(i, j), self.rydberg);
                    put(BasisState::EE(i, j), om);
                    if basis.blockade().keeps_double_rydberg() {
                        put(BasisState::SS(i, j), om);
                    }
                }
                BasisState::SS(i, j) => {
                    put(
                        BasisState::SS(i, j),
                        self.rydberg * 2.0 + self.vdw_shift(i, j),
                    );
                    put(BasisState::ES(i, j), om);
                    put(BasisState::ES(j, i), om);
                }
                _ => unreachable!(),
            }
        }
        h
    }

    /// Explicit drive block from sector 1 to sector 2.
    pub fn d12_dense(&self) -> CMat {
        let basis = &self.basis;
        let n = self.atoms();
        let mut d = CMat::zeros((basis.dim(2), basis.dim(1)));
        for (col, st) in basis.states(1).iter().enumerate() {
            for k in 0..n {
                let target = match *st {
                    BasisState::E(j) if j != k => BasisState::EE(k, j),
                    BasisState::S(j) if j != k => BasisState::ES(k, j),
                    _ => continue,
                };
                if let Some(row) = basis.index_of(target) {
                    d[[row, col]] += self.drive[k];
                }
            }
        }
        d
    }
}

/// Single-atom e/s block, used as a reference.
pub fn single_atom_block(params: &DriveParams) -> CMat {
    let mut h = CMat::zeros((2, 2));
    h[[0, 0]] = C64::new(params.delta, 0.0) - I * 0.5 * DECAY_RATE;
    h[[0, 1]] = C64::from(params.omega);
    h[[1, 0]] = C64::from(params.omega);
    h[[1, 1]] = C64::new(params.two_photon_detuning, -0.5 * params.rydberg_dephasing);
    h
}
