//! Master equation on the full product space of at most three atoms.
//!
//! Weak drives make density-matrix elements span many orders of magnitude,
//! so the generator acts on the graded matrix ρ̃ = S⁻¹ρS⁻¹ with
//! S = diag(ε^n), n the number of excited atoms and ε the drive scale.
//! Every element of ρ̃ is then of order one.

use std::collections::HashMap;

use ndarray::linalg::kron;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{length, sub};
use crate::hilbert::{Blockade, DriveParams};
use crate::linalg::{expm, frobenius, identity, CMat, CVec, DenseSolver, C64, I, ONE, ZERO};
use crate::linear::Rtl;
use crate::model::{Channel, Mirror};

pub const MAX_ORACLE_ATOMS: usize = 3;

/// Largest accepted ‖dρ/dt‖ (per 1/Γ) of the stationary state.
pub const STATIONARITY_TOLERANCE: f64 = 1e-10;

const G: u8 = 0;
const E: u8 = 1;
const S: u8 = 2;

#[derive(Debug, Clone)]
pub struct MasterOracle {
    states: Vec<Vec<u8>>,
    grade: Vec<i32>,
    eps: f64,
    generator: CMat,
    outputs: [CMat; 2],
    power: f64,
}

/// Two-time functions from the full master equation.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCorrelations {
    pub tau: Vec<f64>,
    pub g2: [[Vec<f64>; 2]; 2],
    pub flux: [f64; 2],
}

impl OracleCorrelations {
    pub fn g2(&self, alpha: Channel, beta: Channel) -> &[f64] {
        &self.g2[idx(alpha)][idx(beta)]
    }
}

fn idx(ch: Channel) -> usize {
    match ch {
        Channel::Forward => 0,
        Channel::Backward => 1,
    }
}

impl MasterOracle {
    pub fn new(mirror: &Mirror, params: &DriveParams, blockade: Blockade) -> Result<Self> {
        let n = mirror.len();
        if n == 0 || n > MAX_ORACLE_ATOMS {
            return Err(Error::domain(
                "atoms",
                format!("dense oracle handles 1 to {MAX_ORACLE_ATOMS} atoms, got {n}"),
            ));
        }
        // Without control the Rydberg level is dark and would make the
        // stationary state non-unique.
        let levels: u8 = if params.omega == 0.0 { 2 } else { 3 };
        let mut states = vec![vec![G; n]];
        loop {
            let mut next = states.last().unwrap().clone();
            let mut k = 0;
            while k < n {
                next[k] += 1;
                if next[k] < levels {
                    break;
                }
                next[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
            states.push(next);
        }
        if blockade == Blockade::Full {
            states.retain(|x| x.iter().filter(|&&l| l == S).count() <= 1);
        }
        let index: HashMap<Vec<u8>, usize> = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(k, x)| (x, k))
            .collect();
        let d = states.len();
        let grade: Vec<i32> = states
            .iter()
            .map(|x| x.iter().filter(|&&l| l != G).count() as i32)
            .collect();

        let flip = |j: usize, from: u8, to: u8| {
            let mut m = CMat::zeros((d, d));
            for (col, x) in states.iter().enumerate() {
                if x[j] == from {
                    let mut y = x.clone();
                    y[j] = to;
                    if let Some(&row) = index.get(&y) {
                        m[[row, col]] = ONE;
                    }
                }
            }
            m
        };
        let lower: Vec<CMat> = (0..n).map(|j| flip(j, E, G)).collect();
        let raise: Vec<CMat> = (0..n).map(|j| flip(j, G, E)).collect();

        let drive = mirror.drive_vector();
        let coupling = mirror.coupling();
        let (jx, gx) = (coupling.exchange(), coupling.decay());
        let pos = mirror.lattice().positions();
        let mut h = CMat::zeros((d, d));
        for (k, x) in states.iter().enumerate() {
            let mut diag = ZERO;
            for &l in x {
                match l {
                    E => diag += params.delta,
                    S => {
                        diag +=
                            C64::new(params.two_photon_detuning, -0.5 * params.rydberg_dephasing)
                    }
                    _ => {}
                }
            }
            if let Blockade::Vdw { c6 } = blockade {
                for i in 0..n {
                    for j in i + 1..n {
                        if x[i] == S && x[j] == S {
                            diag += c6 / length(&sub(&pos[i], &pos[j])).powi(6);
                        }
                    }
                }
            }
            h[[k, k]] = diag;
        }
        for j in 0..n {
            h.scaled_add(drive[j], &raise[j]);
            h.scaled_add(drive[j].conj(), &lower[j]);
            if levels == 3 {
                let up = flip(j, E, S);
                h.scaled_add(C64::from(params.omega), &up);
                h.scaled_add(C64::from(params.omega), &up.t());
            }
        }
        for i in 0..n {
            for j in 0..n {
                let hop = raise[i].dot(&lower[j]);
                let w = if i == j { ZERO } else { C64::from(-jx[[i, j]]) } - I * (0.5 * gx[[i, j]]);
                h.scaled_add(w, &hop);
            }
        }

        let eps = drive.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let eps = if eps > 0.0 { eps } else { 1.0 };
        let graded = |m: &CMat| {
            CMat::from_shape_fn((d, d), |(r, c)| m[[r, c]] * eps.powi(grade[c] - grade[r]))
        };
        let id = identity(d);
        let ht = graded(&h);
        let mut gen =
            kron(&id, &ht).mapv(|z| -I * z) + kron(&ht.mapv(|z| z.conj()), &id).mapv(|z| I * z);
        let lt: Vec<CMat> = lower.iter().map(&graded).collect();
        for i in 0..n {
            for j in 0..n {
                if gx[[i, j]] != 0.0 {
                    gen += &kron(&lt[i].mapv(|z| z.conj()), &lt[j]).mapv(|z| z * gx[[i, j]]);
                }
            }
        }
        if levels == 3 && params.rydberg_dephasing > 0.0 {
            for j in 0..n {
                let ls = graded(&flip(j, S, G));
                gen += &kron(&ls.mapv(|z| z.conj()), &ls).mapv(|z| z * params.rydberg_dephasing);
            }
        }

        let out = mirror.outputs()?;
        let field_conj = mirror.field().mapv(|z| z.conj());
        let mut radiated = CMat::zeros((d, d));
        for j in 0..n {
            radiated.scaled_add(out.kernel() * field_conj[j], &lower[j]);
        }
        let forward = &radiated + &id.mapv(|z| z * out.sqrt_power());
        Ok(Self {
            states,
            grade,
            eps,
            generator: gen,
            outputs: [forward, radiated],
            power: mirror.mode().power(),
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Atomic levels of basis state k: 0 = g, 1 = e, 2 = Rydberg.
    pub fn state_levels(&self, k: usize) -> &[u8] {
        &self.states[k]
    }

    fn to_graded(&self, rho: &CMat) -> CVec {
        let d = self.dim();
        CVec::from_shape_fn(d * d, |k| {
            let (r, c) = (k % d, k / d);
            rho[[r, c]] * self.eps.powi(-(self.grade[r] + self.grade[c]))
        })
    }

    fn from_graded(&self, v: &CVec) -> CMat {
        let d = self.dim();
        CMat::from_shape_fn((d, d), |(r, c)| {
            v[r + d * c] * self.eps.powi(self.grade[r] + self.grade[c])
        })
    }

    /// Stationary density matrix, from the null space of the generator with
    /// the ground-state population fixing the scale.
    pub fn steady_state(&self) -> Result<CMat> {
        let dd = self.generator.nrows();
        let mut m = self.generator.clone();
        m.row_mut(0).fill(ZERO);
        m[[0, 0]] = ONE;
        let mut rhs = CVec::zeros(dd);
        rhs[0] = ONE;
        let x = DenseSolver::new(&m, "master equation steady state")?.solve(&rhs)?;
        let rho = self.from_graded(&x);
        let tr: C64 = rho.diag().sum();
        let rho = rho.mapv(|z| z / tr);
        let rho = (&rho + &rho.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        let change = frobenius(
            self.from_graded(&self.generator.dot(&self.to_graded(&rho)))
                .view(),
        );
        if !(change <= STATIONARITY_TOLERANCE) {
            return Err(Error::Accuracy {
                context: "master equation stationarity".into(),
                achieved: change,
                required: STATIONARITY_TOLERANCE,
            });
        }
        Ok(rho)
    }

    /// ρ(t) = e^{ℒt} ρ(0).
    pub fn evolve(&self, rho: &CMat, t: f64) -> Result<CMat> {
        let u = expm(&self.generator.mapv(|z| z * t))?;
        Ok(self.from_graded(&u.dot(&self.to_graded(rho))))
    }

    pub fn ground_projector(&self) -> CMat {
        let mut p = CMat::zeros((self.dim(), self.dim()));
        p[[0, 0]] = ONE;
        p
    }

    /// Population of `level` on atom j.
    pub fn population(&self, rho: &CMat, j: usize, level: u8) -> f64 {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, x)| x[j] == level)
            .map(|(k, _)| rho[[k, k]].re)
            .sum()
    }

    fn expectation_out(&self, ch: Channel, rho: &CMat) -> f64 {
        let a = &self.outputs[idx(ch)];
        let arho = a.dot(rho);
        // Tr(a ρ a†) = Σ_{rc} (aρ)_{rc} conj(a_{rc})
        arho.iter()
            .zip(a.iter())
            .map(|(x, y)| x * y.conj())
            .sum::<C64>()
            .re
    }

    pub fn flux(&self, ch: Channel, rho: &CMat) -> f64 {
        self.expectation_out(ch, rho)
    }

    pub fn rtl(&self, rho: &CMat) -> Rtl {
        let r = self.flux(Channel::Backward, rho) / self.power;
        let t = self.flux(Channel::Forward, rho) / self.power;
        Rtl {
            r,
            t,
            l: 1.0 - r - t,
        }
    }

    /// g⁽²⁾_αβ(τ) by the quantum regression theorem.
    pub fn correlations(&self, rho: &CMat, taus: &[f64]) -> Result<OracleCorrelations> {
        if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || taus.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::domain(
                "tau_grid",
                "times must be finite, nonnegative and sorted",
            ));
        }
        let flux = [
            self.flux(Channel::Forward, rho),
            self.flux(Channel::Backward, rho),
        ];
        let mut g2: [[Vec<f64>; 2]; 2] = Default::default();
        let mut steps: HashMap<u64, CMat> = HashMap::new();
        for alpha in [Channel::Forward, Channel::Backward] {
            let a = &self.outputs[idx(alpha)];
            let cond = a.dot(rho).dot(&a.t().mapv(|z| z.conj()));
            let mut x = self.to_graded(&cond);
            let mut t = 0.0;
            for &tau in taus {
                let dt = tau - t;
                if dt > 0.0 {
                    let u = match steps.get(&dt.to_bits()) {
                        Some(u) => u,
                        None => {
                            let u = expm(&self.generator.mapv(|z| z * dt))?;
                            steps.entry(dt.to_bits()).or_insert(u)
                        }
                    };
                    x = u.dot(&x);
                    t = tau;
                }
                let evolved = self.from_graded(&x);
                for beta in [Channel::Forward, Channel::Backward] {
                    let num = self.expectation_out(beta, &evolved);
                    g2[idx(alpha)][idx(beta)].push(num / (flux[idx(alpha)] * flux[idx(beta)]));
                }
            }
        }
        Ok(OracleCorrelations {
            tau: taus.to_vec(),
            g2,
            flux,
        })
    }
}
