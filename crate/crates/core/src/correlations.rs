//! Two-excitation steady state and two-time photon statistics by quantum
//! regression on the truncated wave function.

use std::collections::HashMap;

use ndarray::{s, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{zero_diagonal, Blockade, EffectiveOperator, PairAmplitudes};
use crate::linalg::{
    dotc, expm, frobenius, gmres, inverse, solve, CMat, CVec, EigenBasis, GmresOptions, C64, I,
    SOLVE_TOLERANCE,
};
use crate::linear::{rtl_coefficients, solve_linear_steady, Rtl, SteadyAmplitudes};
use crate::model::{Channel, OutputCoupling};

/// Relative tolerance of a single propagation step.
pub const PROPAGATION_TOLERANCE: f64 = 1e-8;

/// Largest sector-2 dimension solved by dense LU under [`PairSolver::Auto`].
pub const DENSE_PAIR_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSolver {
    Auto,
    Dense,
    Structured,
}

/// c2 = −H2⁻¹ D12 c1.
pub fn solve_two_excitation_steady(
    op: &EffectiveOperator,
    amps: &SteadyAmplitudes,
) -> Result<SteadyAmplitudes> {
    solve_two_excitation_with(op, amps, PairSolver::Auto)
}

pub fn solve_two_excitation_with(
    op: &EffectiveOperator,
    amps: &SteadyAmplitudes,
    method: PairSolver,
) -> Result<SteadyAmplitudes> {
    let src = op.d12(&amps.c1);
    let dense = match method {
        PairSolver::Dense => true,
        PairSolver::Structured => false,
        PairSolver::Auto => op.basis().dim(2) <= DENSE_PAIR_LIMIT,
    };
    let c2 = if op.atoms() < 2 {
        PairAmplitudes::zeros(op.atoms(), op.blockade().keeps_double_rydberg())
    } else if dense {
        solve_pairs_dense(op, &src)?
    } else if op.omega() == 0.0 {
        solve_pairs_two_level(op, &src)?
    } else if op.blockade() == Blockade::Full {
        solve_pairs_blockaded(op, &src)?
    } else {
        solve_pairs_general(op, &src)?
    };
    let src_norm = src.norm_sqr().sqrt();
    let mut res = op.apply_h2(&c2);
    res.ee += &src.ee;
    res.es += &src.es;
    if let (Some(r), Some(s_)) = (res.ss.as_mut(), src.ss.as_ref()) {
        *r += s_;
    }
    let rel = if src_norm > 0.0 {
        res.norm_sqr().sqrt() / src_norm
    } else {
        res.norm_sqr().sqrt()
    };
    if !(rel <= SOLVE_TOLERANCE) {
        return Err(Error::Accuracy {
            context: "two-excitation steady state".into(),
            achieved: rel,
            required: SOLVE_TOLERANCE,
        });
    }
    Ok(SteadyAmplitudes {
        c2: Some(c2),
        ..amps.clone()
    })
}

fn solve_pairs_dense(op: &EffectiveOperator, src: &PairAmplitudes) -> Result<PairAmplitudes> {
    let basis = op.basis();
    let h2 = op.h2_dense();
    let rhs = src.to_vector(basis).mapv(|z| -z);
    if op.omega() != 0.0 {
        let x = solve(&h2, &rhs, "two-excitation steady state")?;
        return PairAmplitudes::from_vector(basis, &x);
    }
    // Without control the Rydberg pairs are undriven; keep only ee states.
    let n = op.atoms();
    let m = n * (n - 1) / 2;
    let sub = h2.slice(s![..m, ..m]).to_owned();
    let x = solve(
        &sub,
        &rhs.slice(s![..m]).to_owned(),
        "two-excitation steady state",
    )?;
    let mut full = CVec::zeros(basis.dim(2));
    full.slice_mut(s![..m]).assign(&x);
    PairAmplitudes::from_vector(basis, &full)
}

fn upper(m: &CMat) -> CVec {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in i + 1..n {
            v.push(m[[i, j]]);
        }
    }
    CVec::from(v)
}

fn symmetric(v: &CVec, n: usize) -> CMat {
    let mut m = CMat::zeros((n, n));
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            m[[i, j]] = v[k];
            m[[j, i]] = v[k];
            k += 1;
        }
    }
    m
}

fn pair_gmres_options() -> GmresOptions {
    GmresOptions {
        tolerance: 1e-12,
        restart: 80,
        max_iterations: 4000,
    }
}

/// Ω = 0: only ee pairs are driven, (He Ψ + Ψ He) restricted to distinct
/// atoms.
fn solve_pairs_two_level(op: &EffectiveOperator, src: &PairAmplitudes) -> Result<PairAmplitudes> {
    let n = op.atoms();
    let he = op.excited_block();
    let eb = EigenBasis::new(he)?;
    let apply = |v: &CVec| {
        let psi = symmetric(v, n);
        let hp = he.dot(&psi);
        upper(&(&hp + &hp.t()))
    };
    let prec = |v: &CVec| upper(&eb.apply_sylvester_inverse(&symmetric(v, n)));
    let rhs = upper(&src.ee).mapv(|z| -z);
    let (x, rep) = gmres(
        apply,
        prec,
        &rhs,
        pair_gmres_options(),
        "two-excitation steady state",
    )?;
    log::debug!("two-level pair solve: {} iterations", rep.iterations);
    let mut out = PairAmplitudes::zeros(n, op.blockade().keeps_double_rydberg());
    out.ee = symmetric(&x, n);
    Ok(out)
}

/// Full blockade: eliminate the es pairs column by column and iterate on
/// the ee pairs alone.
///
/// For a Rydberg excitation on atom q the e excitation moves under
/// A = He + δ with atom q removed; its inverse follows from B = A⁻¹ by a
/// rank-one correction.
fn solve_pairs_blockaded(op: &EffectiveOperator, src: &PairAmplitudes) -> Result<PairAmplitudes> {
    let n = op.atoms();
    let he = op.excited_block();
    let om = C64::from(op.omega());
    let mut a = he.clone();
    for k in 0..n {
        a[[k, k]] += op.rydberg_energy();
    }
    let b = inverse(&a, "blockaded pair elimination")?;
    let bd: Vec<C64> = (0..n).map(|k| b[[k, k]]).collect();
    let restricted_inverse = |x: &CMat| {
        let mut y = b.dot(x);
        for q in 0..n {
            let w = y[[q, q]] / bd[q];
            for i in 0..n {
                y[[i, q]] -= b[[i, q]] * w;
            }
        }
        zero_diagonal(&mut y);
        y
    };
    let om2 = om * om;
    let apply = |v: &CVec| {
        let psi = symmetric(v, n);
        let mut y = he.dot(&psi) - restricted_inverse(&psi).mapv(|z| z * om2);
        zero_diagonal(&mut y);
        upper(&(&y + &y.t()))
    };
    let fbar = he - &b.mapv(|z| z * om2);
    let eb = EigenBasis::new(&fbar)?;
    let prec = |v: &CVec| upper(&eb.apply_sylvester_inverse(&symmetric(v, n)));
    let bs = restricted_inverse(&src.es);
    let rhs_m = -&src.ee + (&bs + &bs.t()).mapv(|z| z * om);
    let (x, rep) = gmres(
        apply,
        prec,
        &upper(&rhs_m),
        pair_gmres_options(),
        "two-excitation steady state",
    )?;
    log::debug!("blockaded pair solve: {} iterations", rep.iterations);
    let ee = symmetric(&x, n);
    let es = restricted_inverse(&(&src.es + &ee.mapv(|z| z * om))).mapv(|z| -z);
    Ok(PairAmplitudes { ee, es, ss: None })
}

/// Rydberg pairs allowed: iterate on the full pair space, preconditioned by
/// the non-interacting pair propagator (H1 ⊗ 1 + 1 ⊗ H1)⁻¹.
fn solve_pairs_general(op: &EffectiveOperator, src: &PairAmplitudes) -> Result<PairAmplitudes> {
    let n = op.atoms();
    let basis = op.basis();
    let eb = EigenBasis::new(&op.h1())?;
    let apply = |v: &CVec| {
        let x = PairAmplitudes::from_vector(basis, v).expect("dimension fixed");
        op.apply_h2(&x).to_vector(basis)
    };
    let prec = |v: &CVec| {
        let x = PairAmplitudes::from_vector(basis, v).expect("dimension fixed");
        let mut phi = CMat::zeros((2 * n, 2 * n));
        phi.slice_mut(s![..n, ..n]).assign(&x.ee);
        phi.slice_mut(s![..n, n..]).assign(&x.es);
        phi.slice_mut(s![n.., ..n]).assign(&x.es.t());
        if let Some(ss) = &x.ss {
            phi.slice_mut(s![n.., n..]).assign(ss);
        }
        let y = eb.apply_sylvester_inverse(&phi);
        let mut out = PairAmplitudes {
            ee: y.slice(s![..n, ..n]).to_owned(),
            es: y.slice(s![..n, n..]).to_owned(),
            ss: x.ss.as_ref().map(|_| y.slice(s![n.., n..]).to_owned()),
        };
        zero_diagonal(&mut out.ee);
        zero_diagonal(&mut out.es);
        if let Some(ss) = out.ss.as_mut() {
            zero_diagonal(ss);
        }
        out.to_vector(basis)
    };
    let rhs = src.to_vector(basis).mapv(|z| -z);
    let (x, rep) = gmres(
        apply,
        prec,
        &rhs,
        pair_gmres_options(),
        "two-excitation steady state",
    )?;
    log::debug!("pair solve: {} iterations", rep.iterations);
    PairAmplitudes::from_vector(basis, &x)
}

/// State left behind by the detection of one photon in a channel,
/// restricted to sectors 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState {
    pub phi0: C64,
    pub phi1: CVec,
}

/// exp(−iHτ) on a sorted time grid, with each distinct step checked by
/// step halving.
struct Propagator<'a> {
    h: &'a CMat,
    cache: HashMap<u64, CMat>,
}

impl<'a> Propagator<'a> {
    fn new(h: &'a CMat) -> Self {
        Self {
            h,
            cache: HashMap::new(),
        }
    }

    fn step(&mut self, dt: f64) -> Result<&CMat> {
        let key = dt.to_bits();
        if !self.cache.contains_key(&key) {
            let gen = self.h.mapv(|z| -I * z * dt);
            let full = expm(&gen)?;
            let half = expm(&gen.mapv(|z| z * 0.5))?;
            let err = frobenius((&half.dot(&half) - &full).view())
                / frobenius(full.view()).max(f64::MIN_POSITIVE);
            if !(err <= PROPAGATION_TOLERANCE) {
                return Err(Error::Accuracy {
                    context: format!("propagation step {dt}"),
                    achieved: err,
                    required: PROPAGATION_TOLERANCE,
                });
            }
            self.cache.insert(key, full);
        }
        Ok(&self.cache[&key])
    }

    fn evolve(&mut self, x0: &CVec, taus: &[f64]) -> Result<Vec<CVec>> {
        check_grid(taus)?;
        let mut out = Vec::with_capacity(taus.len());
        let mut t = 0.0;
        let mut x = x0.clone();
        for &tau in taus {
            let dt = tau - t;
            if dt > 0.0 {
                x = self.step(dt)?.dot(&x);
                t = tau;
            }
            out.push(x.clone());
        }
        Ok(out)
    }
}

fn check_grid(taus: &[f64]) -> Result<()> {
    if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::domain(
            "tau_grid",
            "times must be finite and nonnegative",
        ));
    }
    if taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("tau_grid", "times must be sorted"));
    }
    Ok(())
}

fn channel_index(ch: Channel) -> usize {
    match ch {
        Channel::Forward => 0,
        Channel::Backward => 1,
    }
}

pub const CHANNELS: [Channel; 2] = [Channel::Forward, Channel::Backward];

/// Two-time functions on a τ grid for all channel pairs.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationRecord {
    pub tau: Vec<f64>,
    /// `density[α][β][k]`: unnormalized ⟨â†_α â†_β(τ_k) â_β(τ_k) â_α⟩.
    pub density: [[Vec<f64>; 2]; 2],
    pub g2: [[Vec<f64>; 2]; 2],
    pub g1: [Vec<C64>; 2],
    pub flux: [f64; 2],
}

impl CorrelationRecord {
    pub fn g2(&self, alpha: Channel, beta: Channel) -> &[f64] {
        &self.g2[channel_index(alpha)][channel_index(beta)]
    }

    pub fn density(&self, alpha: Channel, beta: Channel) -> &[f64] {
        &self.density[channel_index(alpha)][channel_index(beta)]
    }

    pub fn g1(&self, alpha: Channel) -> &[C64] {
        &self.g1[channel_index(alpha)]
    }

    pub fn flux(&self, alpha: Channel) -> f64 {
        self.flux[channel_index(alpha)]
    }
}

/// Two-photon density on a spatial grid z = cτ.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub z: Vec<f64>,
    /// `rho[[i, j]]` = ρ_αβ(z_i, z_j).
    pub rho: Array2<f64>,
}

/// Steady state through sector 2 plus the output relations; evaluates
/// g⁽²⁾, g⁽¹⁾ and two-photon densities.
#[derive(Debug, Clone)]
pub struct CorrelationEngine {
    h1: CMat,
    amps: SteadyAmplitudes,
    outputs: OutputCoupling,
    norm_sqr: f64,
}

impl CorrelationEngine {
    pub fn new(op: &EffectiveOperator, outputs: OutputCoupling) -> Result<Self> {
        Self::with_solver(op, outputs, PairSolver::Auto)
    }

    pub fn with_solver(
        op: &EffectiveOperator,
        outputs: OutputCoupling,
        method: PairSolver,
    ) -> Result<Self> {
        let amps = solve_linear_steady(op)?;
        let amps = solve_two_excitation_with(op, &amps, method)?;
        let norm_sqr = amps.norm_sqr();
        Ok(Self {
            h1: op.h1(),
            amps,
            outputs,
            norm_sqr,
        })
    }

    pub fn amplitudes(&self) -> &SteadyAmplitudes {
        &self.amps
    }

    pub fn rtl(&self) -> Result<Rtl> {
        rtl_coefficients(&self.amps, &self.outputs)
    }

    fn atoms(&self) -> usize {
        self.amps.atoms()
    }

    /// â_α applied to the steady state, keeping sectors 0 and 1.
    pub fn output_apply(&self, ch: Channel) -> ConditionalState {
        let n = self.atoms();
        let inc = self.outputs.incident(ch);
        let phi0 = self.amps.c0 * inc + self.outputs.radiated(self.amps.excited());
        let mut phi1 = self.amps.c1.mapv(|z| z * inc);
        if let Some(c2) = &self.amps.c2 {
            let k = self.outputs.kernel();
            let ec = self.outputs.field_conj();
            let e_part = ec.dot(&c2.ee);
            let s_part = ec.dot(&c2.es);
            for j in 0..n {
                phi1[j] += k * e_part[j];
                phi1[n + j] += k * s_part[j];
            }
        }
        ConditionalState { phi0, phi1 }
    }

    /// Photon flux ⟨â†_α â_α⟩ in the truncated steady state.
    pub fn flux(&self, ch: Channel) -> f64 {
        let c = self.output_apply(ch);
        let inc = self.outputs.incident(ch);
        let c2 = self.amps.c2.as_ref().map_or(0.0, |c| c.norm_sqr());
        (c.phi0.norm_sqr() + c.phi1.iter().map(|z| z.norm_sqr()).sum::<f64>() + inc * inc * c2)
            / self.norm_sqr
    }

    /// Evolves the conditional state of channel α over the grid. The
    /// deviation from φ0·c1 decays, which keeps late times accurate.
    fn conditional_trajectory(
        &self,
        alpha: Channel,
        taus: &[f64],
    ) -> Result<(ConditionalState, Vec<CVec>)> {
        let start = self.output_apply(alpha);
        let anchor = self.amps.c1.mapv(|z| z * start.phi0);
        let dev = &start.phi1 - &anchor;
        let mut prop = Propagator::new(&self.h1);
        let devs = prop.evolve(&dev, taus)?;
        Ok((start, devs.into_iter().map(|d| &anchor + &d).collect()))
    }

    fn detected(&self, beta: Channel, phi0: C64, phi1: &CVec) -> f64 {
        let n = self.atoms();
        let amp = phi0 * self.outputs.incident(beta) + self.outputs.radiated(phi1.slice(s![..n]));
        amp.norm_sqr() / self.norm_sqr
    }

    /// g⁽²⁾_αβ(0) without any propagation.
    pub fn g2_zero(&self, alpha: Channel, beta: Channel) -> f64 {
        let c = self.output_apply(alpha);
        self.detected(beta, c.phi0, &c.phi1) / (self.flux(alpha) * self.flux(beta))
    }

    pub fn correlations(&self, taus: &[f64]) -> Result<CorrelationRecord> {
        let flux = [self.flux(Channel::Forward), self.flux(Channel::Backward)];
        let mut density: [[Vec<f64>; 2]; 2] = Default::default();
        let mut g2: [[Vec<f64>; 2]; 2] = Default::default();
        let mut g1: [Vec<C64>; 2] = Default::default();
        for alpha in CHANNELS {
            let a = channel_index(alpha);
            let (start, traj) = self.conditional_trajectory(alpha, taus)?;
            for beta in CHANNELS {
                let b = channel_index(beta);
                density[a][b] = traj
                    .iter()
                    .map(|p| self.detected(beta, start.phi0, p))
                    .collect();
                g2[a][b] = density[a][b]
                    .iter()
                    .map(|d| d / (flux[a] * flux[b]))
                    .collect();
            }
            let base = start.phi0.norm_sqr();
            let norm0 = base + start.phi1.iter().map(|z| z.norm_sqr()).sum::<f64>();
            g1[a] = traj
                .iter()
                .map(|p| (C64::from(base) + dotc(start.phi1.view(), p.view())) / norm0)
                .collect();
        }
        for d in density.iter().flatten().flatten() {
            if !d.is_finite() {
                return Err(Error::NonFinite("two-photon density".into()));
            }
        }
        Ok(CorrelationRecord {
            tau: taus.to_vec(),
            density,
            g2,
            g1,
            flux,
        })
    }

    /// ρ_αβ(z, z′) on a uniform grid of `points` positions in [0, z_max],
    /// with the α photon leading when z′ ≥ z.
    pub fn two_photon_density(
        &self,
        alpha: Channel,
        beta: Channel,
        z_max: f64,
        points: usize,
    ) -> Result<DensityGrid> {
        if points < 2 || !(z_max > 0.0) {
            return Err(Error::domain(
                "density grid",
                "need at least two points and z_max > 0",
            ));
        }
        let h = z_max / (points - 1) as f64;
        let taus: Vec<f64> = (0..points).map(|k| k as f64 * h).collect();
        let rec = self.correlations(&taus)?;
        let ab = rec.density(alpha, beta);
        let ba = rec.density(beta, alpha);
        let rho =
            Array2::from_shape_fn(
                (points, points),
                |(i, j)| if j >= i { ab[j - i] } else { ba[i - j] },
            );
        Ok(DensityGrid { z: taus, rho })
    }
}

/// τ_d = Γc/(2Ω²).
pub fn delay_time(gamma_c: f64, omega: f64) -> Result<f64> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::domain(
            "omega",
            "delay time needs a nonzero control field",
        ));
    }
    Ok(gamma_c / (2.0 * omega * omega))
}

/// 60 points over [0, 10 τ_d]: zero followed by a logarithmic grid.
pub fn default_tau_grid(tau_d: f64) -> Vec<f64> {
    log_tau_grid(10.0 * tau_d, 60)
}

pub fn log_tau_grid(tau_max: f64, points: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    if points < 2 {
        return out;
    }
    let lo = (tau_max * 1e-3).ln();
    let hi = tau_max.ln();
    let m = points - 1;
    for k in 0..m {
        let f = if m == 1 {
            1.0
        } else {
            k as f64 / (m - 1) as f64
        };
        out.push((lo + f * (hi - lo)).exp());
    }
    out
}

/// Root-mean-square difference of every pair of equally sampled curves.
pub fn pairwise_rms(curves: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let n = curves[i].len().min(curves[j].len());
            let ms = curves[i][..n]
                .iter()
                .zip(&curves[j][..n])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / n.max(1) as f64;
            out.push(ms.sqrt());
        }
    }
    out
}

/// Largest pairwise RMS deviation; zero for fewer than two curves.
pub fn collapse_check(curves: &[Vec<f64>]) -> f64 {
    pairwise_rms(curves).into_iter().fold(0.0, f64::max)
}

/// Rescales a curve to unit value at its first sample.
pub fn normalized_shape(curve: &[f64]) -> Vec<f64> {
    let c0 = curve.first().copied().unwrap_or(0.0);
    if c0 == 0.0 {
        return curve.to_vec();
    }
    curve.iter().map(|v| v / c0).collect()
}
