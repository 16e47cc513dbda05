//! Single-excitation steady state and the linear reflection, transmission
//! and loss coefficients.

use log::warn;
use ndarray::s;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{defect_weights, ProbeMode};
use crate::hilbert::{Blockade, DriveParams, EffectiveOperator, PairAmplitudes};
use crate::linalg::{solve, CVec, C64, ONE};
use crate::model::{excited_part, Mirror, OutputCoupling};

/// Tolerated negative loss before energy conservation counts as violated.
pub const LOSS_FLOOR: f64 = -1e-6;

/// Perturbative steady state c0|G⟩ + c1 + c2 with c0 = 1.
#[derive(Debug, Clone)]
pub struct SteadyAmplitudes {
    pub c0: C64,
    /// Sector 1, ordered (e_1..e_N, s_1..s_N).
    pub c1: CVec,
    pub c2: Option<PairAmplitudes>,
}

impl SteadyAmplitudes {
    pub fn atoms(&self) -> usize {
        self.c1.len() / 2
    }

    pub fn excited(&self) -> ndarray::ArrayView1<'_, C64> {
        excited_part(&self.c1, self.atoms())
    }

    pub fn rydberg(&self) -> ndarray::ArrayView1<'_, C64> {
        self.c1.slice(s![self.atoms()..])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr()
            + self.c1.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + self.c2.as_ref().map_or(0.0, |c| c.norm_sqr())
    }
}

/// c1 = −H1⁻¹ D01.
///
/// Without a control field the Rydberg states are undriven and left empty,
/// which also avoids the singular s-block at zero two-photon detuning.
pub fn solve_linear_steady(op: &EffectiveOperator) -> Result<SteadyAmplitudes> {
    let n = op.atoms();
    let mut c1 = CVec::zeros(2 * n);
    if op.omega() == 0.0 {
        let rhs = op.drive().mapv(|b| -b);
        let ce = solve(op.excited_block(), &rhs, "single-excitation steady state")?;
        c1.slice_mut(s![..n]).assign(&ce);
    } else {
        let rhs = op.d01().mapv(|b| -b);
        c1 = solve(&op.h1(), &rhs, "single-excitation steady state")?;
    }
    Ok(SteadyAmplitudes {
        c0: ONE,
        c1,
        c2: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rtl {
    pub r: f64,
    pub t: f64,
    pub l: f64,
}

impl Rtl {
    /// Response of an empty lattice.
    pub fn transparent() -> Self {
        Self {
            r: 0.0,
            t: 1.0,
            l: 0.0,
        }
    }

    fn from_amplitude(s: C64) -> Result<Self> {
        let r = s.norm_sqr();
        let t = (ONE + s).norm_sqr();
        let l = 1.0 - r - t;
        if !(l.is_finite()) {
            return Err(Error::NonFinite("reflection/transmission".into()));
        }
        if l < LOSS_FLOOR || l > 1.0 {
            return Err(Error::Data(format!(
                "energy conservation violated: R = {r}, T = {t}, L = {l}"
            )));
        }
        Ok(Self { r, t, l })
    }
}

/// Normalized scattered amplitude s = i(g/P) Σ_j E*_j c_{e_j}; R = |s|², T = |1+s|².
pub fn scattered_amplitude(amps: &SteadyAmplitudes, outputs: &OutputCoupling) -> C64 {
    outputs.radiated(amps.excited()) / outputs.sqrt_power()
}

pub fn rtl_coefficients(amps: &SteadyAmplitudes, outputs: &OutputCoupling) -> Result<Rtl> {
    Rtl::from_amplitude(scattered_amplitude(amps, outputs))
}

/// Linear response of a mirror at one parameter point.
pub fn mirror_response(mirror: &Mirror, params: &DriveParams) -> Result<Rtl> {
    if mirror.is_empty() {
        return Ok(Rtl::transparent());
    }
    let op = mirror.operator(params, Blockade::Full)?;
    let amps = solve_linear_steady(&op)?;
    rtl_coefficients(&amps, &mirror.outputs()?)
}

#[derive(Debug)]
pub struct SpectrumRow {
    pub delta: f64,
    pub two_photon_detuning: f64,
    pub response: Result<Rtl>,
}

/// Drive parameters at probe detuning `delta` with the control field held
/// fixed, so the two-photon detuning follows the probe.
pub fn params_at_probe_detuning(base: &DriveParams, delta: f64) -> DriveParams {
    DriveParams {
        delta,
        two_photon_detuning: base.two_photon_detuning + (delta - base.delta),
        ..*base
    }
}

/// Response at each probe detuning, in grid order.
pub fn spectrum_scan(mirror: &Mirror, deltas: &[f64], base: &DriveParams) -> Vec<SpectrumRow> {
    deltas
        .par_iter()
        .map(|&delta| {
            let p = params_at_probe_detuning(base, delta);
            SpectrumRow {
                delta,
                two_photon_detuning: p.two_photon_detuning,
                response: mirror_response(mirror, &p),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DefectAverage {
    pub dr: f64,
    pub dt: f64,
    pub dl: f64,
    /// Sites whose solve failed and were left out of the average.
    pub excluded: usize,
}

/// Change of the two-level response when one site, drawn with probability
/// ∝ |E(r_j)|², is emptied.
pub fn defect_average(mirror: &Mirror, delta: f64) -> Result<DefectAverage> {
    if mirror.len() < 2 {
        return Err(Error::domain(
            "atoms",
            "defect average needs at least two atoms",
        ));
    }
    let params = DriveParams::two_level(delta);
    let full = mirror_response(mirror, &params)?;
    let weights = defect_weights(mirror.lattice(), mirror.mode())?;
    let per_site: Vec<Result<Rtl>> = (0..mirror.len())
        .into_par_iter()
        .map(|j| mirror_response(&mirror.without_site(j)?, &params))
        .collect();
    let mut out = DefectAverage {
        dr: 0.0,
        dt: 0.0,
        dl: 0.0,
        excluded: 0,
    };
    for (j, (p, res)) in weights.iter().zip(per_site).enumerate() {
        match res {
            Ok(x) => {
                out.dr += p * (x.r - full.r);
                out.dt += p * (x.t - full.t);
                out.dl += p * (x.l - full.l);
            }
            Err(e) => {
                warn!("defect at site {j} excluded: {e}");
                out.excluded += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzFit {
    pub center: f64,
    pub fwhm: f64,
    pub peak: f64,
}

/// Least-squares Lorentzian fit through the points above half maximum,
/// using 1/y = α x² + β x + γ.
pub fn fit_lorentzian(xs: &[f64], ys: &[f64]) -> Result<LorentzFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            context: "lorentzian fit",
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let ymax = ys.iter().copied().fold(f64::MIN, f64::max);
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y >= 0.5 * ymax && y > 0.0)
        .map(|(&x, &y)| (x, 1.0 / y))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Degenerate(
            "fewer than three points above half maximum".into(),
        ));
    }
    // normal equations of the quadratic fit
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    for &(x, y) in &pts {
        let phi = [x * x, x, 1.0];
        for a in 0..3 {
            v[a] += phi[a] * y;
            for b in 0..3 {
                m[a][b] += phi[a] * phi[b];
            }
        }
    }
    let coef = solve3(m, v).ok_or_else(|| Error::Degenerate("singular lorentzian fit".into()))?;
    let (alpha, beta, gamma) = (coef[0], coef[1], coef[2]);
    if !(alpha > 0.0) {
        return Err(Error::Degenerate("fitted profile is not peaked".into()));
    }
    let center = -beta / (2.0 * alpha);
    let inv_peak = gamma - beta * beta / (4.0 * alpha);
    if !(inv_peak > 0.0) {
        return Err(Error::Degenerate("fitted peak height not positive".into()));
    }
    let peak = 1.0 / inv_peak;
    Ok(LorentzFit {
        center,
        fwhm: 2.0 * (inv_peak / alpha).sqrt(),
        peak,
    })
}

fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = v[r];
        }
        *o = det(mk) / d;
    }
    Some(out)
}

/// Full width of the transmission window around two-photon resonance,
/// measured between the points where T crosses 1/2 as the probe is tuned.
///
/// `base` must sit on two-photon resonance; `search` bounds the detuning
/// range explored on each side.
pub fn transparency_window(mirror: &Mirror, base: &DriveParams, search: f64) -> Result<f64> {
    let t_at = |offset: f64| -> Result<f64> {
        Ok(mirror_response(mirror, &params_at_probe_detuning(base, base.delta + offset))?.t - 0.5)
    };
    let edge = |sign: f64| -> Result<f64> {
        let steps = 4000;
        let mut prev = 0.0;
        let mut fprev = t_at(0.0)?;
        if fprev <= 0.0 {
            return Err(Error::Degenerate(
                "no transmission at two-photon resonance".into(),
            ));
        }
        for k in 1..=steps {
            let x = sign * search * k as f64 / steps as f64;
            let fx = t_at(x)?;
            if fx <= 0.0 {
                let (mut lo, mut hi) = (prev, x);
                let mut flo = fprev;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = t_at(mid)?;
                    if (fm > 0.0) == (flo > 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
            prev = x;
            fprev = fx;
        }
        Err(Error::Degenerate(format!(
            "transmission stays above 1/2 within ±{search}"
        )))
    };
    Ok(edge(1.0)? - edge(-1.0)?)
}

/// Beam waist in `[lo, hi]` maximizing the reflection, by a coarse scan
/// followed by golden-section refinement.
pub fn optimal_waist(
    mirror: &Mirror,
    params: &DriveParams,
    lo: f64,
    hi: f64,
) -> Result<(f64, Rtl)> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::domain(
            "waist bounds",
            format!("need 0 < lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let refl = |w: f64| -> Result<f64> {
        let mode = ProbeMode::with_focus(mirror.mode().power(), w, mirror.mode().focus_z())?;
        Ok(mirror_response(&mirror.with_mode(mode), params)?.r)
    };
    let coarse = 24;
    let xs: Vec<f64> = (0..=coarse)
        .map(|k| lo + (hi - lo) * k as f64 / coarse as f64)
        .collect();
    let ys = xs.iter().map(|&x| refl(x)).collect::<Result<Vec<_>>>()?;
    let best = (0..xs.len()).fold(0, |b, k| if ys[k] > ys[b] { k } else { b });
    let (mut a, mut b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(coarse)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (refl(c)?, refl(d)?);
    while b - a > 1e-6 * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = refl(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = refl(d)?;
        }
    }
    let w = 0.5 * (a + b);
    let mode = ProbeMode::with_focus(mirror.mode().power(), w, mirror.mode().focus_z())?;
    Ok((w, mirror_response(&mirror.with_mode(mode), params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Lattice, Polarization};
    use crate::linalg::norm;
    use crate::units::DECAY_RATE;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mirror(l: usize, w0: f64) -> Mirror {
        let lat = Lattice::disc(l, 0.75, Polarization::circular()).unwrap();
        Mirror::new(lat, ProbeMode::new(1.0, w0).unwrap()).unwrap()
    }

    #[test]
    fn single_atom_on_resonance() {
        let m = mirror(1, 1.0);
        let op = m
            .operator(&DriveParams::two_level(0.0), Blockade::Full)
            .unwrap();
        let amps = solve_linear_steady(&op).unwrap();
        let b = op.drive()[0];
        assert_relative_eq!(
            amps.c1[0].norm_sqr(),
            4.0 * b.norm_sqr() / DECAY_RATE.powi(2),
            max_relative = 1e-13
        );
    }

    #[test]
    fn residual_within_tolerance() {
        let m = mirror(8, 1.7);
        for params in [
            DriveParams::two_level(0.05),
            DriveParams::eit(0.05, 0.7, 0.1),
        ] {
            let op = m.operator(&params, Blockade::Full).unwrap();
            let amps = solve_linear_steady(&op).unwrap();
            let res = op.h1().dot(&amps.c1) + op.d01();
            assert!(norm(res.view()) <= 1e-10 * norm(op.d01().view()));
        }
    }

    #[test]
    fn dark_state_on_two_photon_resonance() {
        let m = mirror(6, 1.5);
        let op = m
            .operator(&DriveParams::eit(0.05, 1.0, 0.0), Blockade::Full)
            .unwrap();
        let amps = solve_linear_steady(&op).unwrap();
        let bn = norm(op.drive().view());
        assert!(norm(amps.excited()) < 1e-12 * bn);
        for (cs, b) in amps.rydberg().iter().zip(op.drive()) {
            assert!((cs + b / 1.0).norm() < 1e-12 * bn);
        }
        let rtl = rtl_coefficients(&amps, &m.outputs().unwrap()).unwrap();
        assert!((rtl.t - 1.0).abs() < 1e-12 && rtl.r < 1e-20 && rtl.l.abs() < 1e-12);
    }

    #[test]
    fn empty_lattice_transmits() {
        let lat = Lattice::from_positions(vec![], 0.75, 1, Polarization::circular()).unwrap();
        let m = Mirror::new(lat, ProbeMode::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(
            mirror_response(&m, &DriveParams::two_level(0.0)).unwrap(),
            Rtl::transparent()
        );
    }

    /// Two atoms driven symmetrically excite only the symmetric mode, whose
    /// complex energy is Δ − J12 − i(Γ + Γ12)/2.
    #[test]
    fn two_atom_response_matches_closed_form() {
        let pol = Polarization::circular();
        let lat =
            Lattice::from_positions(vec![[-0.3, 0.0, 0.0], [0.3, 0.0, 0.0]], 0.6, 2, pol).unwrap();
        let m = Mirror::new(lat, ProbeMode::new(1.0, 1.2).unwrap()).unwrap();
        let j12 = m.coupling().exchange()[[0, 1]];
        let g12 = m.coupling().decay()[[0, 1]];
        for delta in [-0.4, 0.0, 0.2, 1.0] {
            let op = m
                .operator(&DriveParams::two_level(delta), Blockade::Full)
                .unwrap();
            let amps = solve_linear_steady(&op).unwrap();
            let b = op.drive()[0];
            let lam = C64::new(delta - j12, -0.5 * (DECAY_RATE + g12));
            let expected = -b / lam;
            assert!((amps.c1[0] - expected).norm() < 1e-13 * expected.norm());
            assert!((amps.c1[1] - expected).norm() < 1e-13 * expected.norm());
        }
        assert!(j12 != 0.0 && g12 != 0.0);
    }

    #[test]
    fn reflection_peaks_near_collective_shift() {
        let m = mirror(10, 2.0);
        let dc = m.collective().unwrap().delta_c;
        let grid: Vec<f64> = (0..=200).map(|k| -0.5 + k as f64 * 0.005).collect();
        let rows = spectrum_scan(&m, &grid, &DriveParams::two_level(0.0));
        let (best, _) = rows
            .iter()
            .map(|r| (r.delta, r.response.as_ref().unwrap().r))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((best - dc).abs() < 0.025, "peak {best} vs delta_c {dc}");
    }

    #[test]
    fn collective_width_matches_lorentzian_fit() {
        let m = mirror(10, 2.0);
        let cp = m.collective().unwrap();
        let grid: Vec<f64> = (0..=400).map(|k| -1.0 + k as f64 * 0.005).collect();
        let rs: Vec<f64> = spectrum_scan(&m, &grid, &DriveParams::two_level(0.0))
            .iter()
            .map(|r| r.response.as_ref().unwrap().r)
            .collect();
        let fit = fit_lorentzian(&grid, &rs).unwrap();
        assert!(
            (fit.fwhm - cp.gamma_c).abs() <= 0.1 * cp.gamma_c,
            "{} vs {}",
            fit.fwhm,
            cp.gamma_c
        );
    }

    #[test]
    fn lorentzian_fit_recovers_exact_profile() {
        let xs: Vec<f64> = (0..101).map(|k| -2.0 + 0.04 * k as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 0.8 / (1.0 + ((x - 0.3) / 0.25).powi(2)))
            .collect();
        let fit = fit_lorentzian(&xs, &ys).unwrap();
        assert_relative_eq!(fit.center, 0.3, max_relative = 1e-10);
        assert_relative_eq!(fit.fwhm, 0.5, max_relative = 1e-10);
        assert_relative_eq!(fit.peak, 0.8, max_relative = 1e-10);
    }

    #[test]
    fn rotation_invariance_of_spectra() {
        let m = mirror(7, 1.5);
        let rotated: Vec<_> = m
            .lattice()
            .positions()
            .iter()
            .map(|r| [-r[1], r[0], 0.0])
            .collect();
        let lat = Lattice::from_positions(rotated, 0.75, 7, Polarization::circular()).unwrap();
        let mr = Mirror::new(lat, *m.mode()).unwrap();
        for delta in [-0.2, 0.05, 0.3] {
            let a = mirror_response(&m, &DriveParams::two_level(delta)).unwrap();
            let b = mirror_response(&mr, &DriveParams::two_level(delta)).unwrap();
            assert!((a.r - b.r).abs() < 1e-10 && (a.t - b.t).abs() < 1e-10);
        }
    }

    #[test]
    fn reflection_grows_with_waist_below_optimum() {
        let m = mirror(10, 1.0);
        let mut prev = 0.0;
        for k in 0..=10 {
            let w0 = 1.0 + 0.1 * k as f64;
            let mw = m.with_mode(ProbeMode::new(1.0, w0).unwrap());
            let dc = mw.collective().unwrap().delta_c;
            let r = mirror_response(&mw, &DriveParams::two_level(dc)).unwrap().r;
            assert!(r > prev, "w0 = {w0}");
            prev = r;
        }
    }

    #[test]
    fn optimal_waist_is_a_stationary_maximum() {
        let m = mirror(6, 1.0);
        let p = DriveParams::two_level(0.05);
        let (w, best) = optimal_waist(&m, &p, 0.5, 6.0).unwrap();
        assert!((w - 1.542).abs() < 5e-3, "{w}");
        for dw in [-0.05, 0.05] {
            let r = mirror_response(&m.with_mode(ProbeMode::new(1.0, w + dw).unwrap()), &p)
                .unwrap()
                .r;
            assert!(r < best.r);
        }
    }

    #[test]
    fn zero_weight_defect_changes_nothing() {
        // A site far outside the beam carries negligible weight.
        let pol = Polarization::circular();
        let lat = Lattice::from_positions(
            vec![[0.0, 0.0, 0.0], [0.8, 0.0, 0.0], [0.0, 30.0, 0.0]],
            0.75,
            80,
            pol,
        )
        .unwrap();
        let m = Mirror::new(lat, ProbeMode::new(1.0, 1.0).unwrap()).unwrap();
        let p = defect_weights(m.lattice(), m.mode()).unwrap();
        assert_eq!(p[2], 0.0);
        let avg = defect_average(&m, 0.0).unwrap();
        assert_eq!(avg.excluded, 0);
    }

    #[test]
    fn symmetric_sites_carry_equal_weight() {
        let m = mirror(4, 1e6);
        let p = defect_weights(m.lattice(), m.mode()).unwrap();
        for w in &p {
            assert_relative_eq!(*w, 1.0 / p.len() as f64, max_relative = 1e-9);
        }
    }

    #[test]
    fn defect_average_signs_at_optimum() {
        let m = mirror(10, 2.0);
        let avg = defect_average(&m, 0.05).unwrap();
        assert!(avg.dr < 0.0 && avg.dl > 0.0, "{avg:?}");
        assert_eq!(avg.excluded, 0);
    }

    #[test]
    fn eit_window_transmits_on_resonance() {
        let m = mirror(10, 2.0);
        let rtl = mirror_response(&m, &DriveParams::eit(0.05, 1.0, 0.0)).unwrap();
        assert!(rtl.t > 0.999 && rtl.r < 1e-3);
    }

    #[test]
    fn narrow_window_width_approaches_four_omega_squared_over_gamma_c() {
        // Weak-control limit of the window: the dark resonance has half width
        // Ω²/Γc on each side of two-photon resonance.
        let m = mirror(10, 2.0);
        let gc = m.collective().unwrap().gamma_c;
        let omega = 0.05;
        let w = transparency_window(&m, &DriveParams::eit(0.05, omega, 0.0), 0.05).unwrap();
        let ratio = w / (omega * omega / gc);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn scattered_amplitude_normalization_is_power_independent() {
        let lat = Lattice::disc(5, 0.75, Polarization::circular()).unwrap();
        let m1 = Mirror::new(lat.clone(), ProbeMode::new(1.0, 1.5).unwrap()).unwrap();
        let m2 = Mirror::new(lat, ProbeMode::new(0.25, 1.5).unwrap()).unwrap();
        let p = DriveParams::two_level(0.1);
        let a = mirror_response(&m1, &p).unwrap();
        let b = mirror_response(&m2, &p).unwrap();
        assert!((a.r - b.r).abs() < 1e-8 && (a.t - b.t).abs() < 1e-8 && (a.l - b.l).abs() < 1e-8);
    }

    #[test]
    fn optical_theorem_balances_loss() {
        let m = mirror(6, 1.5);
        let op = m
            .operator(&DriveParams::eit(0.2, 0.4, 0.05), Blockade::Full)
            .unwrap();
        let amps = solve_linear_steady(&op).unwrap();
        let s = scattered_amplitude(&amps, &m.outputs().unwrap());
        let ce = amps.excited().to_owned();
        let gamma = m.coupling().decay().mapv(C64::from);
        let emitted = crate::linalg::dotc(ce.view(), gamma.dot(&ce).view()).re;
        assert_relative_eq!(
            -2.0 * s.re * m.mode().power(),
            emitted,
            max_relative = 1e-10
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn energy_is_conserved(
            l in 1usize..8, a in 0.3f64..1.2, w0 in 0.6f64..3.0,
            delta in -2.0f64..2.0, omega in 0.0f64..2.0, dd in -0.5f64..0.5,
        ) {
            let lat = Lattice::disc(l, a, Polarization::circular()).unwrap();
            let m = Mirror::new(lat, ProbeMode::new(1.0, w0).unwrap()).unwrap();
            let rtl = mirror_response(&m, &DriveParams::eit(delta, omega, dd)).unwrap();
            prop_assert!(rtl.l >= LOSS_FLOOR && rtl.l <= 1.0);
            prop_assert!(rtl.r >= 0.0 && rtl.t >= 0.0);
        }

        #[test]
        fn halving_the_drive_leaves_coefficients(l in 2usize..7, delta in -1.0f64..1.0, omega in 0.0f64..1.5) {
            let lat = Lattice::disc(l, 0.75, Polarization::circular()).unwrap();
            let full = Mirror::new(lat.clone(), ProbeMode::new(1.0, 1.4).unwrap()).unwrap();
            let quarter = Mirror::new(lat, ProbeMode::new(0.25, 1.4).unwrap()).unwrap();
            let p = DriveParams::eit(delta, omega, 0.03);
            let a = mirror_response(&full, &p).unwrap();
            let b = mirror_response(&quarter, &p).unwrap();
            prop_assert!((a.r - b.r).abs() < 1e-8 && (a.t - b.t).abs() < 1e-8);
        }
    }
}
