//! Quantum-jump unraveling of the driven two-level array restricted to at
//! most one excitation, basis {|G⟩, |e_1⟩, …, |e_N⟩}.

use std::io::Write;
use std::path::Path;

use ndarray::{linalg::kron, s};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jumps::{diagonalize_dissipator, JumpChannels};
use crate::error::{Error, Result};
use crate::linalg::{expm, identity, norm, CMat, CVec, DenseSolver, EigenBasis, C64, I, ONE, ZERO};
use crate::model::{Mirror, OutputCoupling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McwfSettings {
    pub dt: f64,
    /// Samples before this time are recorded but left out of averages.
    pub burn_in: f64,
    pub duration: f64,
    pub sample_interval: f64,
    /// Excited population above which the single-excitation truncation is
    /// reported as overloaded.
    pub population_bound: f64,
}

impl Default for McwfSettings {
    fn default() -> Self {
        Self {
            dt: 0.05,
            burn_in: 30.0,
            duration: 90.0,
            sample_interval: 0.5,
            population_bound: 0.05,
        }
    }
}

impl McwfSettings {
    fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.dt, "dt"),
            (self.duration, "duration"),
            (self.sample_interval, "sample_interval"),
            (self.population_bound, "population_bound"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.duration) {
            return Err(Error::domain("burn_in", "must lie in [0, duration)"));
        }
        if self.sample_interval < self.dt {
            return Err(Error::domain(
                "sample_interval",
                "must be at least one step",
            ));
        }
        Ok(())
    }
}

/// Instantaneous normalized observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub reflection: f64,
    pub transmission: f64,
    pub excited_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub index: u64,
    pub duration: f64,
    pub jump_times: Vec<f64>,
    pub jump_channels: Vec<usize>,
    pub sample_times: Vec<f64>,
    pub reflection: Vec<f64>,
    pub transmission: Vec<f64>,
    pub excited_population: Vec<f64>,
}

impl TrajectoryRecord {
    /// Time averages over samples at t ≥ `from`.
    pub fn window_mean(&self, from: f64) -> Observables {
        let keep: Vec<usize> = (0..self.sample_times.len())
            .filter(|&k| self.sample_times[k] >= from)
            .collect();
        let avg = |v: &[f64]| keep.iter().map(|&k| v[k]).sum::<f64>() / keep.len().max(1) as f64;
        Observables {
            reflection: avg(&self.reflection),
            transmission: avg(&self.transmission),
            excited_population: avg(&self.excited_population),
        }
    }
}

#[derive(Debug, Clone)]
pub struct McwfModel {
    generator: CMat,
    channels: JumpChannels,
    outputs: OutputCoupling,
    power: f64,
}

impl McwfModel {
    /// Two-level array (no control field) at probe detuning Δ.
    pub fn new(mirror: &Mirror, delta: f64) -> Result<Self> {
        let n = mirror.len();
        if n == 0 {
            return Err(Error::domain(
                "atoms",
                "trajectory model needs at least one atom",
            ));
        }
        if !delta.is_finite() {
            return Err(Error::NonFinite("delta".into()));
        }
        let mut he = mirror.coupling().collective_operator();
        for k in 0..n {
            he[[k, k]] += delta;
        }
        let b = mirror.drive_vector();
        let mut h = CMat::zeros((n + 1, n + 1));
        h.slice_mut(s![1.., 1..]).assign(&he);
        for j in 0..n {
            h[[1 + j, 0]] = b[j];
            h[[0, 1 + j]] = b[j].conj();
        }
        Ok(Self {
            generator: h,
            channels: diagonalize_dissipator(mirror.coupling())?,
            outputs: mirror.outputs()?,
            power: mirror.mode().power(),
        })
    }

    pub fn atoms(&self) -> usize {
        self.generator.nrows() - 1
    }

    pub fn channels(&self) -> &JumpChannels {
        &self.channels
    }

    /// Non-Hermitian generator H − (i/2)Σ ĉ†ĉ.
    pub fn generator(&self) -> &CMat {
        &self.generator
    }

    pub fn observe(&self, psi: &CVec) -> Observables {
        let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let ex = psi.slice(s![1..]);
        let back = self.outputs.radiated(ex);
        let fwd = psi[0] * self.outputs.sqrt_power() + back;
        let pop = ex.iter().map(|z| z.norm_sqr()).sum::<f64>();
        Observables {
            reflection: back.norm_sqr() / nrm / self.power,
            transmission: (fwd.norm_sqr() + self.power * pop) / nrm / self.power,
            excited_population: pop / nrm,
        }
    }

    /// Exact stationary expectations of the same model, from the dense
    /// Lindblad generator on the (N+1)-dimensional space.
    pub fn stationary(&self) -> Result<Observables> {
        let d = self.generator.nrows();
        let n = d - 1;
        let id = identity(d);
        let h = &self.generator;
        let mut gen =
            kron(&id, h).mapv(|z| -I * z) + kron(&h.mapv(|z| z.conj()), &id).mapv(|z| I * z);
        // recycling Σ_m γ_m ĉ_m ρ ĉ_m† feeds ρ_GG only
        let (u, g) = (self.channels.vectors(), self.channels.rates());
        for i in 0..n {
            for j in 0..n {
                let gij: f64 = (0..n).map(|m| u[[i, m]] * g[m] * u[[j, m]]).sum();
                gen[[0, (1 + j) + d * (1 + i)]] += gij;
            }
        }
        gen.row_mut(0).fill(ZERO);
        for k in 0..d {
            gen[[0, k + d * k]] = ONE;
        }
        let mut rhs = CVec::zeros(d * d);
        rhs[0] = ONE;
        let x = DenseSolver::new(&gen, "trajectory model steady state")?.solve(&rhs)?;
        let rho = CMat::from_shape_fn((d, d), |(r, c)| x[r + d * c]);
        let k = self.outputs.kernel();
        let mut a_back = CMat::zeros((d, d));
        for (j, e) in self.outputs.field_conj().iter().enumerate() {
            a_back[[0, 1 + j]] = k * e;
        }
        let a_fwd = &a_back + &id.mapv(|z| z * self.outputs.sqrt_power());
        let expect = |a: &CMat| {
            let ar = a.dot(&rho);
            ar.iter()
                .zip(a.iter())
                .map(|(x, y)| x * y.conj())
                .sum::<C64>()
                .re
        };
        Ok(Observables {
            reflection: expect(&a_back) / self.power,
            transmission: expect(&a_fwd) / self.power,
            excited_population: (1..d).map(|k| rho[[k, k]].re).sum(),
        })
    }
}

/// Independent stream for trajectory `index` under `master_seed`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Precomputed propagators shared by all trajectories of an ensemble.
#[derive(Debug, Clone)]
pub struct McwfRunner {
    model: McwfModel,
    settings: McwfSettings,
    step: CMat,
    eigen: EigenBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub trajectories: usize,
    pub reflection: f64,
    pub reflection_error: f64,
    pub transmission: f64,
    pub transmission_error: f64,
    pub excited_population: f64,
    pub jumps: usize,
}

impl McwfRunner {
    pub fn new(model: McwfModel, settings: McwfSettings) -> Result<Self> {
        settings.validate()?;
        let step = expm(&model.generator.mapv(|z| -I * z * settings.dt))?;
        let eigen = EigenBasis::new(&model.generator)?;
        Ok(Self {
            model,
            settings,
            step,
            eigen,
        })
    }

    pub fn model(&self) -> &McwfModel {
        &self.model
    }

    pub fn settings(&self) -> &McwfSettings {
        &self.settings
    }

    /// ‖e^{−iHs}ψ‖² from eigen-coordinates y = V⁻¹ψ.
    fn norm_after(&self, y: &CVec, s: f64) -> f64 {
        let z = CVec::from_shape_fn(y.len(), |k| y[k] * (-I * self.eigen.values[k] * s).exp());
        norm(self.eigen.vectors.dot(&z).view()).powi(2)
    }

    fn propagate(&self, psi: &CVec, s: f64) -> CVec {
        let y = self.eigen.inverse.dot(psi);
        let z = CVec::from_shape_fn(y.len(), |k| y[k] * (-I * self.eigen.values[k] * s).exp());
        self.eigen.vectors.dot(&z)
    }

    pub fn trajectory(&self, master_seed: u64, index: u64) -> Result<TrajectoryRecord> {
        let st = &self.settings;
        let mut rng = trajectory_rng(master_seed, index);
        let d = self.model.generator.nrows();
        let steps = (st.duration / st.dt).round() as usize;
        let every = ((st.sample_interval / st.dt).round() as usize).max(1);
        let mut psi = CVec::zeros(d);
        psi[0] = ONE;
        let mut threshold: f64 = rng.random();
        let mut rec = TrajectoryRecord {
            seed: master_seed,
            index,
            duration: steps as f64 * st.dt,
            jump_times: Vec::new(),
            jump_channels: Vec::new(),
            sample_times: Vec::new(),
            reflection: Vec::new(),
            transmission: Vec::new(),
            excited_population: Vec::new(),
        };
        let mut warned = false;
        for k in 1..=steps {
            let t0 = (k - 1) as f64 * st.dt;
            let mut elapsed = 0.0;
            loop {
                let remaining = st.dt - elapsed;
                let cand = if elapsed == 0.0 {
                    self.step.dot(&psi)
                } else {
                    self.propagate(&psi, remaining)
                };
                if norm(cand.view()).powi(2) > threshold {
                    psi = cand;
                    break;
                }
                // the squared norm decays monotonically; bracket the crossing
                let y = self.eigen.inverse.dot(&psi);
                let (mut lo, mut hi) = (0.0, remaining);
                while hi - lo > 1e-12 * st.dt {
                    let mid = 0.5 * (lo + hi);
                    if self.norm_after(&y, mid) > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if !(hi > 0.0) {
                    return Err(Error::Accuracy {
                        context: format!("jump time bisection in trajectory {index}"),
                        achieved: hi,
                        required: f64::MIN_POSITIVE,
                    });
                }
                let before = self.propagate(&psi, hi);
                let weights = self.model.channels.weights(before.slice(s![1..]));
                let total: f64 = weights.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::Degenerate(format!(
                        "no jump channel open in trajectory {index}"
                    )));
                }
                let mut u = rng.random::<f64>() * total;
                let mut m = weights.len() - 1;
                for (c, w) in weights.iter().enumerate() {
                    if u < *w {
                        m = c;
                        break;
                    }
                    u -= w;
                }
                let amp = self.model.channels.project(m, before.slice(s![1..]));
                psi = CVec::zeros(d);
                psi[0] = amp / amp.norm();
                rec.jump_times.push(t0 + elapsed + hi);
                rec.jump_channels.push(m);
                threshold = rng.random();
                elapsed += hi;
                if elapsed >= st.dt {
                    break;
                }
            }
            if k % every == 0 {
                let obs = self.model.observe(&psi);
                if obs.excited_population > st.population_bound && !warned {
                    log::debug!(
                        "trajectory {index}: excited population {} exceeds the truncation bound {}",
                        obs.excited_population,
                        st.population_bound
                    );
                    warned = true;
                }
                rec.sample_times.push(k as f64 * st.dt);
                rec.reflection.push(obs.reflection);
                rec.transmission.push(obs.transmission);
                rec.excited_population.push(obs.excited_population);
            }
        }
        Ok(rec)
    }

    /// Runs trajectories 0..count in parallel and aggregates in index order.
    pub fn ensemble(
        &self,
        master_seed: u64,
        count: usize,
    ) -> Result<(EnsembleSummary, Vec<TrajectoryRecord>)> {
        if count < 2 {
            return Err(Error::domain(
                "trajectories",
                "need at least two trajectories for an error estimate",
            ));
        }
        let records = (0..count as u64)
            .into_par_iter()
            .map(|i| self.trajectory(master_seed, i))
            .collect::<Result<Vec<_>>>()?;
        let means: Vec<Observables> = records
            .iter()
            .map(|r| r.window_mean(self.settings.burn_in))
            .collect();
        let stats = |f: &dyn Fn(&Observables) -> f64| {
            let n = means.len() as f64;
            let mu = means.iter().map(f).sum::<f64>() / n;
            let var = means.iter().map(|o| (f(o) - mu).powi(2)).sum::<f64>() / (n - 1.0);
            (mu, (var / n).sqrt())
        };
        let (r, re) = stats(&|o| o.reflection);
        let (t, te) = stats(&|o| o.transmission);
        let (p, _) = stats(&|o| o.excited_population);
        if p > self.settings.population_bound {
            log::warn!(
                "mean excited population {p} exceeds the single-excitation bound {}",
                self.settings.population_bound
            );
        }
        Ok((
            EnsembleSummary {
                trajectories: count,
                reflection: r,
                reflection_error: re,
                transmission: t,
                transmission_error: te,
                excited_population: p,
                jumps: records.iter().map(|r| r.jump_times.len()).sum(),
            },
            records,
        ))
    }
}

/// One JSON object per line.
pub fn write_trajectories(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    for r in records {
        serde_json::to_writer(&mut tmp, r).map_err(|e| Error::io(path, e.into()))?;
        tmp.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Lattice, Polarization, ProbeMode};

    fn mirror_with_drive(lat: Lattice, w0: f64, b: f64) -> Mirror {
        Mirror::new(lat, ProbeMode::new(1.0, w0).unwrap())
            .unwrap()
            .with_peak_drive(b)
            .unwrap()
    }

    fn single_atom(b: f64) -> Mirror {
        mirror_with_drive(
            Lattice::disc(1, 1.0, Polarization::circular()).unwrap(),
            1.0,
            b,
        )
    }

    #[test]
    fn undriven_excited_atom_survives_exponentially() {
        let m = single_atom(1e-12);
        let model = McwfModel::new(&m, 0.0).unwrap();
        let mut runner = McwfRunner::new(model, McwfSettings::default()).unwrap();
        runner.step = expm(&runner.model.generator.mapv(|z| -I * z * 0.7)).unwrap();
        let mut psi = CVec::zeros(2);
        psi[1] = ONE;
        let after = runner.step.dot(&psi);
        assert!((norm(after.view()).powi(2) - (-0.7f64).exp()).abs() < 1e-14);
        let y = runner.eigen.inverse.dot(&psi);
        assert!((runner.norm_after(&y, 2.3) - (-2.3f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn weak_resonant_drive_population() {
        let b = 0.02;
        let model = McwfModel::new(&single_atom(b), 0.0).unwrap();
        let exact = model.stationary().unwrap().excited_population;
        assert!((exact - b * b / (0.25 + 2.0 * b * b)).abs() < 1e-14);
        let settings = McwfSettings {
            duration: 200.0,
            burn_in: 10.0,
            ..McwfSettings::default()
        };
        let runner = McwfRunner::new(model, settings).unwrap();
        let (sum, _) = runner.ensemble(7, 200).unwrap();
        let leading = b * b / 0.25;
        assert!(
            (sum.excited_population - leading).abs() < 0.02 * leading,
            "{}",
            sum.excited_population
        );
    }

    #[test]
    fn trajectories_are_reproducible_and_ordered() {
        let lat = Lattice::disc(3, 0.75, Polarization::circular()).unwrap();
        let model = McwfModel::new(&mirror_with_drive(lat, 1.2, 0.15), 0.05).unwrap();
        let settings = McwfSettings {
            duration: 40.0,
            burn_in: 5.0,
            ..McwfSettings::default()
        };
        let runner = McwfRunner::new(model, settings).unwrap();
        let a = runner.trajectory(11, 3).unwrap();
        let b = runner.trajectory(11, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, runner.trajectory(11, 4).unwrap());
        assert!(!a.jump_times.is_empty());
        assert!(a.jump_times.windows(2).all(|w| w[1] > w[0]));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let (s1, r1) = runner.ensemble(11, 8).unwrap();
        let (s2, r2) = pool.install(|| runner.ensemble(11, 8)).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn channel_frequencies_follow_rates() {
        // Jumps out of single excitations spread uniformly over atoms select
        // channel m with probability γ_m / N.
        let lat = Lattice::disc(3, 0.75, Polarization::circular()).unwrap();
        let n = lat.len();
        let model = McwfModel::new(&mirror_with_drive(lat, 1.2, 0.1), 0.0).unwrap();
        let ch = model.channels();
        let mut rng = trajectory_rng(5, 0);
        let draws = 40_000;
        let mut counts = vec![0usize; ch.len()];
        for _ in 0..draws {
            let j = rng.random_range(0..n);
            let mut ex = CVec::zeros(n);
            ex[j] = ONE;
            let w = ch.weights(ex.view());
            let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
            for (m, wm) in w.iter().enumerate() {
                if u < *wm {
                    counts[m] += 1;
                    break;
                }
                u -= wm;
            }
        }
        for m in 0..ch.len() {
            let p = ch.rates()[m] / n as f64;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (counts[m] as f64 - draws as f64 * p).abs() <= 3.0 * sigma + 1.0,
                "channel {m}"
            );
        }
    }

    #[test]
    fn jsonl_roundtrip() {
        let model = McwfModel::new(&single_atom(0.2), 0.1).unwrap();
        let settings = McwfSettings {
            duration: 10.0,
            burn_in: 1.0,
            ..McwfSettings::default()
        };
        let runner = McwfRunner::new(model, settings).unwrap();
        let (_, recs) = runner.ensemble(1, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.jsonl");
        write_trajectories(&path, &recs).unwrap();
        assert_eq!(read_trajectories(&path).unwrap(), recs);
    }

    #[test]
    fn invalid_settings_rejected() {
        let model = McwfModel::new(&single_atom(0.1), 0.0).unwrap();
        let bad = McwfSettings {
            burn_in: 100.0,
            ..McwfSettings::default()
        };
        assert!(McwfRunner::new(model, bad).is_err());
    }
}
