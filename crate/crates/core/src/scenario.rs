//! Named pipelines reproducing each figure, plus the oracle and trajectory
//! cross-checks, all driven by a [`ScenarioConfig`].

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::config::{ScanConfig, ScanVariable, ScenarioConfig};
use crate::correlations::{
    delay_time, log_tau_grid, normalized_shape, pairwise_rms, CorrelationEngine,
};
use crate::error::{Error, Result};
use crate::geometry::{Lattice, ProbeMode};
use crate::hilbert::DriveParams;
use crate::linear::{defect_average, mirror_response, optimal_waist, params_at_probe_detuning};
use crate::model::{Channel, Mirror};
use crate::output::{config_hash, write_results, Sidecar, Table, Versions, Written};
use crate::validation::{MasterOracle, McwfModel, McwfRunner, McwfSettings, TrajectoryRecord};

/// Waist bounds searched when a scenario asks for the optimal beam.
pub const WAIST_SEARCH: (f64, f64) = (0.5, 6.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fig1e,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Fig1e,
        Scenario::Fig2a,
        Scenario::Fig2b,
        Scenario::Fig3a,
        Scenario::Fig3b,
        Scenario::Fig4,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1e => "fig1e",
            Scenario::Fig2a => "fig2a",
            Scenario::Fig2b => "fig2b",
            Scenario::Fig3a => "fig3a",
            Scenario::Fig3b => "fig3b",
            Scenario::Fig4 => "fig4",
            Scenario::Custom => "custom",
        }
    }

    /// Scan variable the scenario sweeps; `None` accepts any.
    fn scan_variable(self) -> Option<ScanVariable> {
        match self {
            Scenario::Fig1e => Some(ScanVariable::Delta),
            Scenario::Fig2a | Scenario::Fig2b | Scenario::Fig3b => Some(ScanVariable::W0),
            Scenario::Fig3a => Some(ScanVariable::Diameter),
            Scenario::Fig4 => Some(ScanVariable::Omega),
            Scenario::Custom => None,
        }
    }

    fn default_scan(self) -> ScanConfig {
        match self {
            Scenario::Fig1e | Scenario::Custom => {
                ScanConfig::linspace(ScanVariable::Delta, -1.0, 1.0, 201)
            }
            Scenario::Fig2a => ScanConfig::linspace(ScanVariable::W0, 1.0, 3.0, 41),
            Scenario::Fig2b => ScanConfig::linspace(ScanVariable::W0, 1.0, 3.0, 21),
            Scenario::Fig3a => {
                ScanConfig::list(ScanVariable::Diameter, vec![4.0, 6.0, 8.0, 10.0, 12.0])
            }
            Scenario::Fig3b => ScanConfig::linspace(ScanVariable::W0, 1.0, 3.0, 9),
            Scenario::Fig4 => ScanConfig::list(ScanVariable::Omega, vec![0.5, 1.0, 2.0]),
        }
    }

    /// Configuration used when none is supplied.
    pub fn default_config(self) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        match self {
            Scenario::Fig1e => cfg.drive.omega_over_gamma = 1.0,
            Scenario::Fig3a | Scenario::Fig3b => cfg.drive.omega_over_gamma = 0.05,
            Scenario::Fig4 => {
                cfg.beam.w0_over_lambda = 1.7;
                cfg.correlation.channels = vec!["ff".into(), "fb".into(), "bf".into(), "bb".into()];
            }
            _ => {}
        }
        cfg.scan = Some(self.default_scan());
        cfg
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::ConfigValue {
                key: "scenario".into(),
                message: format!(
                    "unknown scenario `{s}`; expected one of {}",
                    Scenario::ALL.map(|x| x.name()).join(", ")
                ),
            })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub table: Table,
    pub summary: Option<serde_json::Value>,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.into(),
        message: message.into(),
    }
}

/// Disc array with the configured beam, powered to the configured peak drive.
pub fn build_mirror(cfg: &ScenarioConfig, diameter: usize, a: f64, w0: f64) -> Result<Mirror> {
    let lat = Lattice::disc(diameter, a, cfg.lattice.polarization.vector())?;
    Mirror::new(lat, ProbeMode::with_focus(1.0, w0, cfg.beam.focus_z)?)?
        .with_peak_drive(cfg.beam.power_scale)
}

fn rewaist(cfg: &ScenarioConfig, mirror: &Mirror, w0: f64) -> Result<Mirror> {
    mirror
        .with_mode(ProbeMode::with_focus(1.0, w0, cfg.beam.focus_z)?)
        .with_peak_drive(cfg.beam.power_scale)
}

fn scan_grid(s: Scenario, cfg: &ScenarioConfig) -> Result<(ScanVariable, Vec<f64>)> {
    let scan = cfg.scan.clone().unwrap_or_else(|| s.default_scan());
    if let Some(want) = s.scan_variable() {
        if scan.variable != want {
            return Err(config_error(
                "scan.variable",
                format!("{} scans `{}`", s.name(), want.column()),
            ));
        }
    }
    let grid = scan.grid()?;
    if scan.variable == ScanVariable::Diameter && grid.iter().any(|x| x.fract() != 0.0 || *x < 1.0)
    {
        return Err(config_error(
            "scan.values",
            "diameters must be positive integers",
        ));
    }
    Ok((scan.variable, grid))
}

fn require_pairs(cfg: &ScenarioConfig, s: Scenario) -> Result<()> {
    if cfg.truncation.max_excitations < 2 {
        return Err(config_error(
            "truncation.max_excitations",
            format!("{} needs two-excitation amplitudes", s.name()),
        ));
    }
    Ok(())
}

/// Correlation engine with the sector-2 weight checked against the bound.
fn engine(
    cfg: &ScenarioConfig,
    mirror: &Mirror,
    params: &DriveParams,
) -> Result<CorrelationEngine> {
    let op = mirror.operator(params, cfg.blockade.blockade())?;
    let eng = CorrelationEngine::new(&op, mirror.outputs()?)?;
    let amps = eng.amplitudes();
    let weight = amps.c2.as_ref().map_or(0.0, |c| c.norm_sqr()) / amps.norm_sqr();
    if weight > cfg.truncation.sector2_bound {
        return Err(config_error(
            "beam.power_scale",
            format!(
                "sector-2 weight {weight:.3e} exceeds truncation.sector2_bound = {}",
                cfg.truncation.sector2_bound
            ),
        ));
    }
    Ok(eng)
}

fn pair_label(a: Channel, b: Channel) -> String {
    format!("{}{}", a.symbol(), b.symbol())
}

pub fn run_scenario(s: Scenario, cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let (var, grid) = scan_grid(s, cfg)?;
    let l = cfg.lattice.diameter_sites;
    let a = cfg.lattice.a_over_lambda;
    let w0 = cfg.beam.w0_over_lambda;
    let base = cfg.drive.params();
    match s {
        Scenario::Fig1e => {
            if base.omega <= 0.0 {
                return Err(config_error(
                    "drive.omega_over_gamma",
                    "fig1e needs a positive control field",
                ));
            }
            let mirror = build_mirror(cfg, l, a, w0)?;
            let mut table = Table::new(["omega", "delta", "R", "T", "L"]);
            for omega in [0.0, base.omega] {
                let p = DriveParams { omega, ..base };
                let rows = grid
                    .par_iter()
                    .map(|&d| mirror_response(&mirror, &params_at_probe_detuning(&p, d)))
                    .collect::<Result<Vec<_>>>()?;
                for (d, r) in grid.iter().zip(rows) {
                    table.push(vec![omega, *d, r.r, r.t, r.l])?;
                }
            }
            Ok(ScenarioOutput {
                table,
                summary: None,
            })
        }
        Scenario::Fig2a => {
            let mirror = build_mirror(cfg, l, a, w0)?;
            let rows = grid
                .par_iter()
                .map(|&w| mirror_response(&rewaist(cfg, &mirror, w)?, &base))
                .collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(["w0", "R", "T", "L"]);
            for (w, r) in grid.iter().zip(rows) {
                table.push(vec![*w, r.r, r.t, r.l])?;
            }
            Ok(ScenarioOutput {
                table,
                summary: None,
            })
        }
        Scenario::Fig2b => {
            let mirror = build_mirror(cfg, l, a, w0)?;
            let rows = grid
                .iter()
                .map(|&w| defect_average(&rewaist(cfg, &mirror, w)?, base.delta))
                .collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(["w0", "dR", "dT", "dL", "excluded"]);
            for (w, r) in grid.iter().zip(rows) {
                table.push(vec![*w, r.dr, r.dt, r.dl, r.excluded as f64])?;
            }
            Ok(ScenarioOutput {
                table,
                summary: None,
            })
        }
        Scenario::Fig3a => {
            require_pairs(cfg, s)?;
            let pairs = cfg.correlation.channel_pairs()?;
            let mut cols: Vec<String> = ["diameter", "atoms", "w0", "R"].map(String::from).to_vec();
            cols.extend(
                pairs
                    .iter()
                    .map(|&(x, y)| format!("g2_{}_0", pair_label(x, y))),
            );
            let mut table = Table::new(cols);
            for &d in &grid {
                let mirror = build_mirror(cfg, d as usize, a, w0)?;
                let (wopt, lin) = optimal_waist(
                    &mirror,
                    &DriveParams::two_level(base.delta),
                    WAIST_SEARCH.0,
                    WAIST_SEARCH.1,
                )?;
                let mirror = rewaist(cfg, &mirror, wopt)?;
                let eng = engine(cfg, &mirror, &base)?;
                let mut row = vec![d, mirror.len() as f64, wopt, lin.r];
                row.extend(pairs.iter().map(|&(x, y)| eng.g2_zero(x, y)));
                table.push(row)?;
            }
            Ok(ScenarioOutput {
                table,
                summary: None,
            })
        }
        Scenario::Fig3b => {
            require_pairs(cfg, s)?;
            let pairs = cfg.correlation.channel_pairs()?;
            let mut cols: Vec<String> = ["w0", "R"].map(String::from).to_vec();
            cols.extend(
                pairs
                    .iter()
                    .map(|&(x, y)| format!("g2_{}_0", pair_label(x, y))),
            );
            let mirror = build_mirror(cfg, l, a, w0)?;
            let rows = grid
                .par_iter()
                .map(|&w| {
                    let m = rewaist(cfg, &mirror, w)?;
                    let lin = mirror_response(&m, &base)?;
                    let eng = engine(cfg, &m, &base)?;
                    let mut row = vec![w, lin.r];
                    row.extend(pairs.iter().map(|&(x, y)| eng.g2_zero(x, y)));
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut table = Table::new(cols);
            for r in rows {
                table.push(r)?;
            }
            Ok(ScenarioOutput {
                table,
                summary: None,
            })
        }
        Scenario::Fig4 => fig4(cfg, &grid),
        Scenario::Custom => custom(cfg, var, &grid),
    }
}

fn fig4(cfg: &ScenarioConfig, omegas: &[f64]) -> Result<ScenarioOutput> {
    require_pairs(cfg, Scenario::Fig4)?;
    if omegas.iter().any(|&o| o <= 0.0) {
        return Err(config_error(
            "scan.values",
            "control fields must be positive",
        ));
    }
    let pairs = cfg.correlation.channel_pairs()?;
    let mirror = build_mirror(
        cfg,
        cfg.lattice.diameter_sites,
        cfg.lattice.a_over_lambda,
        cfg.beam.w0_over_lambda,
    )?;
    let gamma_c = mirror.collective()?.gamma_c;
    let base = cfg.drive.params();
    let scaled_grid = log_tau_grid(
        cfg.correlation.tau_max_delay_times,
        cfg.correlation.tau_points,
    );
    let mut cols: Vec<String> = ["omega", "tau_d", "tau", "tau_over_tau_d"]
        .map(String::from)
        .to_vec();
    cols.extend(
        pairs
            .iter()
            .map(|&(x, y)| format!("g2_{}", pair_label(x, y))),
    );
    cols.extend(["g1_f_abs".to_string(), "g1_b_abs".to_string()]);
    let results = omegas
        .par_iter()
        .map(|&omega| {
            let td = delay_time(gamma_c, omega)?;
            let taus: Vec<f64> = match &cfg.correlation.tau_values {
                Some(t) => t.clone(),
                None => scaled_grid.iter().map(|x| x * td).collect(),
            };
            let eng = engine(cfg, &mirror, &DriveParams { omega, ..base })?;
            Ok((omega, td, eng.correlations(&taus)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(cols);
    for (omega, td, rec) in &results {
        for (k, &tau) in rec.tau.iter().enumerate() {
            let mut row = vec![*omega, *td, tau, tau / td];
            row.extend(pairs.iter().map(|&(x, y)| rec.g2(x, y)[k]));
            row.push(rec.g1(Channel::Forward)[k].norm());
            row.push(rec.g1(Channel::Backward)[k].norm());
            table.push(row)?;
        }
    }
    let summary = if cfg.correlation.tau_values.is_none() && results.len() > 1 {
        // shared τ/τ_d grid: compare curves up to five delay times
        let keep = scaled_grid
            .iter()
            .take_while(|&&x| x <= 5.0 + 1e-12)
            .count();
        let mut rms = serde_json::Map::new();
        for &(x, y) in &pairs {
            let curves: Vec<Vec<f64>> = results
                .iter()
                .map(|(_, _, r)| r.g2(x, y)[..keep].to_vec())
                .collect();
            let shapes: Vec<Vec<f64>> = curves.iter().map(|c| normalized_shape(c)).collect();
            let label = pair_label(x, y);
            rms.insert(
                format!("{label}_max_pairwise_rms"),
                json!(max(&pairwise_rms(&curves))),
            );
            rms.insert(
                format!("{label}_shape_max_pairwise_rms"),
                json!(max(&pairwise_rms(&shapes))),
            );
        }
        Some(json!({ "gamma_c": gamma_c, "collapse": rms }))
    } else {
        Some(json!({ "gamma_c": gamma_c }))
    };
    Ok(ScenarioOutput { table, summary })
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn custom(cfg: &ScenarioConfig, var: ScanVariable, grid: &[f64]) -> Result<ScenarioOutput> {
    let pairs = if cfg.truncation.max_excitations >= 2 {
        cfg.correlation.channel_pairs()?
    } else {
        Vec::new()
    };
    let mut cols: Vec<String> = vec![var.column().into(), "R".into(), "T".into(), "L".into()];
    cols.extend(
        pairs
            .iter()
            .map(|&(x, y)| format!("g2_{}_0", pair_label(x, y))),
    );
    let base = cfg.drive.params();
    let fixed = build_mirror(
        cfg,
        cfg.lattice.diameter_sites,
        cfg.lattice.a_over_lambda,
        cfg.beam.w0_over_lambda,
    )?;
    let rows = grid
        .par_iter()
        .map(|&x| {
            let (mirror, params) = match var {
                ScanVariable::Delta => (fixed.clone(), params_at_probe_detuning(&base, x)),
                ScanVariable::Omega => {
                    if x < 0.0 {
                        return Err(config_error(
                            "scan.values",
                            "control field must be nonnegative",
                        ));
                    }
                    (fixed.clone(), DriveParams { omega: x, ..base })
                }
                ScanVariable::W0 => (rewaist(cfg, &fixed, x)?, base),
                ScanVariable::Diameter => (
                    build_mirror(
                        cfg,
                        x as usize,
                        cfg.lattice.a_over_lambda,
                        cfg.beam.w0_over_lambda,
                    )?,
                    base,
                ),
                ScanVariable::A => (
                    build_mirror(cfg, cfg.lattice.diameter_sites, x, cfg.beam.w0_over_lambda)?,
                    base,
                ),
            };
            let lin = mirror_response(&mirror, &params)?;
            let mut row = vec![x, lin.r, lin.t, lin.l];
            if !pairs.is_empty() {
                let eng = engine(cfg, &mirror, &params)?;
                row.extend(pairs.iter().map(|&(a, b)| eng.g2_zero(a, b)));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(cols);
    for r in rows {
        table.push(r)?;
    }
    Ok(ScenarioOutput {
        table,
        summary: None,
    })
}

/// N ≤ 3 atoms: centered pair or line, spaced by the lattice constant.
pub fn oracle_mirror(cfg: &ScenarioConfig, atoms: usize) -> Result<Mirror> {
    let a = cfg.lattice.a_over_lambda;
    let positions: Vec<[f64; 3]> = match atoms {
        1 => vec![[0.0; 3]],
        2 => vec![[-a / 2.0, 0.0, 0.0], [a / 2.0, 0.0, 0.0]],
        3 => vec![[-a, 0.0, 0.0], [0.0, 0.0, 0.0], [a, 0.0, 0.0]],
        n => {
            return Err(config_error(
                "atoms",
                format!("oracle supports 1 to 3 atoms, got {n}"),
            ))
        }
    };
    let diameter = if atoms == 1 { 1 } else { 2 };
    let lat = Lattice::from_positions(positions, a, diameter, cfg.lattice.polarization.vector())?;
    Mirror::new(
        lat,
        ProbeMode::with_focus(1.0, cfg.beam.w0_over_lambda, cfg.beam.focus_z)?,
    )?
    .with_peak_drive(cfg.beam.power_scale)
}

/// Truncated regression against the dense master equation for a few atoms.
pub fn oracle_comparison(cfg: &ScenarioConfig, atoms: usize) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let mirror = oracle_mirror(cfg, atoms)?;
    let params = cfg.drive.params();
    let blockade = cfg.blockade.blockade();
    let taus = match &cfg.correlation.tau_values {
        Some(t) => t.clone(),
        None if params.omega > 0.0 => {
            let td = delay_time(mirror.collective()?.gamma_c, params.omega)?;
            vec![0.0, td, 2.0 * td, 5.0 * td]
        }
        None => vec![0.0, 0.5, 1.0, 2.0],
    };
    let oracle = MasterOracle::new(&mirror, &params, blockade)?;
    let rho = oracle.steady_state()?;
    let exact = oracle.correlations(&rho, &taus)?;
    let exact_rtl = oracle.rtl(&rho);
    let eng = CorrelationEngine::new(&mirror.operator(&params, blockade)?, mirror.outputs()?)?;
    let trunc = eng.correlations(&taus)?;
    let trunc_rtl = eng.rtl()?;
    let pairs = cfg.correlation.channel_pairs()?;
    let mut cols = vec!["tau".to_string()];
    for &(x, y) in &pairs {
        cols.push(format!("g2_{}_oracle", pair_label(x, y)));
        cols.push(format!("g2_{}_truncated", pair_label(x, y)));
    }
    let mut table = Table::new(cols);
    let mut worst: f64 = 0.0;
    for (k, &tau) in taus.iter().enumerate() {
        let mut row = vec![tau];
        for &(x, y) in &pairs {
            let (o, t) = (exact.g2(x, y)[k], trunc.g2(x, y)[k]);
            worst = worst.max((o - t).abs() / o.abs());
            row.extend([o, t]);
        }
        table.push(row)?;
    }
    let rel = |o: f64, t: f64| (o - t).abs() / o.abs();
    worst = worst
        .max(rel(exact_rtl.r, trunc_rtl.r))
        .max(rel(exact_rtl.t, trunc_rtl.t));
    let summary = json!({
        "atoms": atoms,
        "hilbert_dimension": oracle.dim(),
        "R_oracle": exact_rtl.r,
        "R_truncated": trunc_rtl.r,
        "T_oracle": exact_rtl.t,
        "T_truncated": trunc_rtl.t,
        "max_relative_difference": worst,
    });
    Ok(ScenarioOutput {
        table,
        summary: Some(summary),
    })
}

/// Trajectory ensemble of the two-level array with its deterministic
/// references.
pub fn trajectory_ensemble(
    cfg: &ScenarioConfig,
    settings: McwfSettings,
) -> Result<(ScenarioOutput, Vec<TrajectoryRecord>)> {
    cfg.validate()?;
    if cfg.drive.omega_over_gamma != 0.0 {
        return Err(config_error(
            "drive.omega_over_gamma",
            "trajectories simulate the two-level array; set the control field to 0",
        ));
    }
    let mirror = build_mirror(
        cfg,
        cfg.lattice.diameter_sites,
        cfg.lattice.a_over_lambda,
        cfg.beam.w0_over_lambda,
    )?;
    let delta = cfg.drive.delta_over_gamma;
    let model = McwfModel::new(&mirror, delta)?;
    let exact = model.stationary()?;
    let rate_sum = model.channels().rate_sum();
    let runner = McwfRunner::new(model, settings)?;
    let (sum, records) = runner.ensemble(cfg.run.seed, cfg.run.trajectories)?;
    let lin = mirror_response(&mirror, &DriveParams::two_level(delta))?;
    let mut table = Table::new(["trajectory", "jumps", "R", "T", "excited_population"]);
    for r in &records {
        let m = r.window_mean(settings.burn_in);
        table.push(vec![
            r.index as f64,
            r.jump_times.len() as f64,
            m.reflection,
            m.transmission,
            m.excited_population,
        ])?;
    }
    let summary = json!({
        "atoms": mirror.len(),
        "ensemble": sum,
        "stationary": exact,
        "linear_response": lin,
        "jump_rate_sum": rate_sum,
        "settings": settings,
    });
    Ok((
        ScenarioOutput {
            table,
            summary: Some(summary),
        },
        records,
    ))
}

/// Runs `f`, then writes its table as `<dir>/<stem>.csv` with a sidecar.
pub fn execute_with<F>(
    label: &str,
    cfg: &ScenarioConfig,
    dir: &Path,
    f: F,
) -> Result<(ScenarioOutput, Written)>
where
    F: FnOnce() -> Result<ScenarioOutput>,
{
    let start = Instant::now();
    let out = f()?;
    let sidecar = Sidecar {
        scenario: label.into(),
        data_file: format!("{label}.csv"),
        columns: out.table.columns().to_vec(),
        rows: out.table.len(),
        config: cfg.clone(),
        config_sha256: config_hash(cfg),
        seed: cfg.run.seed,
        versions: Versions::default(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        summary: out.summary.clone(),
    };
    let written = write_results(dir, label, &out.table, &sidecar)?;
    Ok((out, written))
}

pub fn execute(s: Scenario, cfg: &ScenarioConfig, dir: &Path) -> Result<(ScenarioOutput, Written)> {
    execute_with(s.name(), cfg, dir, || run_scenario(s, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(s: Scenario) -> ScenarioConfig {
        let mut cfg = s.default_config();
        cfg.lattice.diameter_sites = 4;
        cfg
    }

    #[test]
    fn names_roundtrip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!(matches!(
            "fig9".parse::<Scenario>(),
            Err(Error::ConfigValue { .. })
        ));
    }

    #[test]
    fn default_configs_validate() {
        for s in Scenario::ALL {
            s.default_config().validate().unwrap();
        }
    }

    #[test]
    fn fig2a_schema_and_conservation() {
        let mut cfg = small(Scenario::Fig2a);
        cfg.scan = Some(ScanConfig::linspace(ScanVariable::W0, 1.0, 2.0, 5));
        let out = run_scenario(Scenario::Fig2a, &cfg).unwrap();
        assert_eq!(out.table.columns(), ["w0", "R", "T", "L"]);
        assert_eq!(out.table.len(), 5);
        for l in out.table.column("L").unwrap() {
            assert!((-1e-6..=1.0).contains(&l));
        }
    }

    #[test]
    fn fig1e_has_both_control_settings() {
        let mut cfg = small(Scenario::Fig1e);
        cfg.scan = Some(ScanConfig::linspace(ScanVariable::Delta, -0.5, 0.5, 11));
        let out = run_scenario(Scenario::Fig1e, &cfg).unwrap();
        let om = out.table.column("omega").unwrap();
        assert_eq!(om.iter().filter(|&&o| o == 0.0).count(), 11);
        assert_eq!(om.iter().filter(|&&o| o == 1.0).count(), 11);
    }

    #[test]
    fn wrong_scan_variable_is_rejected() {
        let mut cfg = small(Scenario::Fig2a);
        cfg.scan = Some(ScanConfig::linspace(ScanVariable::Delta, 0.0, 1.0, 3));
        match run_scenario(Scenario::Fig2a, &cfg).unwrap_err() {
            Error::ConfigValue { key, .. } => assert_eq!(key, "scan.variable"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn fig4_emits_raw_and_scaled_delays() {
        let mut cfg = small(Scenario::Fig4);
        cfg.correlation.tau_points = 8;
        cfg.scan = Some(ScanConfig::list(ScanVariable::Omega, vec![0.5, 1.0]));
        let out = run_scenario(Scenario::Fig4, &cfg).unwrap();
        let tau = out.table.column("tau").unwrap();
        let td = out.table.column("tau_d").unwrap();
        let x = out.table.column("tau_over_tau_d").unwrap();
        let gamma_c = out.summary.as_ref().unwrap()["gamma_c"].as_f64().unwrap();
        for k in 0..tau.len() {
            assert!((x[k] * td[k] - tau[k]).abs() <= 1e-12 * tau[k].max(1.0));
        }
        assert!((td[0] - gamma_c / 0.5).abs() < 1e-12);
        assert!(out.summary.unwrap()["collapse"]["ff_max_pairwise_rms"].is_number());
    }

    #[test]
    fn strong_drive_violates_truncation_bound() {
        let mut cfg = small(Scenario::Fig3b);
        cfg.beam.power_scale = 2.0;
        cfg.scan = Some(ScanConfig::list(ScanVariable::W0, vec![1.5]));
        match run_scenario(Scenario::Fig3b, &cfg).unwrap_err() {
            Error::ConfigValue { key, .. } => assert_eq!(key, "beam.power_scale"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn oracle_comparison_two_atoms() {
        let mut cfg = ScenarioConfig::default();
        cfg.beam.w0_over_lambda = 1.0;
        cfg.drive.omega_over_gamma = 0.5;
        cfg.drive.two_photon_detuning = 0.1;
        let out = oracle_comparison(&cfg, 2).unwrap();
        let worst = out.summary.unwrap()["max_relative_difference"]
            .as_f64()
            .unwrap();
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Scenario::Custom);
        cfg.scan = Some(ScanConfig::linspace(ScanVariable::Delta, -0.2, 0.2, 5));
        let (_, w1) = execute(Scenario::Custom, &cfg, &dir.path().join("a")).unwrap();
        let (_, w2) = execute(Scenario::Custom, &cfg, &dir.path().join("b")).unwrap();
        assert_eq!(
            std::fs::read(w1.csv).unwrap(),
            std::fs::read(w2.csv).unwrap()
        );
    }
}
