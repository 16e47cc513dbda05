//! Scenario configuration: a TOML file with the sections `lattice`, `beam`,
//! `drive`, `blockade`, `truncation`, `scan`, `correlation` and `run`.
//! Every key is optional; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Polarization;
use crate::hilbert::{Blockade, DriveParams};
use crate::model::Channel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationKind {
    Circular,
    LinearX,
    LinearY,
}

impl PolarizationKind {
    pub fn vector(self) -> Polarization {
        match self {
            PolarizationKind::Circular => Polarization::circular(),
            PolarizationKind::LinearX => Polarization::linear_in_plane(0.0),
            PolarizationKind::LinearY => Polarization::linear_in_plane(std::f64::consts::FRAC_PI_2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub a_over_lambda: f64,
    pub diameter_sites: usize,
    pub polarization: PolarizationKind,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            a_over_lambda: 0.75,
            diameter_sites: 10,
            polarization: PolarizationKind::Circular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    pub w0_over_lambda: f64,
    /// Peak single-atom drive max_j |⟨e_j|H|G⟩| in units of Γ.
    pub power_scale: f64,
    pub focus_z: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            w0_over_lambda: 2.0,
            power_scale: 1e-3,
            focus_z: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    pub delta_over_gamma: f64,
    pub omega_over_gamma: f64,
    /// Two-photon detuning at the probe detuning `delta_over_gamma`; probe
    /// scans shift it along with the probe.
    pub two_photon_detuning: f64,
    pub rydberg_dephasing: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            delta_over_gamma: 0.05,
            omega_over_gamma: 0.0,
            two_photon_detuning: 0.0,
            rydberg_dephasing: 0.0,
        }
    }
}

impl DriveConfig {
    pub fn params(&self) -> DriveParams {
        DriveParams {
            delta: self.delta_over_gamma,
            omega: self.omega_over_gamma,
            two_photon_detuning: self.two_photon_detuning,
            rydberg_dephasing: self.rydberg_dephasing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockadeMode {
    Full,
    Vdw,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockadeConfig {
    pub mode: BlockadeMode,
    /// Van der Waals coefficient in units of Γλ⁶; used by `vdw` only.
    pub c6: f64,
}

impl Default for BlockadeConfig {
    fn default() -> Self {
        Self {
            mode: BlockadeMode::Full,
            c6: 0.0,
        }
    }
}

impl BlockadeConfig {
    pub fn blockade(&self) -> Blockade {
        match self.mode {
            BlockadeMode::Full => Blockade::Full,
            BlockadeMode::Vdw => Blockade::Vdw { c6: self.c6 },
            BlockadeMode::Off => Blockade::Off,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub max_excitations: usize,
    /// Largest tolerated sector-2 weight ‖c2‖²/‖ψ‖².
    pub sector2_bound: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            max_excitations: 2,
            sector2_bound: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariable {
    Delta,
    W0,
    Omega,
    Diameter,
    A,
}

impl ScanVariable {
    pub fn column(self) -> &'static str {
        match self {
            ScanVariable::Delta => "delta",
            ScanVariable::W0 => "w0",
            ScanVariable::Omega => "omega",
            ScanVariable::Diameter => "diameter",
            ScanVariable::A => "a",
        }
    }
}

/// Either explicit `values` or a uniform grid `start`, `stop`, `points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub variable: ScanVariable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl ScanConfig {
    pub fn linspace(variable: ScanVariable, start: f64, stop: f64, points: usize) -> Self {
        Self {
            variable,
            values: None,
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
        }
    }

    pub fn list(variable: ScanVariable, values: Vec<f64>) -> Self {
        Self {
            variable,
            values: Some(values),
            start: None,
            stop: None,
            points: None,
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let bad = |key: &str, message: &str| Error::ConfigValue {
            key: format!("scan.{key}"),
            message: message.into(),
        };
        let grid = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(bad("points", "must be at least 1"));
                }
                if n == 1 {
                    if a != b {
                        return Err(bad("points", "a single point needs start = stop"));
                    }
                    vec![a]
                } else {
                    (0..n)
                        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                        .collect()
                }
            }
            (Some(_), ..) => return Err(bad("values", "give either values or start/stop/points")),
            _ => return Err(bad("start", "start, stop and points are all required")),
        };
        if grid.is_empty() {
            return Err(bad("values", "grid is empty"));
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(bad("values", "grid values must be finite"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("values", "grid must be strictly increasing"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationConfig {
    /// Channel pairs as two letters, f = forward, b = backward: "ff", "fb", …
    pub channels: Vec<String>,
    pub tau_points: usize,
    /// Largest delay in units of the EIT delay time.
    pub tau_max_delay_times: f64,
    /// Explicit delays in units of 1/Γ, replacing the default grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_values: Option<Vec<f64>>,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self {
            channels: vec!["ff".into(), "bb".into()],
            tau_points: 60,
            tau_max_delay_times: 10.0,
            tau_values: None,
        }
    }
}

fn parse_channel(c: char) -> Option<Channel> {
    match c {
        'f' => Some(Channel::Forward),
        'b' => Some(Channel::Backward),
        _ => None,
    }
}

impl CorrelationConfig {
    pub fn channel_pairs(&self) -> Result<Vec<(Channel, Channel)>> {
        let bad = |message: String| Error::ConfigValue {
            key: "correlation.channels".into(),
            message,
        };
        if self.channels.is_empty() {
            return Err(bad("at least one channel pair is required".into()));
        }
        let mut out: Vec<(Channel, Channel)> = Vec::new();
        for name in &self.channels {
            let cs: Vec<char> = name.chars().collect();
            let pair = match cs.as_slice() {
                [a, b] => parse_channel(*a).zip(parse_channel(*b)),
                _ => None,
            };
            let pair = pair.ok_or_else(|| bad(format!("`{name}` is not one of ff, fb, bf, bb")))?;
            if out.contains(&pair) {
                return Err(bad(format!("`{name}` listed twice")));
            }
            out.push(pair);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trajectories: usize,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trajectories: 2000,
            output_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lattice: LatticeConfig,
    pub beam: BeamConfig,
    pub drive: DriveConfig,
    pub blockade: BlockadeConfig,
    pub truncation: TruncationConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    pub correlation: CorrelationConfig,
    pub run: RunConfig,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            Error::ConfigParse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        fn fail(key: &str, message: impl Into<String>) -> Error {
            Error::ConfigValue {
                key: key.into(),
                message: message.into(),
            }
        }
        let positive = |v: f64, key: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(fail(key, format!("must be positive and finite, got {v}")))
            }
        };
        let finite = |v: f64, key: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(fail(key, "must be finite"))
            }
        };
        positive(self.lattice.a_over_lambda, "lattice.a_over_lambda")?;
        if self.lattice.diameter_sites == 0 {
            return Err(fail("lattice.diameter_sites", "must be at least 1"));
        }
        positive(self.beam.w0_over_lambda, "beam.w0_over_lambda")?;
        positive(self.beam.power_scale, "beam.power_scale")?;
        finite(self.beam.focus_z, "beam.focus_z")?;
        finite(self.drive.delta_over_gamma, "drive.delta_over_gamma")?;
        finite(self.drive.two_photon_detuning, "drive.two_photon_detuning")?;
        if !(self.drive.omega_over_gamma.is_finite() && self.drive.omega_over_gamma >= 0.0) {
            return Err(fail(
                "drive.omega_over_gamma",
                "must be finite and nonnegative",
            ));
        }
        if !(self.drive.rydberg_dephasing.is_finite() && self.drive.rydberg_dephasing >= 0.0) {
            return Err(fail(
                "drive.rydberg_dephasing",
                "must be finite and nonnegative",
            ));
        }
        if self.blockade.mode == BlockadeMode::Vdw {
            positive(self.blockade.c6, "blockade.c6")?;
        } else {
            finite(self.blockade.c6, "blockade.c6")?;
        }
        if !(1..=2).contains(&self.truncation.max_excitations) {
            return Err(fail("truncation.max_excitations", "must be 1 or 2"));
        }
        let b = self.truncation.sector2_bound;
        if !(b > 0.0 && b < 1.0) {
            return Err(fail("truncation.sector2_bound", "must lie in (0, 1)"));
        }
        if let Some(scan) = &self.scan {
            scan.grid()?;
        }
        self.correlation.channel_pairs()?;
        if self.correlation.tau_points < 2 {
            return Err(fail("correlation.tau_points", "must be at least 2"));
        }
        positive(
            self.correlation.tau_max_delay_times,
            "correlation.tau_max_delay_times",
        )?;
        if let Some(t) = &self.correlation.tau_values {
            if t.is_empty()
                || t.iter().any(|x| !(x.is_finite() && *x >= 0.0))
                || t.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(fail(
                    "correlation.tau_values",
                    "must be nonempty, nonnegative and strictly increasing",
                ));
            }
        }
        if self.run.seed > i64::MAX as u64 {
            return Err(fail("run.seed", "must fit a signed 64-bit integer"));
        }
        if self.run.trajectories < 2 {
            return Err(fail("run.trajectories", "must be at least 2"));
        }
        if self.run.output_dir.trim().is_empty() {
            return Err(fail("run.output_dir", "must not be empty"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key_of(err: Error) -> String {
        match err {
            Error::ConfigValue { key, .. } => key,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg =
            ScenarioConfig::parse("[lattice]\na_over_lambda = 0.6\n[beam]\nw0_over_lambda = 1.5\n")
                .unwrap();
        assert_eq!(cfg.lattice.a_over_lambda, 0.6);
        assert_eq!(cfg.beam.w0_over_lambda, 1.5);
        assert_eq!(cfg.blockade.mode, BlockadeMode::Full);
        assert_eq!(cfg.truncation.max_excitations, 2);
        assert_eq!(cfg.drive, DriveConfig::default());
        assert!(cfg.scan.is_none());
    }

    #[test]
    fn negative_lattice_constant_names_the_key() {
        let err = ScenarioConfig::parse("[lattice]\na_over_lambda = -1\n").unwrap_err();
        assert_eq!(key_of(err), "lattice.a_over_lambda");
    }

    #[test]
    fn validation_keys() {
        for (text, key) in [
            ("[beam]\nw0_over_lambda = 0.0", "beam.w0_over_lambda"),
            ("[beam]\npower_scale = -1e-3", "beam.power_scale"),
            ("[drive]\nomega_over_gamma = -1", "drive.omega_over_gamma"),
            ("[blockade]\nmode = \"vdw\"", "blockade.c6"),
            (
                "[truncation]\nmax_excitations = 3",
                "truncation.max_excitations",
            ),
            (
                "[scan]\nvariable = \"delta\"\nvalues = [0.1, 0.0]",
                "scan.values",
            ),
            (
                "[scan]\nvariable = \"delta\"\nstart = 0.0\nstop = 1.0\npoints = 0",
                "scan.points",
            ),
            ("[scan]\nvariable = \"delta\"\nstart = 0.0", "scan.start"),
            ("[correlation]\nchannels = [\"fx\"]", "correlation.channels"),
            (
                "[correlation]\nchannels = [\"ff\", \"ff\"]",
                "correlation.channels",
            ),
            (
                "[correlation]\ntau_values = [1.0, 0.5]",
                "correlation.tau_values",
            ),
            ("[run]\ntrajectories = 1", "run.trajectories"),
        ] {
            assert_eq!(
                key_of(ScenarioConfig::parse(text).unwrap_err()),
                key,
                "{text}"
            );
        }
    }

    #[test]
    fn unknown_keys_are_parse_errors_with_location() {
        let err =
            ScenarioConfig::parse("[lattice]\na_over_lambda = 0.7\nspacing = 3\n").unwrap_err();
        match err {
            Error::ConfigParse {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (3, 1));
                assert!(message.contains("spacing"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ScenarioConfig::parse("[nonsense]\nx = 1\n").unwrap_err(),
            Error::ConfigParse { .. }
        ));
    }

    #[test]
    fn malformed_toml_reports_line() {
        match ScenarioConfig::parse("[beam]\nw0_over_lambda = = 2\n").unwrap_err() {
            Error::ConfigParse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scan_roundtrip() {
        let text = "[scan]\nvariable = \"delta\"\nstart = -1.0\nstop = 1.0\npoints = 201\n";
        let cfg = ScenarioConfig::parse(text).unwrap();
        let grid = cfg.scan.as_ref().unwrap().grid().unwrap();
        assert_eq!(grid.len(), 201);
        assert_eq!(grid[0], -1.0);
        assert_eq!(grid[200], 1.0);
        let again = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), cfg.to_toml());
    }

    #[test]
    fn channel_parsing() {
        let c = CorrelationConfig {
            channels: vec!["fb".into(), "bb".into()],
            ..CorrelationConfig::default()
        };
        assert_eq!(
            c.channel_pairs().unwrap(),
            vec![
                (Channel::Forward, Channel::Backward),
                (Channel::Backward, Channel::Backward)
            ]
        );
    }

    #[test]
    fn blockade_mapping() {
        let b = BlockadeConfig {
            mode: BlockadeMode::Vdw,
            c6: 2.5,
        };
        assert_eq!(b.blockade(), Blockade::Vdw { c6: 2.5 });
    }

    proptest! {
        #[test]
        fn any_valid_config_roundtrips(
            a in 0.1f64..2.0,
            l in 1usize..20,
            w0 in 0.2f64..5.0,
            delta in -2.0f64..2.0,
            omega in 0.0f64..3.0,
            seed in 0..=i64::MAX as u64,
            pts in 1usize..50,
        ) {
            let mut cfg = ScenarioConfig::default();
            cfg.lattice.a_over_lambda = a;
            cfg.lattice.diameter_sites = l;
            cfg.beam.w0_over_lambda = w0;
            cfg.drive.delta_over_gamma = delta;
            cfg.drive.omega_over_gamma = omega;
            cfg.run.seed = seed;
            cfg.scan = Some(ScanConfig::linspace(ScanVariable::W0, 1.0, 1.0 + pts as f64, pts + 1));
            let back = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
