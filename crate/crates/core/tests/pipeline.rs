use rydmirror::config::{ScanConfig, ScanVariable, ScenarioConfig};
use rydmirror::output::config_hash;
use rydmirror::scenario::{execute, run_scenario, trajectory_ensemble, Scenario};
use rydmirror::validation::McwfSettings;
use rydmirror::Error;

#[test]
fn sidecar_reproduces_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig2b.toml");
    std::fs::write(
        &path,
        "[lattice]\ndiameter_sites = 5\n\n[scan]\nvariable = \"w0\"\nvalues = [1.5, 2.5]\n",
    )
    .unwrap();
    let cfg = ScenarioConfig::load(&path).unwrap();
    let (out, w) = execute(Scenario::Fig2b, &cfg, &dir.path().join("a")).unwrap();
    assert_eq!(out.table.columns(), ["w0", "dR", "dT", "dL", "excluded"]);

    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&w.sidecar).unwrap()).unwrap();
    let echoed: ScenarioConfig = serde_json::from_value(side["config"].clone()).unwrap();
    assert_eq!(echoed, cfg);
    assert_eq!(side["config_sha256"], config_hash(&cfg));
    let (_, w2) = execute(Scenario::Fig2b, &echoed, &dir.path().join("b")).unwrap();
    assert_eq!(
        std::fs::read(w.csv).unwrap(),
        std::fs::read(w2.csv).unwrap()
    );
}

#[test]
fn fig3a_reports_optimized_antibunching() {
    let mut cfg = Scenario::Fig3a.default_config();
    cfg.scan = Some(ScanConfig::list(ScanVariable::Diameter, vec![4.0, 6.0]));
    let out = run_scenario(Scenario::Fig3a, &cfg).unwrap();
    assert_eq!(
        out.table.columns(),
        ["diameter", "atoms", "w0", "R", "g2_ff_0", "g2_bb_0"]
    );
    let g2 = out.table.column("g2_ff_0").unwrap();
    assert!(g2.iter().all(|&g| g > 0.0 && g < 1.0), "{g2:?}");
    assert!(g2[1] < g2[0]);
}

#[test]
fn linear_only_custom_run_skips_correlations() {
    let mut cfg = ScenarioConfig::default();
    cfg.lattice.diameter_sites = 4;
    cfg.truncation.max_excitations = 1;
    cfg.scan = Some(ScanConfig::linspace(ScanVariable::A, 0.5, 1.0, 3));
    let out = run_scenario(Scenario::Custom, &cfg).unwrap();
    assert_eq!(out.table.columns(), ["a", "R", "T", "L"]);
    assert_eq!(out.table.len(), 3);
}

#[test]
fn correlation_scenarios_need_two_excitations() {
    let mut cfg = Scenario::Fig4.default_config();
    cfg.truncation.max_excitations = 1;
    match run_scenario(Scenario::Fig4, &cfg).unwrap_err() {
        Error::ConfigValue { key, .. } => assert_eq!(key, "truncation.max_excitations"),
        e => panic!("{e:?}"),
    }
}

#[test]
fn trajectories_need_the_two_level_array() {
    let mut cfg = ScenarioConfig::default();
    cfg.drive.omega_over_gamma = 1.0;
    match trajectory_ensemble(&cfg, McwfSettings::default()).unwrap_err() {
        Error::ConfigValue { key, .. } => assert_eq!(key, "drive.omega_over_gamma"),
        e => panic!("{e:?}"),
    }
}
