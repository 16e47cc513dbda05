use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rydmirror::scenario::oracle_mirror;
use rydmirror::validation::{MasterOracle, McwfModel, McwfRunner, McwfSettings};
use rydmirror::{
    mirror_response, Blockade, CorrelationEngine, DriveParams, PairSolver, ScenarioConfig,
};
use rydmirror_bench::disc_mirror;

fn linear(c: &mut Criterion) {
    let mut g = c.benchmark_group("linear_response");
    for l in [6, 10, 14] {
        let m = disc_mirror(l, 2.0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m.len()), &m, |b, m| {
            b.iter(|| mirror_response(m, &DriveParams::eit(0.05, 1.0, 0.0)).unwrap())
        });
    }
    g.finish();
}

fn pair_steady_state(c: &mut Criterion) {
    let mut g = c.benchmark_group("two_excitation");
    g.sample_size(10);
    let m = disc_mirror(6, 1.5).unwrap();
    let params = DriveParams::eit(0.05, 0.5, 0.1);
    for (name, blockade, solver) in [
        ("full_dense", Blockade::Full, PairSolver::Dense),
        ("full_structured", Blockade::Full, PairSolver::Structured),
        ("off_structured", Blockade::Off, PairSolver::Structured),
    ] {
        let op = m.operator(&params, blockade).unwrap();
        g.bench_function(name, |b| {
            b.iter(|| CorrelationEngine::with_solver(&op, m.outputs().unwrap(), solver).unwrap())
        });
    }
    let big = disc_mirror(10, 1.7).unwrap();
    let op = big.operator(&params, Blockade::Full).unwrap();
    g.bench_function("full_structured_l10", |b| {
        b.iter(|| CorrelationEngine::new(&op, big.outputs().unwrap()).unwrap())
    });
    g.finish();
}

fn regression(c: &mut Criterion) {
    let m = disc_mirror(8, 1.7).unwrap();
    let op = m
        .operator(&DriveParams::eit(0.05, 1.0, 0.0), Blockade::Full)
        .unwrap();
    let eng = CorrelationEngine::new(&op, m.outputs().unwrap()).unwrap();
    let taus: Vec<f64> = (0..60).map(|k| 0.1 * k as f64).collect();
    let mut g = c.benchmark_group("regression");
    g.sample_size(10);
    g.bench_function("g2_tau_60", |b| b.iter(|| eng.correlations(&taus).unwrap()));
    g.finish();
}

fn validation(c: &mut Criterion) {
    let mut g = c.benchmark_group("validation");
    g.sample_size(10);
    let mut cfg = ScenarioConfig::default();
    cfg.beam.w0_over_lambda = 1.0;
    let line = oracle_mirror(&cfg, 3).unwrap();
    let params = DriveParams::eit(0.05, 0.5, 0.1);
    g.bench_function("oracle_steady_state_n3", |b| {
        b.iter(|| {
            MasterOracle::new(&line, &params, Blockade::Full)
                .unwrap()
                .steady_state()
                .unwrap()
        })
    });
    let m = disc_mirror(6, 1.5).unwrap().with_peak_drive(0.02).unwrap();
    let runner =
        McwfRunner::new(McwfModel::new(&m, 0.05).unwrap(), McwfSettings::default()).unwrap();
    let mut index = 0;
    g.bench_function("mcwf_trajectory", |b| {
        b.iter(|| {
            index += 1;
            runner.trajectory(7, index).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, linear, pair_steady_state, regression, validation);
criterion_main!(benches);
