use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qnm_lpt::exec::Execution;
use qnm_lpt::scenarios::{node_survey, run_bump_sweep, run_l_sweep, PtConfig, StepBumpConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bump_sweep(c: &mut Criterion) {
    let xs: Vec<f64> = (1..=19).map(|k| 0.05 * k as f64).collect();
    let mut g = c.benchmark_group("bump_sweep_mu10");
    g.sample_size(10);
    for (name, exec) in MODES {
        // unchained seeds so the shooting stage can run in parallel too
        let cfg = StepBumpConfig { exec, seed_from_exact: false, ..StepBumpConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_bump_sweep(black_box(cfg), 10.0, &xs).unwrap())
        });
    }
    g.finish();
}

fn l_sweep(c: &mut Criterion) {
    let ls = [3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let cfg = PtConfig { j: 1, ..PtConfig::default() };
    let mut g = c.benchmark_group("pt_l_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| run_l_sweep(black_box(&cfg), &ls, exec).unwrap()));
    }
    g.finish();
}

fn survey(c: &mut Criterion) {
    let mut g = c.benchmark_group("node_survey_24");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| node_survey(12, 12, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bump_sweep, l_sweep, survey);
criterion_main!(benches);
