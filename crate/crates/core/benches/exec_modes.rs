use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gtd_core::geometry::{Chi, MetricSpec};
use gtd_core::homogeneity::detect_weights_with;
use gtd_core::scan::{scan_grid, Axis};
use gtd_core::{ExecMode, ThermoSystem};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn sampling(c: &mut Criterion) {
    let kn = ThermoSystem::kerr_newman();
    let mut g = c.benchmark_group("sample_points");
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 2000), &mode, |b, m| {
            b.iter(|| kn.sample_points(2000, 1, *m).unwrap())
        });
    }
    g.finish();
}

fn detection(c: &mut Criterion) {
    let kn = ThermoSystem::kerr_newman();
    let mut g = c.benchmark_group("detect_weights");
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 500), &mode, |b, m| {
            b.iter(|| detect_weights_with(&kn, 500, 1, *m).unwrap())
        });
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let rn = ThermoSystem::reissner_nordstrom_d(5).unwrap();
    let w = rn.declared_weights().unwrap().clone();
    let spec = MetricSpec::unit(2, Chi::Delta);
    let x = Axis { variable: 0, lo: 0.5, hi: 2.0, count: 64 };
    let y = Axis { variable: 1, lo: 0.1, hi: 1.0, count: 64 };
    let mut g = c.benchmark_group("scan_grid");
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 64 * 64), &mode, |b, m| {
            b.iter(|| scan_grid(&rn, &spec, &w, 0, &[1.0, 1.0], &x, &y, *m).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sampling, detection, grid);
criterion_main!(benches);
