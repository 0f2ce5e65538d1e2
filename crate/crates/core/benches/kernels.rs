use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dbarstrip::damping::{build_damping_closed_form, DampingConfig};
use dbarstrip::exec::Exec;
use dbarstrip::geometry::GeneralizedStrip;
use dbarstrip::numerics::{convolve_cauchy, ConvolveConfig, GridFunction, StripGrid};
use dbarstrip::runge::{riemann_eval, riemann_nodes, FnTarget, RungeConfig, RungeSetup};
use dbarstrip::weights::{WeightFunction, WeightSystem};
use dbarstrip::C64;

fn convolution(c: &mut Criterion) {
    let strip = GeneralizedStrip::horizontal(1.0);
    let src = StripGrid::lattice(&strip, 0.9, 4.0, 0.1).unwrap();
    let tgt = StripGrid::lattice(&strip, 0.3, 4.0, 0.1).unwrap();
    let g = GridFunction::from_fn(&src, "g", Exec::Sequential, |z| (-(z * z + 4.0).powf(0.75)).exp()).unwrap();
    let q = build_damping_closed_form(&WeightFunction::power(0.5), 4.5, &DampingConfig::default()).unwrap();
    let mut group = c.benchmark_group("convolve_cauchy");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let cfg = ConvolveConfig { exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| convolve_cauchy(&g, Some(&q), &tgt, cfg).unwrap())
        });
    }
    group.finish();
}

fn riemann(c: &mut Criterion) {
    let ws = WeightSystem::scaled_argument(WeightFunction::power(0.5));
    let strip = GeneralizedStrip::horizontal(1.0);
    let setup = RungeSetup::new(&strip, &ws, 1, None, None, 2.0, 3.0, &RungeConfig::default()).unwrap();
    let f = FnTarget(|z: C64| (-(z * z + 16.0).powf(0.375)).exp(), "element".into());
    let nodes = riemann_nodes(&f, &setup, 40.0, 0.2);
    let xis: Vec<C64> = (0..400).map(|k| C64::new(-20.0 + 0.1 * k as f64, 0.5)).collect();
    let mut group = c.benchmark_group("riemann_eval");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| dbarstrip::exec::map_slice(exec, &xis, |&xi| riemann_eval(&nodes, &setup.damping, xi)))
        });
    }
    group.finish();
}

criterion_group!(benches, convolution, riemann);
criterion_main!(benches);
