use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;

use pilab_bench::dataset;
use pilab_core::dist::Family;
use pilab_core::interval::{
    bootstrap_pi, BootstrapOptions, Preset, Tau2ConfidenceDistribution, DEFAULT_TAU2_TOL,
};
use pilab_core::sim::{run_scenario, RunSettings, SampleSize, Scenario, SimRng};
use pilab_core::WeightedChiSquare;

fn weighted_chisq(c: &mut Criterion) {
    let mut g = c.benchmark_group("weighted_chisq_cdf");
    for k in [3usize, 10, 100] {
        let w: Vec<f64> = (1..=k).map(|i| 1.0 + i as f64 / k as f64).collect();
        let law = WeightedChiSquare::new(w).unwrap();
        let q = law.mean();
        g.bench_with_input(BenchmarkId::from_parameter(k), &q, |b, &q| {
            b.iter(|| law.cdf(black_box(q)).unwrap())
        });
    }
    g.finish();
}

fn tau2_sampler(c: &mut Criterion) {
    let mut g = c.benchmark_group("tau2_sampler_draw");
    for k in [3usize, 7, 100] {
        let d = dataset(k);
        let cd = Tau2ConfidenceDistribution::new(&d);
        let s = cd.sampler(0.999, DEFAULT_TAU2_TOL).unwrap();
        g.bench_function(BenchmarkId::from_parameter(k), |b| {
            let mut u = 0.0005;
            b.iter(|| {
                u = (u + 0.0371) % 0.998 + 0.0005;
                s.draw(black_box(u)).unwrap()
            })
        });
    }
    g.finish();
}

fn bootstrap(c: &mut Criterion) {
    let mut g = c.benchmark_group("bootstrap_pi");
    g.sample_size(10);
    for k in [3usize, 7] {
        let d = dataset(k);
        let opts = BootstrapOptions::default();
        g.bench_function(BenchmarkId::from_parameter(k), |b| {
            b.iter(|| {
                let mut rng = SimRng::seed_from_u64(1);
                bootstrap_pi(&d, 0.95, &opts, &mut rng).unwrap()
            })
        });
    }
    g.finish();
}

fn scenario(c: &mut Criterion) {
    let settings = RunSettings {
        reps: 200,
        methods: Preset::ALL
            .iter()
            .copied()
            .filter(|m| !m.is_bootstrap())
            .collect(),
        ..Default::default()
    };
    let s = Scenario::new(7, SampleSize::Equal(100), 1.0, Family::Normal, settings).unwrap();
    let mut g = c.benchmark_group("run_scenario");
    g.sample_size(10);
    g.bench_function("K7_closed_form_200_reps", |b| {
        b.iter(|| run_scenario(&s).unwrap())
    });
    g.finish();
}

criterion_group!(benches, weighted_chisq, tau2_sampler, bootstrap, scenario);
criterion_main!(benches);
