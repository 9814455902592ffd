use std::hint::black_box;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use riskroute::datagen::{default_class_specs, generate_corpus, generate_instance, FleetSpec, GeneratorConfig};
use riskroute::forecast::{fit_architecture, Hyperparams, Variant};
use riskroute::par;
use riskroute::risk::{monte_carlo_violation_rate, route_buffer, GaussianResiduals, RouteRisk};
use riskroute::seed;
use riskroute::solver::{solve, BufferRule, DurationEstimate, SolverConfig};

const MODES: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn monte_carlo(c: &mut Criterion) {
    let variances = vec![36.0, 64.0, 100.0, 49.0, 81.0, 25.0];
    let mu = vec![30.0; variances.len()];
    let travel = 60.0;
    let horizon = mu.iter().sum::<f64>() + travel + route_buffer(&variances, 0.05).unwrap();
    let route = RouteRisk { mu, travel, horizon };
    let noise = GaussianResiduals::from_variances(&variances);
    let mut group = c.benchmark_group("monte_carlo_1e5");
    for (name, seq) in MODES {
        par::set_sequential(seq);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| monte_carlo_violation_rate(&route, |i, rng| noise.sample(i, rng), 100_000, black_box(7)))
        });
    }
    par::set_sequential(false);
    group.finish();
}

fn gbt_fit(c: &mut Criterion) {
    let cfg = GeneratorConfig {
        n_days: 40,
        per_day_mean: 100.0,
        seed: 3,
        ..Default::default()
    };
    let records = generate_corpus(&cfg, &default_class_specs()).unwrap();
    let hp = Hyperparams {
        n_trees: 20,
        ..Default::default()
    };
    let mut group = c.benchmark_group("gbt_fit_4k");
    group.sample_size(10);
    for (name, seq) in MODES {
        par::set_sequential(seq);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fit_architecture(Variant::DualWeighted, black_box(&records), &hp).unwrap())
        });
    }
    par::set_sequential(false);
    group.finish();
}

fn solver(c: &mut Criterion) {
    let cfg = GeneratorConfig {
        n_days: 1,
        per_day_mean: 60.0,
        per_day_spread: 0.0,
        start_date: NaiveDate::from_ymd_opt(2024, 5, 6).unwrap(),
        seed: 11,
        ..Default::default()
    };
    let records = generate_corpus(&cfg, &default_class_specs()).unwrap();
    let instance = generate_instance(&records, &FleetSpec::default(), &mut seed::rng(5)).unwrap();
    let estimates: Vec<DurationEstimate> = instance
        .activities
        .iter()
        .map(|a| DurationEstimate {
            mu: a.true_duration,
            sigma2: 50.0,
        })
        .collect();
    let config = SolverConfig {
        generations: 10,
        population: 60,
        seed: 2,
        ..Default::default()
    };
    let mut group = c.benchmark_group("solve_60x10");
    group.sample_size(10);
    for (name, seq) in MODES {
        par::set_sequential(seq);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| solve(black_box(&instance), &estimates, &BufferRule::SubGaussian, &config).unwrap())
        });
    }
    par::set_sequential(false);
    group.finish();
}

criterion_group!(benches, monte_carlo, gbt_fit, solver);
criterion_main!(benches);
