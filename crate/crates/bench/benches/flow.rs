use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cpflow_bench::{catalog_fn, counterexample, reciprocal, start};
use cpflow_core::asymptotics::{cosmic_secants, TailStart};
use cpflow_core::constructions::flow_from_origin;
use cpflow_core::convex::{min_norm_subgrad, moreau_limit, prox_point, SubgradOptions};
use cpflow_core::flow::integrate_flow;
use cpflow_core::{FlowConfig, Point, SecantConfig};

fn prox(c: &mut Criterion) {
    let mut g = c.benchmark_group("prox");
    for id in ["quadratic", "abs_plus_linear", "huber", "counterexample2d"] {
        let f = catalog_fn(id);
        let x = start(f.dim());
        g.bench_with_input(BenchmarkId::from_parameter(id), &x, |b, x| {
            b.iter(|| prox_point(f.as_ref(), black_box(x), 0.1).unwrap())
        });
    }
    let pot = reciprocal();
    g.bench_function("potential_reciprocal", |b| {
        b.iter(|| prox_point(&pot, black_box(&start(1)), 0.1).unwrap())
    });
    g.finish();
}

fn subgradient(c: &mut Criterion) {
    let f = catalog_fn("abs_plus_linear");
    let x = Point::new(vec![1.0, 0.0]).unwrap();
    c.bench_function("min_norm_subgrad/analytic", |b| {
        b.iter(|| min_norm_subgrad(f.as_ref(), black_box(&x)).unwrap())
    });
    c.bench_function("moreau_limit/kink", |b| {
        b.iter(|| moreau_limit(f.as_ref(), black_box(&x), &SubgradOptions::default()).unwrap())
    });
}

fn flows(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate_flow");
    let cfg = FlowConfig::new(0.01, 50.0);
    for id in ["quadratic", "abs_plus_linear", "huber"] {
        let f = catalog_fn(id);
        let x = start(f.dim());
        g.bench_function(id, |b| b.iter(|| integrate_flow(f.as_ref(), &x, &cfg).unwrap()));
    }
    let pot = reciprocal();
    g.bench_function("potential_reciprocal", |b| {
        b.iter(|| integrate_flow(&pot, &start(1), &cfg).unwrap())
    });
    g.finish();
}

fn counterexample_pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("counterexample");
    g.sample_size(20);
    for depth in [3usize, 6] {
        g.bench_with_input(BenchmarkId::new("build", depth), &depth, |b, &d| b.iter(|| counterexample(d)));
        let ce = counterexample(depth);
        g.bench_with_input(BenchmarkId::new("flow_and_secants", depth), &ce, |b, ce| {
            b.iter(|| {
                let traj = flow_from_origin(ce).unwrap();
                let cfg = SecantConfig {
                    tail: TailStart::Time(ce.schedule().rows[0].t_n),
                    ..SecantConfig::default()
                };
                cosmic_secants(&traj, &cfg).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, prox, subgradient, flows, counterexample_pipeline);
criterion_main!(benches);
