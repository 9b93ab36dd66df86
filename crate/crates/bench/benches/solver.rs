use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kfactor::{gen_extremal_host, gen_gnp, graph_union, solve_factor, FactorInstance, Graph, Probability, Seed};
use std::hint::black_box;

fn matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("perfect_matching");
    for n in [48usize, 96, 192] {
        let p = Probability::from_f64((n as f64).ln() / n as f64).unwrap();
        let hosts: Vec<Graph> = (0..16).map(|i| gen_gnp(n, p, &Seed::new(11).child(i))).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &hosts, |b, hosts| {
            b.iter(|| {
                for h in hosts {
                    black_box(solve_factor(&FactorInstance::cliques(h.clone(), 2), 200_000).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn triangles(c: &mut Criterion) {
    let mut group = c.benchmark_group("triangle_factor");
    group.sample_size(20);
    for n in [24usize, 36] {
        let host = gen_extremal_host(n, &kfactor::ratio::q(1, 2)).unwrap();
        let sprinkled: Vec<Graph> =
            (0..8).map(|i| graph_union(&host, &gen_gnp(n, Probability::parse("0.08").unwrap(), &Seed::new(12).child(i))).unwrap()).collect();
        group.bench_with_input(BenchmarkId::new("extremal_half", n), &sprinkled, |b, gs| {
            b.iter(|| {
                for g in gs {
                    black_box(solve_factor(&FactorInstance::cliques(g.clone(), 3), 200_000).unwrap());
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, matching, triangles);
criterion_main!(benches);
