use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graphseg::verify::uniqueness_harness;
use graphseg::*;

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn grid(side: usize) -> Graph {
    generate(GraphKind::Grid2d {
        rows: side,
        cols: side,
    })
    .unwrap()
}

fn three_phase(g: &Graph, p: &VertexPartition) -> SystemSpec {
    let mut phi = DensityField::zeros(g.n(), 3);
    for (i, &x) in p.boundary().iter().enumerate() {
        phi.set(x, (i * 3) / p.boundary().len(), 1.0);
    }
    SystemSpec::new(
        FunctionSpec::parse("tanh(s)").unwrap(),
        vec![FunctionSpec::parse("0.1 * s").unwrap(); 3],
        BoundaryData::new(p, phi).unwrap(),
    )
    .unwrap()
}

fn distances_and_boundary(c: &mut Criterion) {
    let mut group = c.benchmark_group("boundary");
    for side in [16, 32] {
        let g = grid(side);
        let dt = all_pairs_hop_distances(&g);
        for (name, exec) in POLICIES {
            group.bench_with_input(
                BenchmarkId::new(format!("apsp/{name}"), g.n()),
                &g,
                |b, g| b.iter(|| all_pairs_hop_distances_with(black_box(g), exec)),
            );
            group.bench_with_input(
                BenchmarkId::new(format!("detect/{name}"), g.n()),
                &g,
                |b, g| b.iter(|| detect_boundary_with(black_box(g), &dt, exec).unwrap()),
            );
        }
    }
    group.finish();
}

fn jacobi_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobi");
    group.sample_size(10);
    for side in [16, 32] {
        let g = grid(side);
        let p = detect_boundary(&g, &all_pairs_hop_distances(&g)).unwrap();
        let spec = three_phase(&g, &p);
        for (name, exec) in POLICIES {
            let cfg = SolverConfig {
                tol: 1e-8,
                execution: exec,
                ..SolverConfig::default()
            };
            group.bench_function(BenchmarkId::new(name, g.n()), |b| {
                b.iter(|| solve_system(&g, &p, &spec, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn harness(c: &mut Criterion) {
    let mut group = c.benchmark_group("uniqueness_harness");
    group.sample_size(10);
    let g = grid(12);
    let p = detect_boundary(&g, &all_pairs_hop_distances(&g)).unwrap();
    let spec = three_phase(&g, &p);
    for (name, exec) in POLICIES {
        let cfg = SolverConfig {
            tol: 1e-8,
            execution: exec,
            ..SolverConfig::default()
        };
        group.bench_function(BenchmarkId::new(name, 8), |b| {
            b.iter(|| uniqueness_harness(&g, &p, &spec, &cfg, 8, 1).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, distances_and_boundary, jacobi_solve, harness);
criterion_main!(benches);
