//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use graphseg::verify::{check_disjointness, check_growth_inequality, compute_AB, HarnessReport};
use graphseg::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn partition_of(g: &Graph) -> VertexPartition {
    detect_boundary(g, &all_pairs_hop_distances(g)).unwrap()
}

fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    Graph::from_edges(n, &edges).unwrap()
}

/// Grid with about a sixth of its edges removed, keeping it connected.
fn pruned_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Graph {
    use rand::seq::SliceRandom;
    let grid = generate(GraphKind::Grid2d { rows, cols }).unwrap();
    let mut edges: Vec<(usize, usize)> = grid.edges().map(|(x, y, _)| (x, y)).collect();
    edges.shuffle(rng);
    let target = edges.len() / 6;
    let mut removed = 0;
    let mut i = 0;
    while removed < target && i < edges.len() {
        let e = edges.remove(i);
        let trial = Graph::from_edges(grid.n(), &edges).unwrap();
        if is_connected(&trial) {
            removed += 1;
        } else {
            edges.insert(i, e);
            i += 1;
        }
    }
    Graph::from_edges(grid.n(), &edges).unwrap()
}

/// Random connected graph with both boundary and interior vertices, cycling
/// through trees, pruned grids and Erdős–Rényi graphs. Sparse Erdős–Rényi
/// graphs alone have almost no interior under the hop-distance boundary.
fn random_instance_graph(
    rng: &mut ChaCha8Rng,
    family: usize,
    n_lo: usize,
    n_hi: usize,
) -> (Graph, VertexPartition) {
    loop {
        let n = rng.gen_range(n_lo..=n_hi);
        let g = match family % 3 {
            0 => random_tree(rng, n),
            1 => {
                let rows = rng.gen_range(3..=6);
                pruned_grid(rng, rows, (n / rows).max(3))
            }
            _ => {
                let p = (3.5 / n as f64).min(0.9);
                generate(GraphKind::RandomConnected {
                    n,
                    p,
                    seed: rng.gen(),
                })
                .unwrap()
            }
        };
        let part = partition_of(&g);
        if !part.boundary().is_empty() && !part.interior().is_empty() {
            return (g, part);
        }
    }
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    for n in 3..=12 {
        let g = generate(GraphKind::Path(n)).unwrap();
        if partition_of(&g).boundary() != [0, n - 1] {
            bad.push(format!("path({n})"));
        }
    }
    for k in 2..=12 {
        let g = generate(GraphKind::Star(k)).unwrap();
        let want: Vec<usize> = (1..=k).collect();
        if partition_of(&g).boundary() != want.as_slice() {
            bad.push(format!("star({k})"));
        }
    }
    for n in 2..=12 {
        let g = generate(GraphKind::Complete(n)).unwrap();
        if partition_of(&g).boundary().len() != n {
            bad.push(format!("complete({n})"));
        }
    }
    let elapsed = t.elapsed();
    outcome(
        bad.is_empty() && elapsed < Duration::from_secs(1),
        format!("31 graphs, mismatches {bad:?}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let g = generate(GraphKind::Path(5)).unwrap();
    let part = partition_of(&g);
    let mut phi = DensityField::zeros(5, 2);
    phi.set(0, 0, 1.0);
    phi.set(4, 1, 1.0);
    let spec = SystemSpec::new(
        FunctionSpec::parse("s").unwrap(),
        vec![FunctionSpec::zero(); 2],
        BoundaryData::new(&part, phi).unwrap(),
    )
    .unwrap();
    let exact =
        DensityField::from_columns(&[vec![1.0, 0.5, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.5, 1.0]])
            .unwrap();
    let mut worst: f64 = 0.0;
    let mut converged = true;
    for scheme in [Scheme::Jacobi, Scheme::GaussSeidel] {
        let cfg = SolverConfig::default().with_scheme(scheme);
        let (u, report) = solve_system(&g, &part, &spec, &cfg).unwrap();
        converged &= report.converged;
        worst = worst.max(u.sup_distance(&exact).unwrap());
    }
    let elapsed = t.elapsed();
    outcome(
        converged && worst <= 1e-8 && elapsed < Duration::from_secs(1),
        format!("sup error {worst:.2e} over both schemes, {elapsed:.2?}"),
    )
}

/// Dense LU solve of `deg(x) u(x) - Σ_{y ~ x, y ∈ G°} u(y) = Σ_{y ~ x, y ∈ ∂G} φ(y)`.
fn harmonic_oracle(g: &Graph, part: &VertexPartition, phi: &[f64]) -> Vec<f64> {
    let interior = part.interior();
    let mut slot = vec![usize::MAX; g.n()];
    for (i, &x) in interior.iter().enumerate() {
        slot[x] = i;
    }
    let k = interior.len();
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    for (i, &x) in interior.iter().enumerate() {
        a[(i, i)] = g.degree(x) as f64;
        for &y in g.neighbors(x) {
            if part.is_boundary(y) {
                b[i] += phi[y];
            } else {
                a[(i, slot[y])] -= 1.0;
            }
        }
    }
    let sol = a.lu().solve(&b).expect("interior system is nonsingular");
    let mut u = phi.to_vec();
    for (i, &x) in interior.iter().enumerate() {
        u[x] = sol[i];
    }
    u
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut all_converged = true;
    let mut interior = 0;
    for i in 0..20 {
        let (g, part) = random_instance_graph(&mut rng, i, 10, 50);
        interior += part.interior().len();
        let mut phi = vec![0.0; g.n()];
        for &x in part.boundary() {
            phi[x] = rng.gen_range(0.0..1.0);
        }
        let phi_field = DensityField::from_columns(std::slice::from_ref(&phi)).unwrap();
        let spec = SystemSpec::new(
            FunctionSpec::parse("s").unwrap(),
            vec![FunctionSpec::zero()],
            BoundaryData::new(&part, phi_field).unwrap(),
        )
        .unwrap();
        let cfg = SolverConfig::default();
        let (u, report) = solve_system(&g, &part, &spec, &cfg).unwrap();
        all_converged &= report.converged;
        let oracle = harmonic_oracle(&g, &part, &phi);
        for (x, want) in oracle.iter().enumerate() {
            worst = worst.max((u.get(x, 0) - want).abs());
        }
    }
    let elapsed = t.elapsed();
    outcome(
        all_converged && worst <= 1e-8 && elapsed < Duration::from_secs(30),
        format!("20 graphs, {interior} interior rows, max |u - LU| {worst:.2e}, {elapsed:.2?}"),
    )
}

struct Instance {
    g: Graph,
    part: VertexPartition,
    spec: SystemSpec,
    label: String,
}

fn random_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..20)
        .map(|i| {
            let (g, part) = random_instance_graph(&mut rng, i + i / 3, 10, 50);
            let m = [2, 3, 4][i % 3];
            let h = ["s", "tanh(s)"][(i / 3) % 2];
            let f = ["0", "0.1 * s"][(i / 6) % 2];
            let mut phi = DensityField::zeros(g.n(), m);
            for &x in part.boundary() {
                let l = rng.gen_range(0..m);
                // (0, 1]
                phi.set(x, l, 1.0 - rng.gen::<f64>());
            }
            let spec = SystemSpec::new(
                FunctionSpec::parse(h).unwrap(),
                vec![FunctionSpec::parse(f).unwrap(); m],
                BoundaryData::new(&part, phi).unwrap(),
            )
            .unwrap();
            let label = format!(
                "n={} interior={} m={m} H={h} f={f}",
                g.n(),
                part.interior().len()
            );
            Instance {
                g,
                part,
                spec,
                label,
            }
        })
        .collect()
}

fn criterion_4(instances: &[Instance], solutions: &mut Vec<DensityField>) -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for inst in instances {
        let (u, report) =
            solve_system(&inst.g, &inst.part, &inst.spec, &SolverConfig::default()).unwrap();
        let r = system_residual(&inst.g, &inst.part, &inst.spec, &u).unwrap();
        worst = worst.max(r);
        if !report.converged || r > 1e-8 {
            failures.push(inst.label.clone());
        }
        solutions.push(u);
    }
    let elapsed = t.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!("max residual {worst:.2e}, failures {failures:?}, {elapsed:.2?}"),
    )
}

fn criterion_5(
    instances: &[Instance],
    solutions: &[DensityField],
    runs: &[HarnessReport],
) -> Outcome {
    let mut worst_disjoint: f64 = 0.0;
    let mut worst_growth = f64::NEG_INFINITY;
    let mut worst_ab = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for ((inst, u), harness) in instances.iter().zip(solutions).zip(runs) {
        let fields = std::iter::once(u).chain(harness.solutions.iter());
        for (k, field) in fields.enumerate() {
            let d = check_disjointness(field, 1e-8).unwrap();
            let gi = check_growth_inequality(&inst.g, &inst.part, &inst.spec, field, 1e-8).unwrap();
            worst_disjoint = worst_disjoint.max(d.slack);
            worst_growth = worst_growth.max(gi.slack);
            if !d.passed || !gi.passed {
                failures.push(format!("{} field {k}", inst.label));
            }
        }
        let all: Vec<&DensityField> = std::iter::once(u).chain(harness.solutions.iter()).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                let ab = compute_AB(all[i], all[j]).unwrap();
                worst_ab = worst_ab.max(ab.a).max(ab.b);
                if ab.a > 1e-8 || ab.b > 1e-8 {
                    failures.push(format!("{} pair ({i},{j})", inst.label));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "disjointness slack {worst_disjoint:.2e}, growth slack {worst_growth:.2e}, \
             max(A,B) {worst_ab:.2e}, failures {failures:?}"
        ),
    )
}

fn criterion_6(instances: &[Instance], runs: &mut Vec<HarnessReport>) -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let report = verify::uniqueness_harness(
            &inst.g,
            &inst.part,
            &inst.spec,
            &SolverConfig::default(),
            10,
            600 + i as u64,
        )
        .unwrap();
        worst = worst.max(report.max_distance);
        if !report.passed(1e-6) {
            failures.push(inst.label.clone());
        }
        runs.push(report);
    }
    let elapsed = t.elapsed();
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(300),
        format!("max pairwise distance {worst:.2e}, failures {failures:?}, {elapsed:.2?}"),
    )
}

/// Projected SOR on the matrix form `deg(x) u(x) - Σ_{y ~ x} u(y) + f(x) >= 0`,
/// `u >= 0`, with the obstacle at zero.
fn projected_sor(g: &Graph, part: &VertexPartition, f: &[f64], bc: &[f64]) -> Vec<f64> {
    let omega = 1.5;
    let mut u: Vec<f64> = (0..g.n())
        .map(|x| if part.is_boundary(x) { bc[x] } else { 0.0 })
        .collect();
    for _ in 0..1_000_000 {
        let mut change: f64 = 0.0;
        for &x in part.interior() {
            let sum: f64 = g.neighbors(x).iter().map(|&y| u[y]).sum();
            let gs = (sum - f[x]) / g.degree(x) as f64;
            let next = (u[x] + omega * (gs - u[x])).max(0.0);
            change = change.max((next - u[x]).abs());
            u[x] = next;
        }
        if change < 1e-15 {
            break;
        }
    }
    u
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_comp: f64 = 0.0;
    let mut worst_ref: f64 = 0.0;
    let mut all_converged = true;
    for i in 0..10 {
        let (g, part) = random_instance_graph(&mut rng, i, 10, 40);
        let f: Vec<f64> = (0..g.n()).map(|_| rng.gen_range(0.0..0.5)).collect();
        let bc: Vec<f64> = (0..g.n())
            .map(|x| {
                if part.is_boundary(x) {
                    rng.gen_range(0.0..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let cfg = SolverConfig::default();
        let (u, report) = solve_obstacle(
            &g,
            &part,
            &ScalarField::new(f.clone()).unwrap(),
            &ScalarField::new(bc.clone()).unwrap(),
            &cfg,
        )
        .unwrap();
        all_converged &= report.converged;
        for &x in part.interior() {
            let c = (-laplacian_apply(&g, u.values(), x) + f[x]).min(u[x]);
            worst_comp = worst_comp.max(c.abs());
        }
        let reference = projected_sor(&g, &part, &f, &bc);
        for x in 0..g.n() {
            worst_ref = worst_ref.max((u[x] - reference[x]).abs());
        }
    }
    let elapsed = t.elapsed();
    outcome(
        all_converged
            && worst_comp <= 1e-8
            && worst_ref <= 1e-8
            && elapsed < Duration::from_secs(30),
        format!(
            "max |min(-Lu+f,u)| {worst_comp:.2e}, max |u - PSOR| {worst_ref:.2e}, {elapsed:.2?}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_single: f64 = 0.0;
    let mut worst_full: f64 = 0.0;
    let mut monotone_failures = 0;
    for _ in 0..10 {
        let n = rng.gen_range(2..=20);
        let base = generate(GraphKind::RandomConnected {
            n,
            p: 0.3,
            seed: rng.gen(),
        })
        .unwrap();
        let edges: Vec<(usize, usize, f64)> = base
            .edges()
            .map(|(x, y, _)| (x, y, rng.gen_range(0.1..5.0)))
            .collect();
        let g = Graph::from_weighted_edges(n, &edges).unwrap();
        for x in 0..n {
            let (lambda, _) = first_eigenvalue(&g, &[x]).unwrap();
            worst_single = worst_single.max((lambda - g.weighted_degree(x)).abs());
        }
        let all: Vec<usize> = (0..n).collect();
        worst_full = worst_full.max(first_eigenvalue(&g, &all).unwrap().0.abs());
    }
    for _ in 0..50 {
        let n = rng.gen_range(2..=20);
        let g = generate(GraphKind::RandomConnected {
            n,
            p: 0.3,
            seed: rng.gen(),
        })
        .unwrap();
        let t: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
        if t.is_empty() {
            continue;
        }
        let mut s: Vec<usize> = t.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if s.is_empty() {
            s.push(t[0]);
        }
        let (ls, _) = first_eigenvalue(&g, &s).unwrap();
        let (lt, _) = first_eigenvalue(&g, &t).unwrap();
        if ls < lt - 1e-12 {
            monotone_failures += 1;
        }
    }
    outcome(
        worst_single <= 1e-9 && worst_full <= 1e-9 && monotone_failures == 0,
        format!(
            "singleton error {worst_single:.2e}, |λ(V)| {worst_full:.2e}, \
             monotonicity failures {monotone_failures}/50"
        ),
    )
}

fn criterion_9() -> Outcome {
    let check = |text: &str| {
        let spec = FunctionSpec::parse(text).unwrap();
        validate_monotone_lipschitz(&spec, Role::H, 10.0, 10_000).unwrap()
    };
    let mut wrong = Vec::new();
    for text in ["s", "tanh(s)", "s/(1+s)"] {
        if !check(text).passed() {
            wrong.push(text.to_string());
        }
    }
    for (text, kind) in [
        ("2*s", ViolationKind::Lipschitz),
        ("pow(s, 2)", ViolationKind::Lipschitz),
        ("-s", ViolationKind::Monotonicity),
    ] {
        let got = check(text).violation.map(|v| v.kind);
        if got != Some(kind) {
            wrong.push(format!("{text}: {got:?}"));
        }
    }
    outcome(wrong.is_empty(), format!("misclassified {wrong:?}"))
}

fn main() -> ExitCode {
    let instances = random_instances();
    let mut solutions = Vec::new();
    let mut runs = Vec::new();
    let mut results: Vec<(usize, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4(&instances, &mut solutions)),
    ];
    let sixth = criterion_6(&instances, &mut runs);
    results.push((5, criterion_5(&instances, &solutions, &runs)));
    results.push((6, sixth));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));
    let mut all = true;
    for (id, o) in &results {
        all &= o.passed;
        println!(
            "criterion {id}: {} ({})",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
