//! Checks of the structural properties of solutions on candidate fields.
//!
//! Nothing here assumes its input solves the system: every check works on
//! arbitrary fields with explicit tolerances, so the same code certifies
//! solver output and flags hand-built counterexamples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::VertexPartition;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::field::{density_means, dominance, DensityField};
use crate::graph::Graph;
use crate::solver::{solve_system, vertex_residuals, Init, Scheme, SolveReport, SolverConfig};
use crate::system::SystemSpec;

/// Default tolerance for the lemma checks.
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lemma {
    Disjointness,
    GrowthInequality,
    Residual,
    MaxLocation,
    InclusionChain,
}

impl Lemma {
    pub fn name(self) -> &'static str {
        match self {
            Lemma::Disjointness => "disjointness",
            Lemma::GrowthInequality => "growth inequality",
            Lemma::Residual => "residual",
            Lemma::MaxLocation => "max location",
            Lemma::InclusionChain => "inclusion chain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub vertex: usize,
    /// Zero-based densities involved.
    pub densities: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub passed: bool,
    /// Worst-case value of the checked quantity; its meaning is per check.
    pub slack: f64,
    pub violations: Vec<Violation>,
}

impl LemmaReport {
    fn from_scan(lemma: Lemma, slack: f64, violations: Vec<Violation>) -> Self {
        LemmaReport {
            lemma,
            passed: violations.is_empty(),
            slack,
            violations,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be finite and nonnegative, got {eps}"
        )));
    }
    Ok(())
}

fn check_same_shape(u: &DensityField, v: &DensityField) -> Result<()> {
    if u.n() != v.n() || u.m() != v.m() {
        return Err(Error::DimensionMismatch(format!(
            "fields are {}x{} and {}x{}",
            u.n(),
            u.m(),
            v.n(),
            v.m()
        )));
    }
    Ok(())
}

/// Flags every vertex where two or more densities exceed `eps`. The slack is
/// the largest second-largest density value over all vertices.
pub fn check_disjointness(u: &DensityField, eps: f64) -> Result<LemmaReport> {
    check_eps(eps)?;
    let mut slack: f64 = 0.0;
    let mut violations = Vec::new();
    for x in 0..u.n() {
        let row = u.row(x);
        let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &v in row {
            if v > first {
                second = first;
                first = v;
            } else if v > second {
                second = v;
            }
        }
        if row.len() >= 2 {
            slack = slack.max(second);
        }
        let positive: Vec<usize> = (0..row.len()).filter(|&l| row[l] > eps).collect();
        if positive.len() >= 2 {
            violations.push(Violation {
                vertex: x,
                densities: positive,
                value: second,
            });
        }
    }
    Ok(LemmaReport::from_scan(
        Lemma::Disjointness,
        slack,
        violations,
    ))
}

/// Evaluates `H(x, ū^l - Σ_{p≠l} ū^p) - û^l - f_l(x, u^l) <= 0` at every
/// interior `(l, x)` and `|u^l - φ^l| <= tol` on the boundary.
///
/// The slack is the largest left-minus-right value over the interior. A
/// boundary row is reported with its mismatch as the value.
pub fn check_growth_inequality(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    u: &DensityField,
    tol: f64,
) -> Result<LemmaReport> {
    check_eps(tol)?;
    if u.n() != g.n() || u.m() != spec.m() || spec.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "field is {}x{}, problem is {}x{}",
            u.n(),
            u.m(),
            spec.n(),
            spec.m()
        )));
    }
    let m = u.m();
    let phi = spec.boundary_data();
    let mut slack = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut means = vec![0.0; m];
    for x in 0..g.n() {
        if partition.is_boundary(x) {
            for l in 0..m {
                let gap = (u.get(x, l) - phi.value(x, l)).abs();
                if gap > tol {
                    violations.push(Violation {
                        vertex: x,
                        densities: vec![l],
                        value: gap,
                    });
                }
            }
            continue;
        }
        if g.degree(x) == 0 {
            return Err(Error::IsolatedVertex(x));
        }
        density_means(g, u.as_slice(), m, x, &mut means);
        let row = u.row(x);
        for l in 0..m {
            let lhs = spec.h().eval_extended(x, dominance(&means, l)) - dominance(row, l);
            let gap = lhs - spec.f(l).eval_extended(x, row[l]);
            slack = slack.max(gap);
            if gap > tol {
                violations.push(Violation {
                    vertex: x,
                    densities: vec![l],
                    value: gap,
                });
            }
        }
    }
    if slack == f64::NEG_INFINITY {
        slack = 0.0;
    }
    Ok(LemmaReport::from_scan(
        Lemma::GrowthInequality,
        slack,
        violations,
    ))
}

/// Wraps [`crate::solver::system_residual`] as a report: passes when the residual is at
/// most `tol`.
pub fn check_residual(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    u: &DensityField,
    tol: f64,
) -> Result<LemmaReport> {
    check_eps(tol)?;
    let per_vertex = vertex_residuals(g, partition, spec, u)?;
    let r = per_vertex.iter().copied().fold(0.0, f64::max);
    let violations = per_vertex
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v > tol)
        .map(|(x, &value)| Violation {
            vertex: x,
            densities: (0..u.m()).collect(),
            value,
        })
        .collect();
    Ok(LemmaReport::from_scan(Lemma::Residual, r, violations))
}

/// Where a maximum of `û^l - v̂^l` (or its mirror) is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgMax {
    pub density: usize,
    pub vertex: usize,
    /// For A: `u^l(x) <= v^l(x)` at the argmax. For B: `v^l(x) <= u^l(x)`.
    pub in_location_set: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ABDiagnostic {
    /// `max_l max_x (û^l - v̂^l)`
    pub a: f64,
    /// `max_l max_x (v̂^l - û^l)`
    pub b: f64,
    pub a_at: ArgMax,
    pub b_at: ArgMax,
}

fn hat_difference(u: &DensityField, v: &DensityField, x: usize, l: usize) -> f64 {
    dominance(u.row(x), l) - dominance(v.row(x), l)
}

/// Largest `sign·(û^l - v̂^l)` with the lexicographically smallest `(l, x)`
/// among ties.
fn scan_max(u: &DensityField, v: &DensityField, sign: f64) -> (f64, usize, usize) {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for l in 0..u.m() {
        for x in 0..u.n() {
            let d = sign * hat_difference(u, v, x, l);
            if d > best.0 {
                best = (d, l, x);
            }
        }
    }
    best
}

/// Exhaustive A/B scan over every density and vertex.
#[allow(non_snake_case)]
pub fn compute_AB(u: &DensityField, v: &DensityField) -> Result<ABDiagnostic> {
    check_same_shape(u, v)?;
    if u.n() == 0 || u.m() == 0 {
        return Err(Error::DimensionMismatch("fields are empty".into()));
    }
    let (a, al, ax) = scan_max(u, v, 1.0);
    let (b, bl, bx) = scan_max(u, v, -1.0);
    Ok(ABDiagnostic {
        a,
        b,
        a_at: ArgMax {
            density: al,
            vertex: ax,
            in_location_set: u.get(ax, al) <= v.get(ax, al),
        },
        b_at: ArgMax {
            density: bl,
            vertex: bx,
            in_location_set: v.get(bx, bl) <= u.get(bx, bl),
        },
    })
}

/// For each `l`, checks that `max_V (û^l - v̂^l)` is attained (within `eps`)
/// on `{u^l <= v^l + eps}`, and the mirror statement with `u`, `v` swapped.
///
/// The slack is the largest shortfall `max_V - max_{set}` seen.
pub fn check_max_location(u: &DensityField, v: &DensityField, eps: f64) -> Result<LemmaReport> {
    check_eps(eps)?;
    check_same_shape(u, v)?;
    let mut slack: f64 = 0.0;
    let mut violations = Vec::new();
    for (a, b) in [(u, v), (v, u)] {
        for l in 0..a.m() {
            let mut overall = (f64::NEG_INFINITY, 0);
            let mut on_set = f64::NEG_INFINITY;
            for x in 0..a.n() {
                let d = hat_difference(a, b, x, l);
                if d > overall.0 {
                    overall = (d, x);
                }
                if a.get(x, l) <= b.get(x, l) + eps {
                    on_set = on_set.max(d);
                }
            }
            let shortfall = overall.0 - on_set;
            slack = slack.max(shortfall);
            if shortfall > eps {
                violations.push(Violation {
                    vertex: overall.1,
                    densities: vec![l],
                    value: shortfall,
                });
            }
        }
    }
    Ok(LemmaReport::from_scan(
        Lemma::MaxLocation,
        slack,
        violations,
    ))
}

/// Checks `{u^l > v^l + eps} ⊆ {û^l > v̂^l - eps} ⊆ {u^l >= v^l - eps}` at
/// every `(l, x)`, in both orders of the pair.
pub fn check_inclusion_chain(u: &DensityField, v: &DensityField, eps: f64) -> Result<LemmaReport> {
    check_eps(eps)?;
    check_same_shape(u, v)?;
    let mut violations = Vec::new();
    let mut slack: f64 = 0.0;
    for (a, b) in [(u, v), (v, u)] {
        for x in 0..a.n() {
            for l in 0..a.m() {
                let du = a.get(x, l) - b.get(x, l);
                let dh = hat_difference(a, b, x, l);
                let first = du > eps && dh <= -eps;
                let second = dh > -eps && du < -eps;
                if first || second {
                    let value = if first { -eps - dh } else { -eps - du };
                    slack = slack.max(value);
                    violations.push(Violation {
                        vertex: x,
                        densities: vec![l],
                        value,
                    });
                }
            }
        }
    }
    Ok(LemmaReport::from_scan(
        Lemma::InclusionChain,
        slack,
        violations,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessRun {
    pub start: usize,
    pub scheme: Scheme,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessReport {
    /// Largest sup-norm distance between two converged runs.
    pub max_distance: f64,
    pub all_converged: bool,
    pub runs: Vec<HarnessRun>,
    pub solutions: Vec<DensityField>,
}

impl HarnessReport {
    pub fn passed(&self, distance_tol: f64) -> bool {
        self.all_converged && self.max_distance <= distance_tol
    }
}

/// Solves one instance from `n_starts` initial fields and compares the
/// results: the zero extension under both schemes, then `n_starts - 1`
/// interior fields drawn uniformly from `[0, max φ]`.
pub fn uniqueness_harness(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    cfg: &SolverConfig,
    n_starts: usize,
    seed: u64,
) -> Result<HarnessReport> {
    let bound = spec.boundary_data().max_value();
    uniqueness_harness_bounded(g, partition, spec, cfg, n_starts, seed, bound)
}

/// [`uniqueness_harness`] with random initial values drawn from `[0, bound]`.
pub fn uniqueness_harness_bounded(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    cfg: &SolverConfig,
    n_starts: usize,
    seed: u64,
    bound: f64,
) -> Result<HarnessReport> {
    if n_starts < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 starts, got {n_starts}"
        )));
    }
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "initial value bound must be finite and nonnegative, got {bound}"
        )));
    }
    cfg.validate()?;
    let (n, m) = (g.n(), spec.m());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = vec![
        (0, cfg.scheme, Init::ZeroExtension),
        (0, cfg.scheme.other(), Init::ZeroExtension),
    ];
    for start in 1..n_starts {
        let mut u0 = DensityField::zeros(n, m);
        for &x in partition.interior() {
            for l in 0..m {
                let v = if bound > 0.0 {
                    rng.gen_range(0.0..=bound)
                } else {
                    0.0
                };
                u0.set(x, l, v);
            }
        }
        jobs.push((start, cfg.scheme, Init::Custom(u0)));
    }
    // runs are spread across the pool, so each solve stays sequential
    let inner = Execution::Sequential;
    let results = exec::map_indices(cfg.execution, jobs.len(), |i| {
        let (_, scheme, init) = &jobs[i];
        let run_cfg = SolverConfig {
            scheme: *scheme,
            init: init.clone(),
            execution: inner,
            ..cfg.clone()
        };
        solve_system(g, partition, spec, &run_cfg)
    });
    let mut runs = Vec::with_capacity(jobs.len());
    let mut solutions = Vec::with_capacity(jobs.len());
    for ((start, scheme, _), result) in jobs.into_iter().zip(results) {
        let (u, report) = result?;
        runs.push(HarnessRun {
            start,
            scheme,
            report,
        });
        solutions.push(u);
    }
    let converged: Vec<usize> = (0..runs.len())
        .filter(|&i| runs[i].report.converged)
        .collect();
    let mut max_distance: f64 = 0.0;
    for (k, &i) in converged.iter().enumerate() {
        for &j in &converged[k + 1..] {
            max_distance = max_distance.max(solutions[i].sup_distance(&solutions[j])?);
        }
    }
    Ok(HarnessReport {
        max_distance,
        all_converged: converged.len() == runs.len(),
        runs,
        solutions,
    })
}
