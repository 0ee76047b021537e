//! Fixed-point solvers for the segregation system and the one-phase
//! obstacle problem.
//!
//! Every interior row of the system reads
//!
//! ```text
//! u^l(x) = max( H(x, ū^l(x) - Σ_{p≠l} ū^p(x)) - f_l(x, u^l(x)), 0 )
//! ```
//!
//! which is implicit in `u^l(x)` through `f_l`. A sweep freezes the
//! neighbour means and solves each row's scalar equation by bisection.
//! Convergence of the iteration is not guaranteed a priori, so every solve
//! ends with an a-posteriori residual evaluation and `converged` requires
//! both a small update and a small residual.

use crate::boundary::VertexPartition;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::field::{density_means, dominance, laplacian_apply, DensityField, ScalarField};
use crate::graph::{is_connected, Graph};
use crate::system::SystemSpec;

/// The converged flag allows the final residual to exceed `tol` by this factor.
pub const RESIDUAL_FACTOR: f64 = 100.0;
/// Bisection step cap for the implicit scalar equation.
pub const BISECTION_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Simultaneous update from the previous iterate.
    Jacobi,
    /// In-place update in ascending vertex order.
    GaussSeidel,
}

impl Scheme {
    pub fn other(self) -> Scheme {
        match self {
            Scheme::Jacobi => Scheme::GaussSeidel,
            Scheme::GaussSeidel => Scheme::Jacobi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Boundary data on the boundary, zero inside.
    ZeroExtension,
    /// Caller-supplied interior values; boundary rows are overwritten.
    Custom(DensityField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Stop once the sup-norm update falls to this.
    pub tol: f64,
    pub max_iters: usize,
    /// Relaxation weight in `(0, 1]`.
    pub omega: f64,
    /// Bracket width at which bisection stops.
    pub scalar_tol: f64,
    pub init: Init,
    /// Keep every `history_stride`-th update size (the last is always kept).
    pub history_stride: usize,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::Jacobi,
            tol: 1e-10,
            max_iters: 100_000,
            omega: 1.0,
            scalar_tol: 1e-14,
            init: Init::ZeroExtension,
            history_stride: 1,
            execution: Execution::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Config(format!(
                "omega must lie in (0, 1], got {}",
                self.omega
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.scalar_tol.is_finite() && self.scalar_tol > 0.0) {
            return Err(Error::Config(format!(
                "scalar_tol must be positive, got {}",
                self.scalar_tol
            )));
        }
        if self.history_stride == 0 {
            return Err(Error::Config("history_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm size of the last update.
    pub final_change: f64,
    /// A-posteriori residual of the returned field.
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Solves `s = max(c - f(s), 0)` for `f` nondecreasing with `f(0) = 0`.
///
/// `g(s) = max(c - f(s), 0) - s` is strictly decreasing with `g(0) >= 0`
/// and `g(max(c, 0)) <= 0`, so the root is unique and bracketed.
pub fn solve_scalar_implicit(c: f64, f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let g = |s: f64| (c - f(s)).max(0.0) - s;
    let (mut lo, mut hi) = (0.0, c);
    // f(c) = 0 forces f ≡ 0 on [0, c] and the root is c itself
    if g(hi) >= 0.0 {
        return hi;
    }
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Target value of each row given the neighbour means.
trait RowRule: Sync {
    fn width(&self) -> usize;
    fn target(&self, x: usize, means: &[f64], out: &mut [f64]);
}

struct SystemRule<'a> {
    spec: &'a SystemSpec,
    scalar_tol: f64,
}

impl RowRule for SystemRule<'_> {
    fn width(&self) -> usize {
        self.spec.m()
    }

    fn target(&self, x: usize, means: &[f64], out: &mut [f64]) {
        let h = self.spec.h();
        for (l, o) in out.iter_mut().enumerate() {
            let c = h.eval_extended(x, dominance(means, l));
            let f = self.spec.f(l);
            *o = if f.is_zero() {
                c.max(0.0)
            } else {
                solve_scalar_implicit(c, |s| f.eval(x, s), self.scalar_tol)
            };
        }
    }
}

struct ObstacleRule<'a> {
    g: &'a Graph,
    source: &'a [f64],
}

impl RowRule for ObstacleRule<'_> {
    fn width(&self) -> usize {
        1
    }

    fn target(&self, x: usize, means: &[f64], out: &mut [f64]) {
        out[0] = (means[0] - self.source[x] / self.g.degree(x) as f64).max(0.0);
    }
}

const INLINE_WIDTH: usize = 16;

/// Runs `body(means, targets)` with scratch buffers of length `m`.
fn with_scratch<R>(m: usize, body: impl FnOnce(&mut [f64], &mut [f64]) -> R) -> R {
    if m <= INLINE_WIDTH {
        let mut a = [0.0; INLINE_WIDTH];
        let mut b = [0.0; INLINE_WIDTH];
        body(&mut a[..m], &mut b[..m])
    } else {
        body(&mut vec![0.0; m], &mut vec![0.0; m])
    }
}

fn relax(current: f64, target: f64, omega: f64) -> f64 {
    if omega == 1.0 {
        target
    } else {
        (1.0 - omega) * current + omega * target
    }
}

/// One sweep over `cur` (vertex-major, `rule.width()` values per vertex).
/// Jacobi writes into `next` and swaps; Gauss-Seidel updates `cur` in place.
fn sweep_rule<R: RowRule>(
    g: &Graph,
    partition: &VertexPartition,
    rule: &R,
    cfg: &SolverConfig,
    cur: &mut Vec<f64>,
    next: &mut Vec<f64>,
) -> f64 {
    let m = rule.width();
    let (omega, exec) = (cfg.omega, cfg.execution);
    match cfg.scheme {
        Scheme::Jacobi => {
            let old: &[f64] = cur;
            let change = exec::max_over_chunks_mut(exec, next, m, |x, row| {
                let prev = &old[x * m..(x + 1) * m];
                if partition.is_boundary(x) {
                    row.copy_from_slice(prev);
                    return 0.0;
                }
                with_scratch(m, |means, targets| {
                    density_means(g, old, m, x, means);
                    rule.target(x, means, targets);
                    let mut delta: f64 = 0.0;
                    for ((r, &p), &t) in row.iter_mut().zip(prev).zip(targets.iter()) {
                        *r = relax(p, t, omega);
                        delta = delta.max((*r - p).abs());
                    }
                    delta
                })
            });
            std::mem::swap(cur, next);
            change
        }
        Scheme::GaussSeidel => {
            let mut change: f64 = 0.0;
            with_scratch(m, |means, targets| {
                for &x in partition.interior() {
                    density_means(g, cur, m, x, means);
                    rule.target(x, means, targets);
                    for (c, &t) in cur[x * m..(x + 1) * m].iter_mut().zip(targets.iter()) {
                        let v = relax(*c, t, omega);
                        change = change.max((v - *c).abs());
                        *c = v;
                    }
                }
            });
            change
        }
    }
}

fn check_instance(g: &Graph, partition: &VertexPartition) -> Result<()> {
    if partition.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition has {} vertices, graph has {}",
            partition.n(),
            g.n()
        )));
    }
    if !is_connected(g) {
        return Err(Error::Disconnected);
    }
    if partition.boundary().is_empty() {
        return Err(Error::EmptyBoundary);
    }
    if let Some(&x) = partition.interior().iter().find(|&&x| g.degree(x) == 0) {
        return Err(Error::IsolatedVertex(x));
    }
    Ok(())
}

fn check_spec(g: &Graph, spec: &SystemSpec) -> Result<()> {
    if spec.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "problem data has {} vertices, graph has {}",
            spec.n(),
            g.n()
        )));
    }
    Ok(())
}

fn check_field(u: &DensityField, n: usize, m: usize) -> Result<()> {
    if u.n() != n || u.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "field is {}x{}, expected {n}x{m}",
            u.n(),
            u.m()
        )));
    }
    Ok(())
}

/// Performs one sweep of the system scheme and returns the new field with
/// the sup-norm size of the update. Boundary rows are copied unchanged.
pub fn sweep_once(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    u: &DensityField,
    cfg: &SolverConfig,
) -> Result<(DensityField, f64)> {
    cfg.validate()?;
    check_spec(g, spec)?;
    check_field(u, g.n(), spec.m())?;
    if let Some(&x) = partition.interior().iter().find(|&&x| g.degree(x) == 0) {
        return Err(Error::IsolatedVertex(x));
    }
    let rule = SystemRule {
        spec,
        scalar_tol: cfg.scalar_tol,
    };
    let mut cur = u.as_slice().to_vec();
    let mut next = cur.clone();
    let change = sweep_rule(g, partition, &rule, cfg, &mut cur, &mut next);
    let mut out = u.clone();
    out.as_mut_slice().copy_from_slice(&cur);
    Ok((out, change))
}

fn initial_field(
    partition: &VertexPartition,
    phi: &DensityField,
    init: &Init,
) -> Result<DensityField> {
    let mut u = match init {
        Init::ZeroExtension => return Ok(phi.clone()),
        Init::Custom(start) => {
            check_field(start, phi.n(), phi.m())?;
            start.clone()
        }
    };
    for &x in partition.boundary() {
        for l in 0..phi.m() {
            u.set(x, l, phi.get(x, l));
        }
    }
    Ok(u)
}

fn iterate<R: RowRule>(
    g: &Graph,
    partition: &VertexPartition,
    rule: &R,
    cfg: &SolverConfig,
    field: &mut Vec<f64>,
) -> (usize, f64, Vec<f64>) {
    let mut next = field.clone();
    let mut history = Vec::new();
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        change = sweep_rule(g, partition, rule, cfg, field, &mut next);
        let done = change <= cfg.tol || iterations == cfg.max_iters;
        if iterations % cfg.history_stride == 0 || done {
            history.push(change);
        }
        if change <= cfg.tol {
            break;
        }
    }
    (iterations, change, history)
}

/// Iterates [`sweep_once`] to a fixed point and certifies the result with
/// [`system_residual`]. Non-convergence is reported, not an error.
pub fn solve_system(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    cfg: &SolverConfig,
) -> Result<(DensityField, SolveReport)> {
    cfg.validate()?;
    check_instance(g, partition)?;
    check_spec(g, spec)?;
    let phi = spec.boundary_data().as_field();
    let mut u = initial_field(partition, phi, &cfg.init)?;
    let rule = SystemRule {
        spec,
        scalar_tol: cfg.scalar_tol,
    };
    let mut buf = u.as_slice().to_vec();
    let (iterations, change, history) = iterate(g, partition, &rule, cfg, &mut buf);
    u.as_mut_slice().copy_from_slice(&buf);
    let residual = system_residual(g, partition, spec, &u)?;
    let converged = change <= cfg.tol && residual <= RESIDUAL_FACTOR * cfg.tol;
    Ok((
        u,
        SolveReport {
            iterations,
            converged,
            final_change: change,
            residual,
            history,
        },
    ))
}

/// Largest row defect of `u` against the system, over all densities and
/// vertices (interior rows and boundary conditions).
pub fn system_residual(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    u: &DensityField,
) -> Result<f64> {
    Ok(vertex_residuals(g, partition, spec, u)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Per-vertex maximum over densities of the row defect.
pub fn vertex_residuals(
    g: &Graph,
    partition: &VertexPartition,
    spec: &SystemSpec,
    u: &DensityField,
) -> Result<Vec<f64>> {
    check_spec(g, spec)?;
    check_field(u, g.n(), spec.m())?;
    let m = spec.m();
    let phi = spec.boundary_data();
    let h = spec.h();
    let vals = u.as_slice();
    let per_vertex = (0..g.n())
        .map(|x| {
            if partition.is_boundary(x) {
                return (0..m)
                    .map(|l| (u.get(x, l) - phi.value(x, l)).abs())
                    .fold(0.0, f64::max);
            }
            if g.degree(x) == 0 {
                return f64::INFINITY;
            }
            with_scratch(m, |means, _| {
                density_means(g, vals, m, x, means);
                (0..m)
                    .map(|l| {
                        let ul = u.get(x, l);
                        let rhs = (h.eval_extended(x, dominance(means, l))
                            - spec.f(l).eval_extended(x, ul))
                        .max(0.0);
                        (ul - rhs).abs()
                    })
                    .fold(0.0, f64::max)
            })
        })
        .collect();
    Ok(per_vertex)
}

fn check_obstacle_inputs(g: &Graph, source: &ScalarField, bc: &ScalarField) -> Result<()> {
    for (what, f) in [("source", source), ("boundary condition", bc)] {
        if f.len() != g.n() {
            return Err(Error::DimensionMismatch(format!(
                "obstacle {what} has {} values, graph has {}",
                f.len(),
                g.n()
            )));
        }
    }
    if let Some(x) = source.values().iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeSource {
            vertex: x,
            value: source[x],
        });
    }
    Ok(())
}

/// Solves `min(-ℒu + f, u) = 0` on the interior with `u = bc` on the
/// boundary, via the fixed point `u = max(ū - f/deg, 0)`.
///
/// `bc` is read only on boundary vertices. The report's residual is
/// [`obstacle_residual`].
pub fn solve_obstacle(
    g: &Graph,
    partition: &VertexPartition,
    source: &ScalarField,
    bc: &ScalarField,
    cfg: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    check_instance(g, partition)?;
    check_obstacle_inputs(g, source, bc)?;
    let mut start: Vec<f64> = (0..g.n())
        .map(|x| if partition.is_boundary(x) { bc[x] } else { 0.0 })
        .collect();
    if let Init::Custom(u0) = &cfg.init {
        check_field(u0, g.n(), 1)?;
        for &x in partition.interior() {
            start[x] = u0.get(x, 0);
        }
    }
    let rule = ObstacleRule {
        g,
        source: source.values(),
    };
    let (iterations, change, history) = iterate(g, partition, &rule, cfg, &mut start);
    let u = ScalarField::new(start)?;
    let residual = obstacle_residual(g, partition, source, bc, &u)?;
    let converged = change <= cfg.tol && residual <= RESIDUAL_FACTOR * cfg.tol;
    Ok((
        u,
        SolveReport {
            iterations,
            converged,
            final_change: change,
            residual,
            history,
        },
    ))
}

/// `max_x |min(-ℒu(x) + f(x), u(x))|` over the interior, combined with the
/// boundary mismatch `|u - bc|`.
pub fn obstacle_residual(
    g: &Graph,
    partition: &VertexPartition,
    source: &ScalarField,
    bc: &ScalarField,
    u: &ScalarField,
) -> Result<f64> {
    check_obstacle_inputs(g, source, bc)?;
    if u.len() != g.n() {
        return Err(Error::DimensionMismatch("obstacle solution length".into()));
    }
    let vals = u.values();
    Ok((0..g.n())
        .map(|x| {
            if partition.is_boundary(x) {
                (vals[x] - bc[x]).abs()
            } else {
                (-laplacian_apply(g, vals, x) + source[x])
                    .min(vals[x])
                    .abs()
            }
        })
        .fold(0.0, f64::max))
}
