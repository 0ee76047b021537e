//! Scalar and multi-density fields on graph vertices, and the operators
//! built on them: neighbour mean, hat field, unnormalized Laplacian,
//! weighted Dirichlet energy and the subset first eigenvalue.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// One real value per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::FieldData(format!("non-finite value at vertex {x}")));
        }
        Ok(ScalarField(values))
    }

    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

/// `m` nonnegative densities per vertex, stored vertex-major so that one
/// vertex's densities are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    m: usize,
    values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(n: usize, m: usize) -> Self {
        assert!(m >= 1, "density count must be at least 1");
        DensityField {
            m,
            values: vec![0.0; n * m],
        }
    }

    /// Builds a field from one column per density.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.len();
        if m == 0 {
            return Err(Error::FieldData("at least one density is required".into()));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch(
                "density columns differ in length".into(),
            ));
        }
        let mut values = Vec::with_capacity(n * m);
        for x in 0..n {
            for (l, c) in columns.iter().enumerate() {
                let v = c[x];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::FieldData(format!(
                        "density {} at vertex {x} must be finite and nonnegative, got {v}",
                        l + 1
                    )));
                }
                values.push(v);
            }
        }
        Ok(DensityField { m, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn get(&self, x: usize, l: usize) -> f64 {
        self.values[x * self.m + l]
    }

    /// Sets one entry. Negative or non-finite values are a logic error.
    pub fn set(&mut self, x: usize, l: usize, v: f64) {
        debug_assert!(v.is_finite() && v >= 0.0, "density value {v}");
        self.values[x * self.m + l] = v;
    }

    /// The `m` densities at vertex `x`.
    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.m..(x + 1) * self.m]
    }

    pub fn column(&self, l: usize) -> ScalarField {
        ScalarField((0..self.n()).map(|x| self.get(x, l)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Largest absolute entrywise difference.
    pub fn sup_distance(&self, other: &DensityField) -> Result<f64> {
        if self.m != other.m || self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "fields have shapes {}x{} and {}x{}",
                self.n(),
                self.m,
                other.n(),
                other.m
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Average of `f` over the neighbours of `x`.
pub fn mean_value(g: &Graph, f: &[f64], x: usize) -> Result<f64> {
    let deg = g.degree(x);
    if deg == 0 {
        return Err(Error::IsolatedVertex(x));
    }
    Ok(g.neighbors(x).iter().map(|&y| f[y]).sum::<f64>() / deg as f64)
}

/// Per-density neighbour means at `x`, written into `out`.
pub(crate) fn density_means(g: &Graph, u: &[f64], m: usize, x: usize, out: &mut [f64]) {
    out.fill(0.0);
    for &y in g.neighbors(x) {
        for (o, v) in out.iter_mut().zip(&u[y * m..(y + 1) * m]) {
            *o += v;
        }
    }
    let deg = g.degree(x) as f64;
    out.iter_mut().for_each(|o| *o /= deg);
}

/// `values[l] - Σ_{p≠l} values[p]`.
pub(crate) fn dominance(values: &[f64], l: usize) -> f64 {
    let others: f64 = values
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != l)
        .map(|(_, v)| v)
        .sum();
    values[l] - others
}

/// `û^l = u^l - Σ_{p≠l} u^p`, pointwise. `l` is zero-based.
pub fn hat_field(u: &DensityField, l: usize) -> Result<ScalarField> {
    if l >= u.m() {
        return Err(Error::IndexOutOfRange {
            index: l,
            len: u.m(),
        });
    }
    Ok(ScalarField(
        (0..u.n()).map(|x| dominance(u.row(x), l)).collect(),
    ))
}

/// Unnormalized Laplacian `Σ_{y ~ x} (f(y) - f(x))` over hop adjacency.
pub fn laplacian_apply(g: &Graph, f: &[f64], x: usize) -> f64 {
    let fx = f[x];
    g.neighbors(x).iter().map(|&y| f[y] - fx).sum()
}

/// `Σ_{edges} w_xy (f(x) - f(y))²`.
pub fn dirichlet_energy(g: &Graph, f: &[f64]) -> f64 {
    g.edges()
        .map(|(x, y, w)| {
            let d = f[x] - f[y];
            w * d * d
        })
        .sum()
}

/// Smallest eigenvalue of the weighted Laplacian restricted to `subset`,
/// with its unit eigenvector extended by zero off the subset.
///
/// The restriction keeps the full weighted degree on the diagonal, so it is
/// the Dirichlet Laplacian of `subset`. Duplicate entries are ignored.
pub fn first_eigenvalue(g: &Graph, subset: &[usize]) -> Result<(f64, ScalarField)> {
    let mut s: Vec<usize> = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() {
        return Err(Error::InvalidParameter("eigenvalue subset is empty".into()));
    }
    if let Some(&bad) = s.iter().find(|&&x| x >= g.n()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: g.n(),
        });
    }
    let k = s.len();
    let mut a = vec![0.0; k * k];
    for (i, &x) in s.iter().enumerate() {
        a[i * k + i] = g.weighted_degree(x);
        for (&y, &w) in g.neighbors(x).iter().zip(g.neighbor_weights(x)) {
            if let Ok(j) = s.binary_search(&y) {
                a[i * k + j] = -w;
            }
        }
    }
    let (vals, vecs) = jacobi_eigen(a, k);
    let mut best = 0;
    for i in 1..k {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    let mut v: Vec<f64> = (0..k).map(|i| vecs[i * k + best]).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    // sign: make the entry of largest magnitude positive
    let pivot = v
        .iter()
        .copied()
        .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    let scale = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
    v.iter_mut().for_each(|x| *x *= scale);
    let mut full = vec![0.0; g.n()];
    for (i, &x) in s.iter().enumerate() {
        full[x] = v[i];
    }
    Ok((vals[best], ScalarField(full)))
}

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations on a dense symmetric `k × k` row-major matrix.
/// Returns eigenvalues and the eigenvector matrix (eigenvectors as columns).
fn jacobi_eigen(mut a: Vec<f64>, k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * k + j] * a[i * k + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[p * k + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * k + p];
                let aqq = a[q * k + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let arp = a[r * k + p];
                    let arq = a[r * k + q];
                    a[r * k + p] = c * arp - s * arq;
                    a[r * k + q] = s * arp + c * arq;
                }
                for r in 0..k {
                    let apr = a[p * k + r];
                    let aqr = a[q * k + r];
                    a[p * k + r] = c * apr - s * aqr;
                    a[q * k + r] = s * apr + c * aqr;
                }
                for r in 0..k {
                    let vrp = v[r * k + p];
                    let vrq = v[r * k + q];
                    v[r * k + p] = c * vrp - s * vrq;
                    v[r * k + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    ((0..k).map(|i| a[i * k + i]).collect(), v)
}
