//! Problem data: the shared nonlinearity `H`, the reaction terms `f_l`, and
//! the boundary data `φ^l`, plus the sampling validator that checks the
//! structural hypotheses the uniqueness result relies on.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::boundary::VertexPartition;
use crate::error::{Error, Result};
use crate::expr::{Expr, Program};
use crate::field::DensityField;
use crate::graph::Graph;
use crate::io;

/// Grid size used by [`SystemSpec::new`].
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Minimum grid size accepted by the validator.
pub const MIN_SAMPLES: usize = 100;
/// `|F(x, 0)|` above this fails the origin check.
pub const ORIGIN_TOL: f64 = 1e-12;
/// Slack allowed on sampled difference quotients for the `H` role.
pub const LIPSCHITZ_SLACK: f64 = 1e-9;

/// Named per-vertex coefficient columns referenced by expressions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeTable {
    n: usize,
    columns: BTreeMap<String, Vec<f64>>,
}

impl AttributeTable {
    pub fn new(n: usize) -> Self {
        AttributeTable {
            n,
            columns: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "attribute `{name}` has {} values for {} vertices",
                values.len(),
                self.n
            )));
        }
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::FieldData(format!(
                "attribute `{name}` is not finite at vertex {x}"
            )));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }
}

/// A parsed expression bound to its vertex attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    expr: Expr,
    program: Program,
    slots: usize,
    /// vertex-major, `slots` values per vertex
    attr_values: Vec<f64>,
}

impl FunctionSpec {
    /// Parses an expression that uses no vertex attributes.
    pub fn parse(text: &str) -> Result<Self> {
        Self::bind(Expr::parse(text)?, &AttributeTable::default())
    }

    pub fn parse_with(text: &str, attrs: &AttributeTable) -> Result<Self> {
        Self::bind(Expr::parse(text)?, attrs)
    }

    pub fn bind(expr: Expr, attrs: &AttributeTable) -> Result<Self> {
        let names = expr.required_attributes();
        let mut cols = Vec::with_capacity(names.len());
        for name in &names {
            cols.push(
                attrs
                    .get(name)
                    .ok_or_else(|| Error::UnknownAttribute(name.clone()))?,
            );
        }
        let program = expr.compile(&names)?;
        let slots = names.len();
        let rows = if slots == 0 { 0 } else { attrs.n };
        let mut attr_values = Vec::with_capacity(rows * slots);
        for x in 0..rows {
            attr_values.extend(cols.iter().map(|c| c[x]));
        }
        Ok(FunctionSpec {
            expr,
            program,
            slots,
            attr_values,
        })
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::bind(Expr::Const(0.0), &AttributeTable::default()).expect("constant binds")
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// True when the function does not depend on the vertex.
    pub fn is_uniform(&self) -> bool {
        self.slots == 0
    }

    /// Literally the constant zero.
    pub fn is_zero(&self) -> bool {
        self.expr.is_zero()
    }

    /// Number of vertices with bound attribute data (0 when uniform).
    pub fn vertex_count(&self) -> usize {
        self.attr_values.len().checked_div(self.slots).unwrap_or(0)
    }

    /// Direct evaluation at `(x, s)`.
    pub fn eval(&self, x: usize, s: f64) -> f64 {
        if self.slots == 0 {
            self.program.eval(s, &[])
        } else {
            self.program
                .eval(s, &self.attr_values[x * self.slots..(x + 1) * self.slots])
        }
    }

    /// Odd extension: `F(x, s)` for `s >= 0`, `-F(x, -s)` otherwise.
    pub fn eval_extended(&self, x: usize, s: f64) -> f64 {
        if s < 0.0 {
            -self.eval(x, -s)
        } else {
            self.eval(x, s)
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// The shared nonlinearity: vanishes at 0, nondecreasing, 1-Lipschitz.
    H,
    /// A reaction term: vanishes at 0, nondecreasing.
    F,
}

impl Role {
    fn name(self) -> &'static str {
        match self {
            Role::H => "H",
            Role::F => "f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Origin,
    NonFinite,
    Monotonicity,
    Lipschitz,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Origin => "nonzero at s = 0",
            ViolationKind::NonFinite => "non-finite value",
            ViolationKind::Monotonicity => "decreasing",
            ViolationKind::Lipschitz => "Lipschitz constant above 1",
        })
    }
}

/// First failing sample pair found by the validator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleViolation {
    pub kind: ViolationKind,
    pub vertex: usize,
    /// Grid points `(s_a, s_b)`; equal for point checks.
    pub at: (f64, f64),
    pub values: (f64, f64),
    /// Difference quotient for pair checks, the value itself otherwise.
    pub quotient: f64,
}

impl fmt::Display for SampleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at vertex {} between s = {} and s = {} (values {}, {}; quotient {})",
            self.kind,
            self.vertex,
            self.at.0,
            self.at.1,
            self.values.0,
            self.values.1,
            self.quotient
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub role: Role,
    pub samples: usize,
    pub s_max: f64,
    pub violation: Option<SampleViolation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Samples `spec` on a uniform grid of `samples` points in `[0, s_max]`
/// (for every vertex when attributes are bound) and checks the hypotheses of
/// `role`. Reports the first violating sample pair.
pub fn validate_monotone_lipschitz(
    spec: &FunctionSpec,
    role: Role,
    s_max: f64,
    samples: usize,
) -> Result<ValidationReport> {
    if !(s_max.is_finite() && s_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "validation range must be positive, got {s_max}"
        )));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    let grid: Vec<f64> = (0..samples)
        .map(|i| s_max * i as f64 / (samples - 1) as f64)
        .collect();
    let vertices = spec.vertex_count().max(1);
    let violation = (0..vertices).find_map(|x| scan_vertex(spec, role, x, &grid));
    Ok(ValidationReport {
        role,
        samples,
        s_max,
        violation,
    })
}

fn scan_vertex(spec: &FunctionSpec, role: Role, x: usize, grid: &[f64]) -> Option<SampleViolation> {
    let point = |kind, s: f64, v: f64| SampleViolation {
        kind,
        vertex: x,
        at: (s, s),
        values: (v, v),
        quotient: v,
    };
    let mut prev = spec.eval(x, grid[0]);
    if !prev.is_finite() {
        return Some(point(ViolationKind::NonFinite, grid[0], prev));
    }
    if prev.abs() > ORIGIN_TOL {
        return Some(point(ViolationKind::Origin, grid[0], prev));
    }
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let next = spec.eval(x, b);
        if !next.is_finite() {
            return Some(point(ViolationKind::NonFinite, b, next));
        }
        let quotient = (next - prev) / (b - a);
        let kind = if next < prev {
            Some(ViolationKind::Monotonicity)
        } else if role == Role::H && quotient > 1.0 + LIPSCHITZ_SLACK {
            Some(ViolationKind::Lipschitz)
        } else {
            None
        };
        if let Some(kind) = kind {
            return Some(SampleViolation {
                kind,
                vertex: x,
                at: (a, b),
                values: (prev, next),
                quotient,
            });
        }
        prev = next;
    }
    None
}

/// Boundary values `φ^l`, zero on the interior, with pairwise disjoint
/// supports on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    phi: DensityField,
}

impl BoundaryData {
    pub fn zeros(n: usize, m: usize) -> Self {
        BoundaryData {
            phi: DensityField::zeros(n, m),
        }
    }

    /// Checks support, sign and disjointness of `phi` against `partition`.
    pub fn new(partition: &VertexPartition, phi: DensityField) -> Result<Self> {
        if phi.n() != partition.n() {
            return Err(Error::DimensionMismatch(format!(
                "boundary data has {} vertices, graph has {}",
                phi.n(),
                partition.n()
            )));
        }
        for x in 0..phi.n() {
            let row = phi.row(x);
            if !partition.is_boundary(x) && row.iter().any(|&v| v != 0.0) {
                return Err(Error::BoundaryData(format!(
                    "vertex {x} is interior but has nonzero boundary data"
                )));
            }
            let positive: Vec<usize> = (0..row.len()).filter(|&l| row[l] > 0.0).collect();
            if positive.len() > 1 {
                return Err(Error::BoundaryData(format!(
                    "disjointness violated at vertex {x}: phi{} and phi{} are both positive",
                    positive[0] + 1,
                    positive[1] + 1
                )));
            }
        }
        Ok(BoundaryData { phi })
    }

    pub fn m(&self) -> usize {
        self.phi.m()
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn value(&self, x: usize, l: usize) -> f64 {
        self.phi.get(x, l)
    }

    pub fn max_value(&self) -> f64 {
        self.phi.as_slice().iter().copied().fold(0.0, f64::max)
    }

    /// `φ` on the boundary, zero elsewhere.
    pub fn as_field(&self) -> &DensityField {
        &self.phi
    }
}

/// Reads boundary data from CSV text with header `vertex,phi1,...,phim`.
/// Boundary vertices without a row get all-zero data.
pub fn parse_boundary_data(
    text: &str,
    g: &Graph,
    partition: &VertexPartition,
    m: usize,
) -> Result<BoundaryData> {
    let rows = io::read_labeled_rows(text, g, m, "boundary data")?;
    let mut phi = DensityField::zeros(g.n(), m);
    for row in rows {
        if !partition.is_boundary(row.vertex) {
            return Err(Error::BoundaryData(format!(
                "line {}: vertex `{}` is interior",
                row.line,
                g.label(row.vertex)
            )));
        }
        let positive: Vec<usize> = (0..m).filter(|&l| row.values[l] > 0.0).collect();
        if positive.len() > 1 {
            return Err(Error::BoundaryData(format!(
                "line {}: disjointness violated at vertex `{}`: phi{} and phi{} are both positive",
                row.line,
                g.label(row.vertex),
                positive[0] + 1,
                positive[1] + 1
            )));
        }
        for (l, &v) in row.values.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::BoundaryData(format!(
                    "line {}: phi{} at `{}` is negative ({v})",
                    row.line,
                    l + 1,
                    g.label(row.vertex)
                )));
            }
            phi.set(row.vertex, l, v);
        }
    }
    BoundaryData::new(partition, phi)
}

pub fn load_boundary_data(
    path: &Path,
    g: &Graph,
    partition: &VertexPartition,
    m: usize,
) -> Result<BoundaryData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_boundary_data(&text, g, partition, m)
}

/// The full problem: `m` densities sharing one `H`, with `m` reaction terms
/// and boundary data. All functions are validated on construction.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    h: FunctionSpec,
    f: Vec<FunctionSpec>,
    phi: BoundaryData,
}

impl SystemSpec {
    /// Validates `H` and every `f_l` on `[0, 10·max φ]` (or `[0, 10]` for
    /// zero data) with [`DEFAULT_SAMPLES`] points.
    pub fn new(h: FunctionSpec, f: Vec<FunctionSpec>, phi: BoundaryData) -> Result<Self> {
        let m = phi.m();
        if m == 0 {
            return Err(Error::Problem("at least one density is required".into()));
        }
        if f.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} reaction terms for {m} densities",
                f.len()
            )));
        }
        let n = phi.n();
        for spec in std::iter::once(&h).chain(&f) {
            if !spec.is_uniform() && spec.vertex_count() != n {
                return Err(Error::DimensionMismatch(format!(
                    "`{spec}` is bound to {} vertices, graph has {n}",
                    spec.vertex_count()
                )));
            }
        }
        let s_max = default_s_max(&phi);
        check(&h, Role::H, s_max)?;
        for spec in &f {
            check(spec, Role::F, s_max)?;
        }
        Ok(SystemSpec { h, f, phi })
    }

    pub fn m(&self) -> usize {
        self.phi.m()
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn h(&self) -> &FunctionSpec {
        &self.h
    }

    pub fn f(&self, l: usize) -> &FunctionSpec {
        &self.f[l]
    }

    pub fn boundary_data(&self) -> &BoundaryData {
        &self.phi
    }
}

/// Validation range used by [`SystemSpec::new`].
pub fn default_s_max(phi: &BoundaryData) -> f64 {
    let top = phi.max_value();
    if top > 0.0 {
        10.0 * top
    } else {
        10.0
    }
}

fn check(spec: &FunctionSpec, role: Role, s_max: f64) -> Result<()> {
    let report = validate_monotone_lipschitz(spec, role, s_max, DEFAULT_SAMPLES)?;
    match report.violation {
        None => Ok(()),
        Some(v) => Err(Error::InvalidFunction {
            role: role.name(),
            expr: spec.to_string(),
            reason: v.to_string(),
        }),
    }
}

/// On-disk problem description. Paths are relative to the file itself.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub m: usize,
    #[serde(rename = "H")]
    pub h: String,
    pub f: Vec<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, PathBuf>,
    pub boundary: Option<PathBuf>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Problem(e.to_string()))
    }

    /// Resolves attribute and boundary files relative to `base` and builds
    /// a validated [`SystemSpec`].
    pub fn build(&self, base: &Path, g: &Graph, partition: &VertexPartition) -> Result<SystemSpec> {
        if self.m == 0 {
            return Err(Error::Problem("`m` must be at least 1".into()));
        }
        if self.f.len() != self.m {
            return Err(Error::Problem(format!(
                "`f` lists {} expressions but m = {}",
                self.f.len(),
                self.m
            )));
        }
        let mut attrs = AttributeTable::new(g.n());
        for (name, rel) in &self.attributes {
            let path = base.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            attrs.insert(name.clone(), io::read_scalar_csv(&text, g)?.into_values())?;
        }
        let h = FunctionSpec::parse_with(&self.h, &attrs)?;
        let f = self
            .f
            .iter()
            .map(|t| FunctionSpec::parse_with(t, &attrs))
            .collect::<Result<Vec<_>>>()?;
        let phi = match &self.boundary {
            Some(rel) => load_boundary_data(&base.join(rel), g, partition, self.m)?,
            None => BoundaryData::zeros(g.n(), self.m),
        };
        SystemSpec::new(h, f, phi)
    }
}

pub fn load_problem(path: &Path, g: &Graph, partition: &VertexPartition) -> Result<SystemSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    ProblemFile::parse(&text)?.build(base, g, partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::detect_boundary;
    use crate::graph::{all_pairs_hop_distances, generate, GraphKind};

    fn h_report(text: &str) -> ValidationReport {
        validate_monotone_lipschitz(&FunctionSpec::parse(text).unwrap(), Role::H, 10.0, 10_000)
            .unwrap()
    }

    #[test]
    fn validator_examples() {
        assert!(h_report("s").passed());
        assert!(h_report("tanh(s)").passed());
        assert!(h_report("s/(1+s)").passed());

        let v = h_report("2*s").violation.unwrap();
        assert_eq!(v.kind, ViolationKind::Lipschitz);
        assert_eq!(v.at.0, 0.0);
        assert!((v.quotient - 2.0).abs() < 1e-12);

        assert_eq!(
            h_report("pow(s, 2)").violation.unwrap().kind,
            ViolationKind::Lipschitz
        );
        assert_eq!(
            h_report("-s").violation.unwrap().kind,
            ViolationKind::Monotonicity
        );
        assert_eq!(
            h_report("s + 1").violation.unwrap().kind,
            ViolationKind::Origin
        );
        assert_eq!(
            h_report("s / (s - s)").violation.unwrap().kind,
            ViolationKind::NonFinite
        );
    }

    #[test]
    fn f_role_ignores_slope() {
        let f = FunctionSpec::parse("3*s").unwrap();
        assert!(validate_monotone_lipschitz(&f, Role::F, 5.0, 200)
            .unwrap()
            .passed());
        assert!(validate_monotone_lipschitz(&f, Role::F, 5.0, 50).is_err());
        assert!(validate_monotone_lipschitz(&f, Role::F, 0.0, 200).is_err());
    }

    #[test]
    fn per_vertex_attributes_are_checked_everywhere() {
        let mut attrs = AttributeTable::new(3);
        attrs.insert("k", vec![0.5, 1.0, 1.5]).unwrap();
        let h = FunctionSpec::parse_with("k * s", &attrs).unwrap();
        assert_eq!(h.eval(2, 2.0), 3.0);
        let v = validate_monotone_lipschitz(&h, Role::H, 1.0, 100)
            .unwrap()
            .violation
            .unwrap();
        assert_eq!((v.kind, v.vertex), (ViolationKind::Lipschitz, 2));
        assert!(matches!(
            FunctionSpec::parse("q * s"),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn odd_extension() {
        let h = FunctionSpec::parse("s/(1+s)").unwrap();
        assert_eq!(h.eval_extended(0, 0.0), 0.0);
        assert!((h.eval_extended(0, -0.5) + 1.0 / 3.0).abs() < 1e-15);
        let t = FunctionSpec::parse("tanh(s)").unwrap();
        assert_eq!(t.eval_extended(0, -1.0), -(1.0f64.tanh()));
    }

    fn path5() -> (Graph, VertexPartition) {
        let g = generate(GraphKind::Path(5)).unwrap();
        let p = detect_boundary(&g, &all_pairs_hop_distances(&g)).unwrap();
        (g, p)
    }

    #[test]
    fn boundary_csv() {
        let (g, p) = path5();
        let phi = parse_boundary_data("vertex,phi1,phi2\nv1,1,0\nv5,0,1\n", &g, &p, 2).unwrap();
        assert_eq!(phi.value(0, 0), 1.0);
        assert_eq!(phi.value(4, 1), 1.0);
        assert_eq!(phi.max_value(), 1.0);

        let err = parse_boundary_data("vertex,phi1,phi2\nv1,0.5,0.5\n", &g, &p, 2).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("disjointness") && msg.contains("`v1`"),
            "{msg}"
        );

        assert!(parse_boundary_data("", &g, &p, 2).unwrap().max_value() == 0.0);
        assert!(parse_boundary_data("vertex,phi1,phi2\nv3,1,0\n", &g, &p, 2)
            .unwrap_err()
            .to_string()
            .contains("interior"));
        assert!(
            parse_boundary_data("vertex,phi1,phi2\nv1,-1,0\n", &g, &p, 2)
                .unwrap_err()
                .to_string()
                .contains("negative")
        );
        assert!(parse_boundary_data("vertex,phi1\nv1,1\n", &g, &p, 2).is_err());
        assert!(parse_boundary_data("vertex,phi1,phi2\nzz,1,0\n", &g, &p, 2).is_err());
    }

    #[test]
    fn system_spec_rejects_bad_functions() {
        let (_, p) = path5();
        let phi = BoundaryData::zeros(p.n(), 2);
        let s = || FunctionSpec::parse("s").unwrap();
        assert!(SystemSpec::new(s(), vec![FunctionSpec::zero(), s()], phi.clone()).is_ok());
        let bad_h = SystemSpec::new(
            FunctionSpec::parse("2*s").unwrap(),
            vec![FunctionSpec::zero(), FunctionSpec::zero()],
            phi.clone(),
        );
        assert!(matches!(
            bad_h,
            Err(Error::InvalidFunction { role: "H", .. })
        ));
        let bad_f = SystemSpec::new(
            s(),
            vec![FunctionSpec::zero(), FunctionSpec::parse("-s").unwrap()],
            phi.clone(),
        );
        assert!(matches!(
            bad_f,
            Err(Error::InvalidFunction { role: "f", .. })
        ));
        assert!(SystemSpec::new(s(), vec![FunctionSpec::zero()], phi).is_err());
    }

    #[test]
    fn problem_file_schema() {
        let p =
            ProblemFile::parse(r#"{"m": 2, "H": "s", "f": ["0", "0.1*s"], "boundary": "b.csv"}"#)
                .unwrap();
        assert_eq!(p.m, 2);
        assert_eq!(p.boundary.as_deref(), Some(Path::new("b.csv")));
        assert!(ProblemFile::parse(r#"{"m": 1, "H": "s", "f": ["0"], "extra": 1}"#).is_err());
        assert!(ProblemFile::parse(r#"{"m": 1, "f": ["0"]}"#).is_err());
    }
}
