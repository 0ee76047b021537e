//! Graph boundary detection.
//!
//! A vertex `x` is on the boundary when some `y` is, on average, strictly
//! closer to the neighbours of `x` than to `x` itself:
//!
//! ```text
//! (1 / deg x) * Σ_{z ~ x} d(z, y) < d(x, y)
//! ```
//!
//! The comparison is cross-multiplied and evaluated in integers, so vertices
//! that achieve equality (e.g. interior vertices of a path) are classified
//! exactly.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::graph::{is_connected, DistanceTable, Graph};

/// A boundary witness `y` for some vertex `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Witness {
    pub vertex: usize,
    /// `deg(x) * d(x, y) - Σ_{z ~ x} d(z, y)`, always positive.
    pub margin: i64,
    pub degree: usize,
}

impl Witness {
    /// `d(x, y)` minus the neighbour-average distance to `y`.
    pub fn mean_margin(&self) -> f64 {
        self.margin as f64 / self.degree as f64
    }
}

/// Split of `V` into boundary and interior vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPartition {
    boundary: Vec<usize>,
    interior: Vec<usize>,
    witnesses: Vec<Option<Witness>>,
}

impl VertexPartition {
    /// Vertices with a witness, ascending.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// `V \ boundary`, ascending.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_boundary(&self, x: usize) -> bool {
        self.witnesses[x].is_some()
    }

    pub fn witness(&self, x: usize) -> Option<Witness> {
        self.witnesses[x]
    }

    pub fn n(&self) -> usize {
        self.witnesses.len()
    }

    /// Builds a partition from explicit witness data, for callers that have
    /// their own notion of which vertices carry Dirichlet data.
    pub fn from_witnesses(witnesses: Vec<Option<Witness>>) -> Self {
        let (boundary, interior) = (0..witnesses.len()).partition(|&x| witnesses[x].is_some());
        VertexPartition {
            boundary,
            interior,
            witnesses,
        }
    }
}

/// Best witness for `x`: largest integer margin, smallest index on ties.
/// `None` when no `y` has a positive margin (including `deg x = 0`).
pub fn boundary_witness(g: &Graph, dt: &DistanceTable, x: usize) -> Option<Witness> {
    let deg = g.degree(x);
    if deg == 0 {
        return None;
    }
    let own = dt.row(x);
    let mut best: Option<Witness> = None;
    for (y, &dxy) in own.iter().enumerate() {
        let around: i64 = g
            .neighbors(x)
            .iter()
            .map(|&z| i64::from(dt.raw(z, y)))
            .sum();
        let margin = deg as i64 * i64::from(dxy) - around;
        if margin > 0 && best.is_none_or(|b| margin > b.margin) {
            best = Some(Witness {
                vertex: y,
                margin,
                degree: deg,
            });
        }
    }
    best
}

pub fn detect_boundary(g: &Graph, dt: &DistanceTable) -> Result<VertexPartition> {
    detect_boundary_with(g, dt, Execution::default())
}

pub fn detect_boundary_with(
    g: &Graph,
    dt: &DistanceTable,
    exec: Execution,
) -> Result<VertexPartition> {
    if dt.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "distance table is {}x{} but graph has {} vertices",
            dt.n(),
            dt.n(),
            g.n()
        )));
    }
    if !is_connected(g) || dt.has_unreachable() {
        return Err(Error::Disconnected);
    }
    let witnesses = exec::map_indices(exec, g.n(), |x| boundary_witness(g, dt, x));
    Ok(VertexPartition::from_witnesses(witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{all_pairs_hop_distances, generate, GraphKind};

    fn partition(kind: GraphKind) -> (Graph, VertexPartition) {
        let g = generate(kind).unwrap();
        let dt = all_pairs_hop_distances(&g);
        let p = detect_boundary(&g, &dt).unwrap();
        (g, p)
    }

    #[test]
    fn path3() {
        let (g, p) = partition(GraphKind::Path(3));
        assert_eq!(p.boundary(), &[0, 2]);
        assert_eq!(p.interior(), &[1]);
        let dt = all_pairs_hop_distances(&g);
        // y = v2 and y = v3 both reach margin 1; the smaller index wins
        let w = boundary_witness(&g, &dt, 0).unwrap();
        assert_eq!((w.vertex, w.margin), (1, 1));
        let via_v3 = dt.raw(0, 2) as i64 - dt.raw(1, 2) as i64;
        assert_eq!(via_v3, 1);
        assert_eq!(boundary_witness(&g, &dt, 1), None);
    }

    #[test]
    fn star_leaves_are_boundary() {
        let (_, p) = partition(GraphKind::Star(3));
        assert_eq!(p.boundary(), &[1, 2, 3]);
        assert_eq!(p.interior(), &[0]);
        // the centre and every other leaf tie at margin 1
        assert_eq!(p.witness(1).unwrap().vertex, 0);
        assert_eq!(p.witness(1).unwrap().margin, 1);
    }

    #[test]
    fn complete_graph_has_no_interior() {
        let (_, p) = partition(GraphKind::Complete(4));
        assert_eq!(p.boundary(), &[0, 1, 2, 3]);
        assert!(p.interior().is_empty());
        // margin 3*1 - 2 = 1, i.e. mean margin 1/3
        let w = p.witness(0).unwrap();
        assert_eq!((w.vertex, w.margin), (1, 1));
        assert!((w.mean_margin() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_vertex_is_interior() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let dt = all_pairs_hop_distances(&g);
        assert_eq!(boundary_witness(&g, &dt, 0), None);
        let p = detect_boundary(&g, &dt).unwrap();
        assert_eq!(p.interior(), &[0]);
        assert!(p.boundary().is_empty());
    }

    #[test]
    fn rejects_disconnected() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let dt = all_pairs_hop_distances(&g);
        assert!(matches!(detect_boundary(&g, &dt), Err(Error::Disconnected)));
    }

    #[test]
    fn grid_boundary_is_the_frame() {
        let (_, p) = partition(GraphKind::Grid2d { rows: 4, cols: 5 });
        let expected: Vec<usize> = (0..20)
            .filter(|&i| {
                let (r, c) = (i / 5, i % 5);
                r == 0 || r == 3 || c == 0 || c == 4
            })
            .collect();
        assert_eq!(p.boundary(), expected.as_slice());
    }
}
