//! Spatial segregation of `m` competing densities on connected graphs.
//!
//! The crate detects the intrinsic boundary of a graph from hop distances,
//! solves the implicit segregation system (and the one-phase obstacle
//! problem) by fixed-point iteration with a-posteriori residual
//! certification, and checks the structural properties solutions must have.
//!
//! ```
//! use graphseg::{detect_boundary, all_pairs_hop_distances, generate, GraphKind};
//!
//! let g = generate(GraphKind::Path(5)).unwrap();
//! let p = detect_boundary(&g, &all_pairs_hop_distances(&g)).unwrap();
//! assert_eq!(p.boundary(), &[0, 4]);
//! ```

pub mod boundary;
pub mod error;
pub mod exec;
pub mod expr;
pub mod field;
pub mod graph;
pub mod io;
pub mod solver;
pub mod system;
pub mod verify;

pub use boundary::{
    boundary_witness, detect_boundary, detect_boundary_with, VertexPartition, Witness,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use expr::Expr;
pub use field::{
    dirichlet_energy, first_eigenvalue, hat_field, laplacian_apply, mean_value, DensityField,
    ScalarField,
};
pub use graph::{
    all_pairs_hop_distances, all_pairs_hop_distances_with, generate, is_connected, parse_edge_list,
    serialize_edge_list, DistanceTable, Graph, GraphKind,
};
pub use solver::{
    obstacle_residual, solve_obstacle, solve_scalar_implicit, solve_system, sweep_once,
    system_residual, Init, Scheme, SolveReport, SolverConfig,
};
pub use system::{
    load_problem, validate_monotone_lipschitz, BoundaryData, FunctionSpec, ProblemFile, Role,
    SystemSpec, ValidationReport, ViolationKind,
};
pub use verify::{
    check_disjointness, check_growth_inequality, check_inclusion_chain, check_max_location,
    check_residual, compute_AB, uniqueness_harness, ABDiagnostic, HarnessReport, LemmaReport,
};
