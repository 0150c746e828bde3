//! Geodesic flows of left-invariant semi-Riemannian metrics on
//! low-dimensional Lie groups.
//!
//! Such a flow reduces to a quadratic vector field on the Lie algebra: the
//! Euler-Arnold equation `x' = ad*_x x`, where `ad*` is the metric adjoint
//! of the bracket. This crate computes that field exactly over rationals and
//! numerically over floats, integrates it with blowup detection, locates
//! constant and radial solutions by a multistart sphere solver, classifies
//! spherized orbits, decides completeness for the builtin examples, and
//! builds loxodromic integer-matrix lattice data from reciprocal quartics.
//!
//! The exact and numeric paths share one implementation: all core types are
//! generic over a [`scalar::Scalar`], instantiated at [`Rational`] where
//! claims are exact and at `f64` for numerics.

pub mod algebra;
pub mod checks;
pub mod cli;
pub mod error;
pub mod flow;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod metric;
pub mod scalar;
pub mod solver;

pub use algebra::{Builtin, LieAlgebra};
pub use checks::{check_ids, run_checks, CheckResult};
pub use error::{Error, Result};
pub use flow::group::{
    builtin_realization, matrix_exp, reconstruct_group_curve, GroupCurve, MatrixRealization,
};
pub use flow::integrate::{integrate_geodesic, IntegrationOptions, Termination, Trajectory};
pub use flow::sphere::{
    classify_sphere_orbit, newton_polish_sphere, OrbitClass, OrbitOptions, SphereOrbit,
};
pub use flow::{geodesic_field, polarized_field};
pub use io::{
    load_algebra_json, load_metric_json, sphere_portrait_json, trajectory_csv,
    trajectory_sidecar_json,
};
pub use lattice::{
    build_gamma, certify, enumerate_candidates, GammaLattice, LoxodromicCertificate,
    ReciprocalQuartic, Rejection,
};
pub use linalg::{Matrix, Vector};
pub use metric::{BilinearForm, CausalType, MetricAlgebra};
pub use scalar::{rat, Rational, RealScalar, Scalar};
pub use solver::{
    completeness_classify, find_special_directions, Completeness, CompletenessOptions,
    CompletenessReport, Component, DirectionKind, DirectionSurvey, SolverOptions,
    SpecialDirection,
};

/// Exact instantiations, used wherever a claim is certified exactly.
pub type ExactAlgebra = LieAlgebra<Rational>;
pub type ExactMatrix = Matrix<Rational>;
pub type ExactVector = Vector<Rational>;

/// Double-precision instantiations, used by integrators and solvers.
pub type FloatAlgebra = LieAlgebra<f64>;
pub type FloatMatrix = Matrix<f64>;
pub type FloatVector = Vector<f64>;
