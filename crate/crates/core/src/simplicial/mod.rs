//! Simplicial complexes and piecewise-geodesic maps into model spaces.

mod complex;
mod map;

pub use complex::{
    layered_cone, suspension_complex, triangulate_ball, triangulate_cylinder, triangulate_polygon, triangulate_sphere, ComplexKind, SimplicialComplex,
    BALL_LAYERS,
};
pub(crate) use map::{eval_cone, pairwise_sum, simplex_volume_of};
pub use map::{quadrature_nodes, AdmissibilityReport, ManifoldMap, Role, VolumeReport, FD_STEP, FILLING_TOL, SPHERE_TOL};
