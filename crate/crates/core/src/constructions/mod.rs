//! Explicit geometric constructions: suspensions, loop perturbation and
//! pull-off fillings, embedded leaves and horosphere products, flat
//! spheres, and transport of sphere maps along quasi-isometries.

mod product;
mod pulloff;
mod suspension;
mod transport;

pub use product::{
    diagonal_axes, embed_y_point, embed_z_point, factor_horo_coords, flat_point, flat_sphere, horizontal_dim,
    leaf_coordinate, nonconvexity_gap, supports_leaves, y_coordinates, y_intrinsic_dist, y_path, LeafParam, YCoords,
    YPath,
};
pub use pulloff::{
    perturb_loop, polyline_length, pulloff_filling, pulloff_filling_with, PerturbCase, PerturbedLoop,
    PulloffFilling, PULLOFF_STAGE_LAYERS,
};
pub use suspension::{suspend, suspend_with, SUSPENSION_SEGMENTS};
pub use transport::{straighten_map, transport_sphere, QIMap, StraightenedMap, TransportReport};
