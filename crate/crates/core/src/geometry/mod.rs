//! Rays, sampled scalar fields and level sets of the measures inside the
//! tetrahedron.

mod contour;
mod field;
mod isosurface;
mod ray;

pub use contour::{contour_slice, radial_crossings, Polyline};
pub use field::{sample_field, sample_field_with, sample_slice, Bounds, ScalarField2, ScalarField3};
pub use isosurface::{isosurface, IsosurfaceMesh};
pub use ray::{
    cre_first_derivative, cre_second_derivative, geo_discord_ray_piecewise, max_extent,
    ray_monotonicity_report, ray_states, Ray, RayFamily, RayMonotonicityReport,
};

use thiserror::Error;

/// Default isosurface grid: 81 nodes per axis.
pub const DEFAULT_VOLUME_DIMS: usize = 81;

/// Default contour-slice grid: 201 nodes per axis.
pub const DEFAULT_SLICE_DIMS: usize = 201;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ray direction must be a non-zero finite vector")]
    DegenerateRay,
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("point (c1, m·c1, 0) with m = {m}, c1 = {c1} is not strictly inside the tetrahedron")]
    OutsideDomain { m: f64, c1: f64 },
    #[error("ray family {0} has no piecewise geometric-discord form")]
    WrongFamily(String),
    #[error("grid needs at least 2 nodes per axis, got {0:?}")]
    InvalidDims(Vec<usize>),
    #[error("empty bounds: {0}")]
    InvalidBounds(String),
    #[error("level {level} yields no level set (valid values span [{min}, {max}])")]
    EmptyLevelSet { level: f64, min: f64, max: f64 },
}
