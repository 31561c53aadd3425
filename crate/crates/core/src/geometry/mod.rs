//! Bernstein curves, convex hulls and Legendre-Gauss-Lobatto quadrature.

pub mod bernstein;
pub mod hull;
pub mod lgl;

pub use bernstein::{bernstein_basis, BernsteinCurve};
pub use hull::{convex_hull, hull_clearance, point_segment_distance, Circle, ConvexHull};
pub use lgl::{
    bernstein_to_interpolation, interpolation_to_bernstein, lgl_quadrature, lgl_rule, LglRule,
};

pub type Point2 = nalgebra::Vector2<f64>;
