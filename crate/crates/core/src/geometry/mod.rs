//! Implicit domain description: grids, polygons, weight functions and cell classification.

mod domain;
mod grid;
mod polygon;
mod weight;

pub use domain::{polygon_weight, rectangle, BoundaryCondition, CellClass, CellClasses, Circle, DomainSpec, Hole, Outer};
pub use grid::GridSpec;
pub use polygon::{clip_segment, point_segment_distance, segments_intersect, EdgeFrame, SimplePolygon};
pub use weight::Weight;

pub type Point = [f64; 2];

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}
