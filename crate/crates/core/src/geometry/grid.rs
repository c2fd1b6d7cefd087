use super::Point;
use crate::error::{Error, Result};
use crate::spline::SplineSpec;

/// Uniform Cartesian grid of square cells; cell `(cx, cy)` has lower-left corner
/// `origin + h (cx, cy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: Point, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Geometry(format!("cell size must be positive, got {h}")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::Geometry("grid needs at least one cell per axis".into()));
        }
        Ok(GridSpec { origin, h, nx, ny })
    }

    /// Grid aligned to multiples of `h` that contains `bbox` plus `degree + 1`
    /// cells of margin on every side.
    pub fn covering(bbox: [Point; 2], h: f64, degree: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Geometry(format!("cell size must be positive, got {h}")));
        }
        let m = degree as i64 + 1;
        let lo: Vec<i64> = (0..2).map(|d| (bbox[0][d] / h).floor() as i64 - m).collect();
        let hi: Vec<i64> = (0..2).map(|d| (bbox[1][d] / h).ceil() as i64 + m).collect();
        GridSpec::new([lo[0] as f64 * h, lo[1] as f64 * h], h, (hi[0] - lo[0]) as usize, (hi[1] - lo[1]) as usize)
    }

    pub fn cell_lo(&self, cx: usize, cy: usize) -> Point {
        [self.origin[0] + cx as f64 * self.h, self.origin[1] + cy as f64 * self.h]
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> Point {
        [self.origin[0] + (cx as f64 + 0.5) * self.h, self.origin[1] + (cy as f64 + 0.5) * self.h]
    }

    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin[0]) / self.h).floor();
        let fy = ((p[1] - self.origin[1]) / self.h).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// 1D spline specs whose knot 0 is the grid origin.
    pub fn splines(&self, degree: usize) -> Result<(SplineSpec, SplineSpec)> {
        Ok((SplineSpec::new(degree, self.h, self.origin[0])?, SplineSpec::new(degree, self.h, self.origin[1])?))
    }

    /// Number of B-spline indices per axis whose supports lie inside the grid.
    pub fn index_dims(&self, degree: usize) -> (usize, usize) {
        (self.nx.saturating_sub(degree), self.ny.saturating_sub(degree))
    }

    pub fn upper(&self) -> Point {
        [self.origin[0] + self.nx as f64 * self.h, self.origin[1] + self.ny as f64 * self.h]
    }
}
