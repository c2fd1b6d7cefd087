use serde::{Deserialize, Serialize};

use super::{cross, dot, norm, sub, Point};
use crate::error::{Error, Result};
use crate::jet::Jet2;

/// Counterclockwise simple polygon; edge `i` joins vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct SimplePolygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for SimplePolygon {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        SimplePolygon::new(v)
    }
}

impl From<SimplePolygon> for Vec<Point> {
    fn from(p: SimplePolygon) -> Self {
        p.vertices
    }
}

impl SimplePolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("polygon needs at least 3 vertices, got {n}")));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("non-finite polygon vertex".into()));
        }
        let scale = vertices.iter().flatten().fold(1.0f64, |m, c| m.max(c.abs()));
        for i in 0..n {
            if norm(sub(vertices[(i + 1) % n], vertices[i])) <= 1e-12 * scale {
                return Err(Error::Geometry(format!("vertex {i} is repeated")));
            }
        }
        let poly = SimplePolygon { vertices };
        if poly.signed_area() <= 0.0 {
            return Err(Error::Geometry("polygon vertices must be ordered counterclockwise".into()));
        }
        for i in 0..n {
            let a = poly.vertex(i as isize);
            let b = poly.vertex(i as isize + 1);
            let c = poly.vertex(i as isize + 2);
            if cross(sub(b, a), sub(c, b)).abs() <= 1e-12 * norm(sub(b, a)) * norm(sub(c, b)) {
                return Err(Error::Geometry(format!("vertex {} is degenerate (collinear edges)", (i + 1) % n)));
            }
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (p, q) = poly.edge(j);
                if segments_intersect(a, b, p, q) {
                    return Err(Error::Geometry(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertex with cyclic index.
    pub fn vertex(&self, i: isize) -> Point {
        let n = self.len() as isize;
        self.vertices[i.rem_euclid(n) as usize]
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertex(i as isize), self.vertex(i as isize + 1))
    }

    pub fn edge_length(&self, i: isize) -> f64 {
        let n = self.len() as isize;
        let (a, b) = self.edge(i.rem_euclid(n) as usize);
        norm(sub(b, a))
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n])).sum::<f64>() * 0.5
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len()).map(|i| self.edge_length(i as isize)).sum()
    }

    /// Interior angle at vertex `i` exceeds pi.
    pub fn is_reflex(&self, i: usize) -> bool {
        let a = self.vertex(i as isize - 1);
        let b = self.vertex(i as isize);
        let c = self.vertex(i as isize + 1);
        cross(sub(b, a), sub(c, b)) < 0.0
    }

    pub fn bbox(&self) -> [Point; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        [lo, hi]
    }

    /// Even-odd point containment.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance to the boundary, positive inside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min);
        if self.contains(p) {
            d
        } else {
            -d
        }
    }

    /// Whether any edge meets the closed axis-aligned box.
    pub fn crosses_box(&self, lo: Point, hi: Point) -> bool {
        (0..self.len()).any(|i| {
            let (a, b) = self.edge(i);
            clip_segment(a, b, lo, hi).is_some()
        })
    }

    /// Frames of all edges with default margins and box half-widths.
    pub fn frames(&self) -> Result<Vec<EdgeFrame>> {
        (0..self.len()).map(|i| EdgeFrame::new(self, i)).collect()
    }
}

/// Local edge coordinates `x = v + t alpha + n beta` with outward normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFrame {
    pub index: usize,
    pub origin: Point,
    pub tangent: Point,
    pub normal: Point,
    pub length: f64,
    /// Extension of the edge beyond each end (`delta s`).
    pub margin: f64,
    /// Half-width `D` of the edge's support box.
    pub halfwidth: f64,
}

impl EdgeFrame {
    pub fn new(poly: &SimplePolygon, i: usize) -> Result<Self> {
        let (a, b) = poly.edge(i);
        let l = norm(sub(b, a));
        let t = [(b[0] - a[0]) / l, (b[1] - a[1]) / l];
        let mut frame = EdgeFrame {
            index: i,
            origin: a,
            tangent: t,
            normal: [t[1], -t[0]],
            length: l,
            margin: 0.0,
            halfwidth: 0.0,
        };
        let ii = i as isize;
        let mut margin = 0.25 * poly.edge_length(ii - 1).min(l).min(poly.edge_length(ii + 1));
        let mut tries = 0;
        while !frame.extension_is_clear(poly, margin) {
            margin *= 0.5;
            tries += 1;
            if tries > 40 {
                return Err(Error::Geometry(format!("edge {i} cannot be extended")));
            }
        }
        frame.margin = margin;

        let cap = l;
        let d = if frame.box_is_clear(poly, cap) {
            cap
        } else {
            let (mut lo, mut hi) = (0.0, cap);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if frame.box_is_clear(poly, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.9 * lo
        };
        if d <= 1e-12 * l {
            return Err(Error::Geometry(format!("edge {i} admits no support box")));
        }
        frame.halfwidth = d;
        Ok(frame)
    }

    pub fn local(&self, p: Point) -> (f64, f64) {
        let d = sub(p, self.origin);
        (dot(self.tangent, d), dot(self.normal, d))
    }

    pub fn point(&self, alpha: f64, beta: f64) -> Point {
        [
            self.origin[0] + self.tangent[0] * alpha + self.normal[0] * beta,
            self.origin[1] + self.tangent[1] * alpha + self.normal[1] * beta,
        ]
    }

    /// `alpha` as a jet in `(x, y)`.
    pub fn alpha_jet(&self, p: Point) -> Jet2 {
        Jet2::affine(self.local(p).0, self.tangent[0], self.tangent[1])
    }

    /// `beta` as a jet in `(x, y)`.
    pub fn beta_jet(&self, p: Point) -> Jet2 {
        Jet2::affine(self.local(p).1, self.normal[0], self.normal[1])
    }

    /// Edge weight `omega = -beta`, positive on the inner side.
    pub fn weight_jet(&self, p: Point) -> Jet2 {
        -self.beta_jet(p)
    }

    fn extension_is_clear(&self, poly: &SimplePolygon, margin: f64) -> bool {
        let eps = 1e-9 * self.length;
        let pieces = [
            (self.point(-margin, 0.0), self.point(-eps, 0.0)),
            (self.point(self.length + eps, 0.0), self.point(self.length + margin, 0.0)),
        ];
        (0..poly.len()).filter(|&j| j != self.index).all(|j| {
            let (p, q) = poly.edge(j);
            pieces.iter().all(|&(a, b)| !segments_intersect(a, b, p, q))
        })
    }

    fn box_is_clear(&self, poly: &SimplePolygon, d: f64) -> bool {
        let n = poly.len();
        let lo = [-self.margin, -d];
        let hi = [self.length + self.margin, d];
        (0..n)
            .filter(|&j| j != self.index && j != (self.index + 1) % n && j != (self.index + n - 1) % n)
            .all(|j| {
                let (p, q) = poly.edge(j);
                let (pa, pb) = self.local(p);
                let (qa, qb) = self.local(q);
                clip_segment([pa, pb], [qa, qb], lo, hi).is_none()
            })
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 { (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Parameter interval `[t0, t1]` of the segment `a + t (b - a)` inside the closed box.
pub fn clip_segment(a: Point, b: Point, lo: Point, hi: Point) -> Option<(f64, f64)> {
    let d = sub(b, a);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        for (p, q) in [(-d[k], a[k] - lo[k]), (d[k], hi[k] - a[k])] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}
