use serde::{Deserialize, Serialize};

use super::polygon::SimplePolygon;
use super::{norm, sub, GridSpec, Point, Weight};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Clamped,
    SimplySupported,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry(format!("invalid circle radius {radius}")));
        }
        Ok(Circle { center, radius })
    }

    fn dist(&self, p: Point) -> f64 {
        norm(sub(p, self.center))
    }

    fn crosses_box(&self, lo: Point, hi: Point) -> bool {
        let dmin = norm([
            (self.center[0].clamp(lo[0], hi[0]) - self.center[0]),
            (self.center[1].clamp(lo[1], hi[1]) - self.center[1]),
        ]);
        let far = [
            (lo[0] - self.center[0]).abs().max((hi[0] - self.center[0]).abs()),
            (lo[1] - self.center[1]).abs().max((hi[1] - self.center[1]).abs()),
        ];
        dmin < self.radius && self.radius < norm(far)
    }

    /// Chord of the line `x[axis] = c`, as an interval of the other coordinate.
    fn chord(&self, axis: usize, c: f64) -> Option<(f64, f64)> {
        let d = c - self.center[axis];
        let r2 = self.radius * self.radius - d * d;
        (r2 > 0.0).then(|| {
            let s = r2.sqrt();
            (self.center[1 - axis] - s, self.center[1 - axis] + s)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outer {
    Circle(Circle),
    Polygon(SimplePolygon),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hole {
    pub circle: Circle,
    pub bc: BoundaryCondition,
}

/// Outer boundary, circular holes and their boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub outer: Outer,
    pub outer_bc: BoundaryCondition,
    pub holes: Vec<Hole>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellClasses {
    pub nx: usize,
    pub ny: usize,
    classes: Vec<CellClass>,
}

impl CellClasses {
    pub fn get(&self, cx: usize, cy: usize) -> CellClass {
        self.classes[cy * self.nx + cx]
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Non-exterior cells in row-major order.
    pub fn active(&self) -> impl Iterator<Item = (usize, usize, CellClass)> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != CellClass::Exterior)
            .map(|(k, &c)| (k % self.nx, k / self.nx, c))
    }
}

/// Rectangle `[-a/2, a/2] x [-b/2, b/2]` rotated by `angle` about `center`.
pub fn rectangle(center: Point, a: f64, b: f64, angle: f64) -> Result<SimplePolygon> {
    let (s, c) = angle.sin_cos();
    let corners = [[-a / 2.0, -b / 2.0], [a / 2.0, -b / 2.0], [a / 2.0, b / 2.0], [-a / 2.0, b / 2.0]];
    SimplePolygon::new(
        corners.iter().map(|p| [center[0] + c * p[0] - s * p[1], center[1] + s * p[0] + c * p[1]]).collect(),
    )
}

/// Product of edge weights; each reflex vertex uses the R-disjunction of its two edges.
pub fn polygon_weight(poly: &SimplePolygon) -> Result<Weight> {
    let n = poly.len();
    let reflex: Vec<bool> = (0..n).map(|i| poly.is_reflex(i)).collect();
    if (0..n).any(|i| reflex[i] && reflex[(i + 1) % n]) {
        return Err(Error::Geometry("adjacent reflex vertices are not supported by the weight construction".into()));
    }
    let edge = |i: usize| -> Weight {
        let (a, b) = poly.edge(i);
        let l = norm(sub(b, a));
        Weight::HalfPlane { point: a, normal: [(b[1] - a[1]) / l, -(b[0] - a[0]) / l] }
    };
    let mut factors = Vec::new();
    let mut used = vec![false; n];
    for i in 0..n {
        if reflex[i] {
            let prev = (i + n - 1) % n;
            used[prev] = true;
            used[i] = true;
            factors.push(Weight::union(edge(prev), edge(i)));
        }
    }
    factors.extend((0..n).filter(|&i| !used[i]).map(edge));
    Ok(Weight::Product(factors))
}

impl DomainSpec {
    pub fn new(outer: Outer, outer_bc: BoundaryCondition, holes: Vec<Hole>) -> Result<Self> {
        let dom = DomainSpec { outer, outer_bc, holes };
        for (k, h) in dom.holes.iter().enumerate() {
            if dom.outer_distance(h.circle.center) <= h.circle.radius {
                return Err(Error::Geometry(format!("hole {k} is not strictly inside the outer boundary")));
            }
            for (m, g) in dom.holes.iter().enumerate().skip(k + 1) {
                if h.circle.dist(g.circle.center) <= h.circle.radius + g.circle.radius {
                    return Err(Error::Geometry(format!("holes {k} and {m} overlap")));
                }
            }
        }
        Ok(dom)
    }

    /// Number of boundary components (outer first, then holes).
    pub fn boundary_count(&self) -> usize {
        1 + self.holes.len()
    }

    /// Signed distance to the outer boundary, positive inside.
    pub fn outer_distance(&self, p: Point) -> f64 {
        match &self.outer {
            Outer::Circle(c) => c.radius - c.dist(p),
            Outer::Polygon(poly) => poly.signed_distance(p),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let in_outer = match &self.outer {
            Outer::Circle(c) => c.dist(p) < c.radius,
            Outer::Polygon(poly) => poly.contains(p),
        };
        in_outer && self.holes.iter().all(|h| h.circle.dist(p) > h.circle.radius)
    }

    /// Minimum of the signed distances to all boundary components.
    pub fn level(&self, p: Point) -> f64 {
        self.holes.iter().map(|h| h.circle.dist(p) - h.circle.radius).fold(self.outer_distance(p), f64::min)
    }

    pub fn bbox(&self) -> [Point; 2] {
        match &self.outer {
            Outer::Circle(c) => [
                [c.center[0] - c.radius, c.center[1] - c.radius],
                [c.center[0] + c.radius, c.center[1] + c.radius],
            ],
            Outer::Polygon(p) => p.bbox(),
        }
    }

    pub fn area(&self) -> f64 {
        let outer = match &self.outer {
            Outer::Circle(c) => std::f64::consts::PI * c.radius * c.radius,
            Outer::Polygon(p) => p.signed_area(),
        };
        outer - self.holes.iter().map(|h| std::f64::consts::PI * h.circle.radius.powi(2)).sum::<f64>()
    }

    pub(crate) fn outer_factor(&self) -> Result<Weight> {
        match &self.outer {
            Outer::Circle(c) => Ok(Weight::Disk { center: c.center, radius: c.radius }),
            Outer::Polygon(p) => polygon_weight(p),
        }
    }

    /// Plate weight: squared factors on clamped parts, plain on simply supported, none on free.
    pub fn plate_weight(&self) -> Result<Weight> {
        let mut factors = Vec::new();
        let mut push = |w: Weight, bc: BoundaryCondition| match bc {
            BoundaryCondition::Clamped => factors.push(w.square()),
            BoundaryCondition::SimplySupported => factors.push(w),
            BoundaryCondition::Free => {}
        };
        push(self.outer_factor()?, self.outer_bc);
        for h in &self.holes {
            push(Weight::DiskComplement { center: h.circle.center, radius: h.circle.radius }, h.bc);
        }
        Ok(if factors.is_empty() { Weight::Constant(1.0) } else { Weight::Product(factors) })
    }

    /// Weight with value and gradient vanishing on every boundary component.
    pub fn clamped_weight(&self) -> Result<Weight> {
        let mut factors = vec![self.outer_factor()?.square()];
        factors.extend(
            self.holes
                .iter()
                .map(|h| Weight::DiskComplement { center: h.circle.center, radius: h.circle.radius }.square()),
        );
        Ok(Weight::Product(factors))
    }

    fn crosses_box(&self, lo: Point, hi: Point) -> bool {
        let outer = match &self.outer {
            Outer::Circle(c) => c.crosses_box(lo, hi),
            Outer::Polygon(p) => p.crosses_box(lo, hi),
        };
        outer || self.holes.iter().any(|h| h.circle.crosses_box(lo, hi))
    }

    /// Box classification with a relative shrink of `tol` applied to each side.
    pub fn classify_box(&self, lo: Point, hi: Point, tol: f64) -> CellClass {
        let lo_s = [lo[0] + tol, lo[1] + tol];
        let hi_s = [hi[0] - tol, hi[1] - tol];
        if self.crosses_box(lo_s, hi_s) {
            CellClass::Boundary
        } else if self.contains([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]) {
            CellClass::Interior
        } else {
            CellClass::Exterior
        }
    }

    pub fn classify_cells(&self, grid: &GridSpec) -> CellClasses {
        let tol = 1e-12 * grid.h;
        let mut classes = Vec::with_capacity(grid.cell_count());
        for cy in 0..grid.ny {
            for cx in 0..grid.nx {
                let lo = grid.cell_lo(cx, cy);
                classes.push(self.classify_box(lo, [lo[0] + grid.h, lo[1] + grid.h], tol));
            }
        }
        CellClasses { nx: grid.nx, ny: grid.ny, classes }
    }

    pub fn circles(&self) -> impl Iterator<Item = &Circle> {
        let outer = match &self.outer {
            Outer::Circle(c) => Some(c),
            Outer::Polygon(_) => None,
        };
        outer.into_iter().chain(self.holes.iter().map(|h| &h.circle))
    }

    /// Parts of the line `x[axis] = c` inside the domain, restricted to `[lo, hi]`
    /// of the other coordinate.
    pub fn section(&self, axis: usize, c: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let other = 1 - axis;
        let mut inside: Vec<(f64, f64)> = match &self.outer {
            Outer::Circle(circ) => circ.chord(axis, c).into_iter().collect(),
            Outer::Polygon(poly) => {
                let mut cuts = Vec::new();
                for i in 0..poly.len() {
                    let (a, b) = poly.edge(i);
                    if (a[axis] > c) != (b[axis] > c) {
                        cuts.push(a[other] + (c - a[axis]) * (b[other] - a[other]) / (b[axis] - a[axis]));
                    }
                }
                cuts.sort_by(f64::total_cmp);
                cuts.chunks_exact(2).map(|w| (w[0], w[1])).collect()
            }
        };
        for h in &self.holes {
            if let Some((a, b)) = h.circle.chord(axis, c) {
                inside = subtract(&inside, a, b);
            }
        }
        inside
            .into_iter()
            .filter_map(|(a, b)| {
                let (a, b) = (a.max(lo), b.min(hi));
                (b > a).then_some((a, b))
            })
            .collect()
    }

    /// Coordinates along `axis` inside `(lo, hi)` where the sections along the
    /// other axis change form within the strip `[side_lo, side_hi]`.
    pub fn breakpoints(&self, axis: usize, lo: f64, hi: f64, side_lo: f64, side_hi: f64) -> Vec<f64> {
        let other = 1 - axis;
        let mut pts = Vec::new();
        let circle_points = |circ: &Circle, pts: &mut Vec<f64>| {
            pts.push(circ.center[axis] - circ.radius);
            pts.push(circ.center[axis] + circ.radius);
            for level in [side_lo, side_hi] {
                if let Some((a, b)) = circ.chord(other, level) {
                    pts.push(a);
                    pts.push(b);
                }
            }
        };
        match &self.outer {
            Outer::Circle(c) => circle_points(c, &mut pts),
            Outer::Polygon(poly) => {
                for i in 0..poly.len() {
                    let (a, b) = poly.edge(i);
                    pts.push(a[axis]);
                    for level in [side_lo, side_hi] {
                        if (a[other] > level) != (b[other] > level) {
                            pts.push(a[axis] + (level - a[other]) * (b[axis] - a[axis]) / (b[other] - a[other]));
                        }
                    }
                }
            }
        }
        for h in &self.holes {
            circle_points(&h.circle, &mut pts);
        }
        let eps = 1e-13 * (hi - lo);
        let mut out: Vec<f64> = pts.into_iter().filter(|&x| x > lo + eps && x < hi - eps).collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= eps);
        out
    }

    /// Outward normal of the boundary component closest to `p`.
    pub fn nearest_normal(&self, p: Point) -> Point {
        let mut best = (f64::INFINITY, [1.0, 0.0]);
        let radial = |c: &Circle| {
            let d = sub(p, c.center);
            let r = norm(d);
            if r > 0.0 {
                [d[0] / r, d[1] / r]
            } else {
                [1.0, 0.0]
            }
        };
        match &self.outer {
            Outer::Circle(c) => best = ((c.radius - c.dist(p)).abs(), radial(c)),
            Outer::Polygon(poly) => {
                for i in 0..poly.len() {
                    let (a, b) = poly.edge(i);
                    let d = super::polygon::point_segment_distance(p, a, b);
                    if d < best.0 {
                        let l = norm(sub(b, a));
                        best = (d, [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]);
                    }
                }
            }
        }
        for h in &self.holes {
            let d = (h.circle.dist(p) - h.circle.radius).abs();
            if d < best.0 {
                let r = radial(&h.circle);
                best = (d, [-r[0], -r[1]]);
            }
        }
        best.1
    }

    /// Whether a straight segment stays inside the closed domain.
    pub fn contains_segment(&self, a: Point, b: Point) -> bool {
        let l = norm(sub(b, a));
        let tol = 1e-9 * l.max(1.0);
        (0..=64).all(|k| {
            let t = k as f64 / 64.0;
            self.level([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]) >= -tol
        }) && match &self.outer {
            Outer::Polygon(poly) => (0..poly.len()).all(|i| {
                let (p, q) = poly.edge(i);
                !proper_crossing(a, b, p, q)
            }),
            Outer::Circle(_) => true,
        }
    }
}

fn proper_crossing(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o = |p: Point, q: Point, r: Point| super::cross(sub(q, p), sub(r, p));
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn subtract(intervals: &[(f64, f64)], a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(intervals.len() + 1);
    for &(lo, hi) in intervals {
        if b <= lo || a >= hi {
            out.push((lo, hi));
            continue;
        }
        if a > lo {
            out.push((lo, a));
        }
        if b < hi {
            out.push((b, hi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus(a: f64, b: f64) -> DomainSpec {
        DomainSpec::new(
            Outer::Circle(Circle::new([0.0, 0.0], b).unwrap()),
            BoundaryCondition::Clamped,
            vec![Hole { circle: Circle::new([0.0, 0.0], a).unwrap(), bc: BoundaryCondition::Free }],
        )
        .unwrap()
    }

    fn sampled_class(dom: &DomainSpec, lo: Point, h: f64, n: usize) -> CellClass {
        let mut inside = 0;
        for i in 0..n {
            for j in 0..n {
                let p = [lo[0] + (i as f64 + 0.5) * h / n as f64, lo[1] + (j as f64 + 0.5) * h / n as f64];
                if dom.contains(p) {
                    inside += 1;
                }
            }
        }
        match inside {
            0 => CellClass::Exterior,
            k if k == n * n => CellClass::Interior,
            _ => CellClass::Boundary,
        }
    }

    #[test]
    fn rectangle_covering_cells_exactly() {
        let poly = SimplePolygon::new(vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]]).unwrap();
        let dom = DomainSpec::new(Outer::Polygon(poly), BoundaryCondition::Clamped, vec![]).unwrap();
        let grid = GridSpec::new([-1.0, -1.0], 1.0, 6, 6).unwrap();
        let cls = dom.classify_cells(&grid);
        assert_eq!(cls.count(CellClass::Interior), 16);
        assert_eq!(cls.count(CellClass::Boundary), 0);
        assert_eq!(cls.count(CellClass::Exterior), 20);
    }

    #[test]
    fn unit_circle_on_four_cells() {
        let dom = DomainSpec::new(
            Outer::Circle(Circle::new([0.0, 0.0], 1.0).unwrap()),
            BoundaryCondition::Clamped,
            vec![],
        )
        .unwrap();
        let grid = GridSpec::new([-1.0, -1.0], 1.0, 2, 2).unwrap();
        assert_eq!(dom.classify_cells(&grid).count(CellClass::Boundary), 4);
    }

    #[test]
    fn annulus_classification_matches_sampling_oracle() {
        let dom = annulus(0.5345, 1.5432);
        let grid = GridSpec::covering(dom.bbox(), 0.2, 3).unwrap();
        let cls = dom.classify_cells(&grid);
        for cy in 0..grid.ny {
            for cx in 0..grid.nx {
                let oracle = sampled_class(&dom, grid.cell_lo(cx, cy), grid.h, 100);
                assert_eq!(cls.get(cx, cy), oracle, "cell ({cx}, {cy})");
            }
        }
    }

    #[test]
    fn polygon_weights_positive_inside() {
        for v0 in [[2.0, -4.0], [0.5, 0.0]] {
            let poly = SimplePolygon::new(vec![v0, [5.0, 3.0], [3.0, 8.0], [-3.5, 6.0], [-5.0, -8.0]]).unwrap();
            let w = polygon_weight(&poly).unwrap();
            for i in 0..100 {
                for j in 0..160 {
                    let p = [-5.0 + 0.1 * i as f64 + 0.013, -8.0 + 0.1 * j as f64 + 0.007];
                    if poly.contains(p) {
                        assert!(w.value(p) > 0.0, "{p:?}");
                    }
                }
            }
            for e in 0..5 {
                let (a, b) = poly.edge(e);
                for k in 1..20 {
                    let t = k as f64 / 20.0;
                    let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    assert!(w.value(p).abs() < 1e-10 * (1.0 + w.value([0.0, 2.0]).abs()));
                }
            }
        }
    }

    #[test]
    fn sections_of_annulus() {
        let dom = annulus(0.5, 1.0);
        let s = dom.section(0, 0.0, -2.0, 2.0);
        assert_eq!(s.len(), 2);
        assert!((s[0].0 + 1.0).abs() < 1e-15 && (s[0].1 + 0.5).abs() < 1e-15);
        assert!(dom.section(0, 1.5, -2.0, 2.0).is_empty());
    }

    #[test]
    fn rotated_rectangle_classification_is_equivariant() {
        let phi = 10f64.to_radians();
        let poly = rectangle([0.0, 0.0], 5.0, 1.0, phi).unwrap();
        let straight = rectangle([0.0, 0.0], 5.0, 1.0, 0.0).unwrap();
        let (s, c) = phi.sin_cos();
        for i in 0..60 {
            for j in 0..30 {
                let p = [-3.0 + 0.1 * i as f64 + 0.003, -1.5 + 0.1 * j as f64 + 0.001];
                let q = [c * p[0] + s * p[1], -s * p[0] + c * p[1]];
                assert_eq!(poly.contains(p), straight.contains(q));
            }
        }
    }
}
