//! Quadrature on interior cells, cut cells, straight segments and circles.
//!
//! Cut cells are integrated by line sections: along one axis the cell is split at
//! every coordinate where the shape of the domain's cross-section changes
//! (vertices, circle extremes, boundary crossings of the cell sides), and on each
//! piece a Gauss rule in that axis is combined with Gauss rules on the exact
//! inside-intervals of every section line.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CellClass, CellClasses, Circle, DomainSpec, GridSpec, Point};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauss {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Gauss {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p0 = 1.0;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                x = 0.0;
                dp = 1.0;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n == 1 {
            weights[0] = 2.0;
        }
        Gauss { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + r * x, r * w))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    fn push_box(&mut self, g: &Gauss, lo: Point, hi: Point) {
        for (x, wx) in g.mapped(lo[0], hi[0]) {
            for (y, wy) in g.mapped(lo[1], hi[1]) {
                self.points.push([x, y]);
                self.weights.push(wx * wy);
            }
        }
    }
}

/// Quadrature along a curve with unit tangents at the nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub tangents: Vec<Point>,
}

impl SegmentRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Tensor Gauss rule with `order` points per axis on cell `(cx, cy)`.
pub fn interior_cell_rule(grid: &GridSpec, cx: usize, cy: usize, order: usize) -> QuadratureRule {
    let lo = grid.cell_lo(cx, cy);
    let mut rule = QuadratureRule::default();
    rule.push_box(&Gauss::new(order), lo, [lo[0] + grid.h, lo[1] + grid.h]);
    rule
}

/// Rule for the part of cell `(cx, cy)` inside the domain.
pub fn cut_cell_rule(
    grid: &GridSpec,
    cx: usize,
    cy: usize,
    domain: &DomainSpec,
    order: usize,
    max_depth: usize,
) -> QuadratureRule {
    let g = Gauss::new(order);
    let lo = grid.cell_lo(cx, cy);
    let mut rule = QuadratureRule::default();
    cut_box(&g, domain, lo, [lo[0] + grid.h, lo[1] + grid.h], 0, max_depth, 1e-12 * grid.h, &mut rule);
    rule
}

/// A circle extreme along `axis` near the box makes the chord endpoints behave
/// like a square root across the section lines; "near" means within one box width.
fn tangent_inside(c: &Circle, axis: usize, lo: Point, hi: Point) -> bool {
    let other = 1 - axis;
    let (wa, wo) = (hi[axis] - lo[axis], hi[other] - lo[other]);
    [c.center[axis] - c.radius, c.center[axis] + c.radius].iter().any(|&t| {
        t >= lo[axis] - wa && t <= hi[axis] + wa && c.center[other] >= lo[other] - wo && c.center[other] <= hi[other] + wo
    })
}

#[allow(clippy::too_many_arguments)]
fn cut_box(
    g: &Gauss,
    domain: &DomainSpec,
    lo: Point,
    hi: Point,
    depth: usize,
    max_depth: usize,
    tol: f64,
    rule: &mut QuadratureRule,
) {
    match domain.classify_box(lo, hi, tol) {
        CellClass::Exterior => return,
        CellClass::Interior => return rule.push_box(g, lo, hi),
        CellClass::Boundary => {}
    }
    let n = domain.nearest_normal([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]);
    let preferred = if n[1].abs() >= n[0].abs() { 0 } else { 1 };
    let bad = |axis: usize| domain.circles().any(|c| tangent_inside(c, axis, lo, hi));
    let axis = if !bad(preferred) {
        preferred
    } else if !bad(1 - preferred) {
        1 - preferred
    } else if depth < max_depth {
        let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        for (a, b) in [
            (lo, mid),
            ([mid[0], lo[1]], [hi[0], mid[1]]),
            ([lo[0], mid[1]], [mid[0], hi[1]]),
            (mid, hi),
        ] {
            cut_box(g, domain, a, b, depth + 1, max_depth, tol, rule);
        }
        return;
    } else {
        preferred
    };
    line_sections(g, domain, axis, lo, hi, rule);
}

fn line_sections(g: &Gauss, domain: &DomainSpec, axis: usize, lo: Point, hi: Point, rule: &mut QuadratureRule) {
    let other = 1 - axis;
    let mut cuts = vec![lo[axis]];
    cuts.extend(domain.breakpoints(axis, lo[axis], hi[axis], lo[other], hi[other]));
    cuts.push(hi[axis]);
    for piece in cuts.windows(2) {
        for (c, wc) in g.mapped(piece[0], piece[1]) {
            for (a, b) in domain.section(axis, c, lo[other], hi[other]) {
                for (u, wu) in g.mapped(a, b) {
                    let mut p = [0.0; 2];
                    p[axis] = c;
                    p[other] = u;
                    rule.points.push(p);
                    rule.weights.push(wc * wu);
                }
            }
        }
    }
}

/// Rules for every non-exterior cell, in row-major cell order.
#[derive(Debug, Clone, Default)]
pub struct CellRules {
    pub cells: Vec<(usize, usize)>,
    pub rules: Vec<QuadratureRule>,
}

impl CellRules {
    pub fn build(grid: &GridSpec, classes: &CellClasses, domain: &DomainSpec, order: usize, depth: usize) -> Self {
        let active: Vec<(usize, usize, CellClass)> = classes.active().collect();
        let rules = active
            .par_iter()
            .map(|&(cx, cy, class)| match class {
                CellClass::Interior => interior_cell_rule(grid, cx, cy, order),
                _ => cut_cell_rule(grid, cx, cy, domain, order, depth),
            })
            .collect();
        CellRules { cells: active.iter().map(|&(x, y, _)| (x, y)).collect(), rules }
    }

    pub fn total_weight(&self) -> f64 {
        self.rules.iter().map(|r| r.total_weight()).sum()
    }
}

/// Gauss rule on the straight segment `a -> b`, split at every grid line.
pub fn segment_rule(a: Point, b: Point, grid: &GridSpec, order: usize) -> Result<SegmentRule> {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    if !(len > 0.0) {
        return Err(Error::ZeroLengthSegment);
    }
    let mut ts = vec![0.0, 1.0];
    for k in 0..2 {
        if d[k] == 0.0 {
            continue;
        }
        let (s0, s1) = (a[k].min(b[k]), a[k].max(b[k]));
        let first = ((s0 - grid.origin[k]) / grid.h).ceil() as i64;
        let last = ((s1 - grid.origin[k]) / grid.h).floor() as i64;
        for m in first..=last {
            let line = grid.origin[k] + m as f64 * grid.h;
            let t = (line - a[k]) / d[k];
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let g = Gauss::new(order);
    let tangent = [d[0] / len, d[1] / len];
    let mut rule = SegmentRule::default();
    for w in ts.windows(2) {
        for (t, wt) in g.mapped(w[0], w[1]) {
            rule.points.push([a[0] + t * d[0], a[1] + t * d[1]]);
            rule.weights.push(wt * len);
            rule.tangents.push(tangent);
        }
    }
    Ok(rule)
}

/// Counterclockwise Gauss rule on a full circle, split at every grid line.
pub fn arc_rule(circle: &Circle, grid: &GridSpec, order: usize) -> Result<SegmentRule> {
    let (c, r) = (circle.center, circle.radius);
    let tau = std::f64::consts::TAU;
    let mut ts = vec![0.0, tau];
    for k in 0..2 {
        let first = ((c[k] - r - grid.origin[k]) / grid.h).ceil() as i64;
        let last = ((c[k] + r - grid.origin[k]) / grid.h).floor() as i64;
        for m in first..=last {
            let q = ((grid.origin[k] + m as f64 * grid.h - c[k]) / r).clamp(-1.0, 1.0);
            let base = if k == 0 { q.acos() } else { q.asin() };
            let alt = if k == 0 { -base } else { std::f64::consts::PI - base };
            for t in [base, alt] {
                ts.push(t.rem_euclid(tau));
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let g = Gauss::new(order);
    let mut rule = SegmentRule::default();
    for w in ts.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        for (t, wt) in g.mapped(w[0], w[1]) {
            let (s, co) = t.sin_cos();
            rule.points.push([c[0] + r * co, c[1] + r * s]);
            rule.weights.push(wt * r);
            rule.tangents.push([-s, co]);
        }
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryCondition, Hole, Outer, SimplePolygon};

    fn annulus() -> DomainSpec {
        DomainSpec::new(
            Outer::Circle(Circle::new([0.0, 0.0], 1.5432).unwrap()),
            BoundaryCondition::Clamped,
            vec![Hole { circle: Circle::new([0.0, 0.0], 0.5345).unwrap(), bc: BoundaryCondition::Free }],
        )
        .unwrap()
    }

    #[test]
    fn gauss_rules_are_exact() {
        for n in 1..=12 {
            let g = Gauss::new(n);
            for k in 0..2 * n {
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                let q: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - exact).abs() < 1e-14, "n={n} k={k}");
            }
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn interior_rule_integrates_polynomials() {
        let grid = GridSpec::new([0.0, 0.0], 1.0, 1, 1).unwrap();
        let r = interior_cell_rule(&grid, 0, 0, 2);
        assert!((r.total_weight() - 1.0).abs() < 1e-15);
        assert!((r.integrate(|p| p[0] * p[0] * p[1] * p[1]) - 1.0 / 9.0).abs() < 1e-14);
        let p = 3;
        let r = interior_cell_rule(&grid, 0, 0, p + 2);
        let deg = 2 * p + 2;
        let q = r.integrate(|x| x[0].powi(deg as i32) * x[1].powi(deg as i32));
        let exact = 1.0 / ((deg + 1) as f64).powi(2);
        assert!((q - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn half_cell_area() {
        let poly = SimplePolygon::new(vec![[-1.0, -1.0], [0.5, -1.0], [0.5, 2.0], [-1.0, 2.0]]).unwrap();
        let dom = DomainSpec::new(Outer::Polygon(poly), BoundaryCondition::Clamped, vec![]).unwrap();
        let grid = GridSpec::new([0.0, 0.0], 1.0, 1, 1).unwrap();
        let r = cut_cell_rule(&grid, 0, 0, &dom, 3, 6);
        assert!((r.total_weight() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn annulus_area() {
        let dom = annulus();
        let grid = GridSpec::covering(dom.bbox(), 0.2, 3).unwrap();
        let cls = dom.classify_cells(&grid);
        let rules = CellRules::build(&grid, &cls, &dom, 4, 6);
        let exact = std::f64::consts::PI * (1.5432f64.powi(2) - 0.5345f64.powi(2));
        assert!((rules.total_weight() - exact).abs() < 1e-5 * exact);
        assert!(rules.rules.iter().all(|r| r.weights.iter().all(|&w| w >= 0.0)));
    }

    #[test]
    fn small_hole_inside_one_cell() {
        let poly = SimplePolygon::new(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let hole = Hole { circle: Circle::new([0.31, 0.27], 0.1).unwrap(), bc: BoundaryCondition::Free };
        let dom = DomainSpec::new(Outer::Polygon(poly), BoundaryCondition::Clamped, vec![hole]).unwrap();
        let grid = GridSpec::covering(dom.bbox(), 0.5, 2).unwrap();
        let cls = dom.classify_cells(&grid);
        let rules = CellRules::build(&grid, &cls, &dom, 6, 6);
        let (q, a) = (rules.total_weight(), dom.area());
        assert!((q - a).abs() < 1e-7, "{q} vs {a}");
    }

    #[test]
    fn exterior_subcells_contribute_nothing() {
        let dom = annulus();
        let grid = GridSpec::new([3.0, 3.0], 0.5, 1, 1).unwrap();
        assert!(cut_cell_rule(&grid, 0, 0, &dom, 4, 6).is_empty());
    }

    #[test]
    fn segment_and_arc_lengths() {
        let grid = GridSpec::new([-3.0, -3.0], 0.1, 60, 60).unwrap();
        let s = segment_rule([-2.5, 0.0], [2.5, 0.0], &grid, 4).unwrap();
        assert!((s.total_weight() - 5.0).abs() < 1e-12);
        let c = arc_rule(&Circle::new([0.03, -0.02], 1.3).unwrap(), &grid, 4).unwrap();
        assert!((c.total_weight() - std::f64::consts::TAU * 1.3).abs() < 1e-10);
        assert!(segment_rule([1.0, 1.0], [1.0, 1.0], &grid, 3).is_err());
    }

    #[test]
    fn segment_pieces_follow_grid_lines() {
        let grid = GridSpec::new([0.0, 0.0], 0.25, 8, 8).unwrap();
        let s = segment_rule([0.1, 0.1], [1.9, 1.3], &grid, 3).unwrap();
        // 7 vertical and 5 horizontal crossings give 13 pieces
        assert_eq!(s.points.len(), 13 * 3);
    }
}
