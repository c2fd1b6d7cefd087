//! Pre-buckling plane stress through an Airy stress function.
//!
//! Each boundary carries a traction. The stress function is assembled from
//! biharmonic subproblems (integrated traction data on one boundary, or one of
//! `1, x, y` on one boundary, zero data elsewhere), each solved by lifting the
//! boundary data and solving for a clamped correction. The affine integration
//! constants per boundary minimise `int (Laplace Phi)^2` subject to zero mean
//! of `Phi` and its gradient.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::{assemble_vectors, plate_form, Discretization, QuadSettings, StressField};
use crate::error::{Error, Result};
use crate::extension::{build_biharmonic_extension, EdgeData, EdgeFn, ExtensionFunction, ExtensionOptions};
use crate::geometry::{Circle, DomainSpec, EdgeFrame, Outer, Point, Weight};
use crate::jet::{Jet1, Jet2};
use crate::quadrature::Gauss;
use crate::solvers::Factorization;

/// Traction per unit length as a function of position and outward normal.
pub type TractionFn = Arc<dyn Fn(Point, Point) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub enum Traction {
    Free,
    /// Traction `S n` of a constant stress `(sigma_xx, sigma_yy, sigma_xy)`.
    Stress([f64; 3]),
    Custom(TractionFn),
}

impl std::fmt::Debug for Traction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Traction::Free => write!(f, "Free"),
            Traction::Stress(s) => write!(f, "Stress({s:?})"),
            Traction::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Traction {
    pub fn at(&self, x: Point, n: Point) -> [f64; 2] {
        match self {
            Traction::Free => [0.0, 0.0],
            Traction::Stress([sxx, syy, sxy]) => [sxx * n[0] + sxy * n[1], sxy * n[0] + syy * n[1]],
            Traction::Custom(f) => f(x, n),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Traction::Free)
    }
}

/// Closed boundary curve parametrised by arclength with the domain on its left.
#[derive(Debug, Clone)]
enum Curve {
    Polygon(Vec<EdgeFrame>),
    /// `sense` is `+1` for counterclockwise (outer) and `-1` for clockwise (hole).
    Circle { center: Point, radius: f64, sense: f64 },
}

const ARC_PIECES: usize = 16;

impl Curve {
    fn length(&self) -> f64 {
        match self {
            Curve::Polygon(f) => f.iter().map(|e| e.length).sum(),
            Curve::Circle { radius, .. } => 2.0 * PI * radius,
        }
    }

    /// Break points of the smooth pieces, from `0` to the length.
    fn breaks(&self) -> Vec<f64> {
        match self {
            Curve::Polygon(f) => {
                let mut b = vec![0.0];
                for e in f {
                    b.push(b.last().copied().unwrap_or(0.0) + e.length);
                }
                b
            }
            Curve::Circle { .. } => {
                let l = self.length();
                (0..=ARC_PIECES).map(|k| l * k as f64 / ARC_PIECES as f64).collect()
            }
        }
    }

    /// Point, unit tangent and outward normal at `s` on piece `k`.
    fn frame(&self, k: usize, breaks: &[f64], s: f64) -> (Point, Point, Point) {
        match self {
            Curve::Polygon(f) => {
                let e = &f[k];
                (e.point(s - breaks[k], 0.0), e.tangent, e.normal)
            }
            Curve::Circle { center, radius, sense } => {
                let th = sense * s / radius;
                let (sn, cs) = th.sin_cos();
                let t = [-sense * sn, sense * cs];
                ([center[0] + radius * cs, center[1] + radius * sn], t, [t[1], -t[0]])
            }
        }
    }
}

/// Integrated traction data on one boundary: `f = (f_x, f_y)`, `F` and `N`.
#[derive(Debug, Clone)]
pub struct BoundaryPotentials {
    curve: Curve,
    traction: Traction,
    breaks: Vec<f64>,
    /// `(f_x, f_y, m)` at each break, with `m = int x T_y - y T_x`.
    start: Vec<[f64; 3]>,
    origin: Point,
    scale: f64,
}

const LINE_GAUSS: usize = 20;

impl BoundaryPotentials {
    fn new(curve: Curve, traction: Traction) -> Self {
        let breaks = curve.breaks();
        let origin = curve.frame(0, &breaks, 0.0).0;
        let mut p = BoundaryPotentials { curve, traction, breaks, start: vec![[0.0; 3]], origin, scale: 0.0 };
        let g = Gauss::new(LINE_GAUSS);
        let mut scale = 0.0;
        for k in 0..p.breaks.len() - 1 {
            let (a, b) = (p.breaks[k], p.breaks[k + 1]);
            let inc = p.increment(&g, k, a, b);
            let prev = p.start[k];
            p.start.push([prev[0] + inc[0], prev[1] + inc[1], prev[2] + inc[2]]);
            for (s, w) in g.mapped(a, b) {
                let (x, _, n) = p.curve.frame(k, &p.breaks, s);
                let t = p.traction.at(x, n);
                scale += w * t[0].hypot(t[1]) * (1.0 + x[0].hypot(x[1]));
            }
        }
        p.scale = scale;
        p
    }

    fn increment(&self, g: &Gauss, k: usize, a: f64, b: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        if b <= a {
            return out;
        }
        for (s, w) in g.mapped(a, b) {
            let (x, _, n) = self.curve.frame(k, &self.breaks, s);
            let t = self.traction.at(x, n);
            out[0] -= w * t[1];
            out[1] += w * t[0];
            out[2] += w * (x[0] * t[1] - x[1] * t[0]);
        }
        out
    }

    fn piece(&self, s: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= s);
        k.saturating_sub(1).min(self.breaks.len() - 2)
    }

    fn cumulative(&self, k: usize, s: f64) -> [f64; 3] {
        let inc = self.increment(&Gauss::new(LINE_GAUSS), k, self.breaks[k], s);
        let st = self.start[k];
        [st[0] + inc[0], st[1] + inc[1], st[2] + inc[2]]
    }

    pub fn length(&self) -> f64 {
        self.curve.length()
    }

    /// `(f_x, f_y)` at arclength `s`.
    pub fn f(&self, s: f64) -> [f64; 2] {
        let c = self.cumulative(self.piece(s), s);
        [c[0], c[1]]
    }

    /// `F(s)`, evaluated as `x . f - x_0 . f_0 + int (x T_y - y T_x)`.
    pub fn big_f(&self, s: f64) -> f64 {
        self.f_and_n_on(self.piece(s), s).0.v
    }

    pub fn big_n(&self, s: f64) -> f64 {
        self.f_and_n_on(self.piece(s), s).1.v
    }

    /// `F` with `F', F''` and `N` with `N'` on piece `k`; the derivatives
    /// ignore curvature and are used on straight pieces only.
    fn f_and_n_on(&self, k: usize, s: f64) -> (Jet1, Jet1) {
        let c = self.cumulative(k, s);
        let (x, t, n) = self.curve.frame(k, &self.breaks, s);
        let tr = self.traction.at(x, n);
        let df = [-tr[1], tr[0]];
        let f = [c[0], c[1]];
        let big = x[0] * f[0] + x[1] * f[1] - self.origin[0] * self.start[0][0] - self.origin[1] * self.start[0][1] + c[2];
        let dot = |a: Point, b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        (Jet1::new(big, dot(t, f), dot(t, df)), Jet1::new(dot(n, f), dot(n, df), 0.0))
    }

    pub fn net_force(&self) -> [f64; 2] {
        let e = self.start[self.start.len() - 1];
        [e[1], -e[0]]
    }

    pub fn net_torque(&self) -> f64 {
        self.start[self.start.len() - 1][2]
    }

    fn check_balance(&self, boundary: usize) -> Result<()> {
        let [fx, fy] = self.net_force();
        let force = fx.hypot(fy);
        let torque = self.net_torque().abs();
        let tol = 1e-8 * self.scale.max(1e-300);
        if force > tol || torque > tol {
            return Err(Error::UnbalancedBoundary { boundary, force, torque });
        }
        Ok(())
    }

    fn is_zero(&self) -> bool {
        self.scale == 0.0
    }
}

/// Integrated traction data per boundary (outer first, then holes), after
/// checking that every boundary is in equilibrium.
pub fn integrate_tractions(domain: &DomainSpec, tractions: &[Traction]) -> Result<Vec<BoundaryPotentials>> {
    if tractions.len() != domain.boundary_count() {
        return Err(Error::Config(format!(
            "{} tractions given for {} boundaries",
            tractions.len(),
            domain.boundary_count()
        )));
    }
    let mut curves = vec![match &domain.outer {
        Outer::Polygon(p) => Curve::Polygon(p.frames()?),
        Outer::Circle(c) => Curve::Circle { center: c.center, radius: c.radius, sense: 1.0 },
    }];
    curves.extend(domain.holes.iter().map(|h| Curve::Circle { center: h.circle.center, radius: h.circle.radius, sense: -1.0 }));
    let pots: Vec<BoundaryPotentials> =
        curves.into_iter().zip(tractions).map(|(c, t)| BoundaryPotentials::new(c, t.clone())).collect();
    for (i, p) in pots.iter().enumerate() {
        p.check_balance(i)?;
    }
    Ok(pots)
}

/// Truncated Laurent or Taylor series `sum c_k w^k` with `w = (z - c) / R`
/// inside a circle or `w = R / (z - c)` outside it. Its real part is harmonic and
/// equals `a_0 + sum a_k cos k theta + b_k sin k theta` on the circle.
#[derive(Debug, Clone, PartialEq)]
struct Harmonic {
    center: Point,
    radius: f64,
    inside: bool,
    coeffs: Vec<Complex<f64>>,
}

const CIRCLE_SAMPLES: usize = 257;

impl Harmonic {
    fn fit(center: Point, radius: f64, inside: bool, values: &[f64]) -> Self {
        let m = values.len();
        let kmax = (m - 1) / 2;
        let mut coeffs = Vec::with_capacity(kmax + 1);
        for k in 0..=kmax {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let th = 2.0 * PI * ((k * j) % m) as f64 / m as f64;
                a += v * th.cos();
                b += v * th.sin();
            }
            let scale = if k == 0 { 1.0 } else { 2.0 } / m as f64;
            let (a, b) = (a * scale, b * scale);
            coeffs.push(if inside { Complex::new(a, -b) } else { Complex::new(a, b) });
        }
        let big = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() <= 1e-16 * big) {
            coeffs.pop();
        }
        Harmonic { center, radius, inside, coeffs }
    }

    fn eval(&self, x: Point) -> Jet2 {
        let zeta = Complex::new(x[0] - self.center[0], x[1] - self.center[1]);
        let r = self.radius;
        let w = if self.inside { zeta / r } else { r / zeta };
        let (mut h, mut h1, mut h2) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        for &c in self.coeffs.iter().rev() {
            h2 = h2 * w + h1 * 2.0;
            h1 = h1 * w + h;
            h = h * w + c;
        }
        let (d1, d2) = if self.inside { (h1 / r, h2 / (r * r)) } else {
            let dw = -w * w / r;
            let ddw = w * w * w * 2.0 / (r * r);
            (h1 * dw, h2 * dw * dw + h1 * ddw)
        };
        analytic_jet(h, d1, d2)
    }
}

/// Jet of `Re h` for an analytic `h` with complex derivatives `d1`, `d2`.
fn analytic_jet(h: Complex<f64>, d1: Complex<f64>, d2: Complex<f64>) -> Jet2 {
    Jet2 { v: h.re, dx: d1.re, dy: -d1.im, dxx: d2.re, dxy: -d2.im, dyy: -d2.re }
}

/// Radial offset with unit radial derivative on the circle: `(r^2 - R^2) / 2R`
/// inside, `R ln(r / R)` outside.
fn offset_jet(center: Point, radius: f64, inside: bool, x: Point) -> Jet2 {
    let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
    if inside {
        Jet2 {
            v: (dx * dx + dy * dy - radius * radius) / (2.0 * radius),
            dx: dx / radius,
            dy: dy / radius,
            dxx: 1.0 / radius,
            dxy: 0.0,
            dyy: 1.0 / radius,
        }
    } else {
        let zeta = Complex::new(dx, dy);
        analytic_jet(Complex::new(radius * (zeta.norm() / radius).ln(), 0.0), radius / zeta, -radius / (zeta * zeta))
    }
}

/// `W (P_a + q P_c)` matching prescribed value and radial derivative on one circle,
/// where `W` vanishes to second order on every other boundary.
#[derive(Debug, Clone)]
struct CircleLift {
    weight: Weight,
    a: Harmonic,
    c: Harmonic,
}

impl CircleLift {
    /// `data(theta)` returns the value and the derivative along `x - center`.
    fn new(center: Point, radius: f64, inside: bool, weight: Weight, data: &dyn Fn(f64) -> (f64, f64)) -> Result<Self> {
        let m = CIRCLE_SAMPLES;
        let mut pts = Vec::with_capacity(m);
        let mut wv = Vec::with_capacity(m);
        let mut av = Vec::with_capacity(m);
        let mut gv = Vec::with_capacity(m);
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            let x = [center[0] + radius * th.cos(), center[1] + radius * th.sin()];
            let wj = weight.eval(x)?;
            if !(wj.v.abs() > 1e-300) {
                return Err(Error::Geometry("boundary weight vanishes on a circular boundary".into()));
            }
            let (f, g) = data(th);
            pts.push((x, th));
            av.push(f / wj.v);
            gv.push(g);
            wv.push(wj);
        }
        let a = Harmonic::fit(center, radius, inside, &av);
        let cv: Vec<f64> = pts
            .iter()
            .zip(&wv)
            .zip(av.iter().zip(&gv))
            .map(|(((x, th), w), (&aj, &g))| {
                let (s, c) = th.sin_cos();
                let pa = a.eval(*x);
                let wr = w.dx * c + w.dy * s;
                (g - wr * aj) / w.v - (pa.dx * c + pa.dy * s)
            })
            .collect();
        let c = Harmonic::fit(center, radius, inside, &cv);
        Ok(CircleLift { weight, a, c })
    }

    fn eval(&self, x: Point) -> Result<Jet2> {
        let q = offset_jet(self.a.center, self.a.radius, self.a.inside, x);
        Ok(self.weight.eval(x)? * (self.a.eval(x) + q * self.c.eval(x)))
    }
}

/// Part of a lift that is matched on the subproblem's own boundary.
#[derive(Debug, Clone)]
enum LiftBase {
    Zero,
    /// `(1, x, y)[k - 1]`.
    Affine(usize),
    Polygon(Box<ExtensionFunction>),
}

impl LiftBase {
    fn eval(&self, x: Point) -> Jet2 {
        match self {
            LiftBase::Zero => Jet2::ZERO,
            LiftBase::Affine(1) => Jet2::constant(1.0),
            LiftBase::Affine(2) => Jet2::affine(x[0], 1.0, 0.0),
            LiftBase::Affine(_) => Jet2::affine(x[1], 0.0, 1.0),
            LiftBase::Polygon(e) => e.eval(x),
        }
    }
}

/// Function matching one subproblem's boundary data: a base plus signed circle lifts.
#[derive(Debug, Clone)]
struct Lift {
    base: LiftBase,
    circles: Vec<(f64, CircleLift)>,
}

impl Lift {
    fn eval(&self, x: Point) -> Result<Jet2> {
        let mut j = self.base.eval(x);
        for (sign, c) in &self.circles {
            j += c.eval(x)?.scale(*sign);
        }
        Ok(j)
    }
}

/// Boundary weights of a domain and the products used by circle lifts.
struct LiftWeights {
    /// Squared weight of each boundary, outer first.
    squares: Vec<Weight>,
}

impl LiftWeights {
    fn new(domain: &DomainSpec) -> Result<Self> {
        let mut squares = vec![domain.outer_factor()?.square()];
        squares.extend(
            domain.holes.iter().map(|h| Weight::DiskComplement { center: h.circle.center, radius: h.circle.radius }.square()),
        );
        Ok(LiftWeights { squares })
    }

    /// Product of the squared weights of every boundary except `i`.
    fn except(&self, i: usize) -> Weight {
        let f: Vec<Weight> = self.squares.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w.clone()).collect();
        if f.is_empty() {
            Weight::Constant(1.0)
        } else {
            Weight::Product(f)
        }
    }
}

/// Lift on circle `i` of a function known everywhere.
fn circle_lift_of(domain: &DomainSpec, weights: &LiftWeights, i: usize, fun: &dyn Fn(Point) -> Jet2) -> Result<CircleLift> {
    let (c, inside) = circle_of(domain, i);
    CircleLift::new(c.center, c.radius, inside, weights.except(i), &|th| {
        let (s, co) = th.sin_cos();
        let j = fun([c.center[0] + c.radius * co, c.center[1] + c.radius * s]);
        (j.v, j.dx * co + j.dy * s)
    })
}

fn circle_of(domain: &DomainSpec, i: usize) -> (Circle, bool) {
    match (&domain.outer, i) {
        (Outer::Circle(c), 0) => (*c, true),
        (_, 0) => unreachable!("circle lift on a polygon boundary"),
        _ => (domain.holes[i - 1].circle, false),
    }
}

/// Lift on circle `i` of its integrated traction data.
fn circle_traction_lift(domain: &DomainSpec, weights: &LiftWeights, i: usize, pot: &BoundaryPotentials) -> Result<CircleLift> {
    let (c, inside) = circle_of(domain, i);
    let l = pot.length();
    CircleLift::new(c.center, c.radius, inside, weights.except(i), &|th| {
        // outer circles run counterclockwise, holes clockwise; the outward normal is radial on the outer
        let s = if inside { th * c.radius } else { (l - th * c.radius).rem_euclid(l) };
        let k = pot.piece(s);
        let (f, n) = pot.f_and_n_on(k, s);
        (f.v, if inside { n.v } else { -n.v })
    })
}

/// Subtracts the lifts on every hole of `base`, so the result vanishes there.
fn clear_holes(domain: &DomainSpec, weights: &LiftWeights, base: LiftBase) -> Result<Lift> {
    let mut circles = Vec::new();
    for i in 1..domain.boundary_count() {
        circles.push((-1.0, circle_lift_of(domain, weights, i, &|x| base.eval(x))?));
    }
    Ok(Lift { base, circles })
}

/// Settings for the stress solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AiryOptions {
    pub h: f64,
    pub degree: usize,
    pub quad: QuadSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subproblem {
    pub boundary: usize,
    /// `0` traction data, `1..=3` the affine functions `1, x, y`.
    pub kind: usize,
}

/// Stress function and its composition weights.
#[derive(Debug, Clone)]
pub struct AirySolution {
    disc: Discretization,
    subproblems: Vec<Subproblem>,
    lifts: Vec<Lift>,
    /// Raw-grid coefficients of each clamped correction.
    raw: Vec<Vec<f64>>,
    weights: Vec<f64>,
    total_raw: Vec<f64>,
    /// `(alpha_i, beta_i, gamma_i)` per boundary.
    gauge: Vec<[f64; 3]>,
    constraints: [f64; 3],
}

/// Even extension parameter used for polygon lifts.
fn extension_degree(p: usize) -> usize {
    (p + 2) / 2 * 2
}

pub fn solve_airy(domain: &DomainSpec, tractions: &[Traction], opts: &AiryOptions) -> Result<AirySolution> {
    let pots = integrate_tractions(domain, tractions)?;
    let disc = Discretization::new(domain, domain.clamped_weight()?, opts.h, opts.degree, opts.quad)?;
    let lw = LiftWeights::new(domain)?;
    let nb = domain.boundary_count();

    let mut subproblems = Vec::new();
    let mut lifts = Vec::new();
    for (i, pot) in pots.iter().enumerate() {
        if !pot.is_zero() {
            let lift = match &pot.curve {
                Curve::Polygon(frames) => {
                    clear_holes(domain, &lw, LiftBase::Polygon(Box::new(polygon_lift(domain, frames, pot, opts)?)))?
                }
                Curve::Circle { .. } => {
                    Lift { base: LiftBase::Zero, circles: vec![(1.0, circle_traction_lift(domain, &lw, i, pot)?)] }
                }
            };
            subproblems.push(Subproblem { boundary: i, kind: 0 });
            lifts.push(lift);
        }
        for k in 1..=3 {
            subproblems.push(Subproblem { boundary: i, kind: k });
            lifts.push(if i == 0 {
                clear_holes(domain, &lw, LiftBase::Affine(k))?
            } else {
                let base = LiftBase::Affine(k);
                Lift { base: LiftBase::Zero, circles: vec![(1.0, circle_lift_of(domain, &lw, i, &|x| base.eval(x))?)] }
            });
        }
    }

    let a = plate_form(&disc, 1.0, 1.0)?;
    let ns = lifts.len();
    let rhs = assemble_vectors(&disc, ns, |x, w, jets, local| {
        let lap = lifts.iter().map(|l| l.eval(x).map(|j| j.laplacian())).collect::<Result<Vec<f64>>>()?;
        for (m, j) in jets.iter().enumerate() {
            let bl = w * j.laplacian();
            for (c, &ll) in lap.iter().enumerate() {
                local[m * ns + c] -= bl * ll;
            }
        }
        Ok(())
    })?;
    let fact = Factorization::new(&a).map_err(|e| match e {
        Error::Singular { .. } => Error::SingularStiffness,
        e => e,
    })?;
    let raw: Vec<Vec<f64>> = fact.solve_many(&rhs).iter().map(|u| disc.basis.raw_coefficients(u)).collect();

    let mut sol = AirySolution {
        disc,
        subproblems,
        lifts,
        raw,
        weights: Vec::new(),
        total_raw: Vec::new(),
        gauge: vec![[0.0; 3]; nb],
        constraints: [0.0; 3],
    };
    sol.fix_gauge()?;
    Ok(sol)
}

fn polygon_lift(domain: &DomainSpec, frames: &[EdgeFrame], pot: &BoundaryPotentials, opts: &AiryOptions) -> Result<ExtensionFunction> {
    let Outer::Polygon(poly) = &domain.outer else { unreachable!("polygon lift on a polygon boundary") };
    let pot = Arc::new(pot.clone());
    let mut f: Vec<EdgeFn> = Vec::new();
    let mut g: Vec<EdgeFn> = Vec::new();
    let mut s0 = 0.0;
    for (k, e) in frames.iter().enumerate() {
        let (pf, pg) = (pot.clone(), pot.clone());
        f.push(Arc::new(move |s| pf.f_and_n_on(k, s0 + s).0));
        g.push(Arc::new(move |s| pg.f_and_n_on(k, s0 + s).1));
        s0 += e.length;
    }
    let data = EdgeData { f, g };
    let pe = extension_degree(opts.degree);
    let knots: Vec<usize> = frames.iter().map(|e| ((2.0 * e.length / opts.h).ceil() as usize).max(8)).collect();
    let n = poly.len() as isize;
    let radii = (0..n).map(|i| 0.5 * poly.edge_length(i - 1).min(poly.edge_length(i))).collect();
    match build_biharmonic_extension(poly, &data, &ExtensionOptions { degree: pe, knots: knots.clone(), radii: Some(radii) }) {
        Err(Error::VertexRadiiTooLarge | Error::DegenerateVertexAngle(_)) => {
            build_biharmonic_extension(poly, &data, &ExtensionOptions { degree: pe, knots, radii: None })
        }
        r => r,
    }
}

/// Per-point integrals for the gauge fit.
#[derive(Debug, Clone)]
struct Moments {
    gram: DMatrix<f64>,
    /// Rows: `int Phi_s`, `int d_x Phi_s`, `int d_y Phi_s`.
    mean: DMatrix<f64>,
}

impl AirySolution {
    fn subproblem_jets(&self, cx: usize, cy: usize, x: Point, local: &mut [Jet2]) -> Result<Vec<Jet2>> {
        let basis = &self.disc.basis;
        basis.local_weighted(cx, cy, x, local)?;
        let idx: Vec<usize> = (0..local.len()).map(|m| basis.raw_index(cx, cy, m)).collect();
        self.lifts
            .iter()
            .zip(&self.raw)
            .map(|(l, raw)| {
                let mut j = l.eval(x)?;
                for (b, &k) in local.iter().zip(&idx) {
                    j += b.scale(raw[k]);
                }
                Ok(j)
            })
            .collect()
    }

    fn moments(&self) -> Result<Moments> {
        let ns = self.lifts.len();
        let nloc = self.disc.basis.local_count();
        let parts: Vec<Result<Moments>> = self
            .disc
            .rules
            .cells
            .par_iter()
            .zip(self.disc.rules.rules.par_iter())
            .map(|(&(cx, cy), rule)| {
                let mut m = Moments { gram: DMatrix::zeros(ns, ns), mean: DMatrix::zeros(3, ns) };
                let mut local = vec![Jet2::ZERO; nloc];
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let jets = self.subproblem_jets(cx, cy, x, &mut local)?;
                    let lap: Vec<f64> = jets.iter().map(|j| j.laplacian()).collect();
                    for a in 0..ns {
                        m.mean[(0, a)] += w * jets[a].v;
                        m.mean[(1, a)] += w * jets[a].dx;
                        m.mean[(2, a)] += w * jets[a].dy;
                        for b in a..ns {
                            m.gram[(a, b)] += w * lap[a] * lap[b];
                        }
                    }
                }
                Ok(m)
            })
            .collect();
        let mut total = Moments { gram: DMatrix::zeros(ns, ns), mean: DMatrix::zeros(3, ns) };
        for p in parts {
            let p = p?;
            total.gram += p.gram;
            total.mean += p.mean;
        }
        for a in 0..ns {
            for b in 0..a {
                total.gram[(a, b)] = total.gram[(b, a)];
            }
        }
        Ok(total)
    }

    fn fix_gauge(&mut self) -> Result<()> {
        let mom = self.moments()?;
        let fixed: Vec<usize> = (0..self.subproblems.len()).filter(|&s| self.subproblems[s].kind == 0).collect();
        let free: Vec<usize> = (0..self.subproblems.len()).filter(|&s| self.subproblems[s].kind != 0).collect();
        let nf = free.len();
        let mut kkt = DMatrix::zeros(nf + 3, nf + 3);
        let mut rhs = DVector::zeros(nf + 3);
        let scale_g = mom.gram.amax().max(1e-300);
        let scale_c = mom.mean.amax().max(1e-300);
        for (a, &sa) in free.iter().enumerate() {
            for (b, &sb) in free.iter().enumerate() {
                kkt[(a, b)] = mom.gram[(sa, sb)] / scale_g;
            }
            rhs[a] = -fixed.iter().map(|&f| mom.gram[(sa, f)]).sum::<f64>() / scale_g;
            for r in 0..3 {
                kkt[(nf + r, a)] = mom.mean[(r, sa)] / scale_c;
                kkt[(a, nf + r)] = mom.mean[(r, sa)] / scale_c;
            }
        }
        for r in 0..3 {
            rhs[nf + r] = -fixed.iter().map(|&f| mom.mean[(r, f)]).sum::<f64>() / scale_c;
        }
        let sv = kkt.clone().svd(false, false).singular_values;
        if !(sv.min() > 1e-13 * sv.max()) {
            return Err(Error::GaugeDegenerate);
        }
        let c = kkt.full_piv_lu().solve(&rhs).ok_or(Error::GaugeDegenerate)?;
        let mut weights = vec![0.0; self.subproblems.len()];
        for &f in &fixed {
            weights[f] = 1.0;
        }
        for (a, &s) in free.iter().enumerate() {
            weights[s] = c[a];
            let sp = self.subproblems[s];
            let slot = match sp.kind {
                1 => 2,
                2 => 0,
                _ => 1,
            };
            self.gauge[sp.boundary][slot] = c[a];
        }
        let mut cons = [0.0; 3];
        for (r, v) in cons.iter_mut().enumerate() {
            *v = (0..weights.len()).map(|s| weights[s] * mom.mean[(r, s)]).sum();
        }
        self.constraints = cons;
        self.set_weights(weights);
        Ok(())
    }

    fn set_weights(&mut self, weights: Vec<f64>) {
        let n = self.raw[0].len();
        let mut total = vec![0.0; n];
        for (w, raw) in weights.iter().zip(&self.raw) {
            for (t, r) in total.iter_mut().zip(raw) {
                *t += w * r;
            }
        }
        self.total_raw = total;
        self.weights = weights;
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn subproblems(&self) -> &[Subproblem] {
        &self.subproblems
    }

    /// `(alpha_i, beta_i, gamma_i)` per boundary.
    pub fn gauge(&self) -> &[[f64; 3]] {
        &self.gauge
    }

    /// `int Phi`, `int d_x Phi`, `int d_y Phi` after the gauge fit.
    pub fn constraint_residuals(&self) -> [f64; 3] {
        self.constraints
    }

    /// Copy with the gauge constants of `boundary` shifted by `(d_alpha, d_beta, d_gamma)`.
    pub fn with_gauge_shift(&self, boundary: usize, shift: [f64; 3]) -> AirySolution {
        let mut out = self.clone();
        let mut w = out.weights.clone();
        for (s, sp) in self.subproblems.iter().enumerate() {
            if sp.boundary == boundary {
                match sp.kind {
                    1 => w[s] += shift[2],
                    2 => w[s] += shift[0],
                    3 => w[s] += shift[1],
                    _ => {}
                }
            }
        }
        for (i, g) in out.gauge[boundary].iter_mut().enumerate() {
            *g += shift[i];
        }
        out.set_weights(w);
        out
    }

    /// Jet of the stress function at `x`.
    pub fn phi(&self, x: Point) -> Result<Jet2> {
        let mut j = self.disc.basis.field_jet(&self.total_raw, x)?;
        for (l, &w) in self.lifts.iter().zip(&self.weights) {
            if w != 0.0 {
                j += l.eval(x)?.scale(w);
            }
        }
        Ok(j)
    }
}

impl StressField for AirySolution {
    fn stress(&self, x: Point) -> Result<[f64; 3]> {
        if !self.disc.domain.contains(x) && self.disc.domain.level(x) < -1e-9 {
            return Err(Error::OutsideDomain(x[0], x[1]));
        }
        let p = self.phi(x)?;
        Ok([p.dyy, p.dxx, -p.dxy])
    }
}

/// `(x, y, sigma_xx, sigma_yy, sigma_xy)` on grid points of spacing `step` inside the domain.
pub fn sample_stress(field: &dyn StressField, domain: &DomainSpec, step: f64) -> Result<Vec<[f64; 5]>> {
    let [lo, hi] = domain.bbox();
    let nx = ((hi[0] - lo[0]) / step).floor() as usize;
    let ny = ((hi[1] - lo[1]) / step).floor() as usize;
    let mut out = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let x = [lo[0] + i as f64 * step, lo[1] + j as f64 * step];
            if domain.contains(x) {
                let s = field.stress(x)?;
                out.push([x[0], x[1], s[0], s[1], s[2]]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rectangle, BoundaryCondition, Circle, Hole};

    fn rect_with_hole(d: f64) -> DomainSpec {
        let poly = rectangle([0.0, 0.0], 4.0, 2.0, 0.0).unwrap();
        let holes = if d > 0.0 {
            vec![Hole { circle: Circle::new([0.0, 0.0], d / 2.0).unwrap(), bc: BoundaryCondition::Free }]
        } else {
            Vec::new()
        };
        DomainSpec::new(Outer::Polygon(poly), BoundaryCondition::Free, holes).unwrap()
    }

    fn annulus(a: f64, b: f64) -> DomainSpec {
        DomainSpec::new(
            Outer::Circle(Circle::new([0.0, 0.0], b).unwrap()),
            BoundaryCondition::Clamped,
            vec![Hole { circle: Circle::new([0.0, 0.0], a).unwrap(), bc: BoundaryCondition::Free }],
        )
        .unwrap()
    }

    #[test]
    fn zero_traction_gives_zero_potentials() {
        let dom = rect_with_hole(1.0);
        let pots = integrate_tractions(&dom, &[Traction::Free, Traction::Free]).unwrap();
        for p in &pots {
            for s in [0.0, 0.3, 1.7, p.length() * 0.9] {
                assert_eq!(p.big_f(s), 0.0);
                assert_eq!(p.big_n(s), 0.0);
            }
        }
    }

    /// Checks `F`, `N` against `Phi` up to an affine function, for stress `Phi_yy, Phi_xx, -Phi_xy`.
    fn assert_potentials_match(p: &BoundaryPotentials, phi: impl Fn(Point) -> Jet2) {
        let x0 = p.curve.frame(0, &p.breaks, 0.0).0;
        let p0 = phi(x0);
        let f0 = p.f(0.0);
        let c = [f0[0] - p0.dx, f0[1] - p0.dy];
        for k in 0..23 {
            let s = p.length() * k as f64 / 23.0;
            let (x, _, n) = p.curve.frame(p.piece(s), &p.breaks, s);
            let q = phi(x);
            let f = p.f(s);
            assert!((f[0] - q.dx - c[0]).abs() < 1e-12 && (f[1] - q.dy - c[1]).abs() < 1e-12, "{s}");
            let expect_f = q.v - p0.v + c[0] * (x[0] - x0[0]) + c[1] * (x[1] - x0[1]);
            assert!((p.big_f(s) - expect_f).abs() < 1e-12, "{s} {} {expect_f}", p.big_f(s));
            let expect_n = n[0] * (q.dx + c[0]) + n[1] * (q.dy + c[1]);
            assert!((p.big_n(s) - expect_n).abs() < 1e-12, "{s}");
        }
        assert!(p.net_force()[0].abs() < 1e-12 && p.net_force()[1].abs() < 1e-12 && p.net_torque().abs() < 1e-12);
    }

    fn quadratic(a: f64, b: f64, c: f64) -> impl Fn(Point) -> Jet2 {
        move |x| Jet2 {
            v: 0.5 * a * x[0] * x[0] + b * x[0] * x[1] + 0.5 * c * x[1] * x[1],
            dx: a * x[0] + b * x[1],
            dy: b * x[0] + c * x[1],
            dxx: a,
            dxy: b,
            dyy: c,
        }
    }

    #[test]
    fn annulus_potentials_match_quadratic_stress_function() {
        let dom = annulus(0.7, 1.3);
        let s = [-1.0, 0.5, 0.3];
        let pots = integrate_tractions(&dom, &[Traction::Stress(s), Traction::Stress(s)]).unwrap();
        for p in &pots {
            assert_potentials_match(p, quadratic(s[1], -s[2], s[0]));
        }
    }

    #[test]
    fn polygon_potentials_match_quadratic_stress_function() {
        let dom = rect_with_hole(1.0);
        let s = [-1.0, 0.0, 0.0];
        let pots = integrate_tractions(&dom, &[Traction::Stress(s), Traction::Stress(s)]).unwrap();
        for p in &pots {
            assert_potentials_match(p, quadratic(s[1], -s[2], s[0]));
        }
        let p = &pots[0];
        for s in [0.3, 2.2, 5.1, 7.9] {
            let k = p.piece(s);
            let (fj, nj) = p.f_and_n_on(k, s);
            let e = 1e-5;
            let (fp, np) = p.f_and_n_on(k, s + e);
            let (fm, nm) = p.f_and_n_on(k, s - e);
            assert!(((fp.v - fm.v) / (2.0 * e) - fj.d1).abs() < 1e-8);
            assert!(((fp.d1 - fm.d1) / (2.0 * e) - fj.d2).abs() < 1e-8);
            assert!(((np.v - nm.v) / (2.0 * e) - nj.d1).abs() < 1e-8);
        }
    }

    #[test]
    fn unbalanced_boundary_is_rejected() {
        let dom = rect_with_hole(0.0);
        let t = Traction::Custom(Arc::new(|_, n| if n[0] > 0.5 { [1.0, 0.0] } else { [0.0, 0.0] }));
        match integrate_tractions(&dom, &[t]) {
            Err(Error::UnbalancedBoundary { boundary: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    fn fd_check(f: &dyn Fn(Point) -> Jet2, x: Point, tol: f64) {
        let e = 1e-5;
        let j = f(x);
        let px = f([x[0] + e, x[1]]);
        let mx = f([x[0] - e, x[1]]);
        let py = f([x[0], x[1] + e]);
        let my = f([x[0], x[1] - e]);
        let fd = [
            (px.v - mx.v) / (2.0 * e),
            (py.v - my.v) / (2.0 * e),
            (px.dx - mx.dx) / (2.0 * e),
            (py.dx - my.dx) / (2.0 * e),
            (py.dy - my.dy) / (2.0 * e),
        ];
        let an = [j.dx, j.dy, j.dxx, j.dxy, j.dyy];
        for (a, b) in fd.iter().zip(&an) {
            assert!((a - b).abs() < tol * (1.0 + b.abs()), "{fd:?} {an:?}");
        }
    }

    #[test]
    fn harmonic_series_reproduce_samples_and_derivatives() {
        let c = [0.3, -0.2];
        let r = 0.7;
        let data = |th: f64| 0.4 + (2.0 * th).cos() - 0.3 * (3.0 * th).sin() + 0.1 * th.sin();
        let vals: Vec<f64> = (0..33).map(|j| data(2.0 * PI * j as f64 / 33.0)).collect();
        for inside in [true, false] {
            let h = Harmonic::fit(c, r, inside, &vals);
            for th in [0.1, 1.9, 4.4] {
                let x = [c[0] + r * f64::cos(th), c[1] + r * f64::sin(th)];
                assert!((h.eval(x).v - data(th)).abs() < 1e-12);
            }
            let x = if inside { [0.5, 0.1] } else { [1.2, -0.9] };
            assert!(h.eval(x).laplacian().abs() < 1e-10);
            fd_check(&|x| h.eval(x), x, 1e-6);
            fd_check(&|x| offset_jet(c, r, inside, x), x, 1e-6);
        }
    }

    #[test]
    fn circle_lift_matches_value_and_radial_derivative() {
        let dom = rect_with_hole(1.0);
        let lw = LiftWeights::new(&dom).unwrap();
        let fun = |x: Point| Jet2 {
            v: x[0] * x[0] - x[1] + 0.5,
            dx: 2.0 * x[0],
            dy: -1.0,
            dxx: 2.0,
            dxy: 0.0,
            dyy: 0.0,
        };
        let lift = circle_lift_of(&dom, &lw, 1, &fun).unwrap();
        for th in [0.0, 0.8, 2.9, 5.1] {
            let (s, c) = f64::sin_cos(th);
            let x = [0.5 * c, 0.5 * s];
            let l = lift.eval(x).unwrap();
            let f = fun(x);
            assert!((l.v - f.v).abs() < 1e-11, "{} {}", l.v, f.v);
            assert!((l.dx * c + l.dy * s - (f.dx * c + f.dy * s)).abs() < 1e-10);
        }
        for x in [[2.0, 0.3], [-1.1, 1.0], [-2.0, -1.0]] {
            let l = lift.eval(x).unwrap();
            assert!(l.v.abs() < 1e-12 && l.dx.abs() < 1e-12 && l.dy.abs() < 1e-12, "{l:?}");
        }
        fd_check(&|x| lift.eval(x).unwrap(), [1.1, 0.4], 1e-5);
    }

    #[test]
    fn simply_connected_stress_is_gauge_invariant() {
        let dom = rect_with_hole(0.0);
        let opts = AiryOptions { h: 0.2, degree: 5, quad: QuadSettings::default() };
        let sol = solve_airy(&dom, &[Traction::Stress([-1.0, -1.0, 0.0])], &opts).unwrap();
        let shifted = sol.with_gauge_shift(0, [0.7, -1.3, 2.1]);
        for x in [[0.3, 0.2], [-1.7, 0.9], [1.95, -0.95]] {
            let s = sol.stress(x).unwrap();
            assert!((s[0] + 1.0).abs() < 1e-2 && (s[1] + 1.0).abs() < 1e-2 && s[2].abs() < 1e-2, "{s:?}");
            let t = shifted.stress(x).unwrap();
            for k in 0..3 {
                assert!((s[k] - t[k]).abs() < 1e-10);
            }
        }
        assert!(sol.constraint_residuals().iter().all(|c| c.abs() < 1e-8));
    }

    #[test]
    fn all_free_boundaries_give_zero_stress() {
        let dom = rect_with_hole(1.0);
        let opts = AiryOptions { h: 0.25, degree: 4, quad: QuadSettings::default() };
        let sol = solve_airy(&dom, &[Traction::Free, Traction::Free], &opts).unwrap();
        for x in [[1.0, 0.5], [-1.5, -0.5], [0.0, 0.8]] {
            let s = sol.stress(x).unwrap();
            assert!(s.iter().all(|v| v.abs() < 1e-8), "{s:?}");
        }
    }

    #[test]
    fn annulus_radial_compression() {
        let (a, b) = (0.8, 2.0);
        let dom = annulus(a, b);
        let opts = AiryOptions { h: 0.2, degree: 5, quad: QuadSettings::default() };
        let sol = solve_airy(&dom, &[Traction::Stress([-1.0, -1.0, 0.0]), Traction::Free], &opts).unwrap();
        let k = 1.0 - a * a / (b * b);
        let mut err: f64 = 0.0;
        for r in [0.9, 1.2, 1.5, 1.9] {
            for th in [0.3, 2.0, 4.0] {
                let x = [r * f64::cos(th), r * f64::sin(th)];
                let s = sol.stress(x).unwrap();
                let srr = -(1.0 - a * a / (r * r)) / k;
                let sff = -(1.0 + a * a / (r * r)) / k;
                let (c, sn) = (f64::cos(th), f64::sin(th));
                let sxx = srr * c * c + sff * sn * sn;
                let syy = srr * sn * sn + sff * c * c;
                let sxy = (srr - sff) * c * sn;
                err = err.max((s[0] - sxx).abs()).max((s[1] - syy).abs()).max((s[2] - sxy).abs());
            }
        }
        eprintln!("annulus stress error {err:e}");
        assert!(err < 1e-2);
    }

    #[test]
    fn rectangle_with_hole_constant_stress() {
        let dom = rect_with_hole(1.0);
        let opts = AiryOptions { h: 0.1, degree: 5, quad: QuadSettings::default() };
        let sol = solve_airy(&dom, &[Traction::Stress([-1.0, -1.0, 0.0]), Traction::Stress([-1.0, -1.0, 0.0])], &opts).unwrap();
        let mut err: f64 = 0.0;
        for x in [[1.5, 0.5], [-1.2, -0.7], [0.0, 0.8], [0.6, 0.1]] {
            let s = sol.stress(x).unwrap();
            err = err.max((s[0] + 1.0).abs()).max((s[1] + 1.0).abs()).max(s[2].abs());
        }
        eprintln!("rect hole constant stress error {err:e}");
        assert!(err < 1e-2);
        let s1 = sol.stress([1.2, 0.6]).unwrap();
        let s2 = sol.stress([1.2, -0.6]).unwrap();
        assert!((s1[0] - s2[0]).abs() < 1e-3);
    }
}
