//! Smooth extension of boundary data from the edges of a simple polygon into
//! its interior.
//!
//! The extension is a sum of vertex blends (Gaussians times low order
//! polynomials in the adjacent edge weights) and one term per edge, supported
//! in a box around the edge, whose profile along the edge is a spline.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{EdgeFrame, Point, SimplePolygon};
use crate::jet::{Jet1, Jet2};
use crate::spline::{spline_interpolate, Spline1D};

/// Data along one edge as a function of arclength `s in [0, L]`, returning the
/// value and its first two derivatives in `s`.
pub type EdgeFn = Arc<dyn Fn(f64) -> Jet1 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionMode {
    /// Values only.
    Poisson,
    /// Values and outward normal derivatives.
    Biharmonic,
}

/// Boundary data per edge. `g` holds outward normal derivatives and is empty
/// in Poisson mode; only its value and first derivative are used.
#[derive(Clone)]
pub struct EdgeData {
    pub f: Vec<EdgeFn>,
    pub g: Vec<EdgeFn>,
}

impl std::fmt::Debug for EdgeData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EdgeData").field("edges", &self.f.len()).field("normal_data", &!self.g.is_empty()).finish()
    }
}

impl EdgeData {
    pub fn zero(n: usize, mode: ExtensionMode) -> Self {
        let z: EdgeFn = Arc::new(|_| Jet1::default());
        EdgeData {
            f: vec![z.clone(); n],
            g: if mode == ExtensionMode::Biharmonic { vec![z; n] } else { Vec::new() },
        }
    }

    /// Restriction of a global function (and its outward normal derivative).
    pub fn restrict(poly: &SimplePolygon, mode: ExtensionMode, fun: impl Fn(Point) -> Jet2 + Send + Sync + 'static) -> Result<Self> {
        let fun = Arc::new(fun);
        let frames = poly.frames()?;
        let mut f: Vec<EdgeFn> = Vec::new();
        let mut g: Vec<EdgeFn> = Vec::new();
        for fr in frames {
            let (t, n) = (fr.tangent, fr.normal);
            let ff = fun.clone();
            f.push(Arc::new(move |s| {
                let j = ff(fr.point(s, 0.0));
                Jet1::new(j.v, j.along(t), j.hess(t, t))
            }));
            if mode == ExtensionMode::Biharmonic {
                let gg = fun.clone();
                g.push(Arc::new(move |s| {
                    let j = gg(fr.point(s, 0.0));
                    Jet1::new(j.along(n), j.hess(t, n), 0.0)
                }));
            }
        }
        Ok(EdgeData { f, g })
    }

    pub fn mode(&self) -> ExtensionMode {
        if self.g.is_empty() {
            ExtensionMode::Poisson
        } else {
            ExtensionMode::Biharmonic
        }
    }
}

/// Compatibility residuals at the vertex where edge `prev` ends and edge `next` starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexResidual {
    pub vertex: usize,
    /// `f_prev(L) - f_next(0)`.
    pub value: f64,
    /// Norm of the difference of the two gradients implied by `(f', g)` on each edge.
    pub gradient: f64,
    /// Second-derivative relation; zero in Poisson mode.
    pub second: f64,
}

impl VertexResidual {
    pub fn max(&self) -> f64 {
        self.value.abs().max(self.gradient).max(self.second.abs())
    }
}

/// Per-vertex compatibility residuals of the data; vertex `j` joins edges `j - 1` and `j`.
pub fn check_compatibility(poly: &SimplePolygon, data: &EdgeData) -> Result<Vec<VertexResidual>> {
    let frames = poly.frames()?;
    let n = frames.len();
    check_lengths(n, data)?;
    let bih = data.mode() == ExtensionMode::Biharmonic;
    Ok((0..n)
        .map(|j| {
            let i = (j + n - 1) % n;
            let (fi, fj) = (&frames[i], &frames[j]);
            let a = (data.f[i])(fi.length);
            let b = (data.f[j])(0.0);
            let mut r = VertexResidual { vertex: j, value: a.v - b.v, gradient: 0.0, second: 0.0 };
            if bih {
                let ga = (data.g[i])(fi.length);
                let gb = (data.g[j])(0.0);
                let grad = |d1: f64, g: f64, fr: &EdgeFrame| {
                    [d1 * fr.tangent[0] + g * fr.normal[0], d1 * fr.tangent[1] + g * fr.normal[1]]
                };
                let (u, w) = (grad(a.d1, ga.v, fi), grad(b.d1, gb.v, fj));
                r.gradient = (u[0] - w[0]).hypot(u[1] - w[1]);
                let c = fi.tangent[0] * fj.tangent[0] + fi.tangent[1] * fj.tangent[1];
                let s = fi.tangent[0] * fj.normal[0] + fi.tangent[1] * fj.normal[1];
                r.second = c * (a.d2 - b.d2) - s * (ga.d1 + gb.d1);
            }
            r
        })
        .collect())
}

fn check_lengths(n: usize, data: &EdgeData) -> Result<()> {
    if data.f.len() != n || !(data.g.is_empty() || data.g.len() == n) {
        return Err(Error::Geometry(format!("boundary data for {} edges, polygon has {n}", data.f.len())));
    }
    Ok(())
}

/// Construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionOptions {
    /// Even parameter `p`; edge splines have degree `p + 1`.
    pub degree: usize,
    /// Requested knot intervals per edge; raised where the support margin requires it.
    pub knots: Vec<usize>,
    /// Gaussian radii per vertex; `None` uses a quarter of the shorter adjacent edge.
    pub radii: Option<Vec<f64>>,
}

impl ExtensionOptions {
    pub fn uniform(degree: usize, knots: usize, edges: usize) -> Self {
        ExtensionOptions { degree, knots: vec![knots; edges], radii: None }
    }
}

#[derive(Debug, Clone)]
struct EdgeTerm {
    frame: EdgeFrame,
    /// Support of the edge spline beyond each end.
    reach: f64,
    phi: Spline1D,
    psi: Option<Spline1D>,
}

/// The extension `u~`; evaluation is read-only and thread safe.
#[derive(Debug, Clone)]
pub struct ExtensionFunction {
    mode: ExtensionMode,
    degree: usize,
    vertices: Vec<Point>,
    frames: Vec<EdgeFrame>,
    radii: Vec<f64>,
    /// Blend coefficients per vertex; one entry in Poisson mode, six in biharmonic mode.
    blend: Vec<Vec<f64>>,
    edges: Vec<EdgeTerm>,
}

pub fn build_poisson_extension(poly: &SimplePolygon, data: &EdgeData, opts: &ExtensionOptions) -> Result<ExtensionFunction> {
    build(poly, data, opts, ExtensionMode::Poisson)
}

pub fn build_biharmonic_extension(poly: &SimplePolygon, data: &EdgeData, opts: &ExtensionOptions) -> Result<ExtensionFunction> {
    if data.mode() != ExtensionMode::Biharmonic {
        return Err(Error::Geometry("biharmonic extension needs normal-derivative data".into()));
    }
    build(poly, data, opts, ExtensionMode::Biharmonic)
}

fn build(poly: &SimplePolygon, data: &EdgeData, opts: &ExtensionOptions, mode: ExtensionMode) -> Result<ExtensionFunction> {
    let frames = poly.frames()?;
    let n = frames.len();
    check_lengths(n, data)?;
    let p = opts.degree;
    if p % 2 != 0 || p + 1 > crate::spline::MAX_DEGREE {
        return Err(Error::InvalidSpline(format!("extension parameter must be even and at most 8, got {p}")));
    }
    if opts.knots.len() != n {
        return Err(Error::Geometry(format!("knot counts for {} edges, polygon has {n}", opts.knots.len())));
    }
    let radii = match &opts.radii {
        Some(r) if r.len() == n && r.iter().all(|&v| v > 0.0 && v.is_finite()) => r.clone(),
        Some(_) => return Err(Error::Geometry("invalid vertex radii".into())),
        None => (0..n).map(|i| 0.25 * frames[(i + n - 1) % n].length.min(frames[i].length)).collect(),
    };
    let mut ext = ExtensionFunction {
        mode,
        degree: p,
        vertices: poly.vertices().to_vec(),
        frames: frames.clone(),
        radii,
        blend: Vec::new(),
        edges: Vec::new(),
    };
    ext.blend = match mode {
        ExtensionMode::Poisson => poisson_blend(&ext, data)?,
        ExtensionMode::Biharmonic => biharmonic_blend(&ext, &frames, data)?,
    };

    for j in 0..n {
        let fr = frames[j];
        let l = fr.length;
        let nk = opts.knots[j].max(((p + 1) as f64 * l / fr.margin).ceil() as usize).max(1);
        let reach = (p + 1) as f64 * l / nk as f64;
        let prev = frames[(j + n - 1) % n];
        let next = frames[(j + 1) % n];
        let omega = |s: f64| {
            let x = fr.point(s, 0.0);
            prev.weight_jet(x) * next.weight_jet(x)
        };
        let fj = data.f[j].clone();
        let phi_tilde = |s: f64| -> f64 {
            let x = fr.point(s, 0.0);
            let o = omega(s).v;
            match mode {
                ExtensionMode::Poisson => (fj(s).v - ext.blends(x).v) / o,
                ExtensionMode::Biharmonic => (fj(s).v - ext.blends(x).v) / (o * o * o),
            }
        };
        let spans = [fit_span(l, ext.radii[j]), fit_span(l, ext.radii[(j + 1) % n])];
        let phi = interpolate(&phi_tilde, p, l, nk, spans)?;
        let psi = if mode == ExtensionMode::Biharmonic {
            let gj = data.g[j].clone();
            let phi_ref = &phi;
            let psi_tilde = |s: f64| -> f64 {
                let x = fr.point(s, 0.0);
                let o = omega(s);
                let dn = o.along(fr.normal);
                (ext.blends(x).along(fr.normal) - gj(s).v) / (o.v * o.v) + 3.0 * phi_ref.eval(s) * dn
            };
            Some(interpolate(&psi_tilde, p, l, nk, spans)?)
        } else {
            None
        };
        ext.edges.push(EdgeTerm { frame: fr, reach, phi, psi });
    }
    Ok(ext)
}

fn gaussian(center: Point, radius: f64, x: Point) -> Jet2 {
    let r2 = radius * radius;
    let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
    let q = Jet2 {
        v: (dx * dx + dy * dy) / r2,
        dx: 2.0 * dx / r2,
        dy: 2.0 * dy / r2,
        dxx: 2.0 / r2,
        dxy: 0.0,
        dyy: 2.0 / r2,
    };
    let e = (-q.v).exp();
    q.compose(e, -e, e)
}

/// The six blend functions of vertex `i` at `x`: the Gaussian times
/// `1, a, b, a^2, b^2, a b` with `a, b` the scaled weights of the edges meeting at the vertex.
fn vertex_functions(frames: &[EdgeFrame], vertex: Point, radius: f64, i: usize, x: Point) -> [Jet2; 6] {
    let n = frames.len();
    let h = gaussian(vertex, radius, x);
    let a = frames[(i + n - 1) % n].weight_jet(x).scale(1.0 / radius);
    let b = frames[i].weight_jet(x).scale(1.0 / radius);
    [h, h * a, h * b, h * a * a, h * b * b, h * a * b]
}

fn poisson_blend(ext: &ExtensionFunction, data: &EdgeData) -> Result<Vec<Vec<f64>>> {
    let n = ext.vertices.len();
    let mat = DMatrix::from_fn(n, n, |j, i| gaussian(ext.vertices[i], ext.radii[i], ext.vertices[j]).v);
    let rhs = DVector::from_fn(n, |j, _| (data.f[j])(0.0).v);
    let sol = solve_dense(mat, rhs).ok_or(Error::VertexRadiiTooLarge)?;
    Ok(sol.iter().map(|&a| vec![a]).collect())
}

fn biharmonic_blend(ext: &ExtensionFunction, frames: &[EdgeFrame], data: &EdgeData) -> Result<Vec<Vec<f64>>> {
    let n = frames.len();
    let conditions = |j: usize, u: &Jet2| -> [f64; 6] {
        let (t, nn) = (frames[j].tangent, frames[j].normal);
        let tp = frames[(j + n - 1) % n].tangent;
        [u.v, u.along(t), u.along(nn), u.hess(t, t), u.hess(nn, t), u.hess(tp, tp)]
    };
    let mut mat = DMatrix::zeros(6 * n, 6 * n);
    for i in 0..n {
        for j in 0..n {
            let funcs = vertex_functions(frames, ext.vertices[i], ext.radii[i], i, ext.vertices[j]);
            for (c, u) in funcs.iter().enumerate() {
                for (r, v) in conditions(j, u).into_iter().enumerate() {
                    mat[(6 * j + r, 6 * i + c)] = v;
                }
            }
        }
        let block = mat.view((6 * i, 6 * i), (6, 6)).into_owned();
        let scale = block.amax();
        if block.svd(false, false).singular_values.min() <= 1e-10 * scale {
            return Err(Error::DegenerateVertexAngle(i));
        }
    }
    let mut rhs = DVector::zeros(6 * n);
    for j in 0..n {
        let i = (j + n - 1) % n;
        let f = (data.f[j])(0.0);
        let g = (data.g[j])(0.0);
        let fp = (data.f[i])(frames[i].length);
        for (r, v) in [f.v, f.d1, g.v, f.d2, g.d1, fp.d2].into_iter().enumerate() {
            rhs[6 * j + r] = v;
        }
    }
    let sol = solve_dense(mat, rhs).ok_or(Error::VertexRadiiTooLarge)?;
    Ok((0..n).map(|i| sol.rows(6 * i, 6).iter().copied().collect()).collect())
}

fn solve_dense(mat: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    let scale = mat.amax();
    let lu = mat.clone().full_piv_lu();
    let sv = mat.svd(false, false).singular_values;
    if !(sv.min() > 1e-12 * scale * sv.len() as f64) {
        return None;
    }
    lu.solve(&rhs).filter(|x| x.iter().all(|v| v.is_finite()))
}

/// Fit span at an edge end; the vertex Gaussian sets the length scale of the data there.
fn fit_span(l: f64, radius: f64) -> f64 {
    FIT_SPAN * l.min(4.0 * radius)
}

/// Interpolating spline of `fun` on `[0, l]` with `nk` uniform intervals; the
/// endpoint value and derivatives come from a one-sided polynomial fit to
/// samples strictly inside the edge.
fn interpolate(fun: &dyn Fn(f64) -> f64, p: usize, l: f64, nk: usize, spans: [f64; 2]) -> Result<Spline1D> {
    let half = p / 2;
    let start = endpoint_derivatives(fun, 0.0, 1.0, spans[0], half);
    let end = endpoint_derivatives(fun, l, -1.0, spans[1], half);
    let mut values: Vec<f64> = (0..=nk).map(|k| fun(l * k as f64 / nk as f64)).collect();
    values[0] = start[0];
    values[nk] = end[0];
    spline_interpolate(p, 0.0, l, nk, &values, &start[1..], &end[1..])
}

const FIT_SAMPLES: usize = 40;
const FIT_DEGREE: usize = 10;
const FIT_SPAN: f64 = 0.3;

/// Value and derivatives `0..=nd` at `s0` of a function only evaluable on the
/// side `dir` of `s0`, by least squares on Chebyshev-spaced samples.
fn endpoint_derivatives(fun: &dyn Fn(f64) -> f64, s0: f64, dir: f64, span: f64, nd: usize) -> Vec<f64> {
    let us: Vec<f64> = (0..FIT_SAMPLES)
        .map(|k| {
            let c = (std::f64::consts::PI * (k as f64 + 0.5) / FIT_SAMPLES as f64).cos();
            0.5 * (1.0 - c) * 0.97 + 0.03
        })
        .collect();
    let a = DMatrix::from_fn(FIT_SAMPLES, FIT_DEGREE + 1, |r, c| us[r].powi(c as i32));
    let b = DVector::from_fn(FIT_SAMPLES, |r, _| fun(s0 + dir * span * us[r]));
    let coef = a.svd(true, true).solve(&b, 1e-14).expect("svd with vectors");
    let mut out = Vec::with_capacity(nd + 1);
    let mut fact = 1.0;
    for k in 0..=nd {
        if k > 0 {
            fact *= k as f64;
        }
        out.push(coef[k] * fact * (dir / span).powi(k as i32));
    }
    out
}

impl ExtensionFunction {
    pub fn mode(&self) -> ExtensionMode {
        self.mode
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn blend_coefficients(&self) -> &[Vec<f64>] {
        &self.blend
    }

    /// Knot intervals actually used per edge.
    pub fn knots(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.phi.coefficients().len() - self.degree - 1).collect()
    }

    /// Sum of the vertex blends.
    fn blends(&self, x: Point) -> Jet2 {
        let n = self.vertices.len();
        let mut u = Jet2::ZERO;
        match self.mode {
            ExtensionMode::Poisson => {
                for i in 0..n {
                    u += gaussian(self.vertices[i], self.radii[i], x).scale(self.blend[i][0]);
                }
            }
            ExtensionMode::Biharmonic => {
                for i in 0..n {
                    let f = vertex_functions(&self.frames, self.vertices[i], self.radii[i], i, x);
                    for (c, fj) in f.iter().enumerate() {
                        u += fj.scale(self.blend[i][c]);
                    }
                }
            }
        }
        u
    }

    /// Value, gradient and Hessian of the extension at `x`.
    pub fn eval(&self, x: Point) -> Jet2 {
        let mut u = self.blends(x);
        let n = self.edges.len();
        for (j, e) in self.edges.iter().enumerate() {
            let fr = &e.frame;
            let (alpha, beta) = fr.local(x);
            let d = fr.halfwidth;
            if beta.abs() >= d || alpha <= -e.reach || alpha >= fr.length + e.reach {
                continue;
            }
            let bj = fr.beta_jet(x);
            let r = (bj * bj).scale(-1.0 / (d * d)) + Jet2::constant(1.0);
            let shape = r.powi(self.degree as i32 + 1);
            let aj = fr.alpha_jet(x);
            let profile = |s: &Spline1D| {
                let v = s.eval_derivs(alpha, 2);
                Jet1::new(v[0], v[1], v[2]).through(aj)
            };
            let prev = self.frames[(j + n - 1) % n].weight_jet(x);
            let next = self.frames[(j + 1) % n].weight_jet(x);
            let omega = prev * next;
            let term = match (&self.mode, &e.psi) {
                (ExtensionMode::Biharmonic, Some(psi)) => {
                    let o2 = omega * omega;
                    profile(&e.phi) * o2 * omega + profile(psi) * o2 * fr.weight_jet(x)
                }
                _ => profile(&e.phi) * omega,
            };
            u += term * shape;
        }
        u
    }

    /// Maximum deviations `(|u~ - f|, |du~/dn - g|)` over `samples` points per edge.
    pub fn boundary_error(&self, data: &EdgeData, samples: usize) -> (f64, f64) {
        let mut ev: f64 = 0.0;
        let mut en: f64 = 0.0;
        for (j, e) in self.edges.iter().enumerate() {
            let l = e.frame.length;
            for k in 0..=samples {
                let s = l * k as f64 / samples as f64;
                let u = self.eval(e.frame.point(s, 0.0));
                ev = ev.max((u.v - (data.f[j])(s).v).abs());
                if let Some(g) = data.g.get(j) {
                    en = en.max((u.along(e.frame.normal) - g(s).v).abs());
                }
            }
        }
        (ev, en)
    }
}
