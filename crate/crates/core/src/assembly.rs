//! Galerkin assembly of plate stiffness, geometric stiffness and load vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{CellMap, Field, WebBasis};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, GridSpec, Point, Weight};
use crate::jet::Jet2;
use crate::quadrature::{segment_rule, CellRules, SegmentRule};
use crate::solvers::{self, smallest_positive, EigenMethod, SparseSym};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateMaterial {
    #[serde(rename = "D")]
    pub d: f64,
    pub nu: f64,
    #[serde(rename = "E", default = "one")]
    pub e: f64,
    #[serde(default = "one")]
    pub thickness: f64,
}

fn one() -> f64 {
    1.0
}

impl PlateMaterial {
    pub fn new(d: f64, nu: f64, e: f64, thickness: f64) -> Result<Self> {
        let m = PlateMaterial { d, nu, e, thickness };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) || !(0.0..0.5).contains(&self.nu) || !(self.e > 0.0) || !(self.thickness > 0.0) {
            return Err(Error::Config(format!(
                "invalid material: need D > 0, 0 <= nu < 0.5, E > 0, thickness > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Straight stiffener between two points of the closed domain.
///
/// `ts` is the magnitude of the axial force, positive in compression; it enters
/// the geometric stiffness with the same destabilizing sign as compressive
/// plate stress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stiffener {
    pub start: Point,
    pub end: Point,
    #[serde(rename = "EI")]
    pub ei: f64,
    #[serde(default)]
    pub r0: f64,
    #[serde(default)]
    pub zeta0: f64,
    #[serde(default)]
    pub ts: f64,
}

impl Stiffener {
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        let len = (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1]);
        if !(len > 0.0) {
            return Err(Error::Config("stiffener endpoints coincide".into()));
        }
        if !(self.ei >= 0.0) || !(self.r0 >= 0.0) || !self.zeta0.is_finite() || !self.ts.is_finite() {
            return Err(Error::Config(format!("invalid stiffener properties {self:?}")));
        }
        if !domain.contains_segment(self.start, self.end) {
            return Err(Error::Config(format!("stiffener {:?} -> {:?} lies outside the domain", self.start, self.end)));
        }
        Ok(())
    }

    pub fn tangent(&self) -> Point {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let l = d[0].hypot(d[1]);
        [d[0] / l, d[1] / l]
    }

    /// In-plane direction perpendicular to the stiffener.
    pub fn zeta(&self) -> Point {
        let t = self.tangent();
        [-t[1], t[0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSettings {
    /// Gauss points per axis; `None` selects `p + 2`.
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_depth() -> usize {
    6
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { order: None, depth: default_depth() }
    }
}

impl QuadSettings {
    pub fn order_for(&self, degree: usize) -> usize {
        self.order.unwrap_or(degree + 2).max(1)
    }
}

/// Basis, quadrature and geometry shared by every assembly on one grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub domain: DomainSpec,
    pub basis: WebBasis,
    pub rules: CellRules,
    pub quad: QuadSettings,
}

impl Discretization {
    pub fn new(domain: &DomainSpec, weight: Weight, h: f64, degree: usize, quad: QuadSettings) -> Result<Self> {
        let grid = GridSpec::covering(domain.bbox(), h, degree)?;
        let cells = domain.classify_cells(&grid);
        let rules = CellRules::build(&grid, &cells, domain, quad.order_for(degree), quad.depth);
        let basis = WebBasis::new(grid, degree, weight, domain, cells)?;
        Ok(Discretization { domain: domain.clone(), basis, rules, quad })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn field(&self, w: &[f64]) -> Field<'_> {
        self.basis.field(w)
    }

    /// Gauss rule along a straight segment with this discretization's order.
    pub fn segment(&self, a: Point, b: Point) -> Result<SegmentRule> {
        segment_rule(a, b, self.basis.grid(), self.quad.order_for(self.basis.degree()))
    }
}

type Triplets = Vec<(usize, usize, f64)>;

fn push_cell_matrix(map: &CellMap, nloc: usize, local: &[f64], out: &mut Triplets) {
    let r = map.rows.len();
    // t = E M, then K = t E^T
    let mut t = vec![0.0; r * nloc];
    for a in 0..r {
        let ea = &map.e[a * nloc..(a + 1) * nloc];
        for (m, &e) in ea.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            let row = &local[m * nloc..(m + 1) * nloc];
            for (tv, lv) in t[a * nloc..(a + 1) * nloc].iter_mut().zip(row) {
                *tv += e * lv;
            }
        }
    }
    for a in 0..r {
        let ta = &t[a * nloc..(a + 1) * nloc];
        for b in a..r {
            let eb = &map.e[b * nloc..(b + 1) * nloc];
            let v: f64 = ta.iter().zip(eb).map(|(x, y)| x * y).sum();
            if v != 0.0 {
                out.push((map.rows[a], map.rows[b], v));
            }
        }
    }
}

/// Symmetric matrix from a per-point local integrand on the raw weighted splines.
/// `f(x, weight, jets, local)` accumulates into the row-major `nloc x nloc` block.
pub fn assemble_matrix<F>(disc: &Discretization, f: F) -> Result<SparseSym>
where
    F: Fn(Point, f64, &[Jet2], &mut [f64]) -> Result<()> + Sync,
{
    let basis = &disc.basis;
    let nloc = basis.local_count();
    let parts: Vec<Result<Triplets>> = disc
        .rules
        .cells
        .par_iter()
        .zip(disc.rules.rules.par_iter())
        .map(|(&(cx, cy), rule)| {
            let mut out = Vec::new();
            if rule.is_empty() {
                return Ok(out);
            }
            let mut jets = vec![Jet2::ZERO; nloc];
            let mut local = vec![0.0; nloc * nloc];
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                basis.local_weighted(cx, cy, x, &mut jets)?;
                f(x, w, &jets, &mut local)?;
            }
            push_cell_matrix(&basis.cell_map(cx, cy), nloc, &local, &mut out);
            Ok(out)
        })
        .collect();
    let mut triplets = Vec::new();
    for p in parts {
        triplets.extend(p?);
    }
    Ok(SparseSym::from_triplets(basis.len(), triplets))
}

/// `k` vectors at once; `f` accumulates into the row-major `nloc x k` block.
pub fn assemble_vectors<F>(disc: &Discretization, k: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(Point, f64, &[Jet2], &mut [f64]) -> Result<()> + Sync,
{
    let basis = &disc.basis;
    let nloc = basis.local_count();
    let parts: Vec<Result<(CellMap, Vec<f64>)>> = disc
        .rules
        .cells
        .par_iter()
        .zip(disc.rules.rules.par_iter())
        .map(|(&(cx, cy), rule)| {
            let mut jets = vec![Jet2::ZERO; nloc];
            let mut local = vec![0.0; nloc * k];
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                basis.local_weighted(cx, cy, x, &mut jets)?;
                f(x, w, &jets, &mut local)?;
            }
            Ok((basis.cell_map(cx, cy), local))
        })
        .collect();
    let mut out = vec![vec![0.0; basis.len()]; k];
    for part in parts {
        let (map, local) = part?;
        for (a, &row) in map.rows.iter().enumerate() {
            for m in 0..nloc {
                let e = map.e[a * nloc + m];
                if e == 0.0 {
                    continue;
                }
                for (c, o) in out.iter_mut().enumerate() {
                    o[row] += e * local[m * k + c];
                }
            }
        }
    }
    Ok(out)
}

/// Line-integral matrix along a segment rule; `f(x, tangent, weight, jets, local)`.
pub fn assemble_line_matrix<F>(disc: &Discretization, rule: &SegmentRule, f: F) -> Result<SparseSym>
where
    F: Fn(Point, Point, f64, &[Jet2], &mut [f64]),
{
    let basis = &disc.basis;
    let nloc = basis.local_count();
    let mut triplets = Vec::new();
    let mut jets = vec![Jet2::ZERO; nloc];
    let mut local = vec![0.0; nloc * nloc];
    for ((&x, &w), &t) in rule.points.iter().zip(&rule.weights).zip(&rule.tangents) {
        let (cx, cy) = basis.grid().cell_of(x).ok_or(Error::OutsideDomain(x[0], x[1]))?;
        basis.local_weighted(cx, cy, x, &mut jets)?;
        local.iter_mut().for_each(|v| *v = 0.0);
        f(x, t, w, &jets, &mut local);
        push_cell_matrix(&basis.cell_map(cx, cy), nloc, &local, &mut triplets);
    }
    Ok(SparseSym::from_triplets(basis.len(), triplets))
}

/// Sum of two matrices of equal dimension.
pub fn add(a: &SparseSym, b: &SparseSym) -> SparseSym {
    assert_eq!(a.dim(), b.dim());
    let mut t: Triplets = Vec::with_capacity(a.nnz_upper() + b.nnz_upper());
    for m in [a, b] {
        for i in 0..m.dim() {
            t.extend(m.row(i).map(|(j, v)| (i, j, v)));
        }
    }
    SparseSym::from_triplets(a.dim(), t)
}

/// Plate bilinear form `D int (Bxx + nu Byy) Cxx + 2(1-nu) Bxy Cxy + (Byy + nu Bxx) Cyy`.
pub fn plate_form(disc: &Discretization, d: f64, nu: f64) -> Result<SparseSym> {
    assemble_matrix(disc, plate_integrand(d, nu, disc.basis.local_count()))
}

/// Local integrand of [`plate_form`].
pub fn plate_integrand(d: f64, nu: f64, nloc: usize) -> impl Fn(Point, f64, &[Jet2], &mut [f64]) -> Result<()> + Sync {
    move |_, w, jets, local| {
        for (m, bm) in jets.iter().enumerate() {
            let (xm, ym) = (w * d * (bm.dxx + nu * bm.dyy), w * d * (bm.dyy + nu * bm.dxx));
            let zm = w * d * 2.0 * (1.0 - nu) * bm.dxy;
            let row = &mut local[m * nloc..(m + 1) * nloc];
            for (v, bn) in row.iter_mut().zip(jets) {
                *v += xm * bn.dxx + zm * bn.dxy + ym * bn.dyy;
            }
        }
        Ok(())
    }
}

/// Local integrand of the plate stress pairing in [`assemble_geometric`].
pub fn stress_integrand(stress: &dyn StressField, nloc: usize) -> impl Fn(Point, f64, &[Jet2], &mut [f64]) -> Result<()> + Sync + '_ {
    move |x, w, jets, local| {
        let [sxx, syy, sxy] = stress.stress(x)?;
        for (m, bm) in jets.iter().enumerate() {
            let gx = w * (sxx * bm.dx + sxy * bm.dy);
            let gy = w * (syy * bm.dy + sxy * bm.dx);
            let row = &mut local[m * nloc..(m + 1) * nloc];
            for (v, bn) in row.iter_mut().zip(jets) {
                *v += gx * bn.dx + gy * bn.dy;
            }
        }
        Ok(())
    }
}

/// Largest `|M - M^T| / |M|` over the per-cell blocks of a local integrand.
pub fn local_asymmetry<F>(disc: &Discretization, f: F) -> Result<f64>
where
    F: Fn(Point, f64, &[Jet2], &mut [f64]) -> Result<()> + Sync,
{
    let basis = &disc.basis;
    let nloc = basis.local_count();
    let defects: Vec<Result<f64>> = disc
        .rules
        .cells
        .par_iter()
        .zip(disc.rules.rules.par_iter())
        .map(|(&(cx, cy), rule)| {
            let mut jets = vec![Jet2::ZERO; nloc];
            let mut local = vec![0.0; nloc * nloc];
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                basis.local_weighted(cx, cy, x, &mut jets)?;
                f(x, w, &jets, &mut local)?;
            }
            let big = local.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut d = 0.0f64;
            for m in 0..nloc {
                for n in m + 1..nloc {
                    d = d.max((local[m * nloc + n] - local[n * nloc + m]).abs());
                }
            }
            Ok(if big > 0.0 { d / big } else { 0.0 })
        })
        .collect();
    defects.into_iter().try_fold(0.0f64, |m, d| Ok(m.max(d?)))
}

pub fn assemble_bending(disc: &Discretization, material: &PlateMaterial, stiffeners: &[Stiffener]) -> Result<SparseSym> {
    material.validate()?;
    let mut a = plate_form(disc, material.d, material.nu)?;
    let nloc = disc.basis.local_count();
    for s in stiffeners {
        s.validate(&disc.domain)?;
        if s.ei == 0.0 {
            continue;
        }
        let rule = disc.segment(s.start, s.end)?;
        let ei = s.ei;
        let line = assemble_line_matrix(disc, &rule, |_, t, w, jets, local| {
            for (m, bm) in jets.iter().enumerate() {
                let cm = w * ei * bm.hess(t, t);
                for (n, bn) in jets.iter().enumerate() {
                    local[m * nloc + n] += cm * bn.hess(t, t);
                }
            }
        })?;
        a = add(&a, &line);
    }
    Ok(a)
}

pub fn assemble_load(disc: &Discretization, load: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Vec<f64>> {
    Ok(assemble_vectors(disc, 1, |x, w, jets, local| {
        let p = load(x);
        for (v, j) in local.iter_mut().zip(jets) {
            *v += w * p * j.v;
        }
        Ok(())
    })?
    .remove(0))
}

/// In-plane stress `(sigma_xx, sigma_yy, sigma_xy)` as a function of position.
pub trait StressField: Sync {
    fn stress(&self, x: Point) -> Result<[f64; 3]>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantStress(pub [f64; 3]);

impl StressField for ConstantStress {
    fn stress(&self, _: Point) -> Result<[f64; 3]> {
        Ok(self.0)
    }
}

/// Geometric stiffness: plate stress pairing of first derivatives plus the
/// stiffener shortening terms `-T_s int B_t C_t + r0^2 B_tz C_tz - zeta0 (B_t C_tz + B_tz C_t)`.
pub fn assemble_geometric(disc: &Discretization, stress: &dyn StressField, stiffeners: &[Stiffener]) -> Result<SparseSym> {
    let nloc = disc.basis.local_count();
    let mut b = assemble_matrix(disc, stress_integrand(stress, nloc))?;
    for s in stiffeners {
        s.validate(&disc.domain)?;
        if s.ts == 0.0 {
            continue;
        }
        let rule = disc.segment(s.start, s.end)?;
        let z = s.zeta();
        let (ts, r2, z0) = (s.ts, s.r0 * s.r0, s.zeta0);
        let line = assemble_line_matrix(disc, &rule, |_, t, w, jets, local| {
            for (m, bm) in jets.iter().enumerate() {
                let (am, cm) = (bm.along(t), bm.hess(t, z));
                for (n, bn) in jets.iter().enumerate() {
                    let (an, cn) = (bn.along(t), bn.hess(t, z));
                    local[m * nloc + n] -= w * ts * (am * an + r2 * cm * cn - z0 * (am * cn + cm * an));
                }
            }
        })?;
        b = add(&b, &line);
    }
    Ok(b)
}

pub fn solve_bending(a: &SparseSym, b: &[f64]) -> Result<Vec<f64>> {
    if b.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; b.len()]);
    }
    let w = solvers::solve(a, b)?;
    let r = solvers::backward_error(a, &w, b);
    if !(r < 1e-12) {
        return Err(Error::SingularStiffness);
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucklingResult {
    pub lambda: f64,
    /// Mode coefficients scaled to max-norm 1.
    pub mode: Vec<f64>,
}

/// Smallest positive `lambda` with `A w = lambda (-B) w`.
pub fn solve_buckling(a: &SparseSym, b: &SparseSym, method: EigenMethod) -> Result<BucklingResult> {
    if b.max_abs() == 0.0 {
        return Err(Error::NoBuckling);
    }
    let pair = smallest_positive(a, &b.scaled(-1.0), method)?;
    Ok(BucklingResult { lambda: pair.value, mode: pair.vector })
}
