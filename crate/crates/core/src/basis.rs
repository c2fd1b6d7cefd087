//! Weighted extended B-splines.
//!
//! B-spline indices are named by the lower-left cell of their support. An index
//! is inner when its support contains an interior cell and outer when it only
//! meets boundary cells. Each outer spline is distributed onto the closest full
//! `(p+1) x (p+1)` array of inner indices with tensor Lagrange weights, and the
//! result is multiplied by the weight function:
//!
//! `B_i = w / w(x_i) * (b_i + sum_j e_ij b_j)`.

use crate::error::{Error, Result};
use crate::geometry::{CellClass, CellClasses, DomainSpec, GridSpec, Point, Weight};
use crate::jet::Jet2;
use crate::spline::{LocalBasis, SplineSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Inner(usize),
    Outer(usize),
    Discarded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexClassification {
    /// Index grid extents.
    pub dims: (usize, usize),
    pub kinds: Vec<IndexKind>,
    /// Inner indices in lexicographic `(kx, ky)` order; position is the global row.
    pub inner: Vec<[usize; 2]>,
    pub outer: Vec<[usize; 2]>,
}

impl IndexClassification {
    pub fn kind(&self, kx: usize, ky: usize) -> IndexKind {
        self.kinds[ky * self.dims.0 + kx]
    }
}

/// Box sums over a 2D indicator with inclusive `(w x w)` windows.
struct Prefix {
    nx: usize,
    s: Vec<u32>,
}

impl Prefix {
    fn new(nx: usize, ny: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut s = vec![0u32; (nx + 1) * (ny + 1)];
        for y in 0..ny {
            for x in 0..nx {
                s[(y + 1) * (nx + 1) + x + 1] =
                    f(x, y) as u32 + s[y * (nx + 1) + x + 1] + s[(y + 1) * (nx + 1) + x] - s[y * (nx + 1) + x];
            }
        }
        Prefix { nx, s }
    }

    fn window(&self, x0: usize, y0: usize, w: usize) -> u32 {
        let n = self.nx + 1;
        let (x1, y1) = (x0 + w, y0 + w);
        self.s[y1 * n + x1] + self.s[y0 * n + x0] - self.s[y0 * n + x1] - self.s[y1 * n + x0]
    }
}

pub fn classify_indices(grid: &GridSpec, degree: usize, cells: &CellClasses) -> Result<IndexClassification> {
    let (dx, dy) = grid.index_dims(degree);
    let w = degree + 1;
    let interior = Prefix::new(grid.nx, grid.ny, |x, y| cells.get(x, y) == CellClass::Interior);
    let active = Prefix::new(grid.nx, grid.ny, |x, y| cells.get(x, y) != CellClass::Exterior);
    let mut kinds = vec![IndexKind::Discarded; dx * dy];
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for kx in 0..dx {
        for ky in 0..dy {
            if interior.window(kx, ky, w) > 0 {
                kinds[ky * dx + kx] = IndexKind::Inner(inner.len());
                inner.push([kx, ky]);
            } else if active.window(kx, ky, w) > 0 {
                kinds[ky * dx + kx] = IndexKind::Outer(outer.len());
                outer.push([kx, ky]);
            }
        }
    }
    if inner.is_empty() {
        return Err(Error::NoInteriorCells);
    }
    Ok(IndexClassification { dims: (dx, dy), kinds, inner, outer })
}

/// Lagrange weights of the nodes `first..first+n` evaluated at `x`.
pub fn lagrange_weights(first: i64, n: usize, x: i64) -> Vec<f64> {
    (0..n as i64)
        .map(|a| {
            let mut v = 1.0;
            for b in 0..n as i64 {
                if a != b {
                    v *= (x - first - b) as f64 / (a - b) as f64;
                }
            }
            v
        })
        .collect()
}

/// For every outer index: the lower corner of its inner array and the pairs
/// `(inner row, e_ij)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionTable {
    pub arrays: Vec<[usize; 2]>,
    pub coefficients: Vec<Vec<(usize, f64)>>,
}

impl ExtensionTable {
    /// `J(i)`: outer slots extended onto inner row `i`, with their coefficients.
    pub fn inverted(&self, n_inner: usize) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); n_inner];
        for (j, list) in self.coefficients.iter().enumerate() {
            for &(i, e) in list {
                out[i].push((j, e));
            }
        }
        out
    }
}

pub fn build_extension(cls: &IndexClassification, degree: usize) -> Result<ExtensionTable> {
    let (dx, dy) = cls.dims;
    let w = degree + 1;
    if dx < w || dy < w {
        return Err(Error::ExtensionFailed);
    }
    let is_inner = Prefix::new(dx, dy, |x, y| matches!(cls.kind(x, y), IndexKind::Inner(_)));
    let n = cls.inner.len() as f64;
    let centroid = cls.inner.iter().fold([0.0, 0.0], |c, i| [c[0] + i[0] as f64 / n, c[1] + i[1] as f64 / n]);
    let half = degree as f64 / 2.0;
    let radius = 2 * w as i64;
    let mut arrays = Vec::with_capacity(cls.outer.len());
    let mut coefficients = Vec::with_capacity(cls.outer.len());
    for &j in &cls.outer {
        let mut best: Option<(f64, f64, [usize; 2])> = None;
        let (jx, jy) = (j[0] as i64, j[1] as i64);
        let lo_x = (jx - radius).max(0);
        let hi_x = (jx + radius).min((dx - w) as i64);
        let lo_y = (jy - radius).max(0);
        let hi_y = (jy + radius).min((dy - w) as i64);
        for lx in lo_x..=hi_x {
            for ly in lo_y..=hi_y {
                if is_inner.window(lx as usize, ly as usize, w) as usize != w * w {
                    continue;
                }
                let c = [lx as f64 + half, ly as f64 + half];
                let d = (c[0] - jx as f64).hypot(c[1] - jy as f64);
                let t = (c[0] - centroid[0]).hypot(c[1] - centroid[1]);
                let better = match best {
                    None => true,
                    Some((bd, bt, _)) => d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && t < bt - 1e-12),
                };
                if better {
                    best = Some((d, t, [lx as usize, ly as usize]));
                }
            }
        }
        let (_, _, l) = best.ok_or(Error::ExtensionFailed)?;
        let ex = lagrange_weights(l[0] as i64, w, jx);
        let ey = lagrange_weights(l[1] as i64, w, jy);
        let mut list = Vec::with_capacity(w * w);
        for (a, &wx) in ex.iter().enumerate() {
            for (b, &wy) in ey.iter().enumerate() {
                match cls.kind(l[0] + a, l[1] + b) {
                    IndexKind::Inner(row) => list.push((row, wx * wy)),
                    _ => unreachable!("array checked to be inner"),
                }
            }
        }
        arrays.push(l);
        coefficients.push(list);
    }
    Ok(ExtensionTable { arrays, coefficients })
}

/// Linear map from the `(p+1)^2` raw weighted splines active on one cell to the
/// global rows they contribute to: `B_row = sum_m e[r][m] (w b_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMap {
    pub rows: Vec<usize>,
    /// `rows.len() x (p+1)^2`, row-major.
    pub e: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WebBasis {
    grid: GridSpec,
    degree: usize,
    splines: (SplineSpec, SplineSpec),
    weight: Weight,
    classification: IndexClassification,
    extension: ExtensionTable,
    normalizers: Vec<f64>,
    normalization_points: Vec<Point>,
    /// Per raw index: `(row, coefficient)` pairs including the normalizer.
    expand: Vec<Vec<(usize, f64)>>,
    cells: CellClasses,
}

impl WebBasis {
    pub fn new(grid: GridSpec, degree: usize, weight: Weight, domain: &DomainSpec, cells: CellClasses) -> Result<Self> {
        let splines = grid.splines(degree)?;
        let classification = classify_indices(&grid, degree, &cells)?;
        let extension = build_extension(&classification, degree)?;
        let w = degree + 1;
        let mut normalizers = Vec::with_capacity(classification.inner.len());
        let mut normalization_points = Vec::with_capacity(classification.inner.len());
        for &[kx, ky] in &classification.inner {
            let centre = [
                grid.origin[0] + grid.h * (kx as f64 + w as f64 / 2.0),
                grid.origin[1] + grid.h * (ky as f64 + w as f64 / 2.0),
            ];
            let mut x = centre;
            let mut value = weight.value(x);
            if !domain.contains(x) || !(value > 0.0) {
                let mut best = (f64::INFINITY, centre);
                for cx in kx..kx + w {
                    for cy in ky..ky + w {
                        if cells.get(cx, cy) == CellClass::Interior {
                            let c = grid.cell_center(cx, cy);
                            let d = (c[0] - centre[0]).hypot(c[1] - centre[1]);
                            if d < best.0 {
                                best = (d, c);
                            }
                        }
                    }
                }
                x = best.1;
                value = weight.value(x);
            }
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Geometry(format!("weight not positive at normalization point {x:?}")));
            }
            normalizers.push(value);
            normalization_points.push(x);
        }
        let (dx, dy) = classification.dims;
        let mut expand = vec![Vec::new(); dx * dy];
        for (r, kind) in classification.kinds.iter().enumerate() {
            expand[r] = match *kind {
                IndexKind::Inner(row) => vec![(row, 1.0 / normalizers[row])],
                IndexKind::Outer(slot) => {
                    extension.coefficients[slot].iter().map(|&(row, e)| (row, e / normalizers[row])).collect()
                }
                IndexKind::Discarded => Vec::new(),
            };
        }
        for (cx, cy, _) in cells.active() {
            if cx < degree || cy < degree || cx >= grid.nx || cy >= grid.ny {
                return Err(Error::Geometry("grid margin too small for the spline degree".into()));
            }
        }
        Ok(WebBasis {
            grid,
            degree,
            splines,
            weight,
            classification,
            extension,
            normalizers,
            normalization_points,
            expand,
            cells,
        })
    }

    pub fn len(&self) -> usize {
        self.classification.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classification.inner.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn cells(&self) -> &CellClasses {
        &self.cells
    }

    pub fn classification(&self) -> &IndexClassification {
        &self.classification
    }

    pub fn extension(&self) -> &ExtensionTable {
        &self.extension
    }

    pub fn normalizers(&self) -> &[f64] {
        &self.normalizers
    }

    pub fn normalization_point(&self, row: usize) -> Point {
        self.normalization_points[row]
    }

    /// Number of raw splines active on a cell.
    pub fn local_count(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub(crate) fn raw_index(&self, cx: usize, cy: usize, m: usize) -> usize {
        let w = self.degree + 1;
        let (kx, ky) = (cx - self.degree + m % w, cy - self.degree + m / w);
        ky * self.classification.dims.0 + kx
    }

    pub fn cell_map(&self, cx: usize, cy: usize) -> CellMap {
        let nloc = self.local_count();
        let mut rows: Vec<usize> =
            (0..nloc).flat_map(|m| self.expand[self.raw_index(cx, cy, m)].iter().map(|&(r, _)| r)).collect();
        rows.sort_unstable();
        rows.dedup();
        let mut e = vec![0.0; rows.len() * nloc];
        for m in 0..nloc {
            for &(r, c) in &self.expand[self.raw_index(cx, cy, m)] {
                let pos = rows.binary_search(&r).expect("row collected above");
                e[pos * nloc + m] += c;
            }
        }
        CellMap { rows, e }
    }

    /// Jets of the unweighted splines active on cell `(cx, cy)` at `x`; entry
    /// `mx + (p+1) my` belongs to index `(cx - p + mx, cy - p + my)`.
    pub fn local_splines(&self, cx: usize, cy: usize, x: Point, out: &mut [Jet2]) {
        let p = self.degree;
        let w = p + 1;
        let nd = p.min(2);
        let lo = self.grid.cell_lo(cx, cy);
        let mut bx = LocalBasis::default();
        let mut by = LocalBasis::default();
        bx.fill(p, ((x[0] - lo[0]) / self.grid.h).clamp(0.0, 1.0), nd);
        by.fill(p, ((x[1] - lo[1]) / self.grid.h).clamp(0.0, 1.0), nd);
        bx.rescale(p, nd, self.splines.0.spacing());
        by.rescale(p, nd, self.splines.1.spacing());
        for my in 0..w {
            for mx in 0..w {
                out[my * w + mx] = Jet2 {
                    v: bx.d[0][mx] * by.d[0][my],
                    dx: bx.d[1][mx] * by.d[0][my],
                    dy: bx.d[0][mx] * by.d[1][my],
                    dxx: bx.d[2][mx] * by.d[0][my],
                    dxy: bx.d[1][mx] * by.d[1][my],
                    dyy: bx.d[0][mx] * by.d[2][my],
                };
            }
        }
    }

    /// Jets of `w b_m` for the splines active on cell `(cx, cy)`.
    pub fn local_weighted(&self, cx: usize, cy: usize, x: Point, out: &mut [Jet2]) -> Result<()> {
        self.local_splines(cx, cy, x, out);
        let w = self.weight.eval(x)?;
        for j in out.iter_mut() {
            *j = *j * w;
        }
        Ok(())
    }

    fn cell_of(&self, x: Point) -> Option<(usize, usize)> {
        let (cx, cy) = self.grid.cell_of(x)?;
        (cx >= self.degree && cy >= self.degree).then_some((cx, cy))
    }

    /// Jet of the basis function with global row `row` at `x`.
    pub fn eval(&self, row: usize, x: Point) -> Result<Jet2> {
        let Some((cx, cy)) = self.cell_of(x) else { return Ok(Jet2::ZERO) };
        let mut local = vec![Jet2::ZERO; self.local_count()];
        self.local_weighted(cx, cy, x, &mut local)?;
        let mut acc = Jet2::ZERO;
        for (m, j) in local.iter().enumerate() {
            for &(r, c) in &self.expand[self.raw_index(cx, cy, m)] {
                if r == row {
                    acc += j.scale(c);
                }
            }
        }
        Ok(acc)
    }

    /// Coefficients on the raw index grid of `sum_i w_i B_i` (before weighting).
    pub fn raw_coefficients(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.len(), "coefficient vector length");
        self.expand.iter().map(|list| list.iter().map(|&(r, c)| c * w[r]).sum()).collect()
    }

    /// Jet of `w * sum_k raw[k] b_k` at `x`; zero outside the grid.
    pub fn field_jet(&self, raw: &[f64], x: Point) -> Result<Jet2> {
        let Some((cx, cy)) = self.cell_of(x) else { return Ok(Jet2::ZERO) };
        let mut local = vec![Jet2::ZERO; self.local_count()];
        self.local_weighted(cx, cy, x, &mut local)?;
        Ok(local.iter().enumerate().fold(Jet2::ZERO, |acc, (m, j)| acc + j.scale(raw[self.raw_index(cx, cy, m)])))
    }

    pub fn field(&self, w: &[f64]) -> Field<'_> {
        Field { basis: self, raw: self.raw_coefficients(w) }
    }
}

/// A function `sum_i w_i B_i` ready for pointwise evaluation.
#[derive(Debug, Clone)]
pub struct Field<'a> {
    basis: &'a WebBasis,
    raw: Vec<f64>,
}

impl Field<'_> {
    pub fn jet(&self, x: Point) -> Result<Jet2> {
        self.basis.field_jet(&self.raw, x)
    }

    pub fn value(&self, x: Point) -> Result<f64> {
        Ok(self.jet(x)?.v)
    }
}
