//! Uniform-knot B-splines.
//!
//! A [`SplineSpec`] fixes the degree, the knot step and the position of knot 0;
//! the B-spline with index `k` is supported on `[knot(k), knot(k + p + 1)]`.
//! Cells are half open, so at a knot the right-hand polynomial piece is used.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest degree handled by the fixed-size local tables.
pub const MAX_DEGREE: usize = 9;

/// Highest derivative order served by [`SplineSpec::eval`].
pub const MAX_DERIV: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineSpec {
    degree: usize,
    spacing: f64,
    origin: f64,
}

impl SplineSpec {
    pub fn new(degree: usize, spacing: f64, origin: f64) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidSpline(format!("degree {degree} outside 1..={MAX_DEGREE}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidSpline(format!("knot spacing must be positive, got {spacing}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidSpline("non-finite origin".into()));
        }
        Ok(SplineSpec { degree, spacing, origin })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn knot(&self, k: i64) -> f64 {
        self.origin + k as f64 * self.spacing
    }

    pub fn support(&self, index: i64) -> (f64, f64) {
        (self.knot(index), self.knot(index + self.degree as i64 + 1))
    }

    /// Cell index and local coordinate in `[0, 1)` of `x`.
    pub fn locate(&self, x: f64) -> (i64, f64) {
        let t = (x - self.origin) / self.spacing;
        let c = t.floor();
        (c as i64, t - c)
    }

    /// `d^q/dx^q` of the B-spline `index` at `x`.
    pub fn eval(&self, index: i64, x: f64, deriv: usize) -> Result<f64> {
        if deriv > self.degree || deriv > MAX_DERIV {
            return Err(Error::DerivativeOrder { order: deriv, degree: self.degree });
        }
        let (cell, u) = self.locate(x);
        let p = self.degree as i64;
        if index > cell || index < cell - p {
            return Ok(0.0);
        }
        let mut table = LocalBasis::default();
        table.fill(self.degree, u, deriv);
        let scale = self.spacing.powi(-(deriv as i32));
        Ok(table.d[deriv][(index - (cell - p)) as usize] * scale)
    }

    /// All B-splines that are nonzero on the cell containing `x`, with derivatives
    /// up to `nderiv` already scaled by the knot step. Entry `m` belongs to index
    /// `first + m`.
    pub fn nonzero(&self, x: f64, nderiv: usize) -> (i64, LocalBasis) {
        let (cell, u) = self.locate(x);
        let mut table = LocalBasis::default();
        table.fill(self.degree, u, nderiv);
        table.rescale(self.degree, nderiv, self.spacing);
        (cell - self.degree as i64, table)
    }
}

/// Values and derivatives of the `p + 1` B-splines active on one cell.
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    pub d: [[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1],
}

impl Default for LocalBasis {
    fn default() -> Self {
        LocalBasis { d: [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1] }
    }
}

impl LocalBasis {
    /// Derivative table on integer knots at local coordinate `u` (derivatives with
    /// respect to the knot-index variable). Follows the triangular de Boor scheme.
    pub fn fill(&mut self, p: usize, u: f64, nderiv: usize) {
        let nderiv = nderiv.min(p);
        let mut ndu = [[0.0f64; MAX_DEGREE + 1]; MAX_DEGREE + 1];
        let mut left = [0.0f64; MAX_DEGREE + 1];
        let mut right = [0.0f64; MAX_DEGREE + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u + j as f64 - 1.0;
            right[j] = j as f64 - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        for row in self.d.iter_mut() {
            *row = [0.0; MAX_DEGREE + 1];
        }
        for j in 0..=p {
            self.d[0][j] = ndu[j][p];
        }
        let mut a = [[0.0f64; MAX_DEGREE + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nderiv {
                let mut dval = 0.0;
                let rk = r as i64 - k as i64;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    dval = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as i64 - 1 <= pk as i64 { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as i64) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    dval += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    dval += a[s2][k] * ndu[r][pk];
                }
                self.d[k][r] = dval;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut f = p as f64;
        for k in 1..=nderiv {
            for j in 0..=p {
                self.d[k][j] *= f;
            }
            f *= (p - k) as f64;
        }
    }

    pub(crate) fn rescale(&mut self, p: usize, nderiv: usize, spacing: f64) {
        let mut f = 1.0;
        for k in 1..=nderiv.min(p) {
            f /= spacing;
            for j in 0..=p {
                self.d[k][j] *= f;
            }
        }
    }
}

/// Cardinal B-spline `N_p(t)` on knots `0, 1, ..., p + 1` (Cox-de Boor recursion).
pub fn cardinal(p: usize, t: f64) -> f64 {
    if p == 0 {
        return if (0.0..1.0).contains(&t) { 1.0 } else { 0.0 };
    }
    if t <= 0.0 || t >= (p + 1) as f64 {
        return 0.0;
    }
    let pf = p as f64;
    (t * cardinal(p - 1, t) + (pf + 1.0 - t) * cardinal(p - 1, t - 1.0)) / pf
}

/// A spline `sum_k c_k b_k` over a contiguous index range.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline1D {
    spec: SplineSpec,
    first: i64,
    coefficients: Vec<f64>,
}

impl Spline1D {
    pub fn new(spec: SplineSpec, first: i64, coefficients: Vec<f64>) -> Self {
        Spline1D { spec, first, coefficients }
    }

    pub fn spec(&self) -> &SplineSpec {
        &self.spec
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn first_index(&self) -> i64 {
        self.first
    }

    /// Value and derivatives `[s, s', s'', ...]` up to `nderiv`.
    pub fn eval_derivs(&self, x: f64, nderiv: usize) -> [f64; MAX_DEGREE + 1] {
        let mut out = [0.0; MAX_DEGREE + 1];
        let (first, table) = self.spec.nonzero(x, nderiv);
        let last = self.first + self.coefficients.len() as i64;
        for m in 0..=self.spec.degree {
            let k = first + m as i64;
            if k < self.first || k >= last {
                continue;
            }
            let c = self.coefficients[(k - self.first) as usize];
            for (q, o) in out.iter_mut().enumerate().take(nderiv.min(self.spec.degree) + 1) {
                *o += c * table.d[q][m];
            }
        }
        out
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivs(x, 0)[0]
    }
}

/// Interpolating spline of degree `p + 1` (`p` even) on uniform knots
/// `start + k (end - start) / n`, `k = -(p+1) ..= n + p + 1`.
///
/// Matches `values[k]` at knots `0..=n` and derivatives of orders `1..=p/2`
/// at both ends. Only the `n + p + 1` B-splines whose supports lie inside
/// `[knot(-(p+1)), knot(n + p + 1)]` carry coefficients, so the result vanishes
/// outside that interval.
pub fn spline_interpolate(
    p: usize,
    start: f64,
    end: f64,
    n: usize,
    values: &[f64],
    start_derivs: &[f64],
    end_derivs: &[f64],
) -> Result<Spline1D> {
    if p % 2 != 0 {
        return Err(Error::InvalidSpline(format!("interpolation parameter p must be even, got {p}")));
    }
    if n == 0 || !(end > start) {
        return Err(Error::DegenerateKnots);
    }
    let half = p / 2;
    if values.len() != n + 1 || start_derivs.len() != half || end_derivs.len() != half {
        return Err(Error::InvalidSpline(format!(
            "expected {} values and {half} end derivatives per side",
            n + 1
        )));
    }
    let degree = p + 1;
    let spec = SplineSpec::new(degree, (end - start) / n as f64, start)?;
    let first = -(degree as i64);
    let count = n + degree;
    let mut mat = DMatrix::<f64>::zeros(count, count);
    let mut rhs = DVector::<f64>::zeros(count);

    let mut put_row = |row: usize, x: f64, q: usize, target: f64, mat: &mut DMatrix<f64>| {
        let (lo, table) = spec.nonzero(x, q);
        for m in 0..=degree {
            let k = lo + m as i64;
            if k >= first && k < first + count as i64 {
                mat[(row, (k - first) as usize)] = table.d[q][m];
            }
        }
        rhs[row] = target;
    };

    let mut row = 0;
    for (k, &v) in values.iter().enumerate() {
        put_row(row, spec.knot(k as i64), 0, v, &mut mat);
        row += 1;
    }
    for q in 1..=half {
        put_row(row, start, q, start_derivs[q - 1], &mut mat);
        row += 1;
        put_row(row, end, q, end_derivs[q - 1], &mut mat);
        row += 1;
    }
    let lu = mat.lu();
    let sol = lu.solve(&rhs).ok_or(Error::DegenerateKnots)?;
    if sol.iter().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateKnots);
    }
    Ok(Spline1D::new(spec, first, sol.iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(p: usize) -> SplineSpec {
        SplineSpec::new(p, 1.0, 0.0).unwrap()
    }

    #[test]
    fn hat_and_quadratic_values() {
        assert_eq!(spec(1).eval(0, 1.0, 0).unwrap(), 1.0);
        let s = spec(2);
        assert!((s.eval(0, 1.5, 0).unwrap() - 0.75).abs() < 1e-15);
        assert!((s.eval(0, 0.5, 0).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn derivative_order_above_degree_is_rejected() {
        let err = spec(2).eval(0, 0.5, 3).unwrap_err();
        assert!(err.to_string().contains("derivative order exceeds degree"));
    }

    #[test]
    fn matches_cox_de_boor_recursion() {
        for p in 1..=7 {
            let s = SplineSpec::new(p, 0.37, -1.2).unwrap();
            for i in 0..200 {
                let x = -2.0 + 0.0371 * i as f64;
                for k in -8..4 {
                    let t = (x - s.knot(k)) / s.spacing();
                    let a = s.eval(k, x, 0).unwrap();
                    let b = cardinal(p, t);
                    assert!((a - b).abs() < 1e-13, "p={p} k={k} x={x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn support_is_exact_zero_outside() {
        let s = SplineSpec::new(3, 0.5, 0.0).unwrap();
        let (lo, hi) = s.support(2);
        for x in [lo - 1e-9, lo - 3.0, hi, hi + 0.1, hi + 7.0] {
            for q in 0..=3 {
                assert_eq!(s.eval(2, x, q).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let s = SplineSpec::new(4, 0.3, 0.1).unwrap();
        let mut seed = 12345u64;
        for _ in 0..100 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = 0.1 + 1.5 * ((seed >> 11) as f64 / (1u64 << 53) as f64);
            let k = 0;
            let mut prev_err = f64::INFINITY;
            for step in [1e-2, 5e-3, 2.5e-3] {
                let e = step * s.spacing();
                let fd = (s.eval(k, x + e, 0).unwrap() - s.eval(k, x - e, 0).unwrap()) / (2.0 * e);
                let err = (fd - s.eval(k, x, 1).unwrap()).abs();
                assert!(err <= prev_err * 0.3 + 1e-9, "no O(step^2) decay at x={x}");
                prev_err = err;
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        for p in [2usize, 4, 6] {
            let deg = p + 1;
            let poly = |x: f64, q: usize| -> f64 {
                // sum_j a_j x^j, a_j = 1/(j+1)
                (q..=deg)
                    .map(|j| {
                        let c = 1.0 / (j as f64 + 1.0);
                        let f: f64 = (j - q + 1..=j).map(|v| v as f64).product();
                        c * f * x.powi((j - q) as i32)
                    })
                    .sum()
            };
            let (a, b, n) = (-0.5, 1.5, 12);
            let h = (b - a) / n as f64;
            let values: Vec<f64> = (0..=n).map(|k| poly(a + k as f64 * h, 0)).collect();
            let sd: Vec<f64> = (1..=p / 2).map(|q| poly(a, q)).collect();
            let ed: Vec<f64> = (1..=p / 2).map(|q| poly(b, q)).collect();
            let sp = spline_interpolate(p, a, b, n, &values, &sd, &ed).unwrap();
            for i in 0..=100 {
                let x = a + (b - a) * i as f64 / 100.0;
                let exact = poly(x, 0);
                assert!((sp.eval(x) - exact).abs() < 1e-12 * exact.abs().max(1.0), "p={p} x={x}");
            }
            // vanishes beyond the margins
            assert_eq!(sp.eval(a - (deg as f64 + 0.01) * h), 0.0);
            assert_eq!(sp.eval(b + (deg as f64 + 0.01) * h), 0.0);
        }
    }

    #[test]
    fn zero_data_gives_zero_spline() {
        let sp = spline_interpolate(2, 0.0, 1.0, 8, &[0.0; 9], &[0.0], &[0.0]).unwrap();
        assert!(sp.coefficients().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn odd_interpolation_parameter_is_rejected() {
        assert!(spline_interpolate(3, 0.0, 1.0, 8, &[0.0; 9], &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn sine_interpolation_converges_at_fourth_order() {
        // p = 2 gives cubic splines; midpoint error must fall like (L/N)^4.
        let l = 3.0;
        let err = |n: usize| {
            let h = l / n as f64;
            let vals: Vec<f64> = (0..=n).map(|k| (k as f64 * h).sin()).collect();
            let sp = spline_interpolate(2, 0.0, l, n, &vals, &[1.0], &[l.cos()]).unwrap();
            (0..n).map(|k| ((k as f64 + 0.5) * h, ())).map(|(x, _)| (sp.eval(x) - x.sin()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(8), err(16), err(32));
        let o1 = (e1 / e2).log2();
        let o2 = (e2 / e3).log2();
        assert!((o1 - 4.0).abs() < 0.3 && (o2 - 4.0).abs() < 0.3, "orders {o1} {o2}");
    }

    proptest! {
        #[test]
        fn partition_of_unity(p in 1usize..=8, x in 0.0f64..10.0) {
            let s = SplineSpec::new(p, 0.7, -3.0).unwrap();
            let (first, table) = s.nonzero(x, 0);
            let sum: f64 = (0..=p).map(|m| table.d[0][m]).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            let direct: f64 = (first..=first + p as i64).map(|k| s.eval(k, x, 0).unwrap()).sum();
            prop_assert!((direct - 1.0).abs() < 1e-12);
        }

        #[test]
        fn derivative_sums_vanish(p in 2usize..=8, x in 0.0f64..10.0) {
            let s = SplineSpec::new(p, 0.7, -3.0).unwrap();
            let (_, table) = s.nonzero(x, 2);
            for q in 1..=2 {
                let sum: f64 = (0..=p).map(|m| table.d[q][m]).sum();
                prop_assert!(sum.abs() < 1e-10);
            }
        }
    }
}
