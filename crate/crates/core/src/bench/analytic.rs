use nalgebra::{Matrix4, Vector4};

use crate::assembly::StressField;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Point};

/// Axisymmetric deflection of an annulus clamped at `r = b`, free at `r = a`,
/// under constant pressure: `c1 ln r + c2 r^2 ln r + c3 r^2 + c4 + p0 r^4 / 64D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusBending {
    pub center: Point,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub c: [f64; 4],
}

impl AnnulusBending {
    pub fn new(center: Point, a: f64, b: f64, p0: f64, d: f64, nu: f64) -> Result<Self> {
        if !(0.0 < a && a < b) || !(d > 0.0) {
            return Err(Error::Config(format!("annulus needs 0 < a < b and D > 0 (a = {a}, b = {b})")));
        }
        let q = p0 / (64.0 * d);
        let (la, lb) = (a.ln(), b.ln());
        #[rustfmt::skip]
        let m = Matrix4::new(
            lb, b * b * lb, b * b, 1.0,
            1.0 / b, 2.0 * b * lb + b, 2.0 * b, 0.0,
            (nu - 1.0) / (a * a), 2.0 * (1.0 + nu) * la + 3.0 + nu, 2.0 * (1.0 + nu), 0.0,
            0.0, 4.0 / a, 0.0, 0.0,
        );
        let rhs = Vector4::new(-q * b.powi(4), -4.0 * q * b.powi(3), -q * a * a * (12.0 + 4.0 * nu), -32.0 * q * a);
        let c = m.lu().solve(&rhs).ok_or_else(|| Error::Config("singular annulus constants".into()))?;
        Ok(AnnulusBending { center, a, b, q, c: [c[0], c[1], c[2], c[3]] })
    }

    pub fn w(&self, r: f64) -> f64 {
        let l = r.ln();
        self.c[0] * l + self.c[1] * r * r * l + self.c[2] * r * r + self.c[3] + self.q * r.powi(4)
    }

    pub fn dw(&self, r: f64) -> f64 {
        self.c[0] / r + self.c[1] * (2.0 * r * r.ln() + r) + 2.0 * self.c[2] * r + 4.0 * self.q * r.powi(3)
    }

    pub fn d2w(&self, r: f64) -> f64 {
        -self.c[0] / (r * r) + self.c[1] * (2.0 * r.ln() + 3.0) + 2.0 * self.c[2] + 12.0 * self.q * r * r
    }

    /// `d/dr` of the Laplacian.
    pub fn dlap(&self, r: f64) -> f64 {
        4.0 * self.c[1] / r + 32.0 * self.q * r
    }

    pub fn at(&self, x: Point) -> f64 {
        self.w((x[0] - self.center[0]).hypot(x[1] - self.center[1]))
    }
}

/// Plane stress in a disk or concentric annulus with isotropic boundary stress
/// `s_in` at `r = a` and `s_out` at `r = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameStress {
    center: Point,
    big_a: f64,
    big_b: f64,
}

impl LameStress {
    pub fn new(center: Point, a: f64, b: f64, s_in: f64, s_out: f64) -> Self {
        let (a2, b2) = (a * a, b * b);
        LameStress {
            center,
            big_a: (s_out * b2 - s_in * a2) / (b2 - a2),
            big_b: (s_out - s_in) * a2 * b2 / (b2 - a2),
        }
    }

    /// `(sigma_rr, sigma_phiphi)` at radius `r`.
    pub fn polar(&self, r: f64) -> (f64, f64) {
        (self.big_a - self.big_b / (r * r), self.big_a + self.big_b / (r * r))
    }
}

impl StressField for LameStress {
    fn stress(&self, x: Point) -> Result<[f64; 3]> {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r = dx.hypot(dy);
        if r == 0.0 {
            return Ok([self.big_a, self.big_a, 0.0]);
        }
        let (c, s) = (dx / r, dy / r);
        let (srr, spp) = self.polar(r);
        Ok([srr * c * c + spp * s * s, srr * s * s + spp * c * c, (srr - spp) * c * s])
    }
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while k > 0 {
        f /= base as f64;
        r += f * (k % base) as f64;
        k /= base;
    }
    r
}

/// First `n` points of the base-(2, 3) Halton sequence on the bounding box that lie in the domain.
pub fn halton_points(domain: &DomainSpec, n: usize) -> Vec<Point> {
    let [lo, hi] = domain.bbox();
    let mut out = Vec::with_capacity(n);
    let mut k = 1u64;
    while out.len() < n && k < 1_000 * n as u64 + 10_000 {
        let x = [lo[0] + (hi[0] - lo[0]) * radical_inverse(k, 2), lo[1] + (hi[1] - lo[1]) * radical_inverse(k, 3)];
        if domain.contains(x) {
            out.push(x);
        }
        k += 1;
    }
    out
}
