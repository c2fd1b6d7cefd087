//! Second-order jets: a value together with its gradient and Hessian.
//!
//! Every field quantity that enters a weak form (weights, basis functions,
//! boundary lifts) is carried around as a [`Jet2`] so that the product and
//! chain rules are applied in exactly one place.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar function of `(x, y)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub const ZERO: Jet2 = Jet2 { v: 0.0, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 };

    pub fn constant(v: f64) -> Self {
        Jet2 { v, ..Jet2::ZERO }
    }

    /// Affine function `c + gx * x + gy * y` evaluated at `(x, y)`.
    pub fn affine(value: f64, gx: f64, gy: f64) -> Self {
        Jet2 { v: value, dx: gx, dy: gy, ..Jet2::ZERO }
    }

    /// Jet of `f(u(x, y))` given `f, f', f''` evaluated at `u`.
    pub fn compose(self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2 {
            v: f0,
            dx: f1 * self.dx,
            dy: f1 * self.dy,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxy: f2 * self.dx * self.dy + f1 * self.dxy,
            dyy: f2 * self.dy * self.dy + f1 * self.dyy,
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Jet2 {
            v: self.v * s,
            dx: self.dx * s,
            dy: self.dy * s,
            dxx: self.dxx * s,
            dxy: self.dxy * s,
            dyy: self.dyy * s,
        }
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet2::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                let p2 = self.v.powi(n - 2);
                let p1 = p2 * self.v;
                self.compose(p1 * self.v, nf * p1, nf * (nf - 1.0) * p2)
            }
        }
    }

    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }

    pub fn gradient(&self) -> [f64; 2] {
        [self.dx, self.dy]
    }

    /// Directional first derivative `a . grad`.
    pub fn along(&self, a: [f64; 2]) -> f64 {
        a[0] * self.dx + a[1] * self.dy
    }

    /// Bilinear form `a^T H b` with the Hessian.
    pub fn hess(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        a[0] * (self.dxx * b[0] + self.dxy * b[1]) + a[1] * (self.dxy * b[0] + self.dyy * b[1])
    }

    /// Jet expressed in coordinates `u = R (x - c)`, pulled back to `x`.
    /// `rot` is the row-major 2x2 matrix `R`; `self` holds derivatives in `u`.
    pub fn pull_back(self, rot: [[f64; 2]; 2]) -> Self {
        let [[a, b], [c, d]] = rot;
        // grad_x = R^T grad_u,  H_x = R^T H_u R
        let dx = a * self.dx + c * self.dy;
        let dy = b * self.dx + d * self.dy;
        let hxx = a * (a * self.dxx + c * self.dxy) + c * (a * self.dxy + c * self.dyy);
        let hxy = a * (b * self.dxx + d * self.dxy) + c * (b * self.dxy + d * self.dyy);
        let hyy = b * (b * self.dxx + d * self.dxy) + d * (b * self.dxy + d * self.dyy);
        Jet2 { v: self.v, dx, dy, dxx: hxx, dxy: hxy, dyy: hyy }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl AddAssign for Jet2 {
    fn add_assign(&mut self, o: Jet2) {
        *self = *self + o;
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        self.scale(s)
    }
}

/// Value and first two derivatives of a function of one variable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet1 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet1 {
    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet1 { v, d1, d2 }
    }

    pub fn mul(self, o: Jet1) -> Jet1 {
        Jet1 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    pub fn div(self, o: Jet1) -> Jet1 {
        let q = self.v / o.v;
        let q1 = (self.d1 - q * o.d1) / o.v;
        let q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.v;
        Jet1 { v: q, d1: q1, d2: q2 }
    }

    /// Lift to a 2D jet through `u(x, y)`.
    pub fn through(self, u: Jet2) -> Jet2 {
        u.compose(self.v, self.d1, self.d2)
    }
}
