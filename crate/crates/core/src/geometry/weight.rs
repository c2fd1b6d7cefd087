use super::Point;
use crate::error::{Error, Result};
use crate::jet::Jet2;

/// Weight function expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Constant(f64),
    /// `-n . (x - point)`, positive on the side opposite to `normal`.
    HalfPlane { point: Point, normal: Point },
    /// `r^2 - |x - c|^2`, positive inside the disk.
    Disk { center: Point, radius: f64 },
    /// `|x - c|^2 - r^2`, positive outside the disk.
    DiskComplement { center: Point, radius: f64 },
    Product(Vec<Weight>),
    Square(Box<Weight>),
    /// R-disjunction `a + b + sqrt(a^2 + b^2)`.
    Union(Box<Weight>, Box<Weight>),
    /// `inner` evaluated in body coordinates `u = R(-angle) (x - center)`.
    Rotated { center: Point, angle: f64, inner: Box<Weight> },
}

impl Weight {
    pub fn square(self) -> Weight {
        Weight::Square(Box::new(self))
    }

    pub fn union(a: Weight, b: Weight) -> Weight {
        Weight::Union(Box::new(a), Box::new(b))
    }

    /// Value, gradient and Hessian at `p`.
    pub fn eval(&self, p: Point) -> Result<Jet2> {
        Ok(match self {
            Weight::Constant(c) => Jet2::constant(*c),
            Weight::HalfPlane { point, normal } => {
                let v = -(normal[0] * (p[0] - point[0]) + normal[1] * (p[1] - point[1]));
                Jet2::affine(v, -normal[0], -normal[1])
            }
            Weight::Disk { center, radius } => -disk_jet(p, *center, *radius),
            Weight::DiskComplement { center, radius } => disk_jet(p, *center, *radius),
            Weight::Product(factors) => {
                let mut acc = Jet2::constant(1.0);
                for f in factors {
                    acc = acc * f.eval(p)?;
                }
                acc
            }
            Weight::Square(inner) => inner.eval(p)?.square(),
            Weight::Union(a, b) => {
                let a = a.eval(p)?;
                let b = b.eval(p)?;
                let q = a * a + b * b;
                if q.v <= 0.0 {
                    return Err(Error::RFunctionSingular);
                }
                let s = q.v.sqrt();
                a + b + q.compose(s, 0.5 / s, -0.25 / (s * q.v))
            }
            Weight::Rotated { center, angle, inner } => {
                let (sn, cs) = angle.sin_cos();
                let d = [p[0] - center[0], p[1] - center[1]];
                let u = [cs * d[0] + sn * d[1], -sn * d[0] + cs * d[1]];
                inner.eval(u)?.pull_back([[cs, sn], [-sn, cs]])
            }
        })
    }

    /// Value only; never fails.
    pub fn value(&self, p: Point) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::HalfPlane { point, normal } => -(normal[0] * (p[0] - point[0]) + normal[1] * (p[1] - point[1])),
            Weight::Disk { center, radius } => -disk_jet(p, *center, *radius).v,
            Weight::DiskComplement { center, radius } => disk_jet(p, *center, *radius).v,
            Weight::Product(factors) => factors.iter().map(|f| f.value(p)).product(),
            Weight::Square(inner) => inner.value(p).powi(2),
            Weight::Union(a, b) => {
                let (a, b) = (a.value(p), b.value(p));
                a + b + a.hypot(b)
            }
            Weight::Rotated { center, angle, inner } => {
                let (sn, cs) = angle.sin_cos();
                let d = [p[0] - center[0], p[1] - center[1]];
                inner.value([cs * d[0] + sn * d[1], -sn * d[0] + cs * d[1]])
            }
        }
    }
}

fn disk_jet(p: Point, c: Point, r: f64) -> Jet2 {
    let dx = p[0] - c[0];
    let dy = p[1] - c[1];
    Jet2 { v: dx * dx + dy * dy - r * r, dx: 2.0 * dx, dy: 2.0 * dy, dxx: 2.0, dxy: 0.0, dyy: 2.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(w: &Weight, p: Point) {
        let e = 1e-5;
        let j = w.eval(p).unwrap();
        let f = |x: f64, y: f64| w.value([x, y]);
        let dx = (f(p[0] + e, p[1]) - f(p[0] - e, p[1])) / (2.0 * e);
        let dy = (f(p[0], p[1] + e) - f(p[0], p[1] - e)) / (2.0 * e);
        let dxx = (f(p[0] + e, p[1]) - 2.0 * j.v + f(p[0] - e, p[1])) / (e * e);
        let dxy = (f(p[0] + e, p[1] + e) - f(p[0] + e, p[1] - e) - f(p[0] - e, p[1] + e) + f(p[0] - e, p[1] - e))
            / (4.0 * e * e);
        let scale = 1.0 + j.v.abs();
        assert!((j.v - w.value(p)).abs() < 1e-14 * scale);
        assert!((j.dx - dx).abs() < 1e-6 * scale, "{} vs {dx}", j.dx);
        assert!((j.dy - dy).abs() < 1e-6 * scale);
        assert!((j.dxx - dxx).abs() < 1e-3 * scale, "{} vs {dxx}", j.dxx);
        assert!((j.dxy - dxy).abs() < 1e-3 * scale);
    }

    fn rectangle(a: f64, b: f64) -> Weight {
        Weight::Product(vec![
            Weight::HalfPlane { point: [-a / 2.0, 0.0], normal: [-1.0, 0.0] },
            Weight::HalfPlane { point: [a / 2.0, 0.0], normal: [1.0, 0.0] },
            Weight::HalfPlane { point: [0.0, -b / 2.0], normal: [0.0, -1.0] },
            Weight::HalfPlane { point: [0.0, b / 2.0], normal: [0.0, 1.0] },
        ])
    }

    #[test]
    fn rectangle_weight_at_centre() {
        assert!((rectangle(5.0, 1.0).value([0.0, 0.0]) - 1.5625).abs() < 1e-15);
    }

    #[test]
    fn clamped_annulus_weight_vanishes_with_gradient() {
        let w = Weight::Disk { center: [0.0, 0.0], radius: 1.5432 }.square();
        for k in 0..16 {
            let t = k as f64 * 0.39;
            let j = w.eval([1.5432 * t.cos(), 1.5432 * t.sin()]).unwrap();
            assert!(j.v.abs() < 1e-12);
            assert!(j.dx.hypot(j.dy) < 1e-10);
        }
    }

    #[test]
    fn r_disjunction_value_and_corner() {
        let a = Weight::Constant(1.0);
        let b = Weight::Constant(0.0);
        assert_eq!(Weight::union(a, b).value([0.0, 0.0]), 2.0);
        let corner = Weight::union(
            Weight::HalfPlane { point: [0.0, 0.0], normal: [0.0, -1.0] },
            Weight::HalfPlane { point: [0.0, 0.0], normal: [-1.0, 0.0] },
        );
        let err = corner.eval([0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("R-function derivative singular at corner"));
        assert_eq!(corner.value([0.0, 0.0]), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let rect = rectangle(2.0, 1.0);
        fd_check(&rect, [0.3, 0.1]);
        let rot = Weight::Rotated { center: [0.1, -0.2], angle: 0.3, inner: Box::new(rect.clone().square()) };
        fd_check(&rot, [0.25, 0.05]);
        let u = Weight::union(
            Weight::HalfPlane { point: [0.0, 0.0], normal: [0.6, -0.8] },
            Weight::DiskComplement { center: [1.0, 1.0], radius: 0.5 },
        );
        fd_check(&Weight::Product(vec![u, Weight::Disk { center: [0.0, 0.0], radius: 3.0 }]), [0.4, -0.7]);
    }
}
