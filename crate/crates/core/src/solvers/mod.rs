//! Sparse symmetric storage, envelope factorization and generalized eigensolvers.

mod eigen;
mod skyline;
mod sparse;

pub use eigen::{
    gen_eig_symmetric, lanczos_largest, normalize_mode, residual, smallest_positive, EigenMethod, EigenPair,
    AUTO_DENSE_MAX, DENSE_LIMIT,
};
pub use skyline::{rcm, Factorization};
pub use sparse::SparseSym;

use crate::error::{Error, Result};

/// Solves `A x = b`; a singular `A` is reported as a stiffness error.
pub fn solve(a: &SparseSym, b: &[f64]) -> Result<Vec<f64>> {
    let f = Factorization::new(a).map_err(|e| match e {
        Error::Singular { .. } => Error::SingularStiffness,
        e => e,
    })?;
    let mut x = f.solve(b);
    for _ in 0..1 {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        for (xi, d) in x.iter_mut().zip(f.solve(&r)) {
            *xi += d;
        }
    }
    Ok(x)
}

pub fn relative_residual(a: &SparseSym, x: &[f64], b: &[f64]) -> f64 {
    let r = a.mul_vec(x);
    let num: f64 = r.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Normwise backward error `|Ax - b| / (|A| |x| + |b|)` in the infinity norm.
pub fn backward_error(a: &SparseSym, x: &[f64], b: &[f64]) -> f64 {
    let mut rows = vec![0.0f64; a.dim()];
    for i in 0..a.dim() {
        for (j, v) in a.row(i) {
            rows[i] += v.abs();
            if j != i {
                rows[j] += v.abs();
            }
        }
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let r: Vec<f64> = a.mul_vec(x).iter().zip(b).map(|(p, q)| p - q).collect();
    let den = inf(&rows) * inf(x) + inf(b);
    if den == 0.0 {
        inf(&r)
    } else {
        inf(&r) / den
    }
}
