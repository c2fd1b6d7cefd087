//! Generalized symmetric eigenproblems `A x = lambda M x` with `A` positive definite.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Factorization, SparseSym};
use crate::error::{Error, Result};

/// Largest dimension accepted by the dense solver.
pub const DENSE_LIMIT: usize = 6000;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// All finite eigenpairs sorted ascending; vectors are `M`-normalized up to sign.
///
/// Reduces to the standard problem `C y = mu y` with `A = L L^T`,
/// `C = L^-1 M L^-T` and `lambda = 1 / mu`. Directions with `mu = 0` have
/// infinite eigenvalue and are dropped.
pub fn gen_eig_symmetric(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<EigenPair>> {
    let n = a.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
    }
    let chol = a.clone().cholesky().ok_or(Error::SingularStiffness)?;
    let l = chol.l();
    let lm = l.solve_lower_triangular(m).ok_or(Error::SingularStiffness)?;
    let c = l.solve_lower_triangular(&lm.transpose()).ok_or(Error::SingularStiffness)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let lt = l.transpose();
    let mut pairs = Vec::new();
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu.abs() <= 1e-12 * scale {
            continue;
        }
        let y = eig.eigenvectors.column(k).into_owned();
        let x = lt.solve_upper_triangular(&y).ok_or(Error::SingularStiffness)?;
        let x = x / mu.abs().sqrt();
        pairs.push(EigenPair { value: 1.0 / mu, vector: x.iter().copied().collect() });
    }
    pairs.sort_by(|p, q| p.value.total_cmp(&q.value));
    Ok(pairs)
}

/// Relative residual `|A x - lambda M x| / |A x|`.
pub fn residual(a: &SparseSym, m: &SparseSym, pair: &EigenPair) -> f64 {
    let ax = a.mul_vec(&pair.vector);
    let mx = m.mul_vec(&pair.vector);
    let r: f64 = ax.iter().zip(&mx).map(|(p, q)| (p - pair.value * q).powi(2)).sum::<f64>().sqrt();
    r / ax.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Above this dimension `Auto` switches from the dense solver to Lanczos.
pub const AUTO_DENSE_MAX: usize = 800;

/// Smallest positive `lambda` of `A x = lambda M x`.
pub fn smallest_positive(a: &SparseSym, m: &SparseSym, method: EigenMethod) -> Result<EigenPair> {
    let n = a.dim();
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => n <= AUTO_DENSE_MAX,
    };
    let pair = if dense {
        gen_eig_symmetric(&a.to_dense(), &m.to_dense())?
            .into_iter()
            .find(|p| p.value > 0.0)
            .ok_or(Error::NoBuckling)?
    } else {
        let f = Factorization::new(a).map_err(|_| Error::SingularStiffness)?;
        lanczos_largest(a, m, &f)?
    };
    Ok(pair)
}

/// Largest positive `mu` of `A^-1 M` (self-adjoint in the `A` inner product) by
/// Lanczos with full reorthogonalization and explicit restarts; returns
/// `lambda = 1 / mu`.
pub fn lanczos_largest(a: &SparseSym, m: &SparseSym, f: &Factorization) -> Result<EigenPair> {
    let n = a.dim();
    let steps = 200.min(n);
    let mut start: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut last_residual = f64::INFINITY;
    for _restart in 0..20 {
        let mut v = start.clone();
        let av = a.mul_vec(&v);
        let nrm = dot(&v, &av).sqrt();
        if !(nrm > 0.0) {
            return Err(Error::EigenNotConverged("zero start vector".into()));
        }
        scale(&mut v, 1.0 / nrm);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut abasis: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut alpha = Vec::with_capacity(steps);
        let mut beta: Vec<f64> = Vec::with_capacity(steps);
        let mut av: Vec<f64> = av.iter().map(|x| x / nrm).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..steps {
            let mv = m.mul_vec(&v);
            let mut w = f.solve(&mv);
            let a_k = dot(&v, &mv);
            basis.push(v.clone());
            abasis.push(av.clone());
            alpha.push(a_k);
            for _ in 0..2 {
                for (q, aq) in basis.iter().zip(&abasis) {
                    let c = dot(aq, &w);
                    axpy(&mut w, -c, q);
                }
            }
            let aw = a.mul_vec(&w);
            let b_k = dot(&w, &aw).max(0.0).sqrt();
            let check = k + 1 == steps || b_k <= 1e-14 * a_k.abs().max(1e-300) || (k >= 10 && k % 10 == 0);
            if check {
                let t = tridiagonal(&alpha, &beta);
                let eig = SymmetricEigen::new(t);
                let (idx, mu) = eig
                    .eigenvalues
                    .iter()
                    .copied()
                    .enumerate()
                    .max_by(|x, y| x.1.total_cmp(&y.1))
                    .expect("nonempty tridiagonal");
                if mu > 0.0 {
                    let y = eig.eigenvectors.column(idx);
                    let mut x = vec![0.0; n];
                    for (c, q) in y.iter().zip(&basis) {
                        axpy(&mut x, *c, q);
                    }
                    let pair = EigenPair { value: 1.0 / mu, vector: x.clone() };
                    let r = residual(a, m, &pair);
                    last_residual = r;
                    if r < 1e-8 {
                        return Ok(normalize_mode(pair));
                    }
                    best = Some((r, x));
                } else if k + 1 == steps || b_k <= 1e-14 * a_k.abs().max(1e-300) {
                    return Err(Error::NoBuckling);
                }
            }
            if b_k <= 1e-14 * a_k.abs().max(1e-300) {
                break;
            }
            beta.push(b_k);
            v = w;
            scale(&mut v, 1.0 / b_k);
            av = aw;
            scale(&mut av, 1.0 / b_k);
        }
        match best {
            Some((_, x)) => start = x,
            None => return Err(Error::NoBuckling),
        }
    }
    Err(Error::EigenNotConverged(format!("Lanczos residual {last_residual:.3e} after restarts")))
}

/// Scales a mode to max-norm 1 with a positive largest entry.
pub fn normalize_mode(mut pair: EigenPair) -> EigenPair {
    let (mut big, mut sign) = (0.0f64, 1.0);
    for &x in &pair.vector {
        if x.abs() > big {
            big = x.abs();
            sign = x.signum();
        }
    }
    if big > 0.0 {
        scale(&mut pair.vector, sign / big);
    }
    pair
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (p, q) in y.iter_mut().zip(x) {
        *p += a * q;
    }
}

fn scale(x: &mut [f64], s: f64) {
    for v in x.iter_mut() {
        *v *= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn to_dvector(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn random_spd(n: usize, seed: u64, shift: f64) -> DMatrix<f64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = DMatrix::from_fn(n, n, |_, _| next());
        &g * g.transpose() + DMatrix::identity(n, n) * shift
    }

    #[test]
    fn identity_pairs() {
        let pairs = gen_eig_symmetric(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3)).unwrap();
        assert!(pairs.iter().all(|p| (p.value - 1.0).abs() < 1e-14));
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let v: Vec<f64> = gen_eig_symmetric(&a, &m).unwrap().iter().map(|p| p.value).collect();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn buckling_convention_examples() {
        let a = SparseSym::identity(3);
        let b = SparseSym::identity(3).scaled(-1.0);
        let p = smallest_positive(&a, &b.scaled(-1.0), EigenMethod::Dense).unwrap();
        assert!((p.value - 1.0).abs() < 1e-14);
        let a = SparseSym::from_triplets(2, vec![(0, 0, 2.0), (1, 1, 3.0)]);
        let p = smallest_positive(&a, &SparseSym::identity(2), EigenMethod::Dense).unwrap();
        assert!((p.value - 2.0).abs() < 1e-14);
        assert!((p.vector[0] - 1.0).abs() < 1e-14 && p.vector[1].abs() < 1e-14);
        let tension = SparseSym::identity(2).scaled(-1.0);
        assert!(matches!(smallest_positive(&a, &tension, EigenMethod::Dense), Err(Error::NoBuckling)));
        assert!(matches!(smallest_positive(&a, &tension, EigenMethod::Lanczos), Err(Error::NoBuckling)));
    }

    #[test]
    fn residuals_and_m_orthogonality() {
        let a = random_spd(50, 3, 0.5);
        let m = random_spd(50, 9, -2.0);
        let (sa, sm) = (SparseSym::from_dense(&a), SparseSym::from_dense(&m));
        let pairs = gen_eig_symmetric(&a, &m).unwrap();
        assert_eq!(pairs.len(), 50);
        for p in &pairs {
            assert!(residual(&sa, &sm, p) < 1e-8);
        }
        for r in 0..pairs.len() {
            for s in r + 1..pairs.len() {
                let mo = to_dvector(&pairs[r].vector).dot(&(&m * to_dvector(&pairs[s].vector)));
                assert!(mo.abs() < 1e-8, "{mo}");
            }
        }
    }

    #[test]
    fn matches_inverse_power_iteration() {
        let a = random_spd(50, 5, 1.0);
        let m = random_spd(50, 6, 0.2);
        let pairs = gen_eig_symmetric(&a, &m).unwrap();
        let lam = pairs.iter().find(|p| p.value > 0.0).unwrap().value;
        // power iteration on A^-1 M converges to its largest mu = 1 / lambda_min
        let lu = a.clone().lu();
        let mut x = DVector::from_element(50, 1.0);
        let mut mu = 0.0;
        for _ in 0..5000 {
            let y = lu.solve(&(&m * &x)).unwrap();
            mu = y.dot(&(&a * &x)) / x.dot(&(&a * &x));
            x = &y / y.norm();
        }
        assert!((1.0 / mu - lam).abs() < 1e-8 * lam, "{} vs {lam}", 1.0 / mu);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let n = 120;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.01 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = SparseSym::from_triplets(n, t);
        let m = SparseSym::from_triplets(n, (0..n).map(|i| (i, i, 1.0 + (i % 3) as f64)).collect());
        let d = smallest_positive(&a, &m, EigenMethod::Dense).unwrap();
        let l = smallest_positive(&a, &m, EigenMethod::Lanczos).unwrap();
        assert!((d.value - l.value).abs() < 1e-9 * d.value);
        assert!(residual(&a, &m, &l) < 1e-8);
        assert!(gen_eig_symmetric(&DMatrix::identity(1, 1), &DMatrix::identity(1, 1)).is_ok());
    }

    #[test]
    fn dense_limit_enforced() {
        let big = DMatrix::<f64>::zeros(DENSE_LIMIT + 1, 1);
        let err = gen_eig_symmetric(&big, &big).unwrap_err();
        assert!(err.to_string().contains("use finer-grained tooling or coarser grid"));
    }
}
