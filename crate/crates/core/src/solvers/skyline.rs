//! Envelope `L D L^T` factorization after reverse Cuthill–McKee reordering.

use std::collections::VecDeque;

use super::SparseSym;
use crate::error::{Error, Result};

/// Reverse Cuthill–McKee ordering; `perm[new] = old`.
pub fn rcm(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral(adj, &degree, seed);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            next.dedup();
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Pseudo-peripheral vertex in the component of `seed` by repeated BFS.
fn peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut start = seed;
    let mut depth = 0;
    let mut level = vec![usize::MAX; adj.len()];
    let mut touched = Vec::new();
    for _ in 0..8 {
        for &v in &touched {
            level[v] = usize::MAX;
        }
        touched.clear();
        level[start] = 0;
        touched.push(start);
        let mut queue = VecDeque::from([start]);
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &u in &adj[v] {
                if level[u] == usize::MAX {
                    level[u] = level[v] + 1;
                    touched.push(u);
                    queue.push_back(u);
                }
            }
        }
        let ecc = level[last];
        let far = touched.iter().copied().filter(|&v| level[v] == ecc).min_by_key(|&v| (degree[v], v)).unwrap_or(last);
        if ecc <= depth {
            break;
        }
        depth = ecc;
        start = far;
    }
    start
}

/// Factor `P A P^T = L D L^T` stored by rows of the envelope.
#[derive(Debug, Clone)]
pub struct Factorization {
    perm: Vec<usize>,
    first: Vec<usize>,
    ptr: Vec<usize>,
    /// Row `i` holds `l_{i, first[i]} .. l_{i, i-1}` followed by `d_i`.
    data: Vec<f64>,
}

impl Factorization {
    pub fn new(a: &SparseSym) -> Result<Self> {
        let n = a.dim();
        let perm = rcm(&a.adjacency());
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for (j, _) in a.row(i) {
                let (r, c) = (inv[i].max(inv[j]), inv[i].min(inv[j]));
                first[r] = first[r].min(c);
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; ptr[n]];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (r, c) = (inv[i].max(inv[j]), inv[i].min(inv[j]));
                data[ptr[r] + c - first[r]] = v;
                if r == c {
                    diag[r] = v.abs();
                }
            }
        }
        let mut deficient = 0;
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = data.split_at_mut(ptr[i]);
            let row = &mut rest[..i - fi + 1];
            // row[k - fi] <- g_ik = a_ik - sum_{m<k} g_im l_km
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let lj = &done[ptr[j]..ptr[j] + (j - fj)];
                let s: f64 = (lo..j).map(|m| row[m - fi] * lj[m - fj]).sum();
                row[j - fi] -= s;
            }
            let mut d = row[i - fi];
            for j in fi..i {
                let dj = done[ptr[j] + j - first[j]];
                let g = row[j - fi];
                let l = g / dj;
                row[j - fi] = l;
                d -= g * l;
            }
            if !(d > 1e-13 * diag[i]) {
                deficient += 1;
                d = diag[i].max(1.0);
            }
            row[i - fi] = d;
        }
        if deficient > 0 {
            return Err(Error::Singular { rank_deficiency: deficient });
        }
        Ok(Factorization { perm, first, ptr, data })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored envelope size.
    pub fn profile(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let l = &self.data[self.ptr[i]..self.ptr[i] + (i - fi)];
            let s: f64 = l.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.data[self.ptr[i + 1] - 1];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let l = &self.data[self.ptr[i]..self.ptr[i] + (i - fi)];
            for (k, lv) in l.iter().enumerate() {
                y[fi + k] -= lv * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rhs.iter().map(|b| self.solve(b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn laplace_2d(m: usize) -> SparseSym {
        let n = m * m;
        let mut t = Vec::new();
        for y in 0..m {
            for x in 0..m {
                let i = y * m + x;
                t.push((i, i, 4.0));
                if x + 1 < m {
                    t.push((i, i + 1, -1.0));
                }
                if y + 1 < m {
                    t.push((i, i + m, -1.0));
                }
            }
        }
        SparseSym::from_triplets(n, t)
    }

    #[test]
    fn identity_and_diagonal() {
        let f = Factorization::new(&SparseSym::identity(4)).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
        let d = SparseSym::from_triplets(2, vec![(0, 0, 2.0), (1, 1, 3.0)]);
        let x = Factorization::new(&d).unwrap().solve(&[2.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplacian_residual_and_bandwidth() {
        let a = laplace_2d(30);
        let f = Factorization::new(&a).unwrap();
        let b: Vec<f64> = (0..a.dim()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        let res = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res / nb < 1e-12);
        assert!(f.profile() < 45 * a.dim());
        assert_eq!(f.solve(&b), x);
    }

    #[test]
    fn singular_matrix_reports_deficiency() {
        let a = SparseSym::from_triplets(3, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        match Factorization::new(&a) {
            Err(Error::Singular { rank_deficiency }) => assert_eq!(rank_deficiency, 1),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplace_2d(7);
        let mut p = rcm(&a.adjacency());
        p.sort_unstable();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn random_spd_systems(seed in proptest::collection::vec(-1.0f64..1.0, 64), b in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let m = DMatrix::from_vec(8, 8, seed);
            let mut a = &m * m.transpose() + DMatrix::identity(8, 8) * 0.5;
            for i in 0..8 {
                for j in 0..8 {
                    if (i as i64 - j as i64).abs() > 3 && (i + j) % 3 == 0 {
                        a[(i, j)] = 0.0;
                    }
                }
            }
            let a = (&a + a.transpose()) * 0.5;
            prop_assume!(a.clone().cholesky().is_some());
            let s = SparseSym::from_dense(&a);
            let x = Factorization::new(&s).unwrap().solve(&b);
            let r = &a * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b.clone());
            prop_assert!(r.norm() < 1e-9 * (1.0 + a.norm()));
        }
    }
}
