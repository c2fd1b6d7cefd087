use nalgebra::DMatrix;

/// Symmetric matrix in compressed rows holding the upper triangle (`j >= i`).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Sums duplicate entries; `(i, j)` and `(j, i)` address the same entry.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for t in triplets.iter_mut() {
            assert!(t.0 < n && t.1 < n, "triplet index out of range");
            if t.0 > t.1 {
                *t = (t.1, t.0, t.2);
            }
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry pushed") += v;
            } else {
                cols.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSym { n, row_ptr, cols, values }
    }

    pub fn identity(n: usize) -> Self {
        SparseSym::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        SparseSym::from_triplets(n, t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.values.len()
    }

    /// Stored upper-triangle entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    pub fn scaled(&self, s: f64) -> SparseSym {
        SparseSym { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Neighbour lists of the full symmetric pattern, without the diagonal.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_are_summed_and_mirrored() {
        let a = SparseSym::from_triplets(3, vec![(0, 1, 1.0), (1, 0, 2.0), (2, 2, 5.0), (0, 0, 1.0)]);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.nnz_upper(), 3);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![4.0, 3.0, 5.0]);
    }

    proptest! {
        #[test]
        fn mul_matches_dense(entries in proptest::collection::vec((0usize..6, 0usize..6, -3.0f64..3.0), 1..30),
                             x in proptest::collection::vec(-2.0f64..2.0, 6)) {
            let a = SparseSym::from_triplets(6, entries);
            let d = a.to_dense();
            prop_assert_eq!(&d, &d.transpose());
            let y = a.mul_vec(&x);
            let yd = &d * nalgebra::DVector::from_vec(x.clone());
            for i in 0..6 {
                prop_assert!((y[i] - yd[i]).abs() < 1e-12);
            }
        }
    }
}
