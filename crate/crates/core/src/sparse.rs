//! Compressed-row sparse matrices over a [`Scalar`] ring.
//!
//! Matrices are kept canonical: column indices sorted within each row and
//! no stored zeros, so exact matrices compare with `==`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::algebra::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<S> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> SparseMatrix<S> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal((0..n).map(|_| S::one()).collect())
    }

    pub fn from_diagonal(diag: Vec<S>) -> Self {
        let n = diag.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n);
        indptr.push(0);
        for (i, d) in diag.into_iter().enumerate() {
            if !d.is_zero() {
                indices.push(i);
                data.push(d);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            data,
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, S)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<S> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(
                r < nrows && c < ncols,
                "triplet ({r},{c}) outside {nrows}x{ncols}"
            );
            if last == Some((r, c)) {
                let top = data.last_mut().unwrap();
                *top = top.add(&v);
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
        .pruned()
    }

    /// Builds a square matrix column by column: `image(c)` lists the
    /// non-zero `(row, value)` entries of column `c`.
    pub fn from_columns<F>(n: usize, image: F) -> Self
    where
        F: Fn(usize) -> Vec<(usize, S)>,
    {
        let mut triplets = Vec::new();
        for c in 0..n {
            for (r, v) in image(c) {
                triplets.push((r, c, v));
            }
        }
        Self::from_triplets(n, n, triplets)
    }

    fn pruned(self) -> Self {
        if self.data.iter().all(|v| !v.is_zero()) {
            return self;
        }
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        indptr.push(0);
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if !self.data[k].is_zero() {
                    indices.push(self.indices[k]);
                    data.push(self.data[k].clone());
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn is_zero(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, &S)> {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.data[span].iter())
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.data[span.start + k].clone(),
            Err(_) => S::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &S)> {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "dimension mismatch in product");
        let n = rhs.ncols;
        let mut acc: Vec<S> = vec![S::zero(); n];
        let mut mark = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    let p = a.mul(b);
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = p;
                        touched.push(c);
                    } else {
                        acc[c] = acc[c].add(&p);
                    }
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let v = std::mem::replace(&mut acc[c], S::zero());
                if !v.is_zero() {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: self.nrows,
            ncols: n,
            indptr,
            indices,
            data,
        }
    }

    fn combine(&self, rhs: &Self, f: impl Fn(Option<&S>, Option<&S>) -> S) -> Self {
        assert_eq!(
            (self.nrows, self.ncols),
            (rhs.nrows, rhs.ncols),
            "shape mismatch"
        );
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + rhs.nnz());
        let mut data = Vec::with_capacity(self.nnz() + rhs.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            let mut a = self.row(r).peekable();
            let mut b = rhs.row(r).peekable();
            loop {
                let (c, v) = match (a.peek(), b.peek()) {
                    (None, None) => break,
                    (Some(&(ca, va)), None) => {
                        a.next();
                        (ca, f(Some(va), None))
                    }
                    (None, Some(&(cb, vb))) => {
                        b.next();
                        (cb, f(None, Some(vb)))
                    }
                    (Some(&(ca, va)), Some(&(cb, vb))) => {
                        if ca < cb {
                            a.next();
                            (ca, f(Some(va), None))
                        } else if cb < ca {
                            b.next();
                            (cb, f(None, Some(vb)))
                        } else {
                            a.next();
                            b.next();
                            (ca, f(Some(va), Some(vb)))
                        }
                    }
                };
                if !v.is_zero() {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.combine(rhs, |a, b| match (a, b) {
            (Some(x), Some(y)) => x.add(y),
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => S::zero(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.combine(rhs, |a, b| match (a, b) {
            (Some(x), Some(y)) => x.sub(y),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.neg(),
            (None, None) => S::zero(),
        })
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v = v.mul(s);
        }
        out.pruned()
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::identity(self.nrows);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SparseMatrix<T> {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            data: self.data.iter().map(f).collect(),
        }
        .pruned()
    }

    pub fn to_c64(&self) -> SparseMatrix<Complex64> {
        self.map(|v| v.to_c64())
    }

    /// Restriction to the given row and column index lists.
    pub fn submatrix(
        &self,
        rows: &[usize],
        cols: &[usize],
        col_pos: impl Fn(usize) -> Option<usize>,
    ) -> Self {
        let mut triplets = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(j) = col_pos(c) {
                    triplets.push((i, j, v.clone()));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), triplets)
    }
}

impl SparseMatrix<Complex64> {
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.ncols);
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *out = s;
        }
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let mut m = Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.triplets() {
            m[[r, c]] = *v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Drops entries with modulus at or below `tol`.
    pub fn chop(&self, tol: f64) -> Self {
        self.map(|v| {
            if v.norm() <= tol {
                Complex64::new(0.0, 0.0)
            } else {
                *v
            }
        })
    }

    /// max |A − B| entrywise.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.sub(rhs).max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Cyclotomic;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense_of(m: &SparseMatrix<Complex64>) -> Array2<Complex64> {
        m.to_dense()
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(-1.0, 0.0)),
                (1, 0, c(2.0, 0.0)),
            ],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), c(2.0, 0.0));
    }

    #[test]
    fn exact_products_are_canonical() {
        let w = Cyclotomic::omega();
        let m = SparseMatrix::from_diagonal(vec![w.clone(), Cyclotomic::from_int(1), w.clone()]);
        let cube = m.pow(3);
        assert_eq!(cube, SparseMatrix::identity(3));
    }

    proptest! {
        #[test]
        fn product_matches_dense(entries in proptest::collection::vec((0usize..5, 0usize..5, -3i32..4, -3i32..4), 0..20),
                                 entries2 in proptest::collection::vec((0usize..5, 0usize..5, -3i32..4, -3i32..4), 0..20)) {
            let mk = |e: &Vec<(usize, usize, i32, i32)>| SparseMatrix::from_triplets(5, 5,
                e.iter().map(|&(r, cc, a, b)| (r, cc, c(a as f64, b as f64))).collect());
            let a = mk(&entries);
            let b = mk(&entries2);
            let p = dense_of(&a.mul(&b));
            let d = dense_of(&a).dot(&dense_of(&b));
            prop_assert!((&p - &d).iter().all(|z| z.norm() < 1e-12));
            let s = dense_of(&a.sub(&b));
            prop_assert!((&s - &(dense_of(&a) - dense_of(&b))).iter().all(|z| z.norm() < 1e-12));
            let adj = dense_of(&a.adjoint());
            prop_assert!((&adj - &dense_of(&a).t().mapv(|z| z.conj())).iter().all(|z| z.norm() < 1e-12));
        }
    }
}
