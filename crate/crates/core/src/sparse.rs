//! Compressed sparse row matrices over a real scalar.

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<S> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<S>,
}

impl<S: Real> CsrMatrix<S> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn scaled_identity(n: usize, c: S) -> Self {
        if c == S::zero() {
            return Self::zeros(n, n);
        }
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), values: vec![c; n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, S::one())
    }

    /// Duplicates are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, S)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut i = 0;
        while i < t.len() {
            let (r, c, mut v) = t[i];
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            i += 1;
            while i < t.len() && t[i].0 == r && t[i].1 == c {
                v = v + t[i].2;
                i += 1;
            }
            if v != S::zero() {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    /// Builds row by row; `row(r)` returns the (column, value) pairs of row `r`.
    pub fn from_rows(nrows: usize, ncols: usize, mut row: impl FnMut(usize) -> Vec<(usize, S)>) -> Self {
        let mut t = Vec::new();
        for r in 0..nrows {
            t.extend(row(r).into_iter().map(|(c, v)| (r, c, v)));
        }
        Self::from_triplets(nrows, ncols, t)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`, columns ascending.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[S]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => S::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.ncols, "vector length mismatch");
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).fold(S::zero(), |acc, (&c, &v)| acc + v * x[c])
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scale(&self, c: S) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = *v * c;
        }
        if c == S::zero() {
            return Self::zeros(self.nrows, self.ncols);
        }
        out
    }

    /// `alpha * self + beta * other`.
    pub fn lincomb(&self, alpha: S, other: &Self, beta: S) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch");
        let mut t: Vec<(usize, usize, S)> = self.triplets().map(|(r, c, v)| (r, c, alpha * v)).collect();
        t.extend(other.triplets().map(|(r, c, v)| (r, c, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lincomb(S::one(), other, S::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lincomb(S::one(), other, -S::one())
    }

    /// Sparse product by row-wise accumulation.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimension mismatch");
        let mut acc = vec![S::zero(); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched = Vec::new();
        let mut indptr = vec![0; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            touched.clear();
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (c2, v2) = other.row(k);
                for (&c, &b) in c2.iter().zip(v2) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = S::zero();
                        touched.push(c);
                    }
                    acc[c] = acc[c] + a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != S::zero() {
                    indices.push(c);
                    values.push(acc[c]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Self { nrows: self.nrows, ncols: other.ncols, indptr, indices, values }
    }

    /// Keeps entries whose row and column both satisfy `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let t = self.triplets().filter(|&(r, c, _)| keep(r) && keep(c)).collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> S {
        self.values.iter().map(|v| v.abs()).fold(S::zero(), S::max)
    }

    /// Largest entrywise difference over the union of both patterns.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.sub(other).max_abs()
    }

    pub fn to_dense(&self) -> Vec<Vec<S>> {
        let mut d = vec![vec![S::zero(); self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }

    pub fn cast<T: Real>(&self) -> CsrMatrix<T> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| T::lit(v.as_f64())).collect(),
        }
    }
}
