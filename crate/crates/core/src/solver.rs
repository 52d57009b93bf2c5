//! Sparse linear solves: direct LU (faer) and restarted GMRES with Jacobi preconditioning.

use faer::linalg::solvers::SolveCore;
use std::sync::Mutex;

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Largest node count solved directly under [`Method::Auto`].
pub const AUTO_DIRECT_MAX_NODES: usize = 32 * 32 * 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Auto,
    DirectLu,
    IterativeKrylov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub method: Method,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Krylov restart length.
    pub restart: usize,
    /// On Robin-type grids, solve in the mean-zero space.
    pub mean_zero_enforce: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { method: Method::Auto, rel_tol: 1e-10, max_iter: 5000, restart: 60, mean_zero_enforce: true }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::InvalidArgument("max_iter and restart must be positive".into()));
        }
        Ok(())
    }

    /// Whether `nodes` unknown quaternions are solved directly.
    pub fn use_direct(&self, nodes: usize) -> bool {
        match self.method {
            Method::DirectLu => true,
            Method::IterativeKrylov => false,
            Method::Auto => nodes <= AUTO_DIRECT_MAX_NODES,
        }
    }
}

/// A factorized or iterative solver for `A x = b` and `A^T x = b`.
pub trait LinearSolve<S>: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, b: &[S]) -> Result<Vec<S>>;
    fn solve_transpose(&self, b: &[S]) -> Result<Vec<S>>;
}

/// Sparse LU with partial pivoting; computations in double precision.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn new<S: Real>(a: &CsrMatrix<S>) -> Result<Self> {
        Self::with_cache(a, None)
    }

    /// Reuses the symbolic analysis from `cache` when the sparsity pattern matches.
    pub fn with_cache<S: Real>(a: &CsrMatrix<S>, cache: Option<&SymbolicCache>) -> Result<Self> {
        let trips: Vec<Triplet<usize, usize, f64>> =
            a.triplets().map(|(r, c, v)| Triplet::new(r, c, v.as_f64())).collect();
        Self::from_triplets(a.nrows(), &trips, cache)
    }

    /// `[[A, B], [C, 0]]` with `B` given by columns and `C` by rows (both of length `n`).
    pub fn bordered<S: Real>(
        a: &CsrMatrix<S>,
        cols: &[Vec<S>],
        rows: &[Vec<S>],
        cache: Option<&SymbolicCache>,
    ) -> Result<Self> {
        let n = a.nrows();
        let k = cols.len();
        assert_eq!(rows.len(), k);
        let mut trips: Vec<Triplet<usize, usize, f64>> =
            a.triplets().map(|(r, c, v)| Triplet::new(r, c, v.as_f64())).collect();
        for (j, (col, row)) in cols.iter().zip(rows).enumerate() {
            for i in 0..n {
                if col[i] != S::zero() {
                    trips.push(Triplet::new(i, n + j, col[i].as_f64()));
                }
                if row[i] != S::zero() {
                    trips.push(Triplet::new(n + j, i, row[i].as_f64()));
                }
            }
        }
        Self::from_triplets(n + k, &trips, cache)
    }

    fn from_triplets(n: usize, trips: &[Triplet<usize, usize, f64>], cache: Option<&SymbolicCache>) -> Result<Self> {
        // Parallelism lives at the scan/quadrature level; factorizations stay sequential
        // so results do not depend on the thread count.
        static SEQ: std::sync::Once = std::sync::Once::new();
        SEQ.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, trips)
            .map_err(|e| Error::InvalidArgument(format!("sparse matrix construction failed: {e:?}")))?;
        let lu = match cache {
            Some(c) => Lu::try_new_with_symbolic(c.get(&m)?, m.as_ref()),
            None => m.sp_lu(),
        }
        .map_err(|_| Error::Singular)?;
        Ok(Self { n, lu })
    }

    fn run<S: Real>(&self, b: &[S], transpose: bool) -> Result<Vec<S>> {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i].as_f64());
        if transpose {
            self.lu.solve_transpose_in_place_with_conj(Conj::No, rhs.as_mut());
        } else {
            self.lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        }
        let x: Vec<S> = (0..self.n).map(|i| S::lit(rhs[(i, 0)])).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(x)
    }
}

/// Symbolic LU analyses keyed by sparsity pattern. `Q_{jt}` keeps its pattern across `t`,
/// so scans and quadrature rules factor numerically only.
#[derive(Default)]
pub struct SymbolicCache {
    entries: Mutex<Vec<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>>,
}

impl SymbolicCache {
    const CAPACITY: usize = 4;

    fn get(&self, m: &SparseColMat<usize, f64>) -> Result<SymbolicLu<usize>> {
        let sym = m.symbolic();
        let (cp, ri) = (sym.col_ptr(), sym.row_idx());
        let mut entries = self.entries.lock().expect("symbolic cache poisoned");
        if let Some((_, _, s)) = entries.iter().find(|(c, r, _)| c == cp && r == ri) {
            return Ok(s.clone());
        }
        let s = SymbolicLu::try_new(sym).map_err(|_| Error::Singular)?;
        if entries.len() == Self::CAPACITY {
            entries.remove(0);
        }
        entries.push((cp.to_vec(), ri.to_vec(), s.clone()));
        Ok(s)
    }
}

impl<S: Real> LinearSolve<S> for SparseLu {
    fn dim(&self) -> usize {
        self.n
    }
    fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        self.run(b, false)
    }
    fn solve_transpose(&self, b: &[S]) -> Result<Vec<S>> {
        self.run(b, true)
    }
}

type LinOp<S> = Box<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;

/// Restarted, right-preconditioned GMRES over matrix-free forward and transpose maps.
pub struct Gmres<S> {
    n: usize,
    fwd: LinOp<S>,
    bwd: LinOp<S>,
    inv_diag: Vec<S>,
    rel_tol: S,
    max_iter: usize,
    restart: usize,
}

impl<S: Real> Gmres<S> {
    pub fn new(a: &CsrMatrix<S>, opts: &SolveOptions) -> Self {
        let (fa, ta) = (a.clone(), a.transpose());
        Self::from_operators(
            a.nrows(),
            Box::new(move |x: &[S]| fa.mul_vec(x)),
            Box::new(move |x: &[S]| ta.mul_vec(x)),
            &a.diagonal(),
            opts,
        )
    }

    /// `fwd` and `bwd` must be mutual transposes; `diag` feeds the Jacobi preconditioner.
    pub fn from_operators(n: usize, fwd: LinOp<S>, bwd: LinOp<S>, diag: &[S], opts: &SolveOptions) -> Self {
        let inv_diag =
            diag.iter().map(|&d| if d.abs() > S::min_positive_value() { d.recip() } else { S::one() }).collect();
        Self { n, fwd, bwd, inv_diag, rel_tol: S::lit(opts.rel_tol), max_iter: opts.max_iter, restart: opts.restart }
    }

    fn precond(&self, z: &[S]) -> Vec<S> {
        z.iter().zip(&self.inv_diag).map(|(&a, &b)| a * b).collect()
    }

    fn run(&self, op: &LinOp<S>, b: &[S]) -> Result<Vec<S>> {
        let n = b.len();
        assert_eq!(n, self.n, "right-hand side length mismatch");
        let rhs = b.to_vec();
        let bnorm = norm(&rhs);
        let mut x = vec![S::zero(); n];
        if bnorm == S::zero() {
            return Ok(x);
        }
        let apply = |v: &[S]| op(v);
        let mut iters = 0;
        let mut rel = S::one();
        while iters < self.max_iter {
            let ax = apply(&x);
            let r: Vec<S> = rhs.iter().zip(&ax).map(|(&p, &q)| p - q).collect();
            let beta = norm(&r);
            rel = beta / bnorm;
            if rel <= self.rel_tol {
                return Ok(x);
            }
            let k = self.restart.min(self.max_iter - iters);
            let mut v: Vec<Vec<S>> = vec![r.iter().map(|&ri| ri / beta).collect()];
            let mut h = vec![vec![S::zero(); k]; k + 1];
            let (mut cs, mut sn) = (vec![S::zero(); k], vec![S::zero(); k]);
            let mut g = vec![S::zero(); k + 1];
            g[0] = beta;
            let mut used = 0;
            for j in 0..k {
                iters += 1;
                let mut w = apply(&self.precond(&v[j]));
                for i in 0..=j {
                    let hij = dot(&w, &v[i]);
                    h[i][j] = hij;
                    for (wk, vk) in w.iter_mut().zip(&v[i]) {
                        *wk = *wk - hij * *vk;
                    }
                }
                let hn = norm(&w);
                h[j + 1][j] = hn;
                for i in 0..j {
                    let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                    h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                    h[i][j] = t;
                }
                let den = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
                if den == S::zero() {
                    cs[j] = S::one();
                    sn[j] = S::zero();
                } else {
                    cs[j] = h[j][j] / den;
                    sn[j] = h[j + 1][j] / den;
                }
                h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
                h[j + 1][j] = S::zero();
                g[j + 1] = -sn[j] * g[j];
                g[j] = cs[j] * g[j];
                used = j + 1;
                rel = g[j + 1].abs() / bnorm;
                if rel <= self.rel_tol || hn == S::zero() {
                    break;
                }
                v.push(w.iter().map(|&wi| wi / hn).collect());
            }
            let mut y = vec![S::zero(); used];
            for i in (0..used).rev() {
                let mut acc = g[i];
                for l in i + 1..used {
                    acc = acc - h[i][l] * y[l];
                }
                y[i] = acc / h[i][i];
            }
            let mut z = vec![S::zero(); n];
            for (yi, vi) in y.iter().zip(&v) {
                for (zk, vk) in z.iter_mut().zip(vi) {
                    *zk = *zk + *yi * *vk;
                }
            }
            for (xk, dk) in x.iter_mut().zip(self.precond(&z)) {
                *xk = *xk + dk;
            }
            if !rel.is_finite() {
                break;
            }
        }
        let ax = apply(&x);
        let r: Vec<S> = rhs.iter().zip(&ax).map(|(&p, &q)| p - q).collect();
        let final_rel = norm(&r) / bnorm;
        if final_rel <= self.rel_tol {
            Ok(x)
        } else {
            Err(Error::SolverDiverged { iterations: iters, residual: final_rel.max(rel).as_f64() })
        }
    }
}

impl<S: Real> LinearSolve<S> for Gmres<S> {
    fn dim(&self) -> usize {
        self.n
    }
    fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        self.run(&self.fwd, b)
    }
    fn solve_transpose(&self, b: &[S]) -> Result<Vec<S>> {
        self.run(&self.bwd, b)
    }
}

/// Solves `A u + B lambda = b`, `C u = 0` through an inner solver for `A`
/// and the Schur complement `C A^{-1} B` (small and dense).
pub struct Constrained<S> {
    inner: Box<dyn LinearSolve<S>>,
    /// `A^{-1} B`, one vector per constraint.
    z: Vec<Vec<S>>,
    c: Vec<Vec<S>>,
    /// Inverse of `C A^{-1} B`, row-major.
    schur_inv: Vec<Vec<S>>,
}

impl<S: Real> Constrained<S> {
    pub fn new(inner: Box<dyn LinearSolve<S>>, b: Vec<Vec<S>>, c: Vec<Vec<S>>) -> Result<Self> {
        let z = b.iter().map(|col| inner.solve(col)).collect::<Result<Vec<_>>>()?;
        let k = b.len();
        let m: Vec<Vec<S>> = (0..k).map(|i| (0..k).map(|j| dot(&c[i], &z[j])).collect()).collect();
        let schur_inv = small_inverse(&m)?;
        Ok(Self { inner, z, c, schur_inv })
    }
}

impl<S: Real> LinearSolve<S> for Constrained<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn solve(&self, rhs: &[S]) -> Result<Vec<S>> {
        let mut y = self.inner.solve(rhs)?;
        let cy: Vec<S> = self.c.iter().map(|ci| dot(ci, &y)).collect();
        for (i, zi) in self.z.iter().enumerate() {
            let lam = (0..cy.len()).fold(S::zero(), |acc, j| acc + self.schur_inv[i][j] * cy[j]);
            for (yk, zk) in y.iter_mut().zip(zi) {
                *yk = *yk - lam * *zk;
            }
        }
        Ok(y)
    }

    fn solve_transpose(&self, rhs: &[S]) -> Result<Vec<S>> {
        let zr: Vec<S> = self.z.iter().map(|zi| dot(zi, rhs)).collect();
        let mut r = rhs.to_vec();
        for (i, ci) in self.c.iter().enumerate() {
            let mu = (0..zr.len()).fold(S::zero(), |acc, j| acc + self.schur_inv[j][i] * zr[j]);
            for (rk, ck) in r.iter_mut().zip(ci) {
                *rk = *rk - mu * *ck;
            }
        }
        self.inner.solve_transpose(&r)
    }
}

/// Gauss-Jordan inverse of a small dense matrix.
fn small_inverse<S: Real>(m: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let k = m.len();
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv: Vec<Vec<S>> =
        (0..k).map(|i| (0..k).map(|j| if i == j { S::one() } else { S::zero() }).collect()).collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite"))
            .expect("non-empty");
        if a[piv][col].abs() <= S::min_positive_value() {
            return Err(Error::Singular);
        }
        a.swap(piv, col);
        inv.swap(piv, col);
        let p = a[col][col];
        for j in 0..k {
            a[col][j] = a[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col];
                for j in 0..k {
                    a[r][j] = a[r][j] - f * a[col][j];
                    inv[r][j] = inv[r][j] - f * inv[col][j];
                }
            }
        }
    }
    Ok(inv)
}

pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    let terms: Vec<S> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
    crate::scalar::pairwise_sum(&terms)
}

pub fn norm<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}
