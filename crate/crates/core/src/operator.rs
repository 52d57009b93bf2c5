//! Right-linear quaternionic operators and their pseudo-resolvents.
//!
//! Vectors are slices of quaternions with a positive weight per entry; adjoints
//! are taken in the weighted real inner product `Re <u, v> = sum w_n Re(conj(u_n) v_n)`.

use std::sync::Arc;

use crate::adjoint::QuatMatrix;
use crate::assembly::{assemble_q, assemble_t, AssembledOperator};
use crate::coeff::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Grid};
use crate::quat::{Quaternion, SpectralParam};
use crate::scalar::Real;
use crate::solver::{Constrained, Gmres, LinearSolve, SolveOptions, SparseLu, SymbolicCache};
use crate::sparse::CsrMatrix;

pub type QVec<S> = Vec<Quaternion<S>>;

pub fn to_real<S: Real>(v: &[Quaternion<S>]) -> Vec<S> {
    v.iter().flat_map(|q| q.to_array()).collect()
}

pub fn from_real<S: Real>(x: &[S]) -> QVec<S> {
    x.chunks_exact(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect()
}

/// Applies `Q_s(T)^{-1}` (restricted to the admissible space) and its adjoint.
pub trait PseudoResolvent<S: Real>: Send + Sync {
    fn spectral(&self) -> SpectralParam<S>;
    fn solve(&self, f: &[Quaternion<S>]) -> Result<QVec<S>>;
    fn solve_adjoint(&self, f: &[Quaternion<S>]) -> Result<QVec<S>>;
}

pub trait QuatOperator<S: Real>: Send + Sync {
    /// Number of quaternion unknowns.
    fn dim(&self) -> usize;
    fn weights(&self) -> &[S];
    fn apply(&self, v: &[Quaternion<S>]) -> QVec<S>;
    fn apply_adjoint(&self, v: &[Quaternion<S>]) -> QVec<S>;
    /// Orthogonal projection onto the admissible space (identity by default).
    fn project(&self, _v: &mut [Quaternion<S>]) {}
    fn pseudo_resolvent(&self, s: &SpectralParam<S>, opts: &SolveOptions) -> Result<Box<dyn PseudoResolvent<S> + '_>>;
}

/// Weighted norm `sqrt(sum w_n |v_n|^2)`.
pub fn weighted_norm<S: Real>(w: &[S], v: &[Quaternion<S>]) -> S {
    let terms: Vec<S> = v.iter().zip(w).map(|(q, &wi)| q.norm_sqr() * wi).collect();
    crate::scalar::pairwise_sum(&terms).sqrt()
}

/// Weighted real inner product.
pub fn weighted_dot<S: Real>(w: &[S], u: &[Quaternion<S>], v: &[Quaternion<S>]) -> S {
    let terms: Vec<S> = u
        .iter()
        .zip(v)
        .zip(w)
        .map(|((a, b), &wi)| (a.q0 * b.q0 + a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3) * wi)
        .collect();
    crate::scalar::pairwise_sum(&terms)
}

/// Dense `n x n` quaternion matrix acting by `v -> M v`, unit weights.
pub struct DenseOperator<S> {
    m: QuatMatrix<S>,
    mh: QuatMatrix<S>,
    weights: Vec<S>,
}

impl<S: Real> DenseOperator<S> {
    pub fn new(m: QuatMatrix<S>) -> Self {
        let n = m.dim();
        Self { mh: m.conj_transpose(), m, weights: vec![S::one(); n] }
    }

    /// `1 x 1` operator of left multiplication by `q`.
    pub fn scalar(q: Quaternion<S>) -> Self {
        Self::new(QuatMatrix::scalar(1, q))
    }

    pub fn matrix(&self) -> &QuatMatrix<S> {
        &self.m
    }

    /// `M^2 - 2 Re(s) M + |s|^2 I`.
    pub fn q_matrix(&self, s: &SpectralParam<S>) -> QuatMatrix<S> {
        let n = self.m.dim();
        let m2 = &self.m * &self.m;
        let lin = self.m.scale(-S::lit(2.0) * s.s0);
        &(&m2 + &lin) + &QuatMatrix::scalar(n, Quaternion::real(s.modulus_sqr()))
    }
}

struct DenseResolvent<S> {
    s: SpectralParam<S>,
    inv: QuatMatrix<S>,
    inv_h: QuatMatrix<S>,
}

impl<S: Real> PseudoResolvent<S> for DenseResolvent<S> {
    fn spectral(&self) -> SpectralParam<S> {
        self.s
    }
    fn solve(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        Ok(self.inv.mul_vec(f))
    }
    fn solve_adjoint(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        Ok(self.inv_h.mul_vec(f))
    }
}

impl<S: Real> QuatOperator<S> for DenseOperator<S> {
    fn dim(&self) -> usize {
        self.m.dim()
    }
    fn weights(&self) -> &[S] {
        &self.weights
    }
    fn apply(&self, v: &[Quaternion<S>]) -> QVec<S> {
        self.m.mul_vec(v)
    }
    fn apply_adjoint(&self, v: &[Quaternion<S>]) -> QVec<S> {
        self.mh.mul_vec(v)
    }
    fn pseudo_resolvent(&self, s: &SpectralParam<S>, _opts: &SolveOptions) -> Result<Box<dyn PseudoResolvent<S> + '_>> {
        let inv = self.q_matrix(s).inverse()?;
        Ok(Box::new(DenseResolvent { s: *s, inv_h: inv.conj_transpose(), inv }))
    }
}

/// The zero operator on a grid: `Q_s = |s|^2 I`.
pub struct ZeroOperator<S> {
    grid: Grid<S>,
    weights: Vec<S>,
}

impl<S: Real> ZeroOperator<S> {
    pub fn new(grid: &Grid<S>) -> Self {
        Self { weights: grid.weights(), grid: grid.clone() }
    }
}

struct ScaledIdentity<'a, S: Real> {
    s: SpectralParam<S>,
    op: &'a dyn QuatOperator<S>,
}

impl<S: Real> PseudoResolvent<S> for ScaledIdentity<'_, S> {
    fn spectral(&self) -> SpectralParam<S> {
        self.s
    }
    fn solve(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        let mut u: QVec<S> = f.iter().map(|&q| q / self.s.modulus_sqr()).collect();
        self.op.project(&mut u);
        Ok(u)
    }
    fn solve_adjoint(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        self.solve(f)
    }
}

impl<S: Real> QuatOperator<S> for ZeroOperator<S> {
    fn dim(&self) -> usize {
        self.grid.len()
    }
    fn weights(&self) -> &[S] {
        &self.weights
    }
    fn apply(&self, v: &[Quaternion<S>]) -> QVec<S> {
        vec![Quaternion::zero(); v.len()]
    }
    fn apply_adjoint(&self, v: &[Quaternion<S>]) -> QVec<S> {
        vec![Quaternion::zero(); v.len()]
    }
    fn project(&self, v: &mut [Quaternion<S>]) {
        project_grid(&self.grid, &self.weights, true, v)
    }
    fn pseudo_resolvent(&self, s: &SpectralParam<S>, _opts: &SolveOptions) -> Result<Box<dyn PseudoResolvent<S> + '_>> {
        if s.modulus_sqr() == S::zero() {
            return Err(Error::Singular);
        }
        Ok(Box::new(ScaledIdentity { s: *s, op: self }))
    }
}

/// Zero boundary values (Dirichlet) or subtract the weighted mean (Robin-type, when `mean_zero`).
fn project_grid<S: Real>(grid: &Grid<S>, w: &[S], mean_zero: bool, v: &mut [Quaternion<S>]) {
    match grid.kind {
        BoundaryKind::Dirichlet => {
            for (i, q) in v.iter_mut().enumerate() {
                if grid.is_boundary(i) {
                    *q = Quaternion::zero();
                }
            }
        }
        BoundaryKind::RobinType if mean_zero => {
            let m = weighted_mean(w, v);
            for q in v.iter_mut() {
                *q -= m;
            }
        }
        BoundaryKind::RobinType => {}
    }
}

fn weighted_mean<S: Real>(w: &[S], v: &[Quaternion<S>]) -> Quaternion<S> {
    let comp = |c: usize| {
        let t: Vec<S> = v.iter().zip(w).map(|(q, &wi)| q.to_array()[c] * wi).collect();
        crate::scalar::pairwise_sum(&t)
    };
    let total = crate::scalar::pairwise_sum(w);
    Quaternion::new(comp(0), comp(1), comp(2), comp(3)) / total
}

/// Discretized `T` on a grid.
pub struct GridOperator<S: Real> {
    t: AssembledOperator<S>,
    tt: CsrMatrix<S>,
    grid: Grid<S>,
    weights: Arc<Vec<S>>,
    mean_zero: bool,
    symbolic: SymbolicCache,
}

impl<S: Real> GridOperator<S> {
    /// `mean_zero` selects the mean-zero admissible space on Robin-type grids.
    pub fn new(coeffs: &CoefficientSet<S>, mean_zero: bool) -> Result<Self> {
        Ok(Self::from_assembled(assemble_t(coeffs)?, coeffs.grid(), mean_zero))
    }

    pub fn from_assembled(t: AssembledOperator<S>, grid: &Grid<S>, mean_zero: bool) -> Self {
        Self {
            tt: t.matrix.transpose(),
            t,
            grid: grid.clone(),
            weights: Arc::new(grid.weights()),
            mean_zero,
            symbolic: SymbolicCache::default(),
        }
    }

    pub fn assembled(&self) -> &AssembledOperator<S> {
        &self.t
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    fn to_w(&self, v: &[Quaternion<S>]) -> Vec<S> {
        v.iter().zip(self.weights.iter()).flat_map(|(q, &w)| (*q * w).to_array()).collect()
    }

    fn from_w(&self, x: &[S]) -> QVec<S> {
        from_real(x).into_iter().zip(self.weights.iter()).map(|(q, &w)| q / w).collect()
    }

    fn robin_mean_zero(&self) -> bool {
        self.grid.kind == BoundaryKind::RobinType && self.mean_zero
    }
}

struct GridResolvent<'a, S: Real> {
    op: &'a GridOperator<S>,
    s: SpectralParam<S>,
    solver: Box<dyn LinearSolve<S>>,
    /// Bordered LU: solution occupies the first `4N` entries.
    bordered: bool,
}

impl<S: Real> GridResolvent<'_, S> {
    fn raw(&self, mut x: Vec<S>, transpose: bool) -> Result<Vec<S>> {
        let n4 = x.len();
        if self.bordered {
            x.extend(std::iter::repeat(S::zero()).take(4));
        }
        let mut y = if transpose { self.solver.solve_transpose(&x)? } else { self.solver.solve(&x)? };
        y.truncate(n4);
        Ok(y)
    }
}

impl<S: Real> PseudoResolvent<S> for GridResolvent<'_, S> {
    fn spectral(&self) -> SpectralParam<S> {
        self.s
    }

    fn solve(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        let mut f = f.to_vec();
        self.op.project(&mut f);
        let mut u = from_real(&self.raw(to_real(&f), false)?);
        self.op.project(&mut u);
        Ok(u)
    }

    fn solve_adjoint(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        let mut f = f.to_vec();
        self.op.project(&mut f);
        let y = self.raw(self.op.to_w(&f), true)?;
        let mut u = self.op.from_w(&y);
        self.op.project(&mut u);
        Ok(u)
    }
}

impl<S: Real> QuatOperator<S> for GridOperator<S> {
    fn dim(&self) -> usize {
        self.grid.len()
    }
    fn weights(&self) -> &[S] {
        &self.weights
    }
    fn apply(&self, v: &[Quaternion<S>]) -> QVec<S> {
        self.t.apply_quat(v)
    }
    fn apply_adjoint(&self, v: &[Quaternion<S>]) -> QVec<S> {
        self.from_w(&self.tt.mul_vec(&self.to_w(v)))
    }
    fn project(&self, v: &mut [Quaternion<S>]) {
        project_grid(&self.grid, &self.weights, self.mean_zero, v)
    }

    fn pseudo_resolvent(&self, s: &SpectralParam<S>, opts: &SolveOptions) -> Result<Box<dyn PseudoResolvent<S> + '_>> {
        opts.validate()?;
        let q = assemble_q(s, &self.t).matrix;
        let n = self.grid.len();
        let mz = self.robin_mean_zero();
        // Mean-zero constraint: one constant column and one weight row per component.
        let constraint = || {
            let cols: Vec<Vec<S>> =
                (0..4).map(|c| (0..4 * n).map(|i| if i % 4 == c { S::one() } else { S::zero() }).collect()).collect();
            let rows: Vec<Vec<S>> = (0..4)
                .map(|c| (0..4 * n).map(|i| if i % 4 == c { self.weights[i / 4] } else { S::zero() }).collect())
                .collect();
            (cols, rows)
        };
        let direct = opts.use_direct(n);
        let solver: Box<dyn LinearSolve<S>> = match (direct, mz) {
            (true, true) => {
                let (cols, rows) = constraint();
                Box::new(SparseLu::bordered(&q, &cols, &rows, Some(&self.symbolic))?)
            }
            (true, false) => Box::new(SparseLu::with_cache(&q, Some(&self.symbolic))?),
            (false, true) => {
                let (cols, rows) = constraint();
                Box::new(Constrained::new(Box::new(Gmres::new(&q, opts)), cols, rows)?)
            }
            (false, false) => Box::new(Gmres::new(&q, opts)),
        };
        let bordered = direct && mz;
        Ok(Box::new(GridResolvent { op: self, s: *s, solver, bordered }))
    }
}
