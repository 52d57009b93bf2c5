//! Grid functions, weighted inner products and norms.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, Grid};
use crate::quat::Quaternion;
use crate::scalar::{pairwise_sum, Real};

/// Quaternion-valued grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct QField<S> {
    grid: Grid<S>,
    data: Vec<Quaternion<S>>,
}

impl<S: Real> QField<S> {
    pub fn zeros(grid: &Grid<S>) -> Self {
        Self { grid: grid.clone(), data: vec![Quaternion::zero(); grid.len()] }
    }

    pub fn constant(grid: &Grid<S>, q: Quaternion<S>) -> Self {
        Self { grid: grid.clone(), data: vec![q; grid.len()] }
    }

    pub fn from_values(grid: &Grid<S>, data: Vec<Quaternion<S>>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", data.len(), grid.len())));
        }
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn from_fn(grid: &Grid<S>, f: impl Fn([S; 3]) -> Quaternion<S>) -> Self {
        Self { grid: grid.clone(), data: (0..grid.len()).map(|i| f(grid.coord(i))).collect() }
    }

    /// Components uniform in `[-1, 1]` at every node.
    pub fn random<R: Rng + ?Sized>(grid: &Grid<S>, rng: &mut R) -> Self {
        let mut c = || S::lit(rng.gen_range(-1.0..1.0));
        Self { grid: grid.clone(), data: (0..grid.len()).map(|_| Quaternion::new(c(), c(), c(), c())).collect() }
    }

    /// Interleaved real view: node `n`, component `c` sits at `4 n + c`.
    pub fn from_real(grid: &Grid<S>, x: &[S]) -> Result<Self> {
        if x.len() != 4 * grid.len() {
            return Err(Error::GridMismatch(format!("{} reals for {} nodes", x.len(), grid.len())));
        }
        Ok(Self {
            grid: grid.clone(),
            data: x.chunks_exact(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect(),
        })
    }

    pub fn to_real(&self) -> Vec<S> {
        self.data.iter().flat_map(|q| q.to_array()).collect()
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Quaternion<S>] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Quaternion<S>] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Quaternion<S>> {
        self.data
    }

    pub fn map(&self, f: impl Fn(Quaternion<S>) -> Quaternion<S>) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|&q| f(q)).collect() }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Quaternion<S>, Quaternion<S>) -> Quaternion<S>) -> Self {
        assert!(self.grid.same_layout(&other.grid), "grid mismatch");
        Self { grid: self.grid.clone(), data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, r: S) -> Self {
        self.map(|q| q * r)
    }

    /// `x -> lambda x` at every node.
    pub fn left_mul(&self, lambda: Quaternion<S>) -> Self {
        self.map(|q| lambda * q)
    }

    /// `x -> x lambda` at every node.
    pub fn right_mul(&self, lambda: Quaternion<S>) -> Self {
        self.map(|q| q * lambda)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|q| q.is_finite())
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().map(|q| q.norm()).fold(S::zero(), S::max)
    }

    /// Weighted `L^2` norm.
    pub fn norm(&self) -> S {
        l2_norm_sqr(self).sqrt()
    }

    /// Sets boundary nodes to zero.
    pub fn zero_boundary(&self) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.len() {
            if self.grid.is_boundary(idx) {
                out.data[idx] = Quaternion::zero();
            }
        }
        out
    }

    /// Volume average.
    pub fn mean(&self) -> Quaternion<S> {
        let w = self.grid.weights();
        let comp = |c: usize| {
            let terms: Vec<S> = self.data.iter().zip(&w).map(|(q, &wi)| q.to_array()[c] * wi).collect();
            pairwise_sum(&terms)
        };
        Quaternion::new(comp(0), comp(1), comp(2), comp(3)) / pairwise_sum(&w)
    }

    /// Projection onto the admissible space of the grid's boundary kind.
    pub fn project_admissible(&self) -> Self {
        match self.grid.kind {
            BoundaryKind::Dirichlet => self.zero_boundary(),
            BoundaryKind::RobinType => mean_zero_project(self),
        }
    }
}

/// `sum_n w_n conj(u_n) v_n` with dual-cell weights.
pub fn l2_inner<S: Real>(u: &QField<S>, v: &QField<S>) -> Result<Quaternion<S>> {
    u.grid.check_layout(&v.grid)?;
    let w = u.grid.weights();
    let prods: Vec<Quaternion<S>> =
        u.data.iter().zip(&v.data).zip(&w).map(|((&a, &b), &wi)| (a.conj() * b) * wi).collect();
    let comp = |c: usize| {
        let terms: Vec<S> = prods.iter().map(|q| q.to_array()[c]).collect();
        pairwise_sum(&terms)
    };
    Ok(Quaternion::new(comp(0), comp(1), comp(2), comp(3)))
}

pub fn l2_norm_sqr<S: Real>(u: &QField<S>) -> S {
    let terms: Vec<S> = u.data.iter().enumerate().map(|(i, q)| q.norm_sqr() * u.grid.weight(i)).collect();
    pairwise_sum(&terms)
}

/// Real part of the weighted inner product.
pub fn real_inner<S: Real>(u: &QField<S>, v: &QField<S>) -> S {
    let terms: Vec<S> = u
        .data
        .iter()
        .zip(&v.data)
        .enumerate()
        .map(|(i, (a, b))| (a.q0 * b.q0 + a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3) * u.grid.weight(i))
        .collect();
    pairwise_sum(&terms)
}

/// Subtracts the volume average.
pub fn mean_zero_project<S: Real>(u: &QField<S>) -> QField<S> {
    let m = u.mean();
    u.map(|q| q - m)
}

/// Real scalar grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<S> {
    grid: Grid<S>,
    data: Vec<S>,
}

impl<S: Real> ScalarField<S> {
    pub fn constant(grid: &Grid<S>, c: S) -> Self {
        Self { grid: grid.clone(), data: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: &Grid<S>, f: impl Fn([S; 3]) -> S) -> Self {
        Self { grid: grid.clone(), data: (0..grid.len()).map(|i| f(grid.coord(i))).collect() }
    }

    pub fn from_values(grid: &Grid<S>, data: Vec<S>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", data.len(), grid.len())));
        }
        Ok(Self { grid: grid.clone(), data })
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn at(&self, idx: usize) -> S {
        self.data[idx]
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert!(self.grid.same_layout(&other.grid), "grid mismatch");
        Self { grid: self.grid.clone(), data: self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).collect() }
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().map(|x| x.abs()).fold(S::zero(), S::max)
    }

    pub fn min(&self) -> S {
        self.data.iter().copied().fold(S::infinity(), S::min)
    }

    /// First node holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|x| !x.is_finite())
    }

    /// Lifts to a quaternion field with zero imaginary part.
    pub fn to_qfield(&self) -> QField<S> {
        QField { grid: self.grid.clone(), data: self.data.iter().map(|&x| Quaternion::real(x)).collect() }
    }
}

/// `(sum |f|^p w)^(1/p)`; `p = +inf` gives the maximum modulus.
pub fn discrete_lp_norm<S: Real>(f: &ScalarField<S>, p: S) -> Result<S> {
    if p.is_infinite() && p > S::zero() {
        return Ok(f.max_abs());
    }
    if !(p >= S::one()) {
        return Err(Error::InvalidArgument(format!("Lp exponent must be >= 1, got {p}")));
    }
    let terms: Vec<S> = f.data.iter().enumerate().map(|(i, x)| x.abs().powf(p) * f.grid.weight(i)).collect();
    Ok(pairwise_sum(&terms).powf(p.recip()))
}
