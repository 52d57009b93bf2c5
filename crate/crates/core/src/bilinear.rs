//! Evaluation of the sesquilinear form `b_s(u, v)` term by term.

use crate::assembly::derivative_matrix;
use crate::coeff::CoefficientSet;
use crate::error::{Error, Result};
use crate::field::{l2_inner, l2_norm_sqr, QField};
use crate::grid::{BoundaryKind, Face};
use crate::quat::{Quaternion, SpectralParam};
use crate::scalar::{pairwise_sum, Real};
use crate::sparse::CsrMatrix;

/// The separate contributions to `b_s(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearTerms<S> {
    /// `sum_l <a_l d_l u, a_l d_l v>`.
    pub gradient: Quaternion<S>,
    /// `1/2 sum_l <d_l u, d_l(a_l^2) v>`.
    pub first_order: Quaternion<S>,
    /// `<Vect(Q_s(T)) u, v>`.
    pub vect: Quaternion<S>,
    /// `|s|^2 <u, v>`.
    pub mass: Quaternion<S>,
    /// `int a conj(u) v dS`; zero on Dirichlet grids.
    pub boundary: Quaternion<S>,
}

impl<S: Real> BilinearTerms<S> {
    pub fn total(&self) -> Quaternion<S> {
        self.gradient + self.first_order + self.vect + self.mass + self.boundary
    }
}

/// `b_s` for a fixed coefficient set and spectral parameter.
#[derive(Clone, Debug)]
pub struct BilinearForm<'a, S> {
    coeffs: &'a CoefficientSet<S>,
    s: SpectralParam<S>,
    d: [CsrMatrix<S>; 3],
}

fn apply_scalar<S: Real>(m: &CsrMatrix<S>, u: &QField<S>) -> QField<S> {
    let vals = u.values();
    let out = (0..m.nrows())
        .map(|r| {
            let (cols, coef) = m.row(r);
            cols.iter().zip(coef).fold(Quaternion::zero(), |acc, (&c, &w)| acc + vals[c] * w)
        })
        .collect();
    QField::from_values(u.grid(), out).expect("same grid")
}

fn pointwise<S: Real>(u: &QField<S>, f: impl Fn(usize, Quaternion<S>) -> Quaternion<S>) -> QField<S> {
    let out = u.values().iter().enumerate().map(|(i, &q)| f(i, q)).collect();
    QField::from_values(u.grid(), out).expect("same grid")
}

impl<'a, S: Real> BilinearForm<'a, S> {
    pub fn new(coeffs: &'a CoefficientSet<S>, s: SpectralParam<S>) -> Self {
        let grid = coeffs.grid();
        Self { coeffs, s, d: [0, 1, 2].map(|a| derivative_matrix(grid, a)) }
    }

    /// `d_l u` with central differences inside and one-sided ones on the boundary.
    pub fn derivative(&self, u: &QField<S>, axis: usize) -> QField<S> {
        apply_scalar(&self.d[axis], u)
    }

    /// `sum_l ||d_l u||^2`.
    pub fn grad_seminorm_sqr(&self, u: &QField<S>) -> S {
        let terms: Vec<S> = (0..3).map(|l| l2_norm_sqr(&self.derivative(u, l))).collect();
        pairwise_sum(&terms)
    }

    /// `||u||^2 + sum_l ||d_l u||^2`.
    pub fn h1_norm_sqr(&self, u: &QField<S>) -> S {
        l2_norm_sqr(u) + self.grad_seminorm_sqr(u)
    }

    /// `Vect(Q_s(T)) u` from the coefficient gradients:
    /// `e3 (a1 d1a2 d2 - a2 d2a1 d1) + e1 (a2 d2a3 d3 - a3 d3a2 d2) + e2 (a3 d3a1 d1 - a1 d1a3 d3) - 2 s0 T`.
    pub fn vect_apply(&self, u: &QField<S>) -> QField<S> {
        let c = self.coeffs;
        let du: Vec<QField<S>> = (0..3).map(|l| self.derivative(u, l)).collect();
        let two_s0 = S::lit(2.0) * self.s.s0;
        pointwise(u, |i, _| {
            let mut acc = Quaternion::zero();
            for (l, m, k) in [(0, 1, 3), (1, 2, 1), (2, 0, 2)] {
                let a_l = c.a[l].at(i);
                let a_m = c.a[m].at(i);
                let w =
                    du[m].values()[i] * (a_l * c.grad_a[l][m].at(i)) - du[l].values()[i] * (a_m * c.grad_a[m][l].at(i));
                acc += Quaternion::unit(k) * w;
            }
            for l in 0..3 {
                acc -= Quaternion::unit(l + 1) * du[l].values()[i] * (two_s0 * c.a[l].at(i));
            }
            acc
        })
    }

    /// Rejects fields outside the admissible space of the grid's boundary kind.
    pub fn check_space(&self, u: &QField<S>) -> Result<()> {
        let grid = self.coeffs.grid();
        grid.check_layout(u.grid())?;
        let scale = u.max_abs().max(S::min_positive_value());
        let tol = S::lit(1e-9) * scale;
        match grid.kind {
            BoundaryKind::Dirichlet => {
                if let Some(node) = grid.boundary_nodes().into_iter().find(|&n| u.values()[n].norm() > tol) {
                    return Err(Error::SpaceMismatch(format!("field does not vanish on boundary node {node}")));
                }
            }
            BoundaryKind::RobinType => {
                let m = u.mean().norm();
                if m > tol {
                    return Err(Error::SpaceMismatch(format!("field mean {m:e} is not zero")));
                }
            }
        }
        Ok(())
    }

    pub fn terms(&self, u: &QField<S>, v: &QField<S>) -> Result<BilinearTerms<S>> {
        self.check_space(u)?;
        self.check_space(v)?;
        Ok(self.terms_unchecked(u, v))
    }

    /// Term values without the admissible-space check.
    pub fn terms_unchecked(&self, u: &QField<S>, v: &QField<S>) -> BilinearTerms<S> {
        let c = self.coeffs;
        let grid = c.grid();
        let du: Vec<QField<S>> = (0..3).map(|l| self.derivative(u, l)).collect();
        let dv: Vec<QField<S>> = (0..3).map(|l| self.derivative(v, l)).collect();
        let ip = |a: &QField<S>, b: &QField<S>| l2_inner(a, b).expect("same grid");

        let mut gradient = Quaternion::zero();
        let mut first_order = Quaternion::zero();
        for l in 0..3 {
            let au = pointwise(&du[l], |i, q| q * c.a[l].at(i));
            let av = pointwise(&dv[l], |i, q| q * c.a[l].at(i));
            gradient += ip(&au, &av);
            // d_l(a_l^2) / 2 = a_l d_l a_l
            let wv = pointwise(v, |i, q| q * (c.a[l].at(i) * c.grad_a[l][l].at(i)));
            first_order += ip(&du[l], &wv);
        }
        let vect = ip(&self.vect_apply(u), v);
        let mass = ip(u, v) * self.s.modulus_sqr();

        let mut boundary = Quaternion::zero();
        if grid.kind == BoundaryKind::RobinType {
            let mut parts = Vec::new();
            for face in Face::all() {
                for (n, w) in grid.facet_weights(face) {
                    parts.push((u.values()[n].conj() * v.values()[n]) * (w * c.a_robin.at(n)));
                }
            }
            let comp = |k: usize| {
                let xs: Vec<S> = parts.iter().map(|q| q.to_array()[k]).collect();
                pairwise_sum(&xs)
            };
            boundary = Quaternion::new(comp(0), comp(1), comp(2), comp(3));
        }
        BilinearTerms { gradient, first_order, vect, mass, boundary }
    }

    pub fn eval(&self, u: &QField<S>, v: &QField<S>) -> Result<Quaternion<S>> {
        Ok(self.terms(u, v)?.total())
    }
}

/// `b_s(u, v)` summed over all terms.
pub fn eval_bilinear<S: Real>(
    coeffs: &CoefficientSet<S>,
    s: SpectralParam<S>,
    u: &QField<S>,
    v: &QField<S>,
) -> Result<Quaternion<S>> {
    BilinearForm::new(coeffs, s).eval(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    type Q = Quaternion<f64>;

    fn bump(x: [f64; 3]) -> f64 {
        let p = std::f64::consts::PI;
        (p * x[0]).sin().powi(2) * (p * x[1]).sin().powi(2) * (p * x[2]).sin().powi(2)
    }

    #[test]
    fn constant_coefficients_reduce_to_h1_norm() {
        let grid = Grid::unit_cube(9, BoundaryKind::Dirichlet).unwrap();
        let c = CoefficientSet::constant(&grid, 1.0);
        let s = SpectralParam::imaginary(Q::e2(), 1.0).unwrap();
        let u = QField::from_fn(&grid, |x| Q::new(1.0, -2.0, 0.5, 1.0) * bump(x));
        let form = BilinearForm::new(&c, s);
        let t = form.terms(&u, &u).unwrap();
        assert_eq!(t.first_order, Q::zero());
        assert_eq!(t.vect, Q::zero());
        assert_eq!(t.boundary, Q::zero());
        let want = form.grad_seminorm_sqr(&u) + l2_norm_sqr(&u);
        assert!((t.total().q0 - want).abs() < 1e-12 * want);
        assert!(t.total().vec_norm() < 1e-12 * want);
    }

    #[test]
    fn space_checks() {
        let grid = Grid::unit_cube(5, BoundaryKind::Dirichlet).unwrap();
        let c = CoefficientSet::constant(&grid, 1.0);
        let s = SpectralParam::imaginary(Q::e1(), 1.0).unwrap();
        let one = QField::constant(&grid, Q::one());
        assert!(matches!(eval_bilinear(&c, s, &one, &one), Err(Error::SpaceMismatch(_))));
        let rgrid = grid.with_kind(BoundaryKind::RobinType);
        let rc = CoefficientSet::constant(&rgrid, 1.0);
        let rone = QField::constant(&rgrid, Q::one());
        assert!(matches!(eval_bilinear(&rc, s, &rone, &rone), Err(Error::SpaceMismatch(_))));
    }
}
