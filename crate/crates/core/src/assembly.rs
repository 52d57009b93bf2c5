//! Sparse real assembly of `T = sum e_l a_l d_l`, its square and `Q_s(T)`.
//!
//! Unknowns are interleaved: component `c` of node `n` sits at row `4 n + c`.

use std::io::Write;
use std::sync::Arc;

use crate::adjoint::QuatMatrix;
use crate::coeff::CoefficientSet;
use crate::error::{Error, Result};
use crate::field::QField;
use crate::grid::{BoundaryKind, Grid};
use crate::quat::{Quaternion, SpectralParam};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Below this value of `a_m^2` the Robin-type closure is treated as singular.
pub const CLOSURE_SINGULAR_TOL: f64 = 1e-12;

/// Second-order one-sided stencil at an end node with outward orientation `sign`.
fn one_sided<S: Real>(grid: &Grid<S>, idx: usize, axis: usize, sign: i8) -> [(usize, S); 3] {
    let two_h = S::lit(2.0) * grid.h;
    let s = S::lit(sign as f64);
    let d = -(sign as isize);
    [
        (idx, s * S::lit(3.0) / two_h),
        (grid.shift(idx, axis, d), -s * S::lit(4.0) / two_h),
        (grid.shift(idx, axis, 2 * d), s / two_h),
    ]
}

fn central<S: Real>(grid: &Grid<S>, idx: usize, axis: usize) -> [(usize, S); 2] {
    let two_h = S::lit(2.0) * grid.h;
    [(grid.shift(idx, axis, 1), S::one() / two_h), (grid.shift(idx, axis, -1), -S::one() / two_h)]
}

/// Derivative stencil without boundary closure: central inside, one-sided at the ends.
pub fn unclosed_stencil<S: Real>(grid: &Grid<S>, idx: usize, axis: usize) -> Vec<(usize, S)> {
    match grid.side(idx, axis) {
        Some(sign) => one_sided(grid, idx, axis, sign).to_vec(),
        None => central(grid, idx, axis).to_vec(),
    }
}

/// Face that carries the Robin-type relation at a boundary node: the lowest boundary axis.
pub fn dominant_face<S: Real>(grid: &Grid<S>, idx: usize) -> Option<(usize, i8)> {
    (0..3).find_map(|a| grid.side(idx, a).map(|s| (a, s)))
}

/// Scalar `N x N` derivative matrix along `axis` without closure.
pub fn derivative_matrix<S: Real>(grid: &Grid<S>, axis: usize) -> CsrMatrix<S> {
    CsrMatrix::from_rows(grid.len(), grid.len(), |r| unclosed_stencil(grid, r, axis))
}

/// Derivative matrices including the boundary closure of the grid's kind.
///
/// Robin-type: on the dominant face the ghost value is eliminated from
/// `a_m^2 n_m d_m u + a u = 0`, so the row reduces to `d_m u = -sign a u / a_m^2`.
pub fn closed_derivatives<S: Real>(coeffs: &CoefficientSet<S>) -> Result<[CsrMatrix<S>; 3]> {
    let grid = coeffs.grid();
    let n = grid.len();
    let mut out = Vec::with_capacity(3);
    for axis in 0..3 {
        let mut t = Vec::new();
        for idx in 0..n {
            let closure = match (grid.kind, dominant_face(grid, idx)) {
                (BoundaryKind::RobinType, Some((m, sign))) if m == axis => Some(sign),
                _ => None,
            };
            match closure {
                Some(sign) => {
                    let am = coeffs.a[axis].at(idx);
                    let am2 = am * am;
                    if am2 <= S::lit(CLOSURE_SINGULAR_TOL) {
                        return Err(Error::SingularClosure { node: idx, axis });
                    }
                    let a = coeffs.a_robin.at(idx);
                    t.push((idx, idx, -S::lit(sign as f64) * a / am2));
                }
                None => t.extend(unclosed_stencil(grid, idx, axis).into_iter().map(|(c, v)| (idx, c, v))),
            }
        }
        out.push(CsrMatrix::from_triplets(n, n, t));
    }
    Ok(out.try_into().expect("three axes"))
}

/// `I_N (x) L(q)`: left multiplication by `q` at every node.
pub fn left_scalar_operator<S: Real>(nodes: usize, q: Quaternion<S>) -> CsrMatrix<S> {
    let l = q.left_matrix();
    let mut t = Vec::with_capacity(16 * nodes);
    for node in 0..nodes {
        for r in 0..4 {
            for c in 0..4 {
                t.push((4 * node + r, 4 * node + c, l[r][c]));
            }
        }
    }
    CsrMatrix::from_triplets(4 * nodes, 4 * nodes, t)
}

/// `L(q) (x) G` in the interleaved layout.
pub fn kron_left<S: Real>(q: Quaternion<S>, g: &CsrMatrix<S>) -> CsrMatrix<S> {
    let l = q.left_matrix();
    let mut t = Vec::with_capacity(4 * g.nnz());
    for (i, j, v) in g.triplets() {
        for r in 0..4 {
            for c in 0..4 {
                if l[r][c] != S::zero() {
                    t.push((4 * i + r, 4 * j + c, l[r][c] * v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(4 * g.nrows(), 4 * g.ncols(), t)
}

/// A right-linear quaternionic operator stored as a real `4N x 4N` matrix.
#[derive(Clone, Debug)]
pub struct AssembledOperator<S> {
    pub matrix: CsrMatrix<S>,
    pub grid: Option<Grid<S>>,
    pub spectral: Option<SpectralParam<S>>,
    /// Scalar factors `G_l = a_l D_l` (boundary-projected for Dirichlet) with `T = sum L(e_l) (x) G_l`.
    factors: Option<Arc<[CsrMatrix<S>; 3]>>,
}

impl<S: Real> AssembledOperator<S> {
    /// Operator without grid metadata, e.g. from a dense quaternion matrix.
    pub fn from_matrix(matrix: CsrMatrix<S>) -> Self {
        Self { matrix, grid: None, spectral: None, factors: None }
    }

    pub fn from_quat_matrix(m: &QuatMatrix<S>) -> Self {
        let n = m.dim();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let l = m[(i, j)].left_matrix();
                for r in 0..4 {
                    for c in 0..4 {
                        t.push((4 * i + r, 4 * j + c, l[r][c]));
                    }
                }
            }
        }
        Self::from_matrix(CsrMatrix::from_triplets(4 * n, 4 * n, t))
    }

    /// Number of quaternion unknowns.
    pub fn dim(&self) -> usize {
        self.matrix.nrows() / 4
    }

    pub fn boundary_kind(&self) -> Option<BoundaryKind> {
        self.grid.as_ref().map(|g| g.kind)
    }

    pub fn factors(&self) -> Option<&[CsrMatrix<S>; 3]> {
        self.factors.as_deref()
    }

    pub fn apply_real(&self, x: &[S]) -> Vec<S> {
        self.matrix.mul_vec(x)
    }

    pub fn apply_quat(&self, v: &[Quaternion<S>]) -> Vec<Quaternion<S>> {
        let x: Vec<S> = v.iter().flat_map(|q| q.to_array()).collect();
        self.apply_real(&x).chunks_exact(4).map(|c| Quaternion::new(c[0], c[1], c[2], c[3])).collect()
    }

    pub fn apply(&self, u: &QField<S>) -> Result<QField<S>> {
        if let Some(g) = &self.grid {
            g.check_layout(u.grid())?;
        }
        if 4 * u.grid().len() != self.matrix.ncols() {
            return Err(Error::GridMismatch("field size does not match operator".into()));
        }
        QField::from_real(u.grid(), &self.apply_real(&u.to_real()))
    }

    /// Writes `QOP,4N,boundary_kind,s0,s1` followed by `row,col,value` lines.
    pub fn export<W: Write>(&self, mut w: W) -> Result<()> {
        let kind = self.boundary_kind().map_or("none".to_string(), |k| k.to_string());
        let (s0, s1) = self.spectral.map_or((S::zero(), S::zero()), |s| (s.s0, s.s1));
        writeln!(w, "QOP,{},{kind},{s0},{s1}", self.matrix.nrows())?;
        for (r, c, v) in self.matrix.triplets() {
            writeln!(w, "{r},{c},{v}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Assembles the closed discrete `T`. Dirichlet grids get `P T P` with `P` zeroing boundary nodes.
pub fn assemble_t<S: Real>(coeffs: &CoefficientSet<S>) -> Result<AssembledOperator<S>> {
    coeffs.validate()?;
    let grid = coeffs.grid();
    let d = closed_derivatives(coeffs)?;
    let mut g: Vec<CsrMatrix<S>> = (0..3)
        .map(|l| {
            let a = coeffs.a[l].values();
            let t = d[l].triplets().map(|(r, c, v)| (r, c, a[r] * v)).collect();
            CsrMatrix::from_triplets(grid.len(), grid.len(), t)
        })
        .collect();
    if grid.kind == BoundaryKind::Dirichlet {
        for gl in &mut g {
            *gl = gl.restrict(|n| !grid.is_boundary(n));
        }
    }
    let mut matrix = CsrMatrix::zeros(4 * grid.len(), 4 * grid.len());
    for (l, gl) in g.iter().enumerate() {
        matrix = matrix.add(&kron_left(Quaternion::unit(l + 1), gl));
    }
    Ok(AssembledOperator {
        matrix,
        grid: Some(grid.clone()),
        spectral: None,
        factors: Some(Arc::new(g.try_into().expect("three axes"))),
    })
}

/// `Q_s(T) = T T - 2 Re(s) T + |s|^2 I` as a literal sparse composition.
pub fn assemble_q<S: Real>(s: &SpectralParam<S>, t: &AssembledOperator<S>) -> AssembledOperator<S> {
    let n = t.matrix.nrows();
    let tt = t.matrix.matmul(&t.matrix);
    let matrix =
        tt.lincomb(S::one(), &t.matrix, -S::lit(2.0) * s.s0).add(&CsrMatrix::scaled_identity(n, s.modulus_sqr()));
    AssembledOperator { matrix, grid: t.grid.clone(), spectral: Some(*s), factors: t.factors.clone() }
}

/// Splits `Q_s(T)` into `Scal = (|s|^2 - sum G_l^2) I` and
/// `Vect = e3 [G1,G2] + e1 [G2,G3] + e2 [G3,G1] - 2 Re(s) T`.
pub fn scal_vect_decompose<S: Real>(q: &AssembledOperator<S>) -> Result<(AssembledOperator<S>, AssembledOperator<S>)> {
    let g = q.factors().ok_or_else(|| Error::MissingMetadata("operator has no coefficient factors".into()))?;
    let s = q.spectral.ok_or_else(|| Error::MissingMetadata("operator has no spectral parameter".into()))?;
    let n = g[0].nrows();
    let mut sum_sq = CsrMatrix::zeros(n, n);
    for gl in g.iter() {
        sum_sq = sum_sq.add(&gl.matmul(gl));
    }
    let scal_scalar = CsrMatrix::scaled_identity(n, s.modulus_sqr()).sub(&sum_sq);
    let scal = kron_left(Quaternion::one(), &scal_scalar);

    let comm = |a: usize, b: usize| g[a].matmul(&g[b]).sub(&g[b].matmul(&g[a]));
    let mut vect = kron_left(Quaternion::e3(), &comm(0, 1))
        .add(&kron_left(Quaternion::e1(), &comm(1, 2)))
        .add(&kron_left(Quaternion::e2(), &comm(2, 0)));
    if s.s0 != S::zero() {
        let mut t = CsrMatrix::zeros(4 * n, 4 * n);
        for (l, gl) in g.iter().enumerate() {
            t = t.add(&kron_left(Quaternion::unit(l + 1), gl));
        }
        vect = vect.lincomb(S::one(), &t, -S::lit(2.0) * s.s0);
    }
    let wrap =
        |matrix| AssembledOperator { matrix, grid: q.grid.clone(), spectral: q.spectral, factors: q.factors.clone() };
    Ok((wrap(scal), wrap(vect)))
}

/// Scalar boundary rows, one per boundary node, acting identically on each component.
#[derive(Clone, Debug)]
pub struct BoundaryRows<S> {
    pub nodes: Vec<usize>,
    /// `nodes.len() x N`.
    pub matrix: CsrMatrix<S>,
}

impl<S: Real> BoundaryRows<S> {
    pub fn apply(&self, u: &QField<S>) -> Vec<Quaternion<S>> {
        let comps: Vec<Vec<S>> = (0..4)
            .map(|c| {
                let x: Vec<S> = u.values().iter().map(|q| q.to_array()[c]).collect();
                self.matrix.mul_vec(&x)
            })
            .collect();
        (0..self.nodes.len()).map(|r| Quaternion::new(comps[0][r], comps[1][r], comps[2][r], comps[3][r])).collect()
    }
}

fn boundary_rows<S: Real>(
    coeffs: &CoefficientSet<S>,
    row: impl Fn(usize, usize, i8) -> Result<(S, S)>,
) -> Result<BoundaryRows<S>> {
    let grid = coeffs.grid();
    let nodes = grid.boundary_nodes();
    let mut t = Vec::new();
    for (r, &idx) in nodes.iter().enumerate() {
        let (axis, sign) = dominant_face(grid, idx).expect("boundary node");
        let (deriv, zeroth) = row(idx, axis, sign)?;
        for (c, v) in one_sided(grid, idx, axis, sign) {
            t.push((r, c, deriv * v));
        }
        t.push((r, idx, zeroth));
    }
    let matrix = CsrMatrix::from_triplets(nodes.len(), grid.len(), t);
    Ok(BoundaryRows { nodes, matrix })
}

/// Rows of `sum a_l^2 n_l d_l u + a u` with one-sided normal derivatives.
pub fn robin_type_rows<S: Real>(coeffs: &CoefficientSet<S>) -> Result<BoundaryRows<S>> {
    boundary_rows(coeffs, |idx, axis, sign| {
        let am = coeffs.a[axis].at(idx);
        if am * am <= S::lit(CLOSURE_SINGULAR_TOL) {
            return Err(Error::SingularClosure { node: idx, axis });
        }
        Ok((am * (am * S::lit(sign as f64)), coeffs.a_robin.at(idx)))
    })
}

/// Rows of the physical Robin operator `sum a_l n_l d_l v + b v`.
pub fn physical_robin_rows<S: Real>(coeffs: &CoefficientSet<S>) -> Result<BoundaryRows<S>> {
    let b = coeffs.b_phys.as_ref().ok_or_else(|| Error::MissingMetadata("physical Robin function b".into()))?;
    boundary_rows(coeffs, |idx, axis, sign| Ok((coeffs.a[axis].at(idx) * S::lit(sign as f64), b.at(idx))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffExpr;
    use crate::field::ScalarField;

    type Q = Quaternion<f64>;

    fn interior(grid: &Grid<f64>) -> impl Iterator<Item = usize> + '_ {
        (0..grid.len()).filter(|&i| !grid.is_boundary(i))
    }

    #[test]
    fn linear_and_constant_fields() {
        let grid = Grid::<f64>::unit_cube(6, BoundaryKind::RobinType).unwrap();
        let c = CoefficientSet::constant(&grid, 1.0).with_robin(ScalarField::constant(&grid, 0.0)).unwrap();
        let t = assemble_t(&c).unwrap();
        let u = QField::from_fn(&grid, |x| Q::real(x[0]));
        let tu = t.apply(&u).unwrap();
        for i in interior(&grid) {
            assert!(tu.values()[i].max_abs_diff(Q::e1()) < 1e-12);
        }
        let k = QField::constant(&grid, Q::new(1.0, 2.0, 3.0, 4.0));
        assert!(t.apply(&k).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn variable_coefficient_on_linear_field() {
        let grid = Grid::<f64>::new([5; 3], 0.25, [0.0, 1.0, 0.0], BoundaryKind::RobinType).unwrap();
        let c = CoefficientSet::from_exprs(
            &grid,
            [CoeffExpr::Affine { c0: 0.0, c: [0.0, 1.0, 0.0] }, CoeffExpr::Constant(1.0), CoeffExpr::Constant(1.0)],
        )
        .unwrap();
        let t = assemble_t(&c).unwrap();
        let u = QField::from_fn(&grid, |x| Q::real(x[0]));
        let tu = t.apply(&u).unwrap();
        for i in interior(&grid) {
            let x = grid.coord(i);
            assert!(tu.values()[i].max_abs_diff(Q::e1() * x[1]) < 1e-12);
        }
    }

    #[test]
    fn neumann_reflection_when_robin_vanishes() {
        let grid = Grid::<f64>::unit_cube(5, BoundaryKind::RobinType).unwrap();
        let c = CoefficientSet::constant(&grid, 1.0);
        let d = closed_derivatives(&c).unwrap();
        let node = grid.idx(0, 2, 2);
        assert_eq!(d[0].row(node).0.len(), 0);
        assert_eq!(d[1].row(node).0.len(), 2);
    }

    #[test]
    fn singular_closure_reports_node() {
        let grid = Grid::<f64>::unit_cube(4, BoundaryKind::RobinType).unwrap();
        let c = CoefficientSet::from_exprs(
            &grid,
            [CoeffExpr::Affine { c0: 0.0, c: [1.0, 0.0, 0.0] }, CoeffExpr::Constant(1.0), CoeffExpr::Constant(1.0)],
        )
        .unwrap();
        match assemble_t(&c) {
            Err(Error::SingularClosure { node, axis }) => {
                assert_eq!(axis, 0);
                assert_eq!(grid.ijk(node)[0], 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_operator_gives_scaled_identity() {
        let grid = Grid::<f64>::unit_cube(4, BoundaryKind::Dirichlet).unwrap();
        let t = assemble_t(&CoefficientSet::constant(&grid, 0.0)).unwrap();
        let s = SpectralParam::new(Q::new(0.5, 1.0, -2.0, 0.0));
        let q = assemble_q(&s, &t);
        let want = CsrMatrix::scaled_identity(4 * grid.len(), s.modulus_sqr());
        assert_eq!(q.matrix, want);
    }

    #[test]
    fn robin_rows_on_constants() {
        let grid = Grid::<f64>::unit_cube(5, BoundaryKind::RobinType).unwrap();
        let ar = ScalarField::from_fn(&grid, |x| 1.0 + x[0] + 2.0 * x[2]);
        let c = CoefficientSet::constant(&grid, 1.5).with_robin(ar.clone()).unwrap();
        let rows = robin_type_rows(&c).unwrap();
        let u = QField::constant(&grid, Q::real(2.0));
        for (r, v) in rows.apply(&u).into_iter().enumerate() {
            let node = rows.nodes[r];
            assert!((v.q0 - 2.0 * ar.at(node)).abs() < 1e-12);
        }
    }

    #[test]
    fn export_header() {
        let grid = Grid::<f64>::unit_cube(3, BoundaryKind::Dirichlet).unwrap();
        let t = assemble_t(&CoefficientSet::constant(&grid, 1.0)).unwrap();
        let s = SpectralParam::imaginary(Q::e2(), 2.0).unwrap();
        let q = assemble_q(&s, &t);
        let mut buf = Vec::new();
        q.export(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "QOP,108,dirichlet,0,2");
        assert_eq!(text.lines().count(), 1 + q.matrix.nnz());
    }
}
