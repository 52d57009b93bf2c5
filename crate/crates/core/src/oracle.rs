//! Dense-matrix check of the fractional-power quadrature against the complex-adjoint
//! eigendecomposition `chi(M) = X diag(lambda) X^{-1}`, `chi(M)^alpha = X diag(lambda^alpha) X^{-1}`.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adjoint::{adjoint_to_quaternion, complex_adjoint, ComplexAdjoint, QuatMatrix};
use crate::error::{Error, Result};
use crate::frac_power::{frac_power_apply, QuadratureSpec};
use crate::operator::{DenseOperator, QuatOperator};
use crate::quat::Quaternion;
use crate::solver::SolveOptions;

type Q = Quaternion<f64>;

/// Eigenvector conditioning above which the reference is rejected.
pub const MAX_EIGVEC_COND: f64 = 1e10;

/// Size of the perturbation `S = I + eps R` in [`random_sectorial`].
pub const PERTURBATION: f64 = 0.1;

fn random_unit_imaginary<R: Rng>(rng: &mut R) -> Q {
    loop {
        let v = Q::new(0.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Uniformly distributed random unit imaginary quaternion from a seed.
pub fn random_axis(seed: u64) -> Q {
    random_unit_imaginary(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// `S D S^{-1}` with `D = diag(r_k (cos th_k + u_k sin th_k))`, `th_k in [0.2, 0.7]`, `r_k in [0.5, 2]`,
/// `S = I + eps R`. The S-spectrum is `{r_k e^{+-i th_k}}`, inside the open right half-plane.
pub fn random_sectorial(n: usize, seed: u64) -> Result<QuatMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: Vec<Q> = (0..n)
        .map(|_| {
            let r: f64 = rng.gen_range(0.5..2.0);
            let th: f64 = rng.gen_range(0.2..0.7);
            let u = random_unit_imaginary(&mut rng);
            (Q::real(th.cos()) + u * th.sin()) * r
        })
        .collect();
    let r = QuatMatrix::<f64>::random(n, &mut rng);
    let s = &QuatMatrix::identity(n) + &r.scale(PERTURBATION);
    let dm = QuatMatrix::from_fn(n, |i, j| if i == j { d[i] } else { Q::zero() });
    Ok(&(&s * &dm) * &s.inverse()?)
}

/// Principal `M^alpha` through the complex adjoint; also returns `cond(X)`.
pub fn reference_power(m: &QuatMatrix<f64>, alpha: f64) -> Result<(QuatMatrix<f64>, f64)> {
    let chi = complex_adjoint(m);
    let k = 2 * m.dim();
    let a = DMatrix::from_row_slice(k, k, chi.entries());
    let (u, t) = nalgebra::Schur::new(a).unpack();
    // Eigenvectors of the triangular factor by back substitution.
    let mut y = DMatrix::<Complex<f64>>::zeros(k, k);
    let lambda: Vec<Complex<f64>> = (0..k).map(|i| t[(i, i)]).collect();
    for c in 0..k {
        y[(c, c)] = Complex::new(1.0, 0.0);
        for i in (0..c).rev() {
            let mut acc = Complex::new(0.0, 0.0);
            for j in i + 1..=c {
                acc += t[(i, j)] * y[(j, c)];
            }
            let den = t[(i, i)] - lambda[c];
            let scale = lambda[c].norm().max(1.0);
            if den.norm() < 1e-12 * scale {
                // Repeated eigenvalue: fine if the block is diagonal, defective otherwise.
                if acc.norm() > 1e-12 * scale {
                    return Err(Error::IllConditioned(f64::INFINITY));
                }
                y[(i, c)] = Complex::new(0.0, 0.0);
            } else {
                y[(i, c)] = -acc / den;
            }
        }
        let nrm = y.column(c).norm();
        y.column_mut(c).unscale_mut(nrm);
    }
    let x = u * y;
    let sv = x.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !(cond.is_finite() && cond <= MAX_EIGVEC_COND) {
        return Err(Error::IllConditioned(cond));
    }
    if lambda.iter().any(|l| l.im == 0.0 && l.re <= 0.0) {
        return Err(Error::BranchCut("eigenvalue on the closed negative real axis".into()));
    }
    let xi = x.clone().try_inverse().ok_or(Error::IllConditioned(cond))?;
    let pw = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k, lambda.iter().map(|l| l.powf(alpha))));
    let f = x * pw * xi;
    let data: Vec<Complex<f64>> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| f[(i, j)]).collect();
    let p = adjoint_to_quaternion(&ComplexAdjoint::from_raw(m.dim(), data)?)?;
    Ok((p, cond))
}

/// `P_alpha(M)` column by column through the quadrature.
pub fn quadrature_power(
    m: &QuatMatrix<f64>,
    spec: &QuadratureSpec<f64>,
    opts: &SolveOptions,
) -> Result<QuatMatrix<f64>> {
    let n = m.dim();
    let op = DenseOperator::new(m.clone());
    let spec = spec.with_error_estimate(false);
    let mut cols = Vec::with_capacity(n);
    for c in 0..n {
        let e: Vec<Q> = (0..n).map(|i| if i == c { Q::one() } else { Q::zero() }).collect();
        cols.push(frac_power_apply(&spec, &e, &op, opts)?.result);
    }
    Ok(QuatMatrix::from_fn(n, |i, j| cols[j][i]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub seed: u64,
    pub alpha: f64,
    pub n_nodes: usize,
    /// `max_ij |P_quad - P_ref|_ij / max_ij |P_ref|_ij`.
    pub rel_diff: f64,
    /// Condition number of the eigenvector matrix of `chi(M)`.
    pub cond: f64,
}

/// Compares the quadrature and eigendecomposition powers of a given matrix.
pub fn compare_matrix(
    m: &QuatMatrix<f64>,
    spec: &QuadratureSpec<f64>,
    opts: &SolveOptions,
) -> Result<(OracleReport, QuatMatrix<f64>, QuatMatrix<f64>)> {
    spec.validate()?;
    let (reference, cond) = reference_power(m, spec.alpha)?;
    let quad = quadrature_power(m, spec, opts)?;
    let rel_diff = quad.max_abs_diff(&reference) / reference.max_abs();
    let rep = OracleReport { n: m.dim(), seed: 0, alpha: spec.alpha, n_nodes: spec.n_nodes, rel_diff, cond };
    Ok((rep, quad, reference))
}

/// Random sectorial matrix of size `n` from `seed`, compared at `spec.alpha`.
pub fn matrix_oracle(n: usize, seed: u64, spec: &QuadratureSpec<f64>, opts: &SolveOptions) -> Result<OracleReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix size must be positive".into()));
    }
    let m = random_sectorial(n, seed)?;
    let (mut rep, _, _) = compare_matrix(&m, spec, opts)?;
    rep.seed = seed;
    Ok(rep)
}

/// `||P_{1/2}(P_{1/2} v) - M v|| / ||M v||` with both powers by quadrature.
pub fn half_power_residual(
    m: &QuatMatrix<f64>,
    v: &[Q],
    spec: &QuadratureSpec<f64>,
    opts: &SolveOptions,
) -> Result<f64> {
    let op = DenseOperator::new(m.clone());
    let spec = QuadratureSpec { alpha: 0.5, estimate_error: false, ..*spec };
    let half = frac_power_apply(&spec, v, &op, opts)?.result;
    let full = frac_power_apply(&spec, &half, &op, opts)?.result;
    let mv = op.apply(v);
    let diff: Vec<Q> = full.iter().zip(&mv).map(|(&a, &b)| a - b).collect();
    let w = op.weights();
    Ok(crate::operator::weighted_norm(w, &diff) / crate::operator::weighted_norm(w, &mv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_four() {
        let m = QuatMatrix::scalar(1, Q::real(4.0));
        let spec = QuadratureSpec::new(0.5);
        let (rep, quad, reference) = compare_matrix(&m, &spec, &SolveOptions::default()).unwrap();
        assert!((reference[(0, 0)] - Q::real(2.0)).norm() < 1e-12);
        assert!((quad[(0, 0)] - Q::real(2.0)).norm() < 1e-7);
        assert!(rep.rel_diff < 1e-7);
    }

    #[test]
    fn reference_squares_back() {
        let m = random_sectorial(3, 7).unwrap();
        let (p, cond) = reference_power(&m, 0.5).unwrap();
        assert!(cond < 1e3);
        assert!((&p * &p).max_abs_diff(&m) < 1e-10 * m.max_abs());
    }

    #[test]
    fn small_matrix_agrees() {
        let spec = QuadratureSpec::new(0.5).with_nodes(800);
        let rep = matrix_oracle(4, 11, &spec, &SolveOptions::default()).unwrap();
        assert!(rep.rel_diff < 1e-5, "{rep:?}");
    }
}
