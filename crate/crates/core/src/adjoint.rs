//! Dense quaternion matrices and their complex-adjoint embedding.
//!
//! A quaternion entry is split as `q = alpha + beta e2` with `alpha, beta` in the
//! complex plane spanned by `{1, e1}`; the `n x n` quaternion matrix `A + B e2`
//! maps to the `2n x 2n` complex matrix `[[A, B], [-conj(B), conj(A)]]`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quat::Quaternion;
use crate::scalar::Real;

/// Row-major dense `n x n` quaternion matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QuatMatrix<S> {
    n: usize,
    data: Vec<Quaternion<S>>,
}

impl<S: Real> QuatMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Quaternion::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, Quaternion::one())
    }

    /// `lambda * I`.
    pub fn scalar(n: usize, lambda: Quaternion<S>) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = lambda;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Quaternion<S>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_rows(n: usize, data: Vec<Quaternion<S>>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    /// Entries with components uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::from_fn(n, |_, _| {
            Quaternion::new(
                S::lit(rng.gen_range(-1.0..1.0)),
                S::lit(rng.gen_range(-1.0..1.0)),
                S::lit(rng.gen_range(-1.0..1.0)),
                S::lit(rng.gen_range(-1.0..1.0)),
            )
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Quaternion<S>] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[Quaternion<S>]) -> Vec<Quaternion<S>> {
        assert_eq!(v.len(), self.n, "vector length mismatch");
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).fold(Quaternion::zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }

    pub fn scale(&self, r: S) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&q| q * r).collect() }
    }

    /// Quaternionic conjugate transpose.
    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().map(|q| q.q0.abs().max(q.q1.abs()).max(q.q2.abs()).max(q.q3.abs())).fold(S::zero(), S::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a.max_abs_diff(*b)).fold(S::zero(), S::max)
    }

    /// Gauss-Jordan inverse with partial pivoting on the entry modulus.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs().max(S::min_positive_value());
        for col in 0..n {
            let (piv, pnorm) =
                (col..n)
                    .map(|r| (r, a[(r, col)].norm()))
                    .fold((col, S::zero()), |best, c| if c.1 > best.1 { c } else { best });
            if pnorm <= scale * S::epsilon() * S::lit(16.0) {
                return Err(Error::Singular);
            }
            if piv != col {
                a.swap_rows(piv, col);
                inv.swap_rows(piv, col);
            }
            let p_inv = a[(col, col)].inv().ok_or(Error::Singular)?;
            for j in 0..n {
                a[(col, j)] = p_inv * a[(col, j)];
                inv[(col, j)] = p_inv * inv[(col, j)];
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == Quaternion::zero() {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        for j in 0..self.n {
            self.data.swap(r1 * self.n + j, r2 * self.n + j);
        }
    }

    pub fn complex_adjoint(&self) -> ComplexAdjoint<S> {
        complex_adjoint(self)
    }
}

impl<S> std::ops::Index<(usize, usize)> for QuatMatrix<S> {
    type Output = Quaternion<S>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Quaternion<S> {
        &self.data[i * self.n + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for QuatMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Quaternion<S> {
        &mut self.data[i * self.n + j]
    }
}

impl<S: Real> Mul for &QuatMatrix<S> {
    type Output = QuatMatrix<S>;
    fn mul(self, rhs: &QuatMatrix<S>) -> QuatMatrix<S> {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        QuatMatrix::from_fn(n, |i, j| (0..n).fold(Quaternion::zero(), |acc, k| acc + self[(i, k)] * rhs[(k, j)]))
    }
}

impl<S: Real> Add for &QuatMatrix<S> {
    type Output = QuatMatrix<S>;
    fn add(self, rhs: &QuatMatrix<S>) -> QuatMatrix<S> {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        QuatMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<S: Real> Sub for &QuatMatrix<S> {
    type Output = QuatMatrix<S>;
    fn sub(self, rhs: &QuatMatrix<S>) -> QuatMatrix<S> {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        QuatMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect() }
    }
}

/// Row-major `2n x 2n` complex matrix carrying the symplectic block structure.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexAdjoint<S> {
    n: usize,
    data: Vec<Complex<S>>,
}

impl<S: Real> ComplexAdjoint<S> {
    /// Wraps an arbitrary `2n x 2n` row-major complex matrix.
    pub fn from_raw(n: usize, data: Vec<Complex<S>>) -> Result<Self> {
        if data.len() != 4 * n * n {
            return Err(Error::InvalidArgument(format!("expected {} complex entries, got {}", 4 * n * n, data.len())));
        }
        Ok(Self { n, data })
    }

    /// Quaternion dimension `n` (the complex matrix is `2n x 2n`).
    pub fn quat_dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex<S>] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<S> {
        self.data[i * 2 * self.n + j]
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let m = 2 * self.n;
        let mut data = vec![Complex::new(S::zero(), S::zero()); m * m];
        for i in 0..m {
            for k in 0..m {
                let a = self.get(i, k);
                for j in 0..m {
                    data[i * m + j] = data[i * m + j] + a * rhs.get(k, j);
                }
            }
        }
        Self { n: self.n, data }
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(S::zero(), S::max)
    }
}

/// Quaternion matrix to its complex adjoint.
pub fn complex_adjoint<S: Real>(m: &QuatMatrix<S>) -> ComplexAdjoint<S> {
    let n = m.dim();
    let w = 2 * n;
    let mut data = vec![Complex::new(S::zero(), S::zero()); w * w];
    for i in 0..n {
        for j in 0..n {
            let q = m[(i, j)];
            let alpha = Complex::new(q.q0, q.q1);
            let beta = Complex::new(q.q2, q.q3);
            data[i * w + j] = alpha;
            data[i * w + n + j] = beta;
            data[(n + i) * w + j] = -beta.conj();
            data[(n + i) * w + n + j] = alpha.conj();
        }
    }
    ComplexAdjoint { n, data }
}

/// Inverse of [`complex_adjoint`]. Fails when the block symmetry is violated
/// by more than `1e-10` relative to the largest entry.
pub fn adjoint_to_quaternion<S: Real>(c: &ComplexAdjoint<S>) -> Result<QuatMatrix<S>> {
    let n = c.n;
    let scale = c.data.iter().map(|z| z.norm()).fold(S::one(), S::max);
    let tol = S::lit(1e-10) * scale;
    let mut worst = S::zero();
    let m = QuatMatrix::from_fn(n, |i, j| {
        let alpha = c.get(i, j);
        let beta = c.get(i, n + j);
        let dev_a = (c.get(n + i, n + j) - alpha.conj()).norm();
        let dev_b = (c.get(n + i, j) + beta.conj()).norm();
        worst = worst.max(dev_a).max(dev_b);
        Quaternion::new(alpha.re, alpha.im, beta.re, beta.im)
    });
    if worst > tol {
        return Err(Error::NotComplexAdjoint(worst.as_f64()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Q = Quaternion<f64>;

    #[test]
    fn scalar_examples() {
        let c = complex_adjoint(&QuatMatrix::scalar(1, Q::e1()));
        assert_eq!(c.get(0, 0), Complex::new(0.0, 1.0));
        assert_eq!(c.get(1, 1), Complex::new(0.0, -1.0));
        assert_eq!(c.get(0, 1), Complex::new(0.0, 0.0));
        let c = complex_adjoint(&QuatMatrix::scalar(1, Q::e2()));
        assert_eq!(c.get(0, 1), Complex::new(1.0, 0.0));
        assert_eq!(c.get(1, 0), Complex::new(-1.0, 0.0));
        assert_eq!(c.get(0, 0), Complex::new(0.0, 0.0));
    }

    #[test]
    fn determinant_of_scalar_adjoint_is_norm_squared() {
        let q = Q::new(0.5, -1.5, 2.0, 0.25);
        let c = complex_adjoint(&QuatMatrix::scalar(1, q));
        let det = c.get(0, 0) * c.get(1, 1) - c.get(0, 1) * c.get(1, 0);
        assert!((det.re - q.norm_sqr()).abs() < 1e-14);
        assert!(det.im.abs() < 1e-14);
    }

    #[test]
    fn homomorphism_on_random_3x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = QuatMatrix::<f64>::random(3, &mut rng);
        let b = QuatMatrix::<f64>::random(3, &mut rng);
        let lhs = complex_adjoint(&(&a * &b));
        let rhs = complex_adjoint(&a).matmul(&complex_adjoint(&b));
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn round_trip_and_rejection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = QuatMatrix::<f64>::random(4, &mut rng);
        let back = adjoint_to_quaternion(&complex_adjoint(&a)).unwrap();
        assert!(back.max_abs_diff(&a) <= 1e-12);

        let mut c = complex_adjoint(&a);
        c.data[0] = c.data[0] + Complex::new(1e-3, 0.0);
        assert!(matches!(adjoint_to_quaternion(&c), Err(Error::NotComplexAdjoint(_))));
    }

    #[test]
    fn inverse_is_two_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = &QuatMatrix::<f64>::random(5, &mut rng) + &QuatMatrix::scalar(5, Q::real(3.0));
        let inv = a.inverse().unwrap();
        let id = QuatMatrix::identity(5);
        assert!((&a * &inv).max_abs_diff(&id) < 1e-13);
        assert!((&inv * &a).max_abs_diff(&id) < 1e-13);
        assert!(matches!(QuatMatrix::<f64>::zeros(2).inverse(), Err(Error::Singular)));
    }
}
