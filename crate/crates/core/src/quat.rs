//! Hamilton quaternions, slice-polar decomposition and principal slice powers.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `q0 + q1 e1 + q2 e2 + q3 e3`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quaternion<S> {
    pub q0: S,
    pub q1: S,
    pub q2: S,
    pub q3: S,
}

impl<S: Real> Quaternion<S> {
    #[inline]
    pub const fn new(q0: S, q1: S, q2: S, q3: S) -> Self {
        Self { q0, q1, q2, q3 }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero(), S::zero())
    }

    #[inline]
    pub fn one() -> Self {
        Self::real(S::one())
    }

    #[inline]
    pub fn real(r: S) -> Self {
        Self::new(r, S::zero(), S::zero(), S::zero())
    }

    /// Imaginary unit `e_l` for `l` in 1..=3.
    pub fn unit(l: usize) -> Self {
        let (o, z) = (S::one(), S::zero());
        match l {
            1 => Self::new(z, o, z, z),
            2 => Self::new(z, z, o, z),
            3 => Self::new(z, z, z, o),
            _ => panic!("imaginary unit index {l} out of range 1..=3"),
        }
    }

    #[inline]
    pub fn e1() -> Self {
        Self::unit(1)
    }
    #[inline]
    pub fn e2() -> Self {
        Self::unit(2)
    }
    #[inline]
    pub fn e3() -> Self {
        Self::unit(3)
    }

    pub fn from_array(a: [S; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [S; 4] {
        [self.q0, self.q1, self.q2, self.q3]
    }

    #[inline]
    pub fn re(self) -> S {
        self.q0
    }

    /// Vector (purely imaginary) part.
    #[inline]
    pub fn vec(self) -> Self {
        Self::new(S::zero(), self.q1, self.q2, self.q3)
    }

    #[inline]
    pub fn vec_norm(self) -> S {
        (self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3).sqrt()
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    #[inline]
    pub fn norm_sqr(self) -> S {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    #[inline]
    pub fn norm(self) -> S {
        self.norm_sqr().sqrt()
    }

    pub fn inv(self) -> Option<Self> {
        let n = self.norm_sqr();
        if n == S::zero() {
            None
        } else {
            Some(self.conj() * (S::one() / n))
        }
    }

    #[inline]
    pub fn scale(self, r: S) -> Self {
        Self::new(self.q0 * r, self.q1 * r, self.q2 * r, self.q3 * r)
    }

    pub fn is_finite(self) -> bool {
        self.q0.is_finite() && self.q1.is_finite() && self.q2.is_finite() && self.q3.is_finite()
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(self, other: Self) -> S {
        let d = self - other;
        d.q0.abs().max(d.q1.abs()).max(d.q2.abs()).max(d.q3.abs())
    }

    /// Real 4x4 matrix of `v -> self * v` acting on `(v0, v1, v2, v3)`.
    pub fn left_matrix(self) -> [[S; 4]; 4] {
        let Self { q0: a, q1: b, q2: c, q3: d } = self;
        [[a, -b, -c, -d], [b, a, -d, c], [c, d, a, -b], [d, -c, b, a]]
    }

    /// Real 4x4 matrix of `v -> v * self`.
    pub fn right_matrix(self) -> [[S; 4]; 4] {
        let Self { q0: a, q1: b, q2: c, q3: d } = self;
        [[a, -b, -c, -d], [b, a, d, -c], [c, -d, a, b], [d, c, -b, a]]
    }
}

impl<S: Real> Add for Quaternion<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.q0 + o.q0, self.q1 + o.q1, self.q2 + o.q2, self.q3 + o.q3)
    }
}

impl<S: Real> AddAssign for Quaternion<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Real> Sub for Quaternion<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.q0 - o.q0, self.q1 - o.q1, self.q2 - o.q2, self.q3 - o.q3)
    }
}

impl<S: Real> SubAssign for Quaternion<S> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S: Real> Neg for Quaternion<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.q0, -self.q1, -self.q2, -self.q3)
    }
}

/// Hamilton product.
impl<S: Real> Mul for Quaternion<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let (a, b, c, d) = (self.q0, self.q1, self.q2, self.q3);
        let (w, x, y, z) = (o.q0, o.q1, o.q2, o.q3);
        Self::new(
            a * w - b * x - c * y - d * z,
            a * x + b * w + c * z - d * y,
            a * y - b * z + c * w + d * x,
            a * z + b * y - c * x + d * w,
        )
    }
}

impl<S: Real> MulAssign for Quaternion<S> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<S: Real> Mul<S> for Quaternion<S> {
    type Output = Self;
    #[inline]
    fn mul(self, r: S) -> Self {
        self.scale(r)
    }
}

impl<S: Real> Div<S> for Quaternion<S> {
    type Output = Self;
    #[inline]
    fn div(self, r: S) -> Self {
        self.scale(S::one() / r)
    }
}

impl<S: Real> fmt::Display for Quaternion<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}e1 + {}e2 + {}e3", self.q0, self.q1, self.q2, self.q3)
    }
}

/// `q = modulus * (cos angle + axis * sin angle)` with `angle` in `[0, pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePolar<S> {
    pub modulus: S,
    pub angle: S,
    pub axis: Quaternion<S>,
}

impl<S: Real> SlicePolar<S> {
    pub fn reconstruct(&self) -> Quaternion<S> {
        (Quaternion::real(self.angle.cos()) + self.axis * self.angle.sin()) * self.modulus
    }
}

/// Slice-polar decomposition. Real quaternions get the axis `e1`.
pub fn slice_polar<S: Real>(q: Quaternion<S>) -> Result<SlicePolar<S>> {
    let modulus = q.norm();
    if modulus == S::zero() {
        return Err(Error::ZeroQuaternion);
    }
    let vn = q.vec_norm();
    let axis = if vn > S::zero() { q.vec() / vn } else { Quaternion::e1() };
    Ok(SlicePolar { modulus, angle: vn.atan2(q.q0), axis })
}

/// Principal slice power `q^p` for any real exponent. Rejects `(-inf, 0]`.
pub fn slice_powf<S: Real>(q: Quaternion<S>, p: S) -> Result<Quaternion<S>> {
    if q.vec_norm() == S::zero() && q.q0 <= S::zero() {
        return Err(Error::BranchCut(q.to_string()));
    }
    let sp = slice_polar(q)?;
    let r = sp.modulus.powf(p);
    let th = sp.angle * p;
    Ok((Quaternion::real(th.cos()) + sp.axis * th.sin()) * r)
}

/// Principal fractional power `q^alpha`, `alpha` in `(0, 1)`.
pub fn quat_pow<S: Real>(q: Quaternion<S>, alpha: S) -> Result<Quaternion<S>> {
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(Error::InvalidArgument(format!("fractional exponent {alpha} outside (0, 1)")));
    }
    slice_powf(q, alpha)
}

/// Unit imaginary quaternion `j` with `j^2 = -1`.
pub fn unit_imaginary<S: Real>(v: Quaternion<S>) -> Result<Quaternion<S>> {
    let n = v.vec_norm();
    if n == S::zero() || v.q0 != S::zero() {
        return Err(Error::InvalidArgument(format!("{v} is not a nonzero purely imaginary quaternion")));
    }
    Ok(v / n)
}

/// A spectral parameter with cached real part, modulus and slice axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParam<S> {
    pub s: Quaternion<S>,
    pub s0: S,
    pub modulus: S,
    /// `|Vec(s)|`; for purely imaginary `s = j t` this is `|t|`.
    pub s1: S,
    pub axis: Quaternion<S>,
}

impl<S: Real> SpectralParam<S> {
    pub fn new(s: Quaternion<S>) -> Self {
        let s1 = s.vec_norm();
        let axis = if s1 > S::zero() { s.vec() / s1 } else { Quaternion::e1() };
        Self { s, s0: s.q0, modulus: s.norm(), s1, axis }
    }

    /// `s = j t` on the imaginary slice through the unit `j`.
    pub fn imaginary(j: Quaternion<S>, t: S) -> Result<Self> {
        let j = unit_imaginary(j)?;
        Ok(Self::new(j * t))
    }

    #[inline]
    pub fn modulus_sqr(&self) -> S {
        self.s.norm_sqr()
    }

    #[inline]
    pub fn conj(&self) -> Quaternion<S> {
        self.s.conj()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, SQRT_2};

    type Q = Quaternion<f64>;

    fn close(a: Q, b: Q, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn unit_relations() {
        let (e1, e2, e3) = (Q::e1(), Q::e2(), Q::e3());
        assert_eq!(e1 * e2, e3);
        assert_eq!(e2 * e3, e1);
        assert_eq!(e3 * e1, e2);
        for e in [e1, e2, e3] {
            assert_eq!(e * e, -Q::one());
        }
        assert_eq!(e2 * e1, -e3);
    }

    #[test]
    fn product_examples() {
        let a = Q::new(1.0, 1.0, 0.0, 0.0);
        let b = Q::new(1.0, -1.0, 0.0, 0.0);
        assert_eq!(a * b, Q::real(2.0));
        let q = Q::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(q * q.conj(), Q::real(30.0));
    }

    #[test]
    fn left_and_right_matrices_agree_with_product() {
        let p = Q::new(0.3, -1.2, 0.7, 2.0);
        let v = Q::new(-0.4, 0.5, 1.5, -0.25);
        let apply = |m: [[f64; 4]; 4], x: Q| {
            let a = x.to_array();
            let mut r = [0.0; 4];
            for i in 0..4 {
                for k in 0..4 {
                    r[i] += m[i][k] * a[k];
                }
            }
            Q::from_array(r)
        };
        assert!(close(apply(p.left_matrix(), v), p * v, 1e-15));
        assert!(close(apply(p.right_matrix(), v), v * p, 1e-15));
    }

    #[test]
    fn slice_polar_examples() {
        let sp = slice_polar(Q::real(4.0)).unwrap();
        assert_eq!((sp.modulus, sp.angle, sp.axis), (4.0, 0.0, Q::e1()));
        let sp = slice_polar(Q::e2()).unwrap();
        assert_abs_diff_eq!(sp.modulus, 1.0);
        assert_abs_diff_eq!(sp.angle, FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(sp.axis, Q::e2());
        let sp = slice_polar(Q::new(1.0, 1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(sp.modulus, SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.angle, FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(sp.axis, Q::e1());
        assert!(matches!(slice_polar(Q::zero()), Err(Error::ZeroQuaternion)));
    }

    #[test]
    fn negative_real_has_angle_pi() {
        let sp = slice_polar(Q::real(-2.0)).unwrap();
        assert_abs_diff_eq!(sp.angle, std::f64::consts::PI);
        assert!(close(sp.reconstruct(), Q::real(-2.0), 1e-15));
    }

    #[test]
    fn pow_examples() {
        assert!(close(quat_pow(Q::real(4.0), 0.5).unwrap(), Q::real(2.0), 1e-15));
        let h = SQRT_2 / 2.0;
        assert!(close(quat_pow(Q::e1(), 0.5).unwrap(), Q::new(h, h, 0.0, 0.0), 1e-15));
        // Independent oracle: complex principal square root in the {1, e1} plane.
        let z = Complex64::new(1.0, 1.0).sqrt();
        let r = quat_pow(Q::new(1.0, 1.0, 0.0, 0.0), 0.5).unwrap();
        assert!(close(r, Q::new(z.re, z.im, 0.0, 0.0), 1e-15));
        let expected = 2f64.powf(0.25);
        assert_abs_diff_eq!(r.q0, expected * FRAC_PI_8.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.q1, expected * FRAC_PI_8.sin(), epsilon = 1e-15);
    }

    #[test]
    fn branch_cut_rejected() {
        assert!(matches!(quat_pow(Q::real(-1.0), 0.5), Err(Error::BranchCut(_))));
        assert!(matches!(quat_pow(Q::zero(), 0.5), Err(Error::BranchCut(_))));
        assert!(quat_pow(Q::real(2.0), 1.5).is_err());
        assert!(quat_pow(Q::new(-1.0, 1e-9, 0.0, 0.0), 0.5).is_ok());
    }

    #[test]
    fn spectral_param_imaginary() {
        let j = Q::new(0.0, 1.0, 1.0, 0.0);
        let s = SpectralParam::imaginary(j, -2.0).unwrap();
        assert_abs_diff_eq!(s.s0, 0.0);
        assert_abs_diff_eq!(s.s1, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.modulus_sqr(), 4.0, epsilon = 1e-14);
        assert!(SpectralParam::imaginary(Q::real(1.0), 1.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let q = Quaternion::<f32>::new(1.0, 1.0, 0.0, 0.0);
        let r = quat_pow(q, 0.5).unwrap();
        assert!((r * r).max_abs_diff(q) < 1e-6);
    }
}
