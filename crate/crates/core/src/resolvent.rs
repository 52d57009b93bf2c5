//! S-resolvent operators on the imaginary axis, operator-norm estimates and decay scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{theta_formula, Status};
use crate::error::{Error, Result};
use crate::operator::{weighted_dot, weighted_norm, PseudoResolvent, QVec, QuatOperator};
use crate::quat::{Quaternion, SpectralParam};
use crate::scalar::Real;
use crate::solver::SolveOptions;

fn left_mul<S: Real>(q: Quaternion<S>, v: &[Quaternion<S>]) -> QVec<S> {
    v.iter().map(|&x| q * x).collect()
}

fn sub<S: Real>(a: &[Quaternion<S>], b: &[Quaternion<S>]) -> QVec<S> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `Q_s(T)^{-1}`, `S_L^{-1}(s,T)` and `S_R^{-1}(s,T)` at a fixed `s`, sharing one factorization.
pub struct SResolvent<'a, S: Real> {
    op: &'a dyn QuatOperator<S>,
    res: Box<dyn PseudoResolvent<S> + 'a>,
    s: SpectralParam<S>,
}

impl<'a, S: Real> SResolvent<'a, S> {
    pub fn new(op: &'a dyn QuatOperator<S>, s: &SpectralParam<S>, opts: &SolveOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self { op, res: op.pseudo_resolvent(s, opts)?, s: *s })
    }

    pub fn spectral(&self) -> &SpectralParam<S> {
        &self.s
    }

    pub fn operator(&self) -> &'a dyn QuatOperator<S> {
        self.op
    }

    pub fn solve_q(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        self.res.solve(f)
    }

    pub fn solve_q_adjoint(&self, f: &[Quaternion<S>]) -> Result<QVec<S>> {
        self.res.solve_adjoint(f)
    }

    /// `Q^{-1}(s̄ v) - T Q^{-1} v`.
    pub fn apply_sl(&self, v: &[Quaternion<S>]) -> Result<QVec<S>> {
        let a = self.res.solve(&left_mul(self.s.conj(), v))?;
        let b = self.op.apply(&self.res.solve(v)?);
        Ok(sub(&a, &b))
    }

    /// `s (Q^{-1})^* w - (Q^{-1})^* T^* w`.
    pub fn apply_sl_adjoint(&self, w: &[Quaternion<S>]) -> Result<QVec<S>> {
        let a = left_mul(self.s.s, &self.res.solve_adjoint(w)?);
        let b = self.res.solve_adjoint(&self.op.apply_adjoint(w))?;
        Ok(sub(&a, &b))
    }

    /// `-(T - s̄) Q^{-1} v`.
    pub fn apply_sr(&self, v: &[Quaternion<S>]) -> Result<QVec<S>> {
        let u = self.res.solve(v)?;
        Ok(sub(&left_mul(self.s.conj(), &u), &self.op.apply(&u)))
    }

    pub fn apply_sr_adjoint(&self, w: &[Quaternion<S>]) -> Result<QVec<S>> {
        let x = sub(&left_mul(self.s.s, w), &self.op.apply_adjoint(w));
        self.res.solve_adjoint(&x)
    }
}

/// One-shot `Q_s(T) u = F`.
pub fn solve_q<S: Real>(
    op: &dyn QuatOperator<S>,
    s: &SpectralParam<S>,
    f: &[Quaternion<S>],
    opts: &SolveOptions,
) -> Result<QVec<S>> {
    SResolvent::new(op, s, opts)?.solve_q(f)
}

pub fn apply_sl<S: Real>(
    op: &dyn QuatOperator<S>,
    s: &SpectralParam<S>,
    v: &[Quaternion<S>],
    opts: &SolveOptions,
) -> Result<QVec<S>> {
    SResolvent::new(op, s, opts)?.apply_sl(v)
}

pub fn apply_sr<S: Real>(
    op: &dyn QuatOperator<S>,
    s: &SpectralParam<S>,
    v: &[Quaternion<S>],
    opts: &SolveOptions,
) -> Result<QVec<S>> {
    SResolvent::new(op, s, opts)?.apply_sr(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerOptions {
    /// Relative change of the Rayleigh quotient that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 500, seed: 0x5eed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted-L² operator norm of `A` by power iteration on `A^* A`.
///
/// `project` restricts the iteration to the admissible subspace. Without convergence the
/// last estimate is returned with `converged = false`.
pub fn op_norm_estimate<S, F, G>(
    w: &[S],
    apply: F,
    adjoint: G,
    project: &dyn Fn(&mut [Quaternion<S>]),
    opts: &PowerOptions,
) -> Result<NormEstimate>
where
    S: Real,
    F: Fn(&[Quaternion<S>]) -> Result<QVec<S>>,
    G: Fn(&[Quaternion<S>]) -> Result<QVec<S>>,
{
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("power iteration needs tol > 0 and max_iter > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: QVec<S> = (0..w.len())
        .map(|_| {
            let mut c = || S::lit(rng.gen_range(-1.0..1.0));
            Quaternion::new(c(), c(), c(), c())
        })
        .collect();
    project(&mut x);
    let nx = weighted_norm(w, &x);
    if nx == S::zero() {
        return Ok(NormEstimate { value: 0.0, iterations: 0, converged: true });
    }
    for q in x.iter_mut() {
        *q = q.scale(nx.recip());
    }
    let mut prev = S::zero();
    for it in 1..=opts.max_iter {
        let mut y = adjoint(&apply(&x)?)?;
        project(&mut y);
        let lambda = weighted_dot(w, &x, &y);
        let ny = weighted_norm(w, &y);
        if !ny.is_finite() {
            return Err(Error::NonFinite { node: 0, i: 0, j: 0, k: 0 });
        }
        if ny == S::zero() {
            return Ok(NormEstimate { value: 0.0, iterations: it, converged: true });
        }
        if it > 1 && (lambda - prev).abs() <= S::lit(opts.tol) * lambda.abs() {
            return Ok(NormEstimate { value: lambda.max(S::zero()).sqrt().as_f64(), iterations: it, converged: true });
        }
        prev = lambda;
        x = y.into_iter().map(|q| q.scale(ny.recip())).collect();
    }
    Ok(NormEstimate { value: prev.max(S::zero()).sqrt().as_f64(), iterations: opts.max_iter, converged: false })
}

/// The three norms at one `s`.
pub fn resolvent_norms<S: Real>(r: &SResolvent<'_, S>, popts: &PowerOptions) -> Result<[NormEstimate; 3]> {
    let op = r.operator();
    let w = op.weights();
    let proj = |v: &mut [Quaternion<S>]| op.project(v);
    let q = op_norm_estimate(w, |v| r.solve_q(v), |v| r.solve_q_adjoint(v), &proj, popts)?;
    let sl = op_norm_estimate(w, |v| r.apply_sl(v), |v| r.apply_sl_adjoint(v), &proj, popts)?;
    let sr = op_norm_estimate(w, |v| r.apply_sr(v), |v| r.apply_sr_adjoint(v), &proj, popts)?;
    Ok([q, sl, sr])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub t: f64,
    pub norm_q_inv: f64,
    pub norm_sl: f64,
    pub norm_sr: f64,
    pub converged: bool,
    /// Set when the solve at this `t` failed; the norms are then NaN.
    pub error: Option<String>,
}

impl ScanPoint {
    pub fn t2_norm_q_inv(&self) -> f64 {
        self.t * self.t * self.norm_q_inv
    }
    pub fn t_norm_sl(&self) -> f64 {
        self.t.abs() * self.norm_sl
    }
    pub fn t_norm_sr(&self) -> f64 {
        self.t.abs() * self.norm_sr
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventScan {
    pub points: Vec<ScanPoint>,
    pub sup_t2_norm_q_inv: f64,
    /// `sup |t| max(||S_L^{-1}||, ||S_R^{-1}||)` over successful points.
    pub theta_hat: f64,
    pub theta_formula: Option<f64>,
    pub verdict: Option<Status>,
}

impl ResolventScan {
    pub const CSV_HEADER: &'static str = "t,normQinv,normSL,normSR,t2normQinv,tnormSL,tnormSR";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                p.t,
                p.norm_q_inv,
                p.norm_sl,
                p.norm_sr,
                p.t2_norm_q_inv(),
                p.t_norm_sl(),
                p.t_norm_sr()
            ));
        }
        out
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }
}

pub fn log_spaced(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && t_min.is_finite() && t_max.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument(format!("need 0 < t_min < t_max and n >= 1, got {t_min}, {t_max}, {n}")));
    }
    if n == 1 {
        return Ok(vec![t_min]);
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
}

/// Norm estimates at `s = j t` for log-spaced `t`, in parallel over `t`.
///
/// `c` is the coercivity constant; when given, `theta_hat` is compared against `2 max(1, 1/sqrt(c))`.
pub fn resolvent_scan<S: Real>(
    op: &dyn QuatOperator<S>,
    t_min: f64,
    t_max: f64,
    n_points: usize,
    j: Quaternion<S>,
    c: Option<f64>,
    opts: &SolveOptions,
    popts: &PowerOptions,
) -> Result<ResolventScan> {
    opts.validate()?;
    let ts = log_spaced(t_min, t_max, n_points)?;
    SpectralParam::imaginary(j, S::one())?;
    let points: Vec<ScanPoint> = ts
        .par_iter()
        .map(|&t| {
            let run = || -> Result<[NormEstimate; 3]> {
                let s = SpectralParam::imaginary(j, S::lit(t))?;
                let r = SResolvent::new(op, &s, opts)?;
                resolvent_norms(&r, popts)
            };
            match run() {
                Ok([q, l, r]) => ScanPoint {
                    t,
                    norm_q_inv: q.value,
                    norm_sl: l.value,
                    norm_sr: r.value,
                    converged: q.converged && l.converged && r.converged,
                    error: None,
                },
                Err(e) => ScanPoint {
                    t,
                    norm_q_inv: f64::NAN,
                    norm_sl: f64::NAN,
                    norm_sr: f64::NAN,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let ok: Vec<&ScanPoint> = points.iter().filter(|p| p.error.is_none()).collect();
    let sup = |f: &dyn Fn(&ScanPoint) -> f64| ok.iter().map(|p| f(p)).fold(f64::NAN, f64::max);
    let sup_t2 = sup(&|p| p.t2_norm_q_inv());
    let theta_hat = sup(&|p| p.t_norm_sl().max(p.t_norm_sr()));
    let theta = c.filter(|&c| c > 0.0).map(theta_formula);
    let verdict = theta.map(|th| {
        if ok.is_empty() || !theta_hat.is_finite() {
            Status::Inconclusive
        } else if theta_hat <= th {
            Status::Pass
        } else {
            Status::Fail
        }
    });
    Ok(ResolventScan { points, sup_t2_norm_q_inv: sup_t2, theta_hat, theta_formula: theta, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjoint::QuatMatrix;
    use crate::operator::{DenseOperator, ZeroOperator};
    use crate::{BoundaryKind, Grid};

    type Q = Quaternion<f64>;

    fn rv(n: usize, seed: u64) -> QVec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = QuatMatrix::<f64>::random(n, &mut rng);
        (0..n).map(|i| m[(i, 0)]).collect()
    }

    #[test]
    fn zero_operator_sl() {
        let grid = Grid::unit_cube(4, BoundaryKind::Dirichlet).unwrap();
        let op = ZeroOperator::new(&grid);
        let s = SpectralParam::imaginary(Q::e2(), 2.0).unwrap();
        let mut v = rv(op.dim(), 1);
        op.project(&mut v);
        let w = apply_sl(&op, &s, &v, &SolveOptions::default()).unwrap();
        for (a, b) in w.iter().zip(&v) {
            assert!(a.max_abs_diff(s.conj() * *b / 4.0) < 1e-14);
        }
    }

    #[test]
    fn scalar_operator_matches_dense_formula() {
        let q = Q::new(1.3, 0.4, -0.2, 0.7);
        let op = DenseOperator::scalar(q);
        let s = SpectralParam::imaginary(Q::new(0.0, 1.0, 2.0, -1.0), 0.8).unwrap();
        let v = [Q::new(0.3, -1.0, 0.5, 2.0)];
        let qs = q * q - q * (2.0 * s.s0) + Q::real(s.modulus_sqr());
        let qinv = qs.inv().unwrap();
        let u = solve_q(&op, &s, &v, &SolveOptions::default()).unwrap();
        assert!(u[0].max_abs_diff(qinv * v[0]) < 1e-14);
        let sr = apply_sr(&op, &s, &v, &SolveOptions::default()).unwrap();
        let expect = -((q - s.conj()) * qinv) * v[0];
        assert!(sr[0].max_abs_diff(expect) < 1e-14);
    }

    #[test]
    fn power_iteration_trivial_and_dense() {
        let w = vec![1.0; 3];
        let id = |v: &[Q]| Ok(v.to_vec());
        let e = op_norm_estimate(&w, id, id, &|_: &mut [Q]| {}, &PowerOptions::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12 && e.converged);
        let three = |v: &[Q]| Ok(v.iter().map(|q| q.scale(3.0)).collect());
        let e = op_norm_estimate(&w, three, three, &|_: &mut [Q]| {}, &PowerOptions::default()).unwrap();
        assert!((e.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_spacing() {
        let t = log_spaced(1e-2, 1e2, 5).unwrap();
        assert!((t[2] - 1.0).abs() < 1e-12 && (t[4] - 100.0).abs() < 1e-10);
        assert!(log_spaced(1.0, 1.0, 3).is_err());
    }
}
