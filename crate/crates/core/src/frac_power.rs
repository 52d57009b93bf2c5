//! Fractional powers `P_alpha(T) v` by quadrature of the Balakrishnan-type integral on `-jR`.
//!
//! With `s = -j t`, `t = sigma e^u` (`sigma = ±1`) the integral becomes
//! `-(1/2pi) sum_sigma int_R e^{alpha u} c_sigma S_R^{-1}(s,T) T v du`, `c_sigma = (-sigma j)^{alpha-1}`.
//! For `t <= 1` the right form is evaluated as `c_sigma (s S_R^{-1} v - v)` unless disabled.
//! Both infinite ends are closed with the leading-order asymptotics of the integrand.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{weighted_norm, QVec, QuatOperator};
use crate::quadrature::composite;
use crate::quat::{unit_imaginary, Quaternion, SpectralParam};
use crate::resolvent::SResolvent;
use crate::scalar::Real;
use crate::solver::SolveOptions;

/// Nodes per Gauss-Legendre panel.
pub const PANEL_ORDER: usize = 16;

/// Orientation of `ds_j` along `-jR` in the real parameter `t`; fixed by `P_{1/2}(4) = 2`.
pub const ORIENTATION: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `int S_L^{-1}(s,T) ds_j s^{alpha-1} T v`
    Left,
    /// `int s^{alpha-1} ds_j S_R^{-1}(s,T) T v`
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::InvalidArgument(format!("unknown side `{s}` (expected left|right)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec<S> {
    pub alpha: S,
    /// Imaginary unit `j`; normalized on use.
    pub axis: Quaternion<S>,
    /// Nodes per half-line in `u` (`[-U, 0]` and `[0, U]`), per sign of `t`.
    pub n_nodes: usize,
    /// Truncation `U` of the log variable.
    pub trunc: S,
    pub side: Side,
    /// Also run the rule with `2 n_nodes` and report the difference.
    pub estimate_error: bool,
    /// Evaluate the right form for `t <= 1` as `s S_R^{-1} v - v`. The subtraction cancels badly
    /// when `T` has a (near) kernel; `false` keeps `S_R^{-1} T v` on the whole line.
    pub near_zero_rewrite: bool,
}

impl<S: Real> QuadratureSpec<S> {
    pub fn new(alpha: S) -> Self {
        Self {
            alpha,
            axis: Quaternion::e1(),
            n_nodes: 400,
            trunc: S::lit(30.0),
            side: Side::Right,
            estimate_error: true,
            near_zero_rewrite: true,
        }
    }

    pub fn with_near_zero_rewrite(mut self, on: bool) -> Self {
        self.near_zero_rewrite = on;
        self
    }

    pub fn with_nodes(mut self, n: usize) -> Self {
        self.n_nodes = n;
        self
    }

    pub fn with_trunc(mut self, u: S) -> Self {
        self.trunc = u;
        self
    }

    pub fn with_axis(mut self, j: Quaternion<S>) -> Self {
        self.axis = j;
        self
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn with_error_estimate(mut self, on: bool) -> Self {
        self.estimate_error = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > S::zero() && self.alpha < S::one()) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha.as_f64())));
        }
        if self.n_nodes < 8 {
            return Err(Error::InvalidArgument(format!("n_nodes must be at least 8, got {}", self.n_nodes)));
        }
        if !(self.trunc > S::zero() && self.trunc.is_finite()) {
            return Err(Error::InvalidArgument(format!("truncation U must be positive, got {}", self.trunc.as_f64())));
        }
        unit_imaginary(self.axis)?;
        Ok(())
    }

    /// `(panels, order)` of the composite rule on one half-line for `n` nodes.
    fn layout(n: usize) -> (usize, usize) {
        if n < PANEL_ORDER {
            (1, n)
        } else {
            (n.div_ceil(PANEL_ORDER), PANEL_ORDER)
        }
    }
}

/// Integrals of the integrand norm `int ||f(t)|| dt` over the three parts of the real line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentNorms {
    /// `t < -1`
    pub lower_tail: f64,
    /// `|t| <= 1`
    pub near_zero: f64,
    /// `t > 1`
    pub upper_tail: f64,
}

impl SegmentNorms {
    pub fn total(&self) -> f64 {
        self.lower_tail + self.near_zero + self.upper_tail
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSample {
    pub t: f64,
    /// `||f(t)||` of the `dt`-integrand, including the `1/2pi` factor.
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct FracPowerReport<S> {
    pub result: QVec<S>,
    /// `||I_n - I_2n||`, `None` when not requested.
    pub error_estimate: Option<f64>,
    pub segments: SegmentNorms,
    pub samples: Vec<IntegrandSample>,
    /// Quadrature nodes in the reported rule, both signs of `t`.
    pub nodes: usize,
    pub solves: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FracPowerSummary {
    pub alpha: f64,
    pub side: Side,
    pub n_nodes: usize,
    pub trunc: f64,
    pub error_estimate: Option<f64>,
    pub segments: SegmentNorms,
    pub nodes: usize,
    pub solves: usize,
    pub result_norm: f64,
}

impl<S: Real> FracPowerReport<S> {
    pub fn summary(&self, spec: &QuadratureSpec<S>, w: &[S]) -> FracPowerSummary {
        FracPowerSummary {
            alpha: spec.alpha.as_f64(),
            side: spec.side,
            n_nodes: spec.n_nodes,
            trunc: spec.trunc.as_f64(),
            error_estimate: self.error_estimate,
            segments: self.segments,
            nodes: self.nodes,
            solves: self.solves,
            result_norm: weighted_norm(w, &self.result).as_f64(),
        }
    }
}

struct Integrand<'a, S: Real> {
    op: &'a dyn QuatOperator<S>,
    opts: &'a SolveOptions,
    alpha: S,
    j: Quaternion<S>,
    side: Side,
    rewrite: bool,
    v: QVec<S>,
    tv: QVec<S>,
}

/// `cos(beta pi/2) + u sin(beta pi/2)`, the principal power `u^beta` of a unit imaginary `u`.
fn unit_pow<S: Real>(u: Quaternion<S>, beta: S) -> Quaternion<S> {
    let phi = beta * S::FRAC_PI_2();
    Quaternion::real(phi.cos()) + u * phi.sin()
}

fn left_mul<S: Real>(q: Quaternion<S>, v: &[Quaternion<S>]) -> QVec<S> {
    v.iter().map(|&x| q * x).collect()
}

impl<S: Real> Integrand<'_, S> {
    fn dir(&self, sigma: S) -> Quaternion<S> {
        -(self.j * sigma)
    }

    /// Integrand in `u` (without `1/2pi`) and the norm of the `dt`-integrand.
    fn eval(&self, sigma: S, u: S) -> Result<(QVec<S>, S)> {
        let t = u.exp();
        let dir = self.dir(sigma);
        let s = SpectralParam::imaginary(dir, t)?;
        let r = SResolvent::new(self.op, &s, self.opts)?;
        let c = unit_pow(dir, self.alpha - S::one());
        let g = match self.side {
            Side::Right if self.rewrite && u <= S::zero() => {
                let w = r.apply_sr(&self.v)?;
                w.iter().zip(&self.v).map(|(&wi, &vi)| s.s * wi - vi).collect()
            }
            Side::Right => r.apply_sr(&self.tv)?,
            Side::Left => r.apply_sl(&left_mul(c, &self.tv))?,
        };
        let gn = weighted_norm(self.op.weights(), &g);
        let f = match self.side {
            Side::Right => left_mul(c * (self.alpha * u).exp(), &g),
            Side::Left => g.into_iter().map(|x| x * (self.alpha * u).exp()).collect(),
        };
        let norm_t = ((self.alpha - S::one()) * u).exp() * gn / S::TAU();
        Ok((f, norm_t))
    }

    /// `int_U^inf` of the leading tail term `e^{(alpha-1)u} (-sigma j)^{alpha-2} T v`.
    fn tail(&self, sigma: S, trunc: S) -> QVec<S> {
        let one = S::one();
        let k = ((self.alpha - one) * trunc).exp() / (one - self.alpha);
        let c = unit_pow(self.dir(sigma), self.alpha - S::lit(2.0)) * k;
        left_mul(c, &self.tv)
    }
}

fn pairwise_vec_sum<S: Real>(parts: &[QVec<S>], n: usize) -> QVec<S> {
    match parts.len() {
        0 => vec![Quaternion::zero(); n],
        1 => parts[0].clone(),
        len => {
            let (a, b) = parts.split_at(len / 2);
            let (x, y) = (pairwise_vec_sum(a, n), pairwise_vec_sum(b, n));
            x.into_iter().zip(y).map(|(p, q)| p + q).collect()
        }
    }
}

struct PanelOut<S> {
    sum: QVec<S>,
    /// `int ||f|| dt` over the panel.
    abs: S,
    samples: Vec<IntegrandSample>,
}

struct RuleOut<S> {
    sum: QVec<S>,
    segments: SegmentNorms,
    samples: Vec<IntegrandSample>,
    nodes: usize,
}

fn run_rule<S: Real>(ig: &Integrand<'_, S>, n: usize, trunc: S, ends: &[(QVec<S>, S); 2]) -> Result<RuleOut<S>> {
    let (panels, order) = QuadratureSpec::<S>::layout(n);
    let dim = ig.v.len();
    // (sigma, a, b) for each panel, in a fixed order.
    let mut jobs = Vec::with_capacity(4 * panels);
    for sigma in [S::one(), -S::one()] {
        for p in 0..panels {
            let w = trunc / S::from_usize_lossy(panels);
            let a = -trunc + w * S::from_usize_lossy(p);
            jobs.push((sigma, a, a + w));
        }
        for p in 0..panels {
            let w = trunc / S::from_usize_lossy(panels);
            let a = w * S::from_usize_lossy(p);
            jobs.push((sigma, a, a + w));
        }
    }
    let outs: Vec<PanelOut<S>> = jobs
        .par_iter()
        .map(|&(sigma, a, b)| -> Result<PanelOut<S>> {
            let mut parts = Vec::with_capacity(order);
            let mut abs = S::zero();
            let mut samples = Vec::with_capacity(order);
            for (u, w) in composite(a, b, 1, order) {
                let (f, nt) = ig.eval(sigma, u)?;
                parts.push(f.into_iter().map(|q| q * w).collect());
                abs = abs + w * nt * u.exp();
                samples.push(IntegrandSample { t: (sigma * u.exp()).as_f64(), norm: nt.as_f64() });
            }
            Ok(PanelOut { sum: pairwise_vec_sum(&parts, dim), abs, samples })
        })
        .collect::<Result<_>>()?;

    let mut segments = SegmentNorms::default();
    let mut parts = Vec::with_capacity(outs.len() + 4);
    let mut samples = Vec::with_capacity(outs.len() * order);
    for (&(sigma, a, _), out) in jobs.iter().zip(outs) {
        let abs = out.abs.as_f64();
        if a < S::zero() {
            segments.near_zero += abs;
        } else if sigma > S::zero() {
            segments.upper_tail += abs;
        } else {
            segments.lower_tail += abs;
        }
        parts.push(out.sum);
        samples.extend(out.samples);
    }
    let tv_norm = weighted_norm(ig.op.weights(), &ig.tv).as_f64();
    let tail_abs = tv_norm * ((ig.alpha - S::one()) * trunc).exp().as_f64() / (1.0 - ig.alpha.as_f64()) / (2.0 * PI);
    for (k, sigma) in [S::one(), -S::one()].into_iter().enumerate() {
        let (f0, n0) = &ends[k];
        parts.push(f0.iter().map(|&q| q / ig.alpha).collect());
        segments.near_zero += (*n0 * (-trunc).exp() / ig.alpha).as_f64();
        parts.push(ig.tail(sigma, trunc));
        if sigma > S::zero() {
            segments.upper_tail += tail_abs;
        } else {
            segments.lower_tail += tail_abs;
        }
    }
    samples.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite t"));
    let scale = S::lit(ORIENTATION) / S::TAU();
    let sum = pairwise_vec_sum(&parts, dim).into_iter().map(|q| q * scale).collect();
    Ok(RuleOut { sum, segments, samples, nodes: 4 * panels * order })
}

/// `P_alpha(T) v` by composite Gauss-Legendre quadrature in the log variable.
///
/// `v` is first projected onto the admissible space of `op`.
pub fn frac_power_apply<S: Real>(
    spec: &QuadratureSpec<S>,
    v: &[Quaternion<S>],
    op: &dyn QuatOperator<S>,
    opts: &SolveOptions,
) -> Result<FracPowerReport<S>> {
    spec.validate()?;
    opts.validate()?;
    if v.len() != op.dim() {
        return Err(Error::SpaceMismatch(format!(
            "vector of length {} for operator of dimension {}",
            v.len(),
            op.dim()
        )));
    }
    let mut vp = v.to_vec();
    op.project(&mut vp);
    let tv = op.apply(&vp);
    let ig = Integrand {
        op,
        opts,
        alpha: spec.alpha,
        j: unit_imaginary(spec.axis)?,
        side: spec.side,
        rewrite: spec.near_zero_rewrite,
        v: vp,
        tv,
    };
    let solves_per_node = match spec.side {
        Side::Left => 2,
        Side::Right => 1,
    };
    let ends = [ig.eval(S::one(), -spec.trunc)?, ig.eval(-S::one(), -spec.trunc)?];
    let main = run_rule(&ig, spec.n_nodes, spec.trunc, &ends)?;
    let mut solves = (main.nodes + 2) * solves_per_node;
    let error_estimate = if spec.estimate_error {
        let fine = run_rule(&ig, 2 * spec.n_nodes, spec.trunc, &ends)?;
        solves += fine.nodes * solves_per_node;
        let diff: QVec<S> = main.sum.iter().zip(&fine.sum).map(|(&a, &b)| a - b).collect();
        Some(weighted_norm(op.weights(), &diff).as_f64())
    } else {
        None
    };
    Ok(FracPowerReport {
        result: main.sum,
        error_estimate,
        segments: main.segments,
        samples: main.samples,
        nodes: main.nodes,
        solves,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    /// Fitted exponent of `||f(t)||` for `|t| >= TAIL_WINDOW`.
    pub tail_exponent: f64,
    /// Fitted exponent of `||f(t)||` for `|t| <= NEAR_WINDOW`.
    pub near_exponent: f64,
    pub tail_ok: bool,
    pub near_ok: bool,
    /// `||I_n - I_2n||`.
    pub doubling_delta: f64,
    /// `int ||f(t)|| dt` over the real line.
    pub abs_integral: f64,
    pub segments: SegmentNorms,
    pub samples: Vec<IntegrandSample>,
}

impl ConvergenceReport {
    pub const TAIL_WINDOW: f64 = 1e3;
    pub const NEAR_WINDOW: f64 = 1e-3;
    pub const EXPONENT_SLACK: f64 = 0.1;
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|&&(x, y)| x > 0.0 && y > 0.0).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Integrand decay exponents and self-convergence of the quadrature.
pub fn convergence_report<S: Real>(
    spec: &QuadratureSpec<S>,
    v: &[Quaternion<S>],
    op: &dyn QuatOperator<S>,
    opts: &SolveOptions,
) -> Result<ConvergenceReport> {
    let rep = frac_power_apply(&spec.with_error_estimate(true), v, op, opts)?;
    let window = |keep: &dyn Fn(f64) -> bool| -> Vec<(f64, f64)> {
        rep.samples.iter().filter(|p| keep(p.t.abs())).map(|p| (p.t.abs(), p.norm)).collect()
    };
    let tail_exponent = loglog_slope(&window(&|t| t >= ConvergenceReport::TAIL_WINDOW));
    let near_exponent = loglog_slope(&window(&|t| t <= ConvergenceReport::NEAR_WINDOW));
    let alpha = spec.alpha.as_f64();
    let slack = ConvergenceReport::EXPONENT_SLACK;
    Ok(ConvergenceReport {
        alpha,
        tail_exponent,
        near_exponent,
        tail_ok: tail_exponent <= alpha - 2.0 + slack,
        near_ok: near_exponent >= alpha - 1.0 - slack,
        doubling_delta: rep.error_estimate.unwrap_or(f64::NAN),
        abs_integral: rep.segments.total(),
        segments: rep.segments,
        samples: rep.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseOperator;
    use crate::quat::quat_pow;

    type Q = Quaternion<f64>;

    fn scalar_case(q: Q, alpha: f64, side: Side) -> (Q, Q) {
        let op = DenseOperator::scalar(q);
        let v = [Q::new(0.4, -1.0, 0.3, 0.8)];
        let spec = QuadratureSpec::new(alpha).with_side(side).with_error_estimate(false);
        let rep = frac_power_apply(&spec, &v, &op, &SolveOptions::default()).unwrap();
        (rep.result[0], quat_pow(q, alpha).unwrap() * v[0])
    }

    #[test]
    fn orientation_calibration() {
        let (got, _) = scalar_case(Q::real(4.0), 0.5, Side::Right);
        let v = Q::new(0.4, -1.0, 0.3, 0.8);
        assert!(got.max_abs_diff(v * 2.0) < 1e-7, "{got:?}");
    }

    #[test]
    fn scalar_sides() {
        for side in [Side::Right, Side::Left] {
            for (q, a) in [(Q::real(1.0), 0.3), (Q::new(1.0, 1.0, 0.0, 0.0), 0.5), (Q::new(2.0, 0.0, 1.0, 1.0), 0.75)] {
                let (got, want) = scalar_case(q, a, side);
                assert!((got - want).norm() <= 1e-6 * want.norm(), "{side} {q:?} {a}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1.0).validate().is_err());
        assert!(QuadratureSpec::new(0.5).with_nodes(4).validate().is_err());
        assert!(QuadratureSpec::new(0.5).with_axis(Q::real(1.0)).validate().is_err());
        assert!("up".parse::<Side>().is_err());
    }
}
