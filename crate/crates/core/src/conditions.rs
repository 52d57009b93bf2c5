//! Constants and verdicts of the solvability conditions.

use serde::{Deserialize, Serialize};

use crate::assembly::{physical_robin_rows, robin_type_rows};
use crate::coeff::{CoeffExpr, CoefficientSet};
use crate::error::{Error, Result};
use crate::field::{discrete_lp_norm, ScalarField};
use crate::grid::{BoundaryKind, Grid};
use crate::scalar::Real;

/// Tolerance of the pointwise boundary equalities in the compatibility check.
pub const COMPAT_POINT_TOL: f64 = 1e-12;
/// Relative tolerance of the row comparison in the compatibility check.
pub const COMPAT_ROW_TOL: f64 = 1e-13;

/// `K_n = (2n - 2) / (n - 2)` for `n >= 3`.
pub fn k_n(n: u32) -> f64 {
    assert!(n >= 3, "K_n needs n >= 3");
    (2.0 * n as f64 - 2.0) / (n as f64 - 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    User,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub margin: f64,
    /// Coercivity ratio, present only on pass.
    pub c: Option<f64>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatReport {
    pub pass: bool,
    pub mu: f64,
    /// First boundary node violating the pointwise relations.
    pub first_offending_node: Option<usize>,
    pub message: String,
    /// Largest `|B_R - mu B_P|` over all boundary row entries, when compared.
    pub max_row_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub c_t: f64,
    pub c_t_prime: f64,
    pub k_a_omega: f64,
    pub c_p: f64,
    pub c_domega: f64,
    pub c_domega_provenance: Provenance,
    pub robin_sup: f64,
    pub m: f64,
    pub k3: f64,
    pub kappa_omega: Option<f64>,
    pub c_coercivity: Option<f64>,
    pub verdict_bounded: Verdict,
    pub verdict_unbounded: Verdict,
    pub compat: Option<CompatReport>,
}

/// Trace constant used when none is supplied: `max(1, sqrt(|dO| / |O|) (1 + diam))`.
pub fn trace_constant_heuristic<S: Real>(grid: &Grid<S>) -> S {
    let r = (grid.surface_area() / grid.volume()).sqrt() * (S::one() + grid.diameter());
    r.max(S::one())
}

/// Poincare-Wirtinger bound for convex domains, `diam / pi`.
pub fn poincare_constant<S: Real>(grid: &Grid<S>) -> S {
    grid.diameter() / S::PI()
}

/// `min_l min_x a_l(x)^2`.
pub fn c_t<S: Real>(c: &CoefficientSet<S>) -> S {
    c.a.iter().map(|f| f.values().iter().map(|&v| v * v).fold(S::infinity(), S::min)).fold(S::infinity(), S::min)
}

/// `a_l d_l a_i` as a field.
fn product<S: Real>(c: &CoefficientSet<S>, l: usize, i: usize) -> ScalarField<S> {
    c.a[l].mul(&c.grad_a[l][i])
}

/// `sum_{i,l} max_x |a_l d_l a_i|`.
pub fn c_t_prime<S: Real>(c: &CoefficientSet<S>) -> S {
    let mut acc = S::zero();
    for l in 0..3 {
        for i in 0..3 {
            acc = acc + product(c, l, i).max_abs();
        }
    }
    acc
}

/// `sum_{i,j} ||a_i d_i a_j||_{L^3}`.
pub fn m_constant<S: Real>(c: &CoefficientSet<S>) -> Result<S> {
    let mut acc = S::zero();
    for i in 0..3 {
        for j in 0..3 {
            acc = acc + discrete_lp_norm(&product(c, i, j), S::lit(3.0))?;
        }
    }
    Ok(acc)
}

fn robin_sup<S: Real>(c: &CoefficientSet<S>) -> S {
    c.grid().boundary_nodes().into_iter().map(|n| c.a_robin.at(n).abs()).fold(S::zero(), S::max)
}

/// Bounded-domain verdict from `C_T`, `C_T'`, `K`, `C_P`.
pub fn check_bounded(c_t: f64, c_t_prime: f64, k: f64, c_p: f64) -> Verdict {
    let margin = c_t - c_t_prime * c_p - k * (1.0 + c_p * c_p);
    let pass = margin > 0.0 && c_t > 0.0;
    Verdict { status: if pass { Status::Pass } else { Status::Fail }, margin, c: pass.then(|| margin / c_t) }
}

/// Unbounded-domain verdict `C_T - K_3 M > 0`; non-finite `M` is inconclusive.
pub fn check_unbounded(c_t: f64, m: f64) -> Verdict {
    let k3 = k_n(3);
    if !m.is_finite() {
        return Verdict { status: Status::Inconclusive, margin: f64::NAN, c: None };
    }
    let margin = c_t - k3 * m;
    let pass = margin > 0.0 && c_t > 0.0;
    Verdict { status: if pass { Status::Pass } else { Status::Fail }, margin, c: pass.then(|| margin / c_t) }
}

pub fn compute_constants<S: Real>(c: &CoefficientSet<S>, c_trace: Option<S>) -> Result<ConditionReport> {
    c.validate()?;
    let grid = c.grid();
    let (c_domega, prov) = match c_trace {
        Some(v) => (v.as_f64(), Provenance::User),
        None => (trace_constant_heuristic(grid).as_f64(), Provenance::Heuristic),
    };
    let ct = c_t(c).as_f64();
    let ctp = c_t_prime(c).as_f64();
    let cp = poincare_constant(grid).as_f64();
    let sup_a = robin_sup(c).as_f64();
    let k = c_domega * c_domega * sup_a;
    let m = m_constant(c)?.as_f64();
    let bounded = check_bounded(ct, ctp, k, cp);
    let unbounded = check_unbounded(ct, m);
    let compat = if c.b_phys.is_some() && c.mu.is_some() { Some(check_compatibility(c)?) } else { None };
    Ok(ConditionReport {
        c_t: ct,
        c_t_prime: ctp,
        k_a_omega: k,
        c_p: cp,
        c_domega,
        c_domega_provenance: prov,
        robin_sup: sup_a,
        m,
        k3: k_n(3),
        kappa_omega: bounded.passed().then_some(bounded.margin),
        c_coercivity: bounded.c,
        verdict_bounded: bounded,
        verdict_unbounded: unbounded,
        compat,
    })
}

/// Checks `a_l = mu` and `a = mu b` on the boundary, then compares the
/// Robin-type rows with `mu` times the physical Robin rows.
pub fn check_compatibility<S: Real>(c: &CoefficientSet<S>) -> Result<CompatReport> {
    let b = c.b_phys.as_ref().ok_or_else(|| Error::MissingMetadata("physical Robin function b".into()))?;
    let mu = c.mu.ok_or_else(|| Error::MissingMetadata("constant mu".into()))?;
    let tol = S::lit(COMPAT_POINT_TOL) * mu.abs().max(S::one());
    let grid = c.grid();
    let fail = |node: usize, message: String| CompatReport {
        pass: false,
        mu: mu.as_f64(),
        first_offending_node: Some(node),
        message,
        max_row_diff: None,
    };
    for n in grid.boundary_nodes() {
        if let Some(l) = (0..3).find(|&l| (c.a[l].at(n) - mu).abs() > tol) {
            return Ok(fail(n, format!("a_{} = {} differs from mu = {mu}", l + 1, c.a[l].at(n))));
        }
        if (c.a_robin.at(n) - mu * b.at(n)).abs() > tol {
            return Ok(fail(n, format!("a = {} differs from mu b = {}", c.a_robin.at(n), mu * b.at(n))));
        }
    }
    let rr = robin_type_rows(c)?;
    let pr = physical_robin_rows(c)?;
    let scaled = pr.matrix.scale(mu);
    let mut worst = S::zero();
    let mut offending = None;
    for (r, col, v) in rr.matrix.sub(&scaled).triplets() {
        let entry = rr.matrix.get(r, col).abs().max(scaled.get(r, col).abs());
        worst = worst.max(v.abs());
        if v.abs() > S::lit(COMPAT_ROW_TOL) * entry.max(S::one()) && offending.is_none() {
            offending = Some(rr.nodes[r]);
        }
    }
    Ok(CompatReport {
        pass: offending.is_none(),
        mu: mu.as_f64(),
        first_offending_node: offending,
        message: match offending {
            None => "Robin-type rows equal mu times the physical rows".into(),
            Some(n) => format!("row mismatch at boundary node {n}"),
        },
        max_row_diff: Some(worst.as_f64()),
    })
}

/// `M` for the same expressions on centred cubes of growing side at spacing `h`.
pub fn m_truncation_study<S: Real>(exprs: [CoeffExpr<S>; 3], sides: &[S], h: S) -> Result<Vec<(S, S)>> {
    sides
        .iter()
        .map(|&side| {
            let n = (side / h).round().to_usize().unwrap_or(0) + 1;
            let grid = Grid::centered_cube(n, side, BoundaryKind::Dirichlet)?;
            let c = CoefficientSet::from_exprs(&grid, exprs)?;
            Ok((side, m_constant(&c)?))
        })
        .collect()
}

/// `Theta = 2 max(1, 1/sqrt(C))`.
pub fn theta_formula(c: f64) -> f64 {
    2.0 * (1.0f64).max(1.0 / c.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k3_is_four() {
        assert_eq!(k_n(3), 4.0);
        assert_eq!(k_n(4), 3.0);
    }

    #[test]
    fn constant_coefficients_on_unit_cube() {
        let grid = Grid::<f64>::unit_cube(5, BoundaryKind::RobinType).unwrap();
        let r = compute_constants(&CoefficientSet::constant(&grid, 1.0), None).unwrap();
        assert_eq!((r.c_t, r.c_t_prime, r.k_a_omega, r.m), (1.0, 0.0, 0.0, 0.0));
        assert!(r.verdict_bounded.passed());
        assert_eq!(r.kappa_omega, Some(1.0));
        assert_eq!(r.verdict_unbounded.margin, 1.0);
        assert_eq!(r.verdict_unbounded.c, Some(1.0));
        assert_eq!(r.c_domega_provenance, Provenance::Heuristic);
    }

    #[test]
    fn strict_inequalities() {
        let v = check_unbounded(1.0, 0.25);
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.margin, 0.0);
        assert_eq!(check_unbounded(1.0, f64::INFINITY).status, Status::Inconclusive);
        let b = check_bounded(1.0, 10.0, 0.0, 0.5);
        assert_eq!(b.status, Status::Fail);
        assert!(b.margin < 0.0);
        assert!(check_bounded(0.0, 0.0, 0.0, 1.0).c.is_none());
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta_formula(1.0), 2.0);
        assert_eq!(theta_formula(0.25), 4.0);
    }
}
