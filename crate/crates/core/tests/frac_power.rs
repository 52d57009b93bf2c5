mod common;

use common::random_qvec;
use qfrac::frac_power::{convergence_report, frac_power_apply, QuadratureSpec, Side};
use qfrac::operator::weighted_norm;
use qfrac::{BoundaryKind, CoefficientSet, DenseOperator, Grid, GridOperator, Quat, QuatOperator, SolveOptions};

const V: Quat = Quat::new(-0.7, 0.2, 1.1, 0.5);

fn scalar(q: Quat, spec: &QuadratureSpec<f64>) -> Quat {
    let op = DenseOperator::scalar(q);
    frac_power_apply(spec, &[V], &op, &SolveOptions::default()).unwrap().result[0]
}

#[test]
fn identity_operator() {
    for a in [0.1, 0.5, 0.9] {
        let got = scalar(Quat::one(), &QuadratureSpec::new(a));
        assert!((got - V).norm() <= 1e-6 * V.norm());
    }
}

#[test]
fn square_root_of_one_plus_e1() {
    let p = std::f64::consts::PI / 8.0;
    let root = Quat::new(p.cos(), p.sin(), 0.0, 0.0) * 2f64.powf(0.25);
    let got = scalar(Quat::new(1.0, 1.0, 0.0, 0.0), &QuadratureSpec::new(0.5));
    assert!((got - root * V).norm() <= 1e-6 * V.norm());
    assert!(((root * root) - Quat::new(1.0, 1.0, 0.0, 0.0)).norm() < 1e-14);
}

#[test]
fn kernel_vector_maps_to_zero() {
    // Three interior nodes per axis: (1, 0, 1) spans the kernel of the central difference.
    let grid = Grid::unit_cube(5, BoundaryKind::Dirichlet).unwrap();
    let op = GridOperator::new(&CoefficientSet::constant(&grid, 1.3), true).unwrap();
    let k = |i: usize| if i == 1 || i == 3 { 1.0 } else { 0.0 };
    let v: Vec<Quat> = (0..grid.len())
        .map(|n| {
            let [i, j, l] = grid.ijk(n);
            V * (k(i) * k(j) * k(l))
        })
        .collect();
    assert!(weighted_norm(op.weights(), &v) > 0.0);
    assert!(weighted_norm(op.weights(), &op.apply(&v)) < 1e-13);
    let base = QuadratureSpec::new(0.5).with_nodes(32).with_error_estimate(false);
    let norm = |spec: QuadratureSpec<f64>| {
        weighted_norm(op.weights(), &frac_power_apply(&spec, &v, &op, &SolveOptions::default()).unwrap().result)
    };
    assert!(norm(base.with_side(Side::Left)) < 1e-12);
    assert!(norm(base.with_near_zero_rewrite(false)) < 1e-12);
    // Q_{jt} is numerically singular on the kernel for tiny t; `s S_R v - v` then cancels.
    assert!(norm(base) < 1e-3);
}

#[test]
fn doubling_nodes_is_converged() {
    let op = DenseOperator::scalar(Quat::new(2.0, 0.0, 1.0, 1.0));
    let rep = frac_power_apply(&QuadratureSpec::new(0.5), &[V], &op, &SolveOptions::default()).unwrap();
    assert!(rep.error_estimate.unwrap() <= 1e-8);
    assert_eq!(rep.nodes, 4 * 400);
}

#[test]
fn approaches_first_power() {
    let q = Quat::new(1.5, 0.3, -0.4, 0.2);
    let errs: Vec<f64> =
        [0.9, 0.95, 0.99].iter().map(|&a| (scalar(q, &QuadratureSpec::new(a)) - q * V).norm()).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn tail_exponent_for_identity() {
    let op = DenseOperator::scalar(Quat::one());
    let rep = convergence_report(&QuadratureSpec::new(0.5), &[V], &op, &SolveOptions::default()).unwrap();
    assert!((rep.tail_exponent + 1.5).abs() < 0.01, "{}", rep.tail_exponent);
    assert!((rep.near_exponent + 0.5).abs() < 0.01, "{}", rep.near_exponent);
    assert!(rep.tail_ok && rep.near_ok);
    assert!(rep.abs_integral.is_finite() && rep.segments.near_zero > 0.0);
}

fn grid_case(spec: &QuadratureSpec<f64>) -> (Vec<Quat>, f64) {
    let grid = Grid::unit_cube(5, BoundaryKind::Dirichlet).unwrap();
    let c = CoefficientSet::from_analytic(&grid, |l, x| {
        let k = (l + 2) % 3;
        let mut g = [0.0; 3];
        g[k] = 0.2;
        (1.0 + 0.2 * x[k], g)
    })
    .unwrap();
    let op = GridOperator::new(&c, true).unwrap();
    let mut v = random_qvec(op.dim(), 5);
    op.project(&mut v);
    let rep = frac_power_apply(spec, &v, &op, &SolveOptions::default()).unwrap();
    let nv = weighted_norm(op.weights(), &rep.result);
    (rep.result, nv)
}

#[test]
fn grid_operator_side_and_axis_agree() {
    // The grid has three interior nodes per axis, so T has a kernel (see kernel_vector_maps_to_zero).
    let base = QuadratureSpec::new(0.5).with_nodes(96).with_trunc(24.0).with_error_estimate(false);
    let direct = base.with_near_zero_rewrite(false);
    let (r, nr) = grid_case(&direct);
    let d = |x: &[Quat]| x.iter().zip(&r).map(|(&p, &q)| (p - q).norm_sqr()).sum::<f64>().sqrt() / 8.0 / nr;
    let (l, _) = grid_case(&base.with_side(Side::Left));
    let (a, _) = grid_case(&direct.with_axis(Quat::new(0.0, 0.2, -0.9, 0.4)));
    let (rw, _) = grid_case(&base);
    assert!(d(&l) <= 1e-8, "left/right {:e}", d(&l));
    assert!(d(&a) <= 1e-8, "axis {:e}", d(&a));
    assert!(d(&rw) <= 1e-4, "rewrite {:e}", d(&rw));
}

#[test]
fn deterministic_across_runs() {
    let spec = QuadratureSpec::new(0.3).with_nodes(48).with_trunc(20.0);
    let (a, _) = grid_case(&spec);
    let (b, _) = grid_case(&spec);
    assert_eq!(a, b);
}

#[test]
fn rejects_bad_input() {
    let op = DenseOperator::scalar(Quat::one());
    let opts = SolveOptions::default();
    assert!(frac_power_apply(&QuadratureSpec::new(0.0), &[V], &op, &opts).is_err());
    assert!(frac_power_apply(&QuadratureSpec::new(0.5), &[V, V], &op, &opts).is_err());
}
