mod common;

use common::random_qvec;
use proptest::prelude::*;
use qfrac::operator::weighted_dot;
use qfrac::{
    adjoint_to_quaternion, complex_adjoint, frac_power_apply, quat_pow, BoundaryKind, CoeffExpr, CoefficientSet,
    DenseOperator, Grid, GridOperator, QMatrix, QuadratureSpec, Quat, QuatOperator, SolveOptions,
};
use rand::SeedableRng;

fn quat() -> impl Strategy<Value = Quat> {
    prop::array::uniform4(-3.0f64..3.0).prop_map(Quat::from_array)
}

fn off_cut() -> impl Strategy<Value = Quat> {
    quat().prop_filter("away from (-inf, 0]", |q| q.vec_norm() > 1e-3 || q.re() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_multiplicative(p in quat(), q in quat()) {
        prop_assert!(((p * q).norm() - p.norm() * q.norm()).abs() <= 1e-12 * (1.0 + p.norm() * q.norm()));
    }

    #[test]
    fn product_is_associative(p in quat(), q in quat(), r in quat()) {
        let d = (p * q) * r - p * (q * r);
        prop_assert!(d.norm() <= 1e-12 * (1.0 + p.norm() * q.norm() * r.norm()));
    }

    #[test]
    fn conjugation_reverses_products(p in quat(), q in quat()) {
        prop_assert!(((p * q).conj() - q.conj() * p.conj()).norm() <= 1e-12 * (1.0 + p.norm() * q.norm()));
    }

    #[test]
    fn half_powers_square_back(q in off_cut()) {
        let r = quat_pow(q, 0.5).unwrap();
        prop_assert!((r * r - q).norm() <= 1e-12 * (1.0 + q.norm()));
        prop_assert!(r.re() >= 0.0);
    }

    #[test]
    fn powers_add_exponents(q in off_cut(), a in 0.05f64..0.45, b in 0.05f64..0.45) {
        let lhs = quat_pow(q, a).unwrap() * quat_pow(q, b).unwrap();
        let rhs = quat_pow(q, a + b).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
    }

    #[test]
    fn complex_adjoint_is_multiplicative(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = QMatrix::random(n, &mut rng);
        let b = QMatrix::random(n, &mut rng);
        let back = adjoint_to_quaternion(&complex_adjoint(&(&a * &b))).unwrap();
        prop_assert!(back.max_abs_diff(&(&a * &b)) <= 1e-13);
        let (ca, cb, cab) = (complex_adjoint(&a), complex_adjoint(&b), complex_adjoint(&(&a * &b)));
        let k = 2 * n;
        let e = |m: &qfrac::ComplexAdjoint<f64>, i: usize, j: usize| m.entries()[i * k + j];
        for i in 0..k {
            for j in 0..k {
                let s: num_complex::Complex<f64> = (0..k).map(|l| e(&ca, i, l) * e(&cb, l, j)).sum();
                prop_assert!((s - e(&cab, i, j)).norm() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn grid_adjoint_identity(seed in any::<u64>(), amp in 0.0f64..0.3, robin in any::<bool>()) {
        let kind = if robin { BoundaryKind::RobinType } else { BoundaryKind::Dirichlet };
        let grid = Grid::unit_cube(6, kind).unwrap();
        let c = CoefficientSet::from_exprs(
            &grid,
            [
                CoeffExpr::Affine { c0: 1.0, c: [amp, 0.0, 0.0] },
                CoeffExpr::Sinusoidal { base: 1.2, amp, axis: 2, freq: 2.0 },
                CoeffExpr::Constant(0.9),
            ],
        )
        .unwrap();
        let op = GridOperator::new(&c, true).unwrap();
        let u = random_qvec(op.dim(), seed);
        let v = random_qvec(op.dim(), seed.wrapping_add(1));
        let w = op.weights();
        let lhs = weighted_dot(w, &op.apply(&u), &v);
        let rhs = weighted_dot(w, &u, &op.apply_adjoint(&v));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn scalar_power_is_axis_and_side_independent(q in off_cut(), a in 0.1f64..0.9, seed in any::<u64>()) {
        // The fixed 400-node rule resolves the resolvent peak only away from the imaginary axis.
        prop_assume!(q.re() >= 0.5 * q.norm() && q.norm() > 0.1);
        let op = DenseOperator::scalar(q);
        let v = [Quat::new(0.3, -1.0, 0.5, 0.2)];
        let j = qfrac::oracle::random_axis(seed);
        let opts = SolveOptions::default();
        let base = QuadratureSpec::new(a).with_error_estimate(false);
        let r = frac_power_apply(&base, &v, &op, &opts).unwrap().result[0];
        let l = frac_power_apply(&base.with_side(qfrac::Side::Left).with_axis(j), &v, &op, &opts).unwrap().result[0];
        let exact = quat_pow(q, a).unwrap() * v[0];
        prop_assert!((r - exact).norm() <= 1e-6 * exact.norm());
        prop_assert!((l - r).norm() <= 1e-8 * exact.norm());
    }
}
