//! Helpers shared by the integration tests.
#![allow(dead_code)]

use qfrac::{
    assemble_q, assemble_t, l2_inner, BilinearForm, BoundaryKind, CoefficientSet, Grid, QField, Quat, SpectralParam,
};

pub fn bump(x: [f64; 3]) -> f64 {
    let p = std::f64::consts::PI;
    ((p * x[0]).sin() * (p * x[1]).sin() * (p * x[2]).sin()).powi(2)
}

pub fn coeffs(grid: &Grid<f64>) -> CoefficientSet<f64> {
    CoefficientSet::from_analytic(grid, |l, x| match l {
        0 => (2.0 + 0.3 * (2.0 * x[1]).sin() + 0.2 * x[2], [0.0, 0.6 * (2.0 * x[1]).cos(), 0.2]),
        1 => {
            let s = (x[0] + x[2]).sin();
            (1.5 + 0.25 * (x[0] + x[2]).cos(), [-0.25 * s, 0.0, -0.25 * s])
        }
        _ => (1.8 + 0.2 * x[0] * x[1], [0.2 * x[1], 0.2 * x[0], 0.0]),
    })
    .unwrap()
}

pub fn fields(grid: &Grid<f64>) -> (QField<f64>, QField<f64>) {
    let u = QField::from_fn(grid, |x| Quat::new(1.0 + x[0] * x[1], x[2].sin(), 0.5 - x[0], x[1] * x[1]) * bump(x));
    let v = QField::from_fn(grid, |x| Quat::new(x[2].cos(), 1.0 - x[1], x[0] * x[2], 0.3 + x[0]) * bump(x));
    (u, v)
}

pub fn green_gap(n: usize, s: SpectralParam<f64>) -> (f64, f64) {
    let grid = Grid::unit_cube(n, BoundaryKind::Dirichlet).unwrap();
    let c = coeffs(&grid);
    let (u, v) = fields(&grid);
    let t = assemble_t(&c).unwrap();
    let q = assemble_q(&s, &t);
    let lhs = BilinearForm::new(&c, s).eval(&u, &v).unwrap();
    let rhs = l2_inner(&q.apply(&u).unwrap(), &v).unwrap();
    ((lhs - rhs).norm(), rhs.norm())
}

pub fn random_qvec(n: usize, seed: u64) -> Vec<Quat> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Quat::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect()
}

/// Observed orders `log2(gap_h / gap_{h/2})` over the grids 9, 17, 33 (`h = 1/8, 1/16, 1/32`).
pub fn green_orders(s: SpectralParam<f64>) -> (Vec<f64>, Vec<f64>) {
    let gaps: Vec<f64> = [9, 17, 33].iter().map(|&n| green_gap(n, s).0).collect();
    let orders = gaps.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    (gaps, orders)
}
