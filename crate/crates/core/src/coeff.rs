//! Coefficients `a_1, a_2, a_3` of the vector operator and boundary data.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::scalar::Real;

/// Builtin coefficient expressions with closed-form gradients.
///
/// Textual forms: `constant(c)`, `affine(c0,c1,c2,c3)` for
/// `c0 + c1 x1 + c2 x2 + c3 x3`, `sinusoidal(base,amp,axis,freq)` for
/// `base + amp sin(freq x_axis)` with `axis` in 1..=3, and
/// `gaussian-decay(base,amp,width)` for `base + amp exp(-|x|^2 / width^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoeffExpr<S> {
    Constant(S),
    Affine { c0: S, c: [S; 3] },
    Sinusoidal { base: S, amp: S, axis: usize, freq: S },
    GaussianDecay { base: S, amp: S, width: S },
}

impl<S: Real> CoeffExpr<S> {
    pub fn value(&self, x: [S; 3]) -> S {
        match *self {
            CoeffExpr::Constant(c) => c,
            CoeffExpr::Affine { c0, c } => c0 + c[0] * x[0] + c[1] * x[1] + c[2] * x[2],
            CoeffExpr::Sinusoidal { base, amp, axis, freq } => base + amp * (freq * x[axis]).sin(),
            CoeffExpr::GaussianDecay { base, amp, width } => {
                base + amp * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, x: [S; 3]) -> [S; 3] {
        let zero = S::zero();
        match *self {
            CoeffExpr::Constant(_) => [zero; 3],
            CoeffExpr::Affine { c, .. } => c,
            CoeffExpr::Sinusoidal { amp, axis, freq, .. } => {
                let mut g = [zero; 3];
                g[axis] = amp * freq * (freq * x[axis]).cos();
                g
            }
            CoeffExpr::GaussianDecay { amp, width, .. } => {
                let w2 = width * width;
                let e = amp * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / w2).exp();
                let f = -S::lit(2.0) * e / w2;
                [f * x[0], f * x[1], f * x[2]]
            }
        }
    }
}

impl<S: Real> FromStr for CoeffExpr<S> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |msg: String| Error::InvalidArgument(format!("coefficient `{text}`: {msg}"));
        if let Ok(c) = text.parse::<S>() {
            return Ok(CoeffExpr::Constant(c));
        }
        let open = text.find('(').ok_or_else(|| bad("expected name(args)".into()))?;
        if !text.ends_with(')') {
            return Err(bad("missing closing parenthesis".into()));
        }
        let name = text[..open].trim();
        let args = text[open + 1..text.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<S>().map_err(|_| bad(format!("bad number `{}`", a.trim()))))
            .collect::<Result<Vec<S>>>()?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(format!("{name} takes {n} arguments, got {}", args.len())))
            }
        };
        match name {
            "constant" => {
                want(1)?;
                Ok(CoeffExpr::Constant(args[0]))
            }
            "affine" => {
                want(4)?;
                Ok(CoeffExpr::Affine { c0: args[0], c: [args[1], args[2], args[3]] })
            }
            "sinusoidal" => {
                want(4)?;
                let axis = args[2].as_f64();
                if ![1.0, 2.0, 3.0].contains(&axis) {
                    return Err(bad("axis must be 1, 2 or 3".into()));
                }
                Ok(CoeffExpr::Sinusoidal { base: args[0], amp: args[1], axis: axis as usize - 1, freq: args[3] })
            }
            "gaussian-decay" => {
                want(3)?;
                if !(args[2] > S::zero()) {
                    return Err(bad("width must be positive".into()));
                }
                Ok(CoeffExpr::GaussianDecay { base: args[0], amp: args[1], width: args[2] })
            }
            other => Err(bad(format!("unknown builtin `{other}`"))),
        }
    }
}

impl<S: Real> fmt::Display for CoeffExpr<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffExpr::Constant(c) => write!(f, "constant({c})"),
            CoeffExpr::Affine { c0, c } => write!(f, "affine({c0},{},{},{})", c[0], c[1], c[2]),
            CoeffExpr::Sinusoidal { base, amp, axis, freq } => {
                write!(f, "sinusoidal({base},{amp},{},{freq})", axis + 1)
            }
            CoeffExpr::GaussianDecay { base, amp, width } => {
                write!(f, "gaussian-decay({base},{amp},{width})")
            }
        }
    }
}

/// Derivative along `axis`: central in the interior, one-sided second order at the ends.
pub fn fd_derivative<S: Real>(f: &ScalarField<S>, axis: usize) -> ScalarField<S> {
    let g = f.grid();
    let n = g.dims()[axis];
    let two_h = S::lit(2.0) * g.h;
    let v = f.values();
    let vals = (0..g.len())
        .map(|idx| {
            let p = g.ijk(idx)[axis];
            let at = |d: isize| v[g.shift(idx, axis, d)];
            if p == 0 {
                (-S::lit(3.0) * at(0) + S::lit(4.0) * at(1) - at(2)) / two_h
            } else if p == n - 1 {
                (S::lit(3.0) * at(0) - S::lit(4.0) * at(-1) + at(-2)) / two_h
            } else {
                (at(1) - at(-1)) / two_h
            }
        })
        .collect();
    ScalarField::from_values(g, vals).expect("same grid")
}

/// Coefficient fields, their gradients and boundary data on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet<S> {
    grid: Grid<S>,
    /// `a[l]` holds the samples of `a_{l+1}`.
    pub a: [ScalarField<S>; 3],
    /// `grad_a[i][j]` holds `d a_j / d x_i`.
    pub grad_a: [[ScalarField<S>; 3]; 3],
    /// Robin-type boundary function `a`; only boundary nodes are read.
    pub a_robin: ScalarField<S>,
    /// Physical Robin function `b`.
    pub b_phys: Option<ScalarField<S>>,
    pub mu: Option<S>,
}

impl<S: Real> CoefficientSet<S> {
    /// Samples values and gradients from `f(l, x) = (a_l(x), grad a_l(x))`.
    pub fn from_analytic(grid: &Grid<S>, f: impl Fn(usize, [S; 3]) -> (S, [S; 3])) -> Result<Self> {
        let a = [0, 1, 2].map(|l| ScalarField::from_fn(grid, |x| f(l, x).0));
        let grad_a = [0, 1, 2].map(|i| [0, 1, 2].map(|j| ScalarField::from_fn(grid, |x| f(j, x).1[i])));
        let out = Self {
            grid: grid.clone(),
            a,
            grad_a,
            a_robin: ScalarField::constant(grid, S::zero()),
            b_phys: None,
            mu: None,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn from_exprs(grid: &Grid<S>, exprs: [CoeffExpr<S>; 3]) -> Result<Self> {
        Self::from_analytic(grid, |l, x| (exprs[l].value(x), exprs[l].gradient(x)))
    }

    pub fn constant(grid: &Grid<S>, c: S) -> Self {
        Self::from_exprs(grid, [CoeffExpr::Constant(c); 3]).expect("finite constant")
    }

    /// Sampled fields with finite-difference gradients.
    pub fn from_fields(a: [ScalarField<S>; 3]) -> Result<Self> {
        let grid = a[0].grid().clone();
        for f in &a[1..] {
            grid.check_layout(f.grid())?;
        }
        let grad_a = [0, 1, 2].map(|i| [0, 1, 2].map(|j| fd_derivative(&a[j], i)));
        let out = Self { a_robin: ScalarField::constant(&grid, S::zero()), grid, a, grad_a, b_phys: None, mu: None };
        out.validate()?;
        Ok(out)
    }

    pub fn with_robin(mut self, a_robin: ScalarField<S>) -> Result<Self> {
        self.grid.check_layout(a_robin.grid())?;
        self.a_robin = a_robin;
        self.validate()?;
        Ok(self)
    }

    pub fn with_physical(mut self, b: ScalarField<S>, mu: S) -> Result<Self> {
        self.grid.check_layout(b.grid())?;
        self.b_phys = Some(b);
        self.mu = Some(mu);
        self.validate()?;
        Ok(self)
    }

    /// All `a_l` and their gradients multiplied by `lambda`; boundary data kept.
    pub fn scaled(&self, lambda: S) -> Self {
        let mut out = self.clone();
        out.a = self.a.clone().map(|f| f.map(|x| x * lambda));
        out.grad_a = self.grad_a.clone().map(|row| row.map(|f| f.map(|x| x * lambda)));
        out
    }

    #[inline]
    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    /// Same coefficients on a grid with a different boundary kind.
    pub fn with_grid_kind(mut self, kind: crate::grid::BoundaryKind) -> Self {
        self.grid = self.grid.with_kind(kind);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut fields: Vec<&ScalarField<S>> = self.a.iter().collect();
        fields.extend(self.grad_a.iter().flatten());
        fields.push(&self.a_robin);
        if let Some(b) = &self.b_phys {
            fields.push(b);
        }
        for f in fields {
            if let Some(node) = f.first_non_finite() {
                let [i, j, k] = self.grid.ijk(node);
                return Err(Error::NonFinite { node, i, j, k });
            }
        }
        if let Some(mu) = self.mu {
            if !mu.is_finite() {
                return Err(Error::InvalidArgument("mu must be finite".into()));
            }
        }
        Ok(())
    }
}
