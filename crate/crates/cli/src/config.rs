//! JSON problem configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qfrac::coeff::fd_derivative;
use qfrac::io::load_coeff;
use qfrac::{
    BoundaryKind, CoeffExpr, CoefficientSet, Grid, PowerOptions, QuadratureSpec, Quat, ScalarField, Side, SolveOptions,
};
use serde::{Deserialize, Serialize};

/// Validation failure with the path of the offending field, e.g. `coefficients[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, msg: impl fmt::Display) -> Self {
        Self { path: path.into(), msg: msg.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "{}: {}", self.path, self.msg)
        }
    }
}

/// `constant:<v>`, `expr:<builtin>(args)` or `file:<path>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FieldSpec {
    Constant(f64),
    Expr(CoeffExpr<f64>),
    File(PathBuf),
}

impl FromStr for FieldSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (tag, body) =
            s.split_once(':').ok_or_else(|| format!("`{s}`: expected constant:<v>, expr:<builtin> or file:<path>"))?;
        let body = body.trim();
        match tag.trim() {
            "constant" => body
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(FieldSpec::Constant)
                .ok_or_else(|| format!("`{body}` is not a finite number")),
            "expr" => body.parse().map(FieldSpec::Expr).map_err(|e| e.to_string()),
            "file" if !body.is_empty() => Ok(FieldSpec::File(PathBuf::from(body))),
            "file" => Err("empty file path".into()),
            other => Err(format!("unknown source `{other}` (expected constant, expr or file)")),
        }
    }
}

impl TryFrom<String> for FieldSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<FieldSpec> for String {
    fn from(f: FieldSpec) -> String {
        match f {
            FieldSpec::Constant(v) => format!("constant:{v}"),
            FieldSpec::Expr(e) => format!("expr:{e}"),
            FieldSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    #[serde(default)]
    pub origin: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryBlock {
    pub kind: BoundaryKind,
    /// Robin-type boundary function `a`.
    pub a_robin: Option<FieldSpec>,
    /// Physical Robin function `b`; needs `mu`.
    pub b_phys: Option<FieldSpec>,
    pub mu: Option<f64>,
    /// Solve in the mean-zero space on Robin-type grids.
    pub mean_zero: bool,
}

impl Default for BoundaryBlock {
    fn default() -> Self {
        Self { kind: BoundaryKind::Dirichlet, a_robin: None, b_phys: None, mu: None, mean_zero: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureBlock {
    pub alpha: f64,
    /// Imaginary unit `j` as `[q0, q1, q2, q3]`.
    pub axis: [f64; 4],
    pub n_nodes: usize,
    pub trunc: f64,
    pub side: Side,
    pub estimate_error: bool,
    pub near_zero_rewrite: bool,
}

impl Default for QuadratureBlock {
    fn default() -> Self {
        let d = QuadratureSpec::<f64>::new(0.5);
        Self {
            alpha: d.alpha,
            axis: d.axis.to_array(),
            n_nodes: d.n_nodes,
            trunc: d.trunc,
            side: d.side,
            estimate_error: d.estimate_error,
            near_zero_rewrite: d.near_zero_rewrite,
        }
    }
}

impl QuadratureBlock {
    pub fn spec(&self) -> QuadratureSpec<f64> {
        QuadratureSpec {
            alpha: self.alpha,
            axis: Quat::from_array(self.axis),
            n_nodes: self.n_nodes,
            trunc: self.trunc,
            side: self.side,
            estimate_error: self.estimate_error,
            near_zero_rewrite: self.near_zero_rewrite,
        }
    }
}

pub const DEFAULT_SEED: u64 = 0x5eed;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub grid: GridBlock,
    #[serde(default)]
    pub boundary: BoundaryBlock,
    /// `a_1, a_2, a_3`.
    pub coefficients: [FieldSpec; 3],
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub quadrature: QuadratureBlock,
    #[serde(default)]
    pub power: PowerOptions,
    #[serde(default)]
    pub trace_constant: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Directory against which `file:` paths are resolved.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ProblemConfig {
    /// Parses and validates; `file:` paths are taken relative to `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { String::new() } else { path }, e.into_inner())
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|e| ConfigError::new("", format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| ConfigError::new("", e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((Self::from_json(text, base)?, bytes))
    }

    pub fn grid(&self) -> Result<Grid<f64>, ConfigError> {
        let g = &self.grid;
        Grid::new([g.nx, g.ny, g.nz], g.h, g.origin, self.boundary.kind).map_err(|e| ConfigError::new("grid", e))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.grid()?;
        let mut specs: Vec<(String, &FieldSpec)> =
            self.coefficients.iter().enumerate().map(|(l, f)| (format!("coefficients[{l}]"), f)).collect();
        if let Some(f) = &self.boundary.a_robin {
            specs.push(("boundary.a_robin".into(), f));
        }
        if let Some(f) = &self.boundary.b_phys {
            specs.push(("boundary.b_phys".into(), f));
        }
        for (path, f) in specs {
            if let FieldSpec::File(p) = f {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(ConfigError::new(path, format!("file `{}` does not exist", full.display())));
                }
            }
        }
        if self.boundary.b_phys.is_some() != self.boundary.mu.is_some() {
            return Err(ConfigError::new("boundary.mu", "b_phys and mu must be given together"));
        }
        if let Some(c) = self.trace_constant {
            if !(c > 0.0 && c.is_finite()) {
                return Err(ConfigError::new("trace_constant", format!("must be positive, got {c}")));
            }
        }
        self.solver.validate().map_err(|e| ConfigError::new("solver", e))?;
        self.quadrature.spec().validate().map_err(|e| ConfigError::new("quadrature", e))?;
        if !(self.power.tol > 0.0 && self.power.max_iter > 0) {
            return Err(ConfigError::new("power", "tol and max_iter must be positive"));
        }
        Ok(())
    }

    fn sample(&self, grid: &Grid<f64>, path: &str, f: &FieldSpec) -> Result<ScalarField<f64>, ConfigError> {
        match f {
            FieldSpec::Constant(v) => Ok(ScalarField::constant(grid, *v)),
            FieldSpec::Expr(e) => Ok(ScalarField::from_fn(grid, |x| e.value(x))),
            FieldSpec::File(p) => {
                let field = load_coeff(self.resolve(p), grid.kind).map_err(|e| ConfigError::new(path, e))?;
                grid.check_layout(field.grid()).map_err(|e| ConfigError::new(path, e))?;
                Ok(field)
            }
        }
    }

    /// Samples the coefficients: analytic gradients for constants and expressions,
    /// finite differences for sampled files.
    pub fn coefficients(&self) -> Result<CoefficientSet<f64>, ConfigError> {
        let grid = self.grid()?;
        let exprs = self.coefficients.clone().map(|f| match f {
            FieldSpec::Constant(v) => CoeffExpr::Constant(v),
            FieldSpec::Expr(e) => e,
            FieldSpec::File(_) => CoeffExpr::Constant(1.0),
        });
        let mut c = CoefficientSet::from_exprs(&grid, exprs).map_err(|e| ConfigError::new("coefficients", e))?;
        for (l, f) in self.coefficients.iter().enumerate() {
            if let FieldSpec::File(_) = f {
                let path = format!("coefficients[{l}]");
                let field = self.sample(&grid, &path, f)?;
                for i in 0..3 {
                    c.grad_a[i][l] = fd_derivative(&field, i);
                }
                c.a[l] = field;
            }
        }
        c.validate().map_err(|e| ConfigError::new("coefficients", e))?;
        if let Some(f) = &self.boundary.a_robin {
            let a = self.sample(&grid, "boundary.a_robin", f)?;
            c = c.with_robin(a).map_err(|e| ConfigError::new("boundary.a_robin", e))?;
        }
        if let (Some(f), Some(mu)) = (&self.boundary.b_phys, self.boundary.mu) {
            let b = self.sample(&grid, "boundary.b_phys", f)?;
            c = c.with_physical(b, mu).map_err(|e| ConfigError::new("boundary.b_phys", e))?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "grid": {"nx": 5, "ny": 5, "nz": 5, "h": 0.25},
        "coefficients": ["constant:1", "expr:affine(1,0.1,0,0)", "constant:2"]
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ProblemConfig::from_json(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.boundary.kind, BoundaryKind::Dirichlet);
        assert_eq!(cfg.quadrature.n_nodes, 400);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        let c = cfg.coefficients().unwrap();
        assert!((c.grad_a[0][1].at(7) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn field_spec_round_trip() {
        for s in ["constant:1.5", "expr:sinusoidal(1.5,0.2,2,3)", "file:a.csv"] {
            let f: FieldSpec = s.parse().unwrap();
            let back: FieldSpec = String::from(f.clone()).parse().unwrap();
            assert_eq!(back, f);
        }
        assert!("bogus:1".parse::<FieldSpec>().is_err());
        assert!("expr:cosine(1)".parse::<FieldSpec>().is_err());
    }

    #[test]
    fn errors_carry_field_paths() {
        let bad = MINIMAL.replace("expr:affine(1,0.1,0,0)", "expr:cosine(1)");
        let e = ProblemConfig::from_json(&bad, Path::new(".")).unwrap_err();
        assert_eq!(e.path, "coefficients[1]");
        let bad = MINIMAL.replace("\"h\": 0.25", "\"h\": -1");
        assert_eq!(ProblemConfig::from_json(&bad, Path::new(".")).unwrap_err().path, "grid");
        let bad = MINIMAL.replace("\"constant:2\"", "\"file:missing.csv\"");
        assert_eq!(ProblemConfig::from_json(&bad, Path::new(".")).unwrap_err().path, "coefficients[2]");
        let bad = MINIMAL.replace("\"grid\"", "\"quadrature\": {\"alpha\": 1.5}, \"grid\"");
        assert_eq!(ProblemConfig::from_json(&bad, Path::new(".")).unwrap_err().path, "quadrature");
        let bad = MINIMAL.replace("\"grid\"", "\"solver\": {\"method\": \"cholesky\"}, \"grid\"");
        assert_eq!(ProblemConfig::from_json(&bad, Path::new(".")).unwrap_err().path, "solver.method");
    }
}
