//! Quaternionic fractional powers of vector operators on 3D grids.

pub mod adjoint;
pub mod assembly;
pub mod bilinear;
pub mod coeff;
pub mod conditions;
pub mod error;
pub mod field;
pub mod frac_power;
pub mod grid;
pub mod io;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod quat;
pub mod resolvent;
pub mod scalar;
pub mod solver;
pub mod sparse;

pub use adjoint::{adjoint_to_quaternion, complex_adjoint, ComplexAdjoint, QuatMatrix};
pub use assembly::{assemble_q, assemble_t, scal_vect_decompose, AssembledOperator, BoundaryRows};
pub use bilinear::{eval_bilinear, BilinearForm, BilinearTerms};
pub use coeff::{CoeffExpr, CoefficientSet};
pub use conditions::{compute_constants, ConditionReport, Status, Verdict};
pub use error::{Error, Result};
pub use field::{discrete_lp_norm, l2_inner, mean_zero_project, QField, ScalarField};
pub use frac_power::{
    convergence_report, frac_power_apply, ConvergenceReport, FracPowerReport, QuadratureSpec, SegmentNorms, Side,
};
pub use grid::{BoundaryKind, Face, Grid};
pub use operator::{DenseOperator, GridOperator, PseudoResolvent, QuatOperator, ZeroOperator};
pub use quat::{quat_pow, slice_polar, slice_powf, Quaternion, SlicePolar, SpectralParam};
pub use resolvent::{
    apply_sl, apply_sr, log_spaced, op_norm_estimate, resolvent_scan, solve_q, NormEstimate, PowerOptions,
    ResolventScan, SResolvent, ScanPoint,
};
pub use scalar::{pairwise_sum, Real};
pub use solver::{LinearSolve, Method, SolveOptions};
pub use sparse::CsrMatrix;

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double precision quaternion.
pub type Quat = Quaternion<f64>;
/// Double precision dense quaternion matrix.
pub type QMatrix = QuatMatrix<f64>;
