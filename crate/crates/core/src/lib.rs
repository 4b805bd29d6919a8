//! Area-convex first-order solver for mixed packing-covering feasibility.
//!
//! Given nonnegative matrices `P` and `C`, [`solve`] either finds `x ∈ [0,1]^n`
//! with `Px ≤ (1+ε)·1` and `Cx ≥ (1−ε)·1`, or returns multipliers proving that
//! no `x` in the box satisfies `Px ≤ 1` and `Cx ≥ 1`. The [`densest`] module
//! uses the solver to approximate the densest-subgraph density.

// `!(v >= 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densest;
pub mod error;
pub mod generate;
pub mod instance;
pub mod oracle;
pub mod regularizer;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use instance::{
    check_epsilon_feasible, clamp_to_box, lift_solution, normalize, validate, verify_certificate,
    with_box_rows, CertificateCheck, ColumnMap, FeasibilityCheck, MpcInstance, NormalizedInstance,
    ValidationAction, ValidationOutcome,
};
pub use oracle::{oso, OracleInput};
pub use regularizer::{build_params, RegularizerParams};
pub use solver::{
    apply_J, primal_dual_gap, solve, Certificate, CertificateBasis, SaddleState, SolveReport,
    SolveStatus, SolverConfig, TracePoint,
};
pub use sparse::{SparseMatrix, WorkCounter};
