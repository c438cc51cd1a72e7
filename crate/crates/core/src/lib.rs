//! Forward-backward-forward splitting for `0 ∈ (A + B)x` in `ℓp`, `1 < p ≤ 2`.
//!
//! `A` is a Lipschitz monotone map into the dual `ℓq` and `B = ∂f` for a
//! separable convex `f`. The backward step is the Banach resolvent
//! `(J + λB)⁻¹J` built on the duality map `J` of `ℓp`.
//!
//! ```
//! use banach_splitting::{gen_strongly_monotone, solve_fixed, SolverConfig, Status};
//!
//! let problem = gen_strongly_monotone(7, 10, 1.5, 0.5).unwrap();
//! let cap = problem.space().step_size_cap(problem.lipschitz()).unwrap();
//! let config = SolverConfig::fixed(0.5 * cap, 0.9 * cap).epsilon(1e-8);
//! let start = problem.space().primal(vec![0.0; 10]).unwrap();
//! let report = solve_fixed(&problem, &config, &start).unwrap();
//! assert_eq!(report.status, Status::Converged);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod geometry;
pub mod operators;
pub mod problems;
pub mod resolvent;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::{pairing, Dual, Primal, Space};
pub use operators::{
    certify_lipschitz, monotonicity_probe, LipschitzMonotoneMap, MapKind, ScalarPiece,
    SeparableConvex, StrongMonotonicity,
};
pub use problems::{
    brute_force_inclusion_check, composite_to_inclusion, coordinate_descent_oracle, gen_lasso_like,
    gen_skew_vi, gen_strongly_monotone, CompositeMinProblem, ProblemInstance,
};
pub use resolvent::{generalized_projection, inclusion_residual, resolve, resolve_dual};
pub use solvers::{
    rate_certificate, solve, solve_fixed, solve_halpern, solve_linesearch, IterationRecord,
    SolveReport, SolverConfig, Status,
};
