//! Analysis-Lasso solver that returns the solution of maximal D-support.
//!
//! The analysis-Lasso (generalized Lasso)
//!
//! ```text
//! min_x  ½‖y − Φx‖₂² + λ‖D*x‖₁
//! ```
//!
//! may have a whole polytope of minimizers. Among them, the points whose
//! analysis support `supp(D*x)` contains the support of every other
//! minimizer are exactly the relative-interior points of the solution set.
//! The interior-point solver in [`ipm`] follows the central path of the
//! lifted quadratic program to the analytic center of that set, so it lands
//! on such a maximal-support solution.
//!
//! - [`model`]: problem data, restricted-injectivity check, lifting.
//! - [`kkt`]: residuals of the optimality system and duality gap.
//! - [`ipm`]: the predictor-corrector iteration.
//! - [`geometry`]: support extraction and maximality certificates.
//! - [`oracle`]: brute-force reference (optimal value, vertices, analytic
//!   center) for small instances.
//! - [`cli`]: problem files, result JSON and trace CSV.

pub mod cli;
pub mod geometry;
pub mod ipm;
pub mod kkt;
pub mod model;
pub mod oracle;

pub use ipm::{solve, SolveTrace, SolverConfig, Status};
pub use kkt::PrimalDualPoint;
pub use model::{lift, validate, AugmentedQP, Problem};
