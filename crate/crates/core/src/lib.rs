//! Root finding for `F(x) = 0` in ℝ and ℝᵐ: classical iterations, the
//! adimensional scale-invariant Steffensen method (ASIS), a-priori error
//! bound sequences and empirical convergence-order estimates.

pub mod adimensional;
pub mod batch;
pub mod bounds;
pub mod divdiff;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod methods;
pub mod orders;
pub mod problem;
pub mod problems;
pub mod quadrature;

pub use adimensional::{adimensional_polynomial, adimensionalize, AdimensionalForm, AdimensionalPolynomial};
pub use divdiff::DividedDifference;
pub use error::{Error, Result};
pub use linalg::Norm;
pub use methods::{asis_solve, solve, AsisRun, IterationTrace, Method, Status, StoppingCriteria};
pub use problem::{kantorovich_data, KantorovichData, KantorovichMode, K2Source, LinearScaling, Problem};
