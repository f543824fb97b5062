//! Exact solvers on the explicit Kronecker product, and the leverage-score
//! sampling baseline.

mod baseline;
mod exact;

pub use baseline::{baseline_sample_count, leverage_sample_regression, LeverageBaseline};
pub use exact::{exact_kron_regression, exact_lowrank, exact_spline, leverage_scores, OracleSolution};
