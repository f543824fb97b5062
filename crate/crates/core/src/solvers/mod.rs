//! Query pipelines over a [`TensorTree`](crate::tree::TensorTree):
//! regression, spline regression and low-rank approximation.

mod dynamic;
mod lowrank;
mod regression;
pub(crate) mod spline;

pub use dynamic::DynamicRegression;
pub use lowrank::{lowrank_query, materialize_lowrank, LowRankResult};
pub use regression::regression_query;
pub use spline::{spline_query, spline_sketch_dim, statistical_dimension, SplineSpec};
