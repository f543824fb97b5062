//! Dynamic sketching of Kronecker products.
//!
//! A [`tree::TensorTree`] keeps an `m × d` sketch of `A_1 ⊗ … ⊗ A_q` whose
//! leaves hold base-sketched factors and whose internal nodes hold
//! tensor-sketched combinations of their children. Updating one factor only
//! touches the leaf-to-root path. The [`solvers`] module answers regression,
//! spline regression and low-rank queries from the root, and [`oracle`]
//! provides exact solvers and a leverage-score sampling baseline to compare
//! against.

pub mod bench;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod sketch;
pub mod solvers;
pub mod tree;

pub use error::{Error, ParseError, Result};
