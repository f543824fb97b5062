//! Dense linear algebra primitives.

mod decomp;
mod kron;
mod matrix;
mod transform;

pub use decomp::{least_squares, sym_generalized_eigs, thin_svd, LeastSquaresSolution, ThinSvd};
pub use kron::{kron, kron_chain, kron_matvec, kron_vec, unravel_index};
pub use matrix::{dot, norm2, relative_diff, DenseMatrix, DenseVector, SparseVector};
pub use transform::{circular_convolve, fwht, fwht_in_place, hadamard_sign, CyclicConvolver};
