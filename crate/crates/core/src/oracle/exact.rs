use crate::error::{Error, Result};
use crate::linalg::{kron_chain, least_squares, thin_svd, DenseMatrix, DenseVector};
use crate::solvers::spline::solve_stacked;
use crate::solvers::SplineSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x_star: DenseVector,
    /// Residual norm for regression, objective value for the spline.
    pub opt_cost: f64,
}

fn explicit(factors: &[DenseMatrix], b: &DenseVector) -> Result<DenseMatrix> {
    let a = kron_chain(factors)?;
    if b.len() != a.rows() {
        return Err(Error::mismatch("oracle label", (a.rows(), 1), (b.len(), 1)));
    }
    Ok(a)
}

/// `min_x ‖(A_1 ⊗ … ⊗ A_q) x − b‖₂` on the explicit product.
pub fn exact_kron_regression(factors: &[DenseMatrix], b: &DenseVector) -> Result<OracleSolution> {
    let a = explicit(factors, b)?;
    let x = least_squares(&a, b)?.x;
    let opt_cost = a.matvec(x.as_slice())?.sub(b)?.norm();
    Ok(OracleSolution { x_star: x, opt_cost })
}

/// `min_x ‖A x − b‖² + λ ‖L x‖²` on the explicit product.
pub fn exact_spline(factors: &[DenseMatrix], b: &DenseVector, spec: &SplineSpec) -> Result<OracleSolution> {
    let a = explicit(factors, b)?;
    if spec.l.cols() != a.cols() {
        return Err(Error::mismatch(
            "spline regularizer",
            (spec.l.rows(), a.cols()),
            spec.l.shape(),
        ));
    }
    let x = solve_stacked(&a, b.as_slice(), spec)?;
    let resid = a.matvec(x.as_slice())?.sub(b)?.norm();
    let opt_cost = spec.objective(resid, x.as_slice())?;
    Ok(OracleSolution { x_star: x, opt_cost })
}

/// `OPT_k = sqrt(Σ_{i>k} σ_i²)` of the explicit product.
pub fn exact_lowrank(factors: &[DenseMatrix], k: usize) -> Result<f64> {
    let a = kron_chain(factors)?;
    Ok(thin_svd(&a).s.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt())
}

/// `‖row i of U‖²` for the left singular vectors of the numerical range.
pub fn leverage_scores(a: &DenseMatrix) -> DenseVector {
    let svd = thin_svd(a);
    let r = svd.rank();
    let scores = (0..a.rows())
        .map(|i| (0..r).map(|k| svd.u.get(i, k).powi(2)).sum())
        .collect();
    DenseVector::new(scores).expect("squared entries are finite")
}
