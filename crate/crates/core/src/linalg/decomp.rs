//! Least squares, thin SVD and the symmetric-definite generalized
//! eigenproblem. Factorizations are delegated to nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use super::matrix::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresSolution {
    pub x: DenseVector,
    /// Numerical rank of the design matrix.
    pub rank: usize,
    /// True when the QR path was abandoned for the pseudo-inverse.
    pub rank_deficient: bool,
}

/// Thin SVD `M = U diag(S) Vᵀ` with `S` nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinSvd {
    /// rows × r, orthonormal columns.
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    /// cols × r, orthonormal columns.
    pub v: DenseMatrix,
}

impl ThinSvd {
    /// Rank at the usual `max(rows, cols) · ε · σ₁` threshold.
    pub fn rank(&self) -> usize {
        let tol = self.tolerance();
        self.s.iter().filter(|&&s| s > tol).count()
    }

    pub fn tolerance(&self) -> f64 {
        let dim = self.u.rows().max(self.v.rows()) as f64;
        dim * f64::EPSILON * self.s.first().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (rows, cols, r) = (self.u.rows(), self.v.rows(), self.s.len());
        DenseMatrix::from_fn(rows, cols, |i, j| {
            (0..r).map(|k| self.u.get(i, k) * self.s[k] * self.v.get(j, k)).sum()
        })
    }
}

pub fn thin_svd(m: &DenseMatrix) -> ThinSvd {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return ThinSvd {
            u: DenseMatrix::zeros(rows, 0),
            s: Vec::new(),
            v: DenseMatrix::zeros(cols, 0),
        };
    }
    let svd = SVD::new(m.to_na(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    ThinSvd {
        u: DenseMatrix::from_fn(rows, r, |i, k| u[(i, order[k])]),
        s: order.iter().map(|&k| svd.singular_values[k].max(0.0)).collect(),
        v: DenseMatrix::from_fn(cols, r, |j, k| v_t[(order[k], j)]),
    }
}

/// Minimum-norm solution of `min ‖M x − y‖₂`.
///
/// Householder QR when `M` has full column rank, otherwise the SVD
/// pseudo-inverse.
pub fn least_squares(m: &DenseMatrix, y: &DenseVector) -> Result<LeastSquaresSolution> {
    let (rows, cols) = m.shape();
    if y.len() != rows {
        return Err(Error::mismatch("least_squares", (rows, 1), (y.len(), 1)));
    }
    if cols == 0 {
        return Ok(LeastSquaresSolution {
            x: DenseVector::zeros(0),
            rank: 0,
            rank_deficient: false,
        });
    }
    if rows >= cols {
        let qr = m.to_na().qr();
        let r = qr.r();
        let diag_max = (0..cols).fold(0.0f64, |acc, i| acc.max(r[(i, i)].abs()));
        let tol = rows.max(cols) as f64 * f64::EPSILON * diag_max * 16.0;
        if diag_max > 0.0 && (0..cols).all(|i| r[(i, i)].abs() > tol) {
            let rhs = qr.q().transpose() * DVector::from_column_slice(y.as_slice());
            if let Some(x) = r.solve_upper_triangular(&rhs) {
                let x: Vec<f64> = x.iter().copied().collect();
                if x.iter().all(|v| v.is_finite()) {
                    return Ok(LeastSquaresSolution {
                        x: DenseVector::from_raw(x),
                        rank: cols,
                        rank_deficient: false,
                    });
                }
            }
        }
    }
    let svd = thin_svd(m);
    let rank = svd.rank();
    let mut x = vec![0.0; cols];
    for k in 0..rank {
        let coef = (0..rows).map(|i| svd.u.get(i, k) * y[i]).sum::<f64>() / svd.s[k];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += coef * svd.v.get(j, k);
        }
    }
    Ok(LeastSquaresSolution {
        x: DenseVector::from_raw(x),
        rank,
        rank_deficient: rank < cols,
    })
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::mismatch("symmetric matrix", (n, n), a.shape()));
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > 1e-10 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// Eigenvalues `μ` of the pencil `P x = μ Q x` (P symmetric, Q symmetric
/// positive definite), sorted descending.
pub fn sym_generalized_eigs(p: &DenseMatrix, q: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(p)?;
    check_symmetric(q)?;
    if p.shape() != q.shape() {
        return Err(Error::mismatch("sym_generalized_eigs", p.shape(), q.shape()));
    }
    let chol = Cholesky::new(q.to_na()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    // C = L⁻¹ P L⁻ᵀ
    let x = l.solve_lower_triangular(&p.to_na()).ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let sym: DMatrix<f64> = (&c + c.transpose()) * 0.5;
    let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}
