//! Spline regression `min ‖A x − b‖² + λ ‖L x‖²` and its statistical
//! dimension.

use crate::error::{Error, Result};
use crate::linalg::{least_squares, sym_generalized_eigs, thin_svd, DenseMatrix, DenseVector};
use crate::sketch::{choose_m_with, DimensionRule, EpsScaling};
use crate::tree::{TensorTree, TreeConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpec {
    /// `p × d` regularizer.
    pub l: DenseMatrix,
    pub lambda: f64,
}

impl SplineSpec {
    pub fn new(l: DenseMatrix, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self { l, lambda })
    }

    /// `(d − 1) × d` first-difference operator, row `i` is `e_{i+1} − e_i`.
    pub fn first_difference(d: usize) -> DenseMatrix {
        DenseMatrix::from_fn(d.saturating_sub(1), d, |i, j| {
            if j == i + 1 {
                1.0
            } else if j == i {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// `‖A x − b‖² + λ ‖L x‖²` given the residual norm of `A x − b`.
    pub fn objective(&self, residual_norm: f64, x: &[f64]) -> Result<f64> {
        let lx = self.l.matvec(x)?;
        Ok(residual_norm * residual_norm + self.lambda * lx.norm().powi(2))
    }

    fn check_cols(&self, d: usize) -> Result<()> {
        if self.l.cols() != d {
            return Err(Error::mismatch(
                "spline regularizer",
                (self.l.rows(), d),
                self.l.shape(),
            ));
        }
        Ok(())
    }
}

/// `argmin_x ‖M x − b̃‖² + λ ‖L x‖²`, solved as least squares on the stacked
/// system `[M; √λ L] x ≈ [b̃; 0]`.
pub fn spline_query(tree: &TensorTree, b_sketch: &DenseVector, spec: &SplineSpec) -> Result<DenseVector> {
    let root = tree.root();
    let (m, d) = root.shape();
    if b_sketch.len() != m {
        return Err(Error::mismatch("spline_query", (m, 1), (b_sketch.len(), 1)));
    }
    spec.check_cols(d)?;
    solve_stacked(root, b_sketch.as_slice(), spec)
}

pub(crate) fn solve_stacked(a: &DenseMatrix, b: &[f64], spec: &SplineSpec) -> Result<DenseVector> {
    let stacked = a.vstack(&spec.l.scale(spec.lambda.sqrt()))?;
    let mut rhs = b.to_vec();
    rhs.resize(stacked.rows(), 0.0);
    let sol = least_squares(&stacked, &DenseVector::new(rhs)?)?;
    if sol.rank_deficient {
        return Err(Error::Singular(format!(
            "M^T M + lambda L^T L is singular (rank {} < d = {}); the spline needs rank([M; L]) = d and lambda > 0 or M of full column rank",
            sol.rank,
            a.cols()
        )));
    }
    Ok(sol.x)
}

/// `sd_λ(A, L) = Σ_i 1/(1 + λ/γ_i²) + d − p` over the generalized singular
/// values `γ_i` of `(A, L)`.
///
/// With `W` an orthonormal basis of the row space of `L` and `Z` of its null
/// space, the `γ_i²` are the eigenvalues of the pencil `(S, WᵀLᵀLW)` where
/// `S` is the Schur complement of `ZᵀAᵀAZ` in `[W Z]ᵀAᵀA[W Z]`.
pub fn statistical_dimension(a: &DenseMatrix, spec: &SplineSpec) -> Result<f64> {
    let d = a.cols();
    spec.check_cols(d)?;
    let l = &spec.l;
    let p = l.rows();
    if p > d {
        return Err(Error::Config(format!("regularizer has {p} rows, more than d = {d}")));
    }
    let l_svd = thin_svd(&l.transpose());
    if l_svd.rank() != p {
        return Err(Error::RankDeficient(format!(
            "rank(L) = {} but L has p = {p} rows",
            l_svd.rank()
        )));
    }
    let stacked_rank = thin_svd(&a.vstack(l)?).rank();
    if stacked_rank != d {
        return Err(Error::RankDeficient(format!(
            "rank([A; L]) = {stacked_rank} but d = {d}"
        )));
    }
    let gammas = generalized_singular_values_sq(a, l, &l_svd.u)?;
    let lambda = spec.lambda;
    let head: f64 = gammas
        .iter()
        .map(|&g2| {
            if lambda == 0.0 {
                1.0
            } else if g2 <= 0.0 {
                0.0
            } else {
                1.0 / (1.0 + lambda / g2)
            }
        })
        .sum();
    Ok(head + (d - p) as f64)
}

/// `γ_i²`, descending. `w` is a `d × p` orthonormal basis of the row space of `L`.
fn generalized_singular_values_sq(a: &DenseMatrix, l: &DenseMatrix, w: &DenseMatrix) -> Result<Vec<f64>> {
    let d = a.cols();
    let p = w.cols();
    let g = a.transpose().matmul(a)?;
    let gw = g.matmul(w)?;
    let mut s = w.transpose().matmul(&gw)?;
    if p < d {
        let proj = DenseMatrix::identity(d).sub(&w.matmul(&w.transpose())?)?;
        let z = thin_svd(&proj).u.columns_range(0, d - p);
        let zt = z.transpose();
        let gzz = zt.matmul(&g)?.matmul(&z)?;
        let gzw = zt.matmul(&gw)?;
        // S = G_WW − G_WZ G_ZZ⁻¹ G_ZW, one least-squares solve per column.
        let mut sol_cols = Vec::with_capacity(p);
        for c in 0..p {
            let rhs = DenseVector::new(gzw.column(c))?;
            let sol = least_squares(&gzz, &rhs)?;
            if sol.rank_deficient {
                return Err(Error::RankDeficient("A is singular on the null space of L".into()));
            }
            sol_cols.push(sol.x.into_vec());
        }
        let y = DenseMatrix::from_columns(d - p, &sol_cols)?;
        s = s.sub(&gzw.transpose().matmul(&y)?)?;
    }
    let s = symmetrize(&s);
    let lw = l.matmul(w)?;
    let q = symmetrize(&lw.transpose().matmul(&lw)?);
    sym_generalized_eigs(&s, &q)
}

fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| 0.5 * (a.get(i, j) + a.get(j, i)))
}

/// Sketch dimension for the spline: the statistical dimension stands in for
/// `d` with `ε⁻¹` scaling. Without an explicit `A` it falls back to `d`.
pub fn spline_sketch_dim(
    rule: DimensionRule,
    a: Option<&DenseMatrix>,
    spec: &SplineSpec,
    d: usize,
    q: usize,
    config: &TreeConfig,
    c_factor: f64,
) -> Result<usize> {
    let dim = match a {
        Some(a) => statistical_dimension(a, spec)?,
        None => {
            log::info!("no explicit design matrix; using d = {d} in place of the statistical dimension");
            d as f64
        }
    };
    choose_m_with(
        rule,
        EpsScaling::MatrixProduct,
        dim,
        q,
        config.eps,
        config.delta,
        c_factor,
    )
}
