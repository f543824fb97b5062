//! Kronecker products.
//!
//! Ordering convention used throughout the crate: `A ⊗ B` is the block
//! matrix `[a_ij · B]`, so with zero-based indices
//! `(A ⊗ B)[i1 * B.rows + i2, j1 * B.cols + j2] = A[i1, j1] * B[i2, j2]`.
//! For a chain `A_1 ⊗ … ⊗ A_q` the index of the last factor varies fastest.

use super::matrix::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};

fn checked_product(dims: impl IntoIterator<Item = usize>, what: &str) -> Result<usize> {
    dims.into_iter().try_fold(1usize, |acc, d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::DimensionOverflow(format!("{what} product overflows usize")))
    })
}

pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let rows = checked_product([a.rows(), b.rows()], "row")?;
    let cols = checked_product([a.cols(), b.cols()], "column")?;
    checked_product([rows, cols], "entry")?;
    let mut out = DenseMatrix::zeros(rows, cols);
    let (br, bc) = b.shape();
    for i1 in 0..a.rows() {
        for j1 in 0..a.cols() {
            let s = a.get(i1, j1);
            if s == 0.0 {
                continue;
            }
            for i2 in 0..br {
                let dst = &mut out.row_mut(i1 * br + i2)[j1 * bc..(j1 + 1) * bc];
                for (d, &v) in dst.iter_mut().zip(b.row(i2)) {
                    *d = s * v;
                }
            }
        }
    }
    Ok(out)
}

/// Left fold `((A_1 ⊗ A_2) ⊗ A_3) ⊗ …`.
pub fn kron_chain(factors: &[DenseMatrix]) -> Result<DenseMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Config("kron_chain needs at least one factor".into()))?;
    checked_product(factors.iter().map(|f| f.rows()), "row")?;
    checked_product(factors.iter().map(|f| f.cols()), "column")?;
    rest.iter().try_fold(first.clone(), |acc, f| kron(&acc, f))
}

pub fn kron_vec(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for &a in u {
        out.extend(v.iter().map(|&b| a * b));
    }
    out
}

/// `(A_1 ⊗ … ⊗ A_q) x` by successive mode products, never forming the
/// Kronecker matrix.
pub fn kron_matvec(factors: &[DenseMatrix], x: &[f64]) -> Result<DenseVector> {
    if factors.is_empty() {
        return Err(Error::Config("kron_matvec needs at least one factor".into()));
    }
    let d = checked_product(factors.iter().map(|f| f.cols()), "column")?;
    if x.len() != d {
        return Err(Error::mismatch("kron_matvec", (d, 1), (x.len(), 1)));
    }
    checked_product(factors.iter().map(|f| f.rows()), "row")?;
    // Tensor shape starts as (d_1, …, d_q); mode k is replaced by n_k in turn.
    let mut shape: Vec<usize> = factors.iter().map(|f| f.cols()).collect();
    let mut cur = x.to_vec();
    for (k, a) in factors.iter().enumerate() {
        let pre: usize = shape[..k].iter().product();
        let post: usize = shape[k + 1..].iter().product();
        let (n_k, d_k) = a.shape();
        let mut next = vec![0.0; pre * n_k * post];
        for p in 0..pre {
            for i in 0..n_k {
                let dst = &mut next[(p * n_k + i) * post..(p * n_k + i + 1) * post];
                for j in 0..d_k {
                    let aij = a.get(i, j);
                    if aij == 0.0 {
                        continue;
                    }
                    let src = &cur[(p * d_k + j) * post..(p * d_k + j + 1) * post];
                    for (o, &s) in dst.iter_mut().zip(src) {
                        *o += aij * s;
                    }
                }
            }
        }
        shape[k] = n_k;
        cur = next;
    }
    Ok(DenseVector::from_raw(cur))
}

/// Splits a flat Kronecker index into per-factor indices (last fastest).
pub fn unravel_index(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::relative_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_kron_identity() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), DenseMatrix::identity(4));
        assert_eq!(
            kron_chain(&[i2.clone(), i2.clone(), i2]).unwrap(),
            DenseMatrix::identity(8)
        );
    }

    #[test]
    fn block_layout_matches_displayed_4x4() {
        let a = DenseMatrix::from_rows(&[&[2.0, 3.0], &[5.0, 7.0]]);
        let b = DenseMatrix::from_rows(&[&[11.0, 13.0], &[17.0, 19.0]]);
        let k = kron(&a, &b).unwrap();
        let (a11, a12, a21, a22) = (2.0, 3.0, 5.0, 7.0);
        let (b11, b12, b21, b22) = (11.0, 13.0, 17.0, 19.0);
        let expected = DenseMatrix::from_rows(&[
            &[a11 * b11, a11 * b12, a12 * b11, a12 * b12],
            &[a11 * b21, a11 * b22, a12 * b21, a12 * b22],
            &[a21 * b11, a21 * b12, a22 * b11, a22 * b12],
            &[a21 * b21, a21 * b22, a22 * b21, a22 * b22],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn row_times_column() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0]]);
        let b = DenseMatrix::from_rows(&[&[3.0], &[4.0]]);
        let expected = DenseMatrix::from_rows(&[&[3.0, 6.0], &[4.0, 8.0]]);
        assert_eq!(kron(&a, &b).unwrap(), expected);
        let c = DenseMatrix::from_rows(&[&[5.0]]);
        assert_eq!(kron_chain(&[a.clone(), b, c]).unwrap(), expected.scale(5.0));
        assert_eq!(kron_chain(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn chain_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b, c) = (random(2, 3, &mut rng), random(3, 1, &mut rng), random(2, 2, &mut rng));
        let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
        assert!(relative_diff(left.as_slice(), right.as_slice()) < 1e-15);
    }

    #[test]
    fn bilinearity_and_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, r) in [(2usize, 2usize), (3, 3), (2, 3)] {
            let (a, a2, b) = (random(p, r, &mut rng), random(p, r, &mut rng), random(r, p, &mut rng));
            let lhs = kron(&a.add(&a2).unwrap(), &b).unwrap();
            let rhs = kron(&a, &b).unwrap().add(&kron(&a2, &b).unwrap()).unwrap();
            assert!(relative_diff(lhs.as_slice(), rhs.as_slice()) < 1e-12);

            let (c, d) = (random(r, p, &mut rng), random(p, r, &mut rng));
            let lhs = kron(&a, &b).unwrap().matmul(&kron(&c, &d).unwrap()).unwrap();
            let rhs = kron(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap()).unwrap();
            assert!(relative_diff(lhs.as_slice(), rhs.as_slice()) < 1e-10);
        }
    }

    #[test]
    fn matvec_matches_explicit_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let factors = vec![random(3, 2, &mut rng), random(2, 3, &mut rng), random(4, 1, &mut rng)];
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let explicit = kron_chain(&factors).unwrap().matvec(&x).unwrap();
        let fast = kron_matvec(&factors, &x).unwrap();
        assert!(relative_diff(fast.as_slice(), explicit.as_slice()) < 1e-13);
    }

    #[test]
    fn overflow_is_reported() {
        // Zero rows keep the allocation empty; 2^33 * 2^33 columns overflow.
        let wide = DenseMatrix::zeros(0, 1usize << 33);
        assert!(matches!(kron(&wide, &wide), Err(Error::DimensionOverflow(_))));
    }

    #[test]
    fn unravel_last_index_fastest() {
        let mut out = [0; 3];
        unravel_index(6 + 2 * 2 + 1, &[4, 3, 2], &mut out);
        assert_eq!(out, [1, 2, 1]);
    }
}
