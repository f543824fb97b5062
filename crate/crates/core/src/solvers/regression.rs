use crate::error::{Error, Result};
use crate::linalg::{least_squares, DenseVector};
use crate::tree::TensorTree;

/// `argmin_x ‖M x − b̃‖₂` with `M` the root of the tree.
pub fn regression_query(tree: &TensorTree, b_sketch: &DenseVector) -> Result<DenseVector> {
    let root = tree.root();
    let (m, d) = root.shape();
    if b_sketch.len() != m {
        return Err(Error::mismatch("regression_query", (m, 1), (b_sketch.len(), 1)));
    }
    if m < d {
        return Err(Error::Config(format!(
            "sketch dimension m = {m} is smaller than d = {d}; it cannot embed a {d}-dimensional subspace"
        )));
    }
    Ok(least_squares(root, b_sketch)?.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron_chain, relative_diff, DenseMatrix, SparseVector};
    use crate::sketch::{BaseFamily, TensorFamily};
    use crate::tree::TreeConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn config(m: usize) -> TreeConfig {
        TreeConfig::new(BaseFamily::CountSketch, TensorFamily::TensorSketch, m).with_seed(3)
    }

    #[test]
    fn identity_factors_recover_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tree = TensorTree::initialize(vec![DenseMatrix::identity(2); 2], config(40)).unwrap();
        let b: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bs = tree.sketch_vector(&SparseVector::from_dense(&b)).unwrap();
        let x = regression_query(&tree, &bs).unwrap();
        assert!(relative_diff(x.as_slice(), &b) < 1e-8);
    }

    #[test]
    fn consistent_system_has_zero_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let factors: Vec<_> = (0..2).map(|_| random(5, 2, &mut rng)).collect();
        let a = kron_chain(&factors).unwrap();
        let b = a.matvec(&[1.0, -0.5, 2.0, 0.25]).unwrap();
        let tree = TensorTree::initialize(factors, config(30)).unwrap();
        let bs = tree.sketch_vector(&SparseVector::from_dense(b.as_slice())).unwrap();
        let x = regression_query(&tree, &bs).unwrap();
        let resid = a.matvec(x.as_slice()).unwrap().sub(&b).unwrap().norm();
        assert!(resid <= 1e-6 * b.norm());
    }

    #[test]
    fn joint_scaling_leaves_solution_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let factors: Vec<_> = (0..2).map(|_| random(4, 2, &mut rng)).collect();
        let b: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let solve = |factors: Vec<DenseMatrix>, b: &[f64]| {
            let tree = TensorTree::initialize(factors, config(20)).unwrap();
            let bs = tree.sketch_vector(&SparseVector::from_dense(b)).unwrap();
            regression_query(&tree, &bs).unwrap()
        };
        let x = solve(factors.clone(), &b);
        let mut scaled = factors;
        scaled[0] = scaled[0].scale(3.5);
        let bscaled: Vec<f64> = b.iter().map(|v| v * 3.5).collect();
        let y = solve(scaled, &bscaled);
        assert!(relative_diff(y.as_slice(), x.as_slice()) < 1e-9);
    }

    #[test]
    fn rejects_small_sketch_and_bad_label() {
        let tree = TensorTree::initialize(vec![DenseMatrix::identity(3); 2], config(5)).unwrap();
        assert!(matches!(
            regression_query(&tree, &DenseVector::zeros(5)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            regression_query(&tree, &DenseVector::zeros(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
