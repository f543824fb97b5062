use super::{lowrank_query, regression_query, spline_query, LowRankResult, SplineSpec};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector, SparseVector};
use crate::tree::TensorTree;

/// A tree together with the label `b` and its sketch `b̃ = Π b`, kept in
/// step through factor and label updates.
#[derive(Debug, Clone)]
pub struct DynamicRegression {
    tree: TensorTree,
    label: SparseVector,
    sketched: DenseVector,
}

impl DynamicRegression {
    pub fn new(tree: TensorTree, label: SparseVector) -> Result<Self> {
        let sketched = tree.sketch_vector(&label)?;
        Ok(Self { tree, label, sketched })
    }

    /// Factor update. In adaptive mode the path sketches are redrawn, so the
    /// label is sketched again under the new `Π`.
    pub fn update(&mut self, i: usize, b: &DenseMatrix) -> Result<()> {
        if self.tree.config().adaptive {
            self.tree.update_adaptive(i, b)?;
            self.sketched = self.tree.sketch_vector(&self.label)?;
        } else {
            self.tree.update(i, b)?;
        }
        Ok(())
    }

    /// `b ← b + Δ`; the sketch is updated linearly.
    pub fn update_label(&mut self, delta: &SparseVector) -> Result<()> {
        if delta.len() != self.label.len() {
            return Err(Error::mismatch("label update", (self.label.len(), 1), (delta.len(), 1)));
        }
        let sketched_delta = self.tree.sketch_vector(delta)?;
        self.label = self.label.add(delta)?;
        self.sketched.add_assign(&sketched_delta)
    }

    pub fn regression(&self) -> Result<DenseVector> {
        regression_query(&self.tree, &self.sketched)
    }

    pub fn spline(&self, spec: &SplineSpec) -> Result<DenseVector> {
        spline_query(&self.tree, &self.sketched, spec)
    }

    pub fn lowrank(&self, k: usize) -> Result<LowRankResult> {
        lowrank_query(&self.tree, k)
    }

    pub fn tree(&self) -> &TensorTree {
        &self.tree
    }

    pub fn label(&self) -> &SparseVector {
        &self.label
    }

    pub fn sketched_label(&self) -> &DenseVector {
        &self.sketched
    }

    pub fn into_tree(self) -> TensorTree {
        self.tree
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_diff;
    use crate::sketch::{BaseFamily, TensorFamily};
    use crate::tree::TreeConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn setup(adaptive: bool) -> (DynamicRegression, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let factors: Vec<_> = (0..3).map(|_| random(3, 2, &mut rng)).collect();
        let cfg = TreeConfig::new(BaseFamily::CountSketch, TensorFamily::TensorSketch, 30)
            .with_seed(2)
            .with_adaptive(adaptive);
        let tree = TensorTree::initialize(factors, cfg).unwrap();
        let b: Vec<f64> = (0..27).map(|_| rng.random_range(-1.0..1.0)).collect();
        (DynamicRegression::new(tree, SparseVector::from_dense(&b)).unwrap(), rng)
    }

    #[test]
    fn label_sketch_tracks_updates() {
        for adaptive in [false, true] {
            let (mut dr, mut rng) = setup(adaptive);
            dr.update(1, &random(3, 2, &mut rng)).unwrap();
            let delta = SparseVector::new(27, vec![(4, 0.5), (20, -1.0)]).unwrap();
            dr.update_label(&delta).unwrap();
            dr.update(0, &random(3, 2, &mut rng)).unwrap();
            let fresh = dr.tree().sketch_vector(dr.label()).unwrap();
            assert!(relative_diff(dr.sketched_label().as_slice(), fresh.as_slice()) < 1e-12);
            assert_eq!(dr.regression().unwrap().len(), 8);
        }
    }

    #[test]
    fn label_length_is_checked() {
        let (mut dr, _) = setup(false);
        assert!(dr.update_label(&SparseVector::zeros(5)).is_err());
    }
}
