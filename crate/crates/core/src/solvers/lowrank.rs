use crate::error::{Error, Result};
use crate::linalg::{kron_chain, thin_svd, DenseMatrix};
use crate::tree::TensorTree;

/// Rank-`k` approximation `C = (A_1 ⊗ … ⊗ A_q) U_kᵀ U_k` in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankResult {
    pub factors: Vec<DenseMatrix>,
    /// `k × d`, orthonormal rows.
    pub uk: DenseMatrix,
}

impl LowRankResult {
    pub fn rank(&self) -> usize {
        self.uk.rows()
    }
}

/// Top-`k` right singular vectors of the root.
pub fn lowrank_query(tree: &TensorTree, k: usize) -> Result<LowRankResult> {
    let (m, d) = tree.root().shape();
    if k == 0 || k > d {
        return Err(Error::Config(format!("rank k = {k} must lie in [1, d = {d}]")));
    }
    if k > m {
        return Err(Error::Config(format!(
            "rank k = {k} exceeds the sketch dimension m = {m}"
        )));
    }
    let svd = thin_svd(tree.root());
    let uk = DenseMatrix::from_fn(k, d, |i, j| svd.v.get(j, i));
    Ok(LowRankResult {
        factors: tree.factors().to_vec(),
        uk,
    })
}

/// Explicit `n × d` matrix `(⨂ A_i) U_kᵀ U_k`.
pub fn materialize_lowrank(res: &LowRankResult) -> Result<DenseMatrix> {
    let a = kron_chain(&res.factors)?;
    if a.cols() != res.uk.cols() {
        return Err(Error::mismatch(
            "materialize_lowrank",
            (res.uk.rows(), a.cols()),
            res.uk.shape(),
        ));
    }
    a.matmul(&res.uk.transpose())?.matmul(&res.uk)
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

    fn tree(factors: Vec<DenseMatrix>, m: usize) -> TensorTree {
        let cfg = TreeConfig::new(BaseFamily::Srht, TensorFamily::TensorSrht, m).with_seed(5);
        TensorTree::initialize(factors, cfg).unwrap()
    }

    #[test]
    fn full_rank_reproduces_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let factors: Vec<_> = (0..2).map(|_| random(5, 3, &mut rng)).collect();
        let t = tree(factors.clone(), 24);
        let res = lowrank_query(&t, 9).unwrap();
        let gram = res.uk.matmul(&res.uk.transpose()).unwrap();
        assert!(relative_diff(gram.as_slice(), DenseMatrix::identity(9).as_slice()) < 1e-10);
        let a = kron_chain(&factors).unwrap();
        let c = materialize_lowrank(&res).unwrap();
        assert!(relative_diff(c.as_slice(), a.as_slice()) < 1e-8);
    }

    #[test]
    fn exact_low_rank_input_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Rank 1 ⊗ rank 2 = rank 2.
        let u = random(6, 1, &mut rng);
        let a1 = u.matmul(&random(1, 3, &mut rng)).unwrap();
        let a2 = random(6, 2, &mut rng);
        let t = tree(vec![a1.clone(), a2.clone()], 16);
        let res = lowrank_query(&t, 2).unwrap();
        let a = kron_chain(&[a1, a2]).unwrap();
        let c = materialize_lowrank(&res).unwrap();
        assert!(c.sub(&a).unwrap().frobenius_norm() <= 1e-6 * a.frobenius_norm());
        let s = thin_svd(&c).s;
        assert!(s[2] <= 1e-8 * s[0]);
    }

    #[test]
    fn single_unit_row_projects_onto_first_coordinate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let factors = vec![random(3, 2, &mut rng), random(2, 2, &mut rng)];
        let res = LowRankResult {
            factors: factors.clone(),
            uk: DenseMatrix::from_fn(1, 4, |_, j| if j == 0 { 1.0 } else { 0.0 }),
        };
        let c = materialize_lowrank(&res).unwrap();
        let a = kron_chain(&factors).unwrap();
        assert_eq!(c.column(0), a.column(0));
        assert!((1..4).all(|j| c.column(j).iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn evaluation_orders_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let factors: Vec<_> = (0..2).map(|_| random(4, 3, &mut rng)).collect();
        let res = lowrank_query(&tree(factors.clone(), 20), 3).unwrap();
        let proj = res.uk.transpose().matmul(&res.uk).unwrap();
        let other = kron_chain(&factors).unwrap().matmul(&proj).unwrap();
        let c = materialize_lowrank(&res).unwrap();
        assert!(relative_diff(c.as_slice(), other.as_slice()) < 1e-10);
    }

    #[test]
    fn cost_is_nonincreasing_in_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let factors: Vec<_> = (0..2).map(|_| random(5, 3, &mut rng)).collect();
        let a = kron_chain(&factors).unwrap();
        let t = tree(factors, 30);
        let costs: Vec<f64> = (1..=9)
            .map(|k| {
                let c = materialize_lowrank(&lowrank_query(&t, k).unwrap()).unwrap();
                c.sub(&a).unwrap().frobenius_norm()
            })
            .collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    }

    #[test]
    fn invalid_rank() {
        let t = tree(vec![DenseMatrix::identity(2); 2], 3);
        assert!(lowrank_query(&t, 0).is_err());
        assert!(lowrank_query(&t, 5).is_err());
        assert!(lowrank_query(&t, 4).is_err());
    }
}
