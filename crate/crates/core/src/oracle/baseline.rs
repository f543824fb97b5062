//! Leverage-score row sampling for Kronecker regression.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::leverage_scores;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, DenseMatrix, DenseVector, SparseVector};

/// Sample count `ceil(c · d / (δ ε²))`.
pub fn baseline_sample_count(d: usize, eps: f64, delta: f64, c: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0) || !(delta > 0.0 && delta < 1.0) || !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!(
            "baseline needs eps in (0, 1], delta in (0, 1), c > 0; got eps {eps}, delta {delta}, c {c}"
        )));
    }
    let m = (c * d as f64 / (delta * eps * eps) * (1.0 - 1e-12)).ceil();
    if !m.is_finite() || m >= usize::MAX as f64 {
        return Err(Error::DimensionOverflow(format!("sample count {m:e}")));
    }
    Ok((m as usize).max(1))
}

/// Solves the row-sampled problem with `ceil(c·d/(δε²))` rows. A Kronecker
/// row `(i_1, …, i_q)` has leverage score `Π_j τ_{i_j}(A_j)`, so each sampled
/// row draws every factor index independently; rows are rescaled by
/// `1/√(m p)`.
pub fn leverage_sample_regression(
    factors: &[DenseMatrix],
    b: &SparseVector,
    eps: f64,
    delta: f64,
    c: f64,
    seed: u64,
) -> Result<DenseVector> {
    let scores: Vec<Vec<f64>> = factors.iter().map(|a| leverage_scores(a).into_vec()).collect();
    sample_with_scores(factors, &scores, b, eps, delta, c, seed)
}

fn sample_with_scores(
    factors: &[DenseMatrix],
    scores: &[Vec<f64>],
    b: &SparseVector,
    eps: f64,
    delta: f64,
    c: f64,
    seed: u64,
) -> Result<DenseVector> {
    if factors.is_empty() {
        return Err(Error::Config("at least one factor is required".into()));
    }
    let n = factors.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.rows()));
    let d = factors.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.cols()));
    let (Some(n), Some(d)) = (n, d) else {
        return Err(Error::DimensionOverflow("Kronecker product dimensions".into()));
    };
    if b.len() != n {
        return Err(Error::mismatch("leverage_sample_regression", (n, 1), (b.len(), 1)));
    }
    let m = baseline_sample_count(d, eps, delta, c)?;
    let mut dists = Vec::with_capacity(factors.len());
    let mut probs = Vec::with_capacity(factors.len());
    for (k, s) in scores.iter().enumerate() {
        let total: f64 = s.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate(format!(
                "factor {} has zero total leverage score",
                k + 1
            )));
        }
        dists.push(WeightedIndex::new(s).map_err(|e| Error::Degenerate(e.to_string()))?);
        probs.push(s.iter().map(|v| v / total).collect::<Vec<f64>>());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = DenseMatrix::zeros(m, d);
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        let mut p = 1.0;
        let mut flat = 0usize;
        let mut row = vec![1.0];
        for ((a, dist), pr) in factors.iter().zip(&dists).zip(&probs) {
            let i = dist.sample(&mut rng);
            p *= pr[i];
            flat = flat * a.rows() + i;
            row = crate::linalg::kron_vec(&row, a.row(i));
        }
        let w = 1.0 / (m as f64 * p).sqrt();
        for (dst, v) in rows.row_mut(r).iter_mut().zip(&row) {
            *dst = w * v;
        }
        rhs[r] = w * b.get(flat);
    }
    Ok(least_squares(&rows, &DenseVector::new(rhs)?)?.x)
}

/// Stored factors with lazily cached per-factor leverage scores. Entry
/// updates are `O(1)` and invalidate only the touched factor's scores.
#[derive(Debug, Clone)]
pub struct LeverageBaseline {
    factors: Vec<DenseMatrix>,
    scores: Vec<Option<Vec<f64>>>,
}

impl LeverageBaseline {
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Config("at least one factor is required".into()));
        }
        let scores = vec![None; factors.len()];
        Ok(Self { factors, scores })
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    fn check_factor(&self, i: usize) -> Result<()> {
        if i >= self.factors.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.factors.len(),
            });
        }
        Ok(())
    }

    /// `A_i[row, col] += value`.
    pub fn update_entry(&mut self, i: usize, row: usize, col: usize, value: f64) -> Result<()> {
        self.check_factor(i)?;
        let a = &mut self.factors[i];
        if row >= a.rows() {
            return Err(Error::IndexOutOfRange {
                index: row,
                len: a.rows(),
            });
        }
        if col >= a.cols() {
            return Err(Error::IndexOutOfRange {
                index: col,
                len: a.cols(),
            });
        }
        let updated = a[(row, col)] + value;
        if !updated.is_finite() {
            return Err(Error::NonFinite(row * a.cols() + col));
        }
        a[(row, col)] = updated;
        self.scores[i] = None;
        Ok(())
    }

    /// `A_i += B`.
    pub fn update(&mut self, i: usize, b: &DenseMatrix) -> Result<()> {
        self.check_factor(i)?;
        self.factors[i].add_assign(b)?;
        self.scores[i] = None;
        Ok(())
    }

    pub fn is_cached(&self, i: usize) -> bool {
        self.scores.get(i).is_some_and(Option::is_some)
    }

    pub fn query(&mut self, b: &SparseVector, eps: f64, delta: f64, c: f64, seed: u64) -> Result<DenseVector> {
        for (a, slot) in self.factors.iter().zip(self.scores.iter_mut()) {
            if slot.is_none() {
                *slot = Some(leverage_scores(a).into_vec());
            }
        }
        let scores: Vec<Vec<f64>> = self.scores.iter().map(|s| s.clone().unwrap()).collect();
        sample_with_scores(&self.factors, &scores, b, eps, delta, c, seed)
    }
}
