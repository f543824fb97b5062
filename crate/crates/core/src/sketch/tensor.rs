//! Degree-two sketches of `u ⊗ v` that never form the `m²`-vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use super::TensorFamily;
use crate::error::{Error, Result};
use crate::linalg::{fwht_in_place, hadamard_sign, CyclicConvolver, DenseMatrix};

/// Seeded description of a map `ℝ^{m·m} → ℝ^{m_out}` acting on `u ⊗ v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorSketchSpec {
    pub family: TensorFamily,
    /// Length of each of the two inputs.
    pub side_dim: usize,
    pub output_dim: usize,
    pub seed: u64,
}

impl TensorSketchSpec {
    pub fn new(family: TensorFamily, side_dim: usize, output_dim: usize, seed: u64) -> Self {
        Self {
            family,
            side_dim,
            output_dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_dim == 0 || self.side_dim == 0 {
            return Err(Error::Config(format!(
                "tensor sketch dimensions must be positive (side {}, output {})",
                self.side_dim, self.output_dim
            )));
        }
        Ok(())
    }

    pub fn realize(&self) -> Result<TensorPairSketch> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (m, out) = (self.side_dim, self.output_dim);
        let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
        let kind = match self.family {
            TensorFamily::TensorSketch => {
                let h1 = (0..m).map(|_| rng.random_range(0..out)).collect();
                let h2 = (0..m).map(|_| rng.random_range(0..out)).collect();
                let s1 = (0..m).map(|_| sign(&mut rng)).collect();
                let s2 = (0..m).map(|_| sign(&mut rng)).collect();
                Kind::Convolution {
                    h1,
                    h2,
                    s1,
                    s2,
                    conv: CyclicConvolver::new(out),
                }
            }
            TensorFamily::TensorSrht => {
                let padded = m.next_power_of_two();
                let d1 = (0..padded).map(|_| sign(&mut rng)).collect();
                let d2 = (0..padded).map(|_| sign(&mut rng)).collect();
                let pairs = (0..out)
                    .map(|_| (rng.random_range(0..padded), rng.random_range(0..padded)))
                    .collect();
                Kind::Sampled { padded, d1, d2, pairs }
            }
        };
        Ok(TensorPairSketch { spec: *self, kind })
    }

    pub fn materialize(&self) -> Result<DenseMatrix> {
        self.realize()?.materialize()
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// `S[r, (a, b)] = σ₁(a) σ₂(b) · [h₁(a) + h₂(b) ≡ r mod m_out]`.
    Convolution {
        h1: Vec<usize>,
        h2: Vec<usize>,
        s1: Vec<f64>,
        s2: Vec<f64>,
        conv: CyclicConvolver,
    },
    /// Row `r` reads coordinate `(i_r, j_r)` of `(H D₁ u) ⊗ (H D₂ v)` with the
    /// unnormalized Hadamard `H`, scaled by `1/√m_out`.
    Sampled {
        padded: usize,
        d1: Vec<f64>,
        d2: Vec<f64>,
        pairs: Vec<(usize, usize)>,
    },
}

/// A tensor sketch with its random choices drawn.
#[derive(Debug, Clone)]
pub struct TensorPairSketch {
    spec: TensorSketchSpec,
    kind: Kind,
}

impl TensorPairSketch {
    pub fn spec(&self) -> &TensorSketchSpec {
        &self.spec
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    fn check_rows(&self, op: &'static str, a: &DenseMatrix) -> Result<()> {
        if a.rows() != self.spec.side_dim {
            return Err(Error::mismatch(op, (self.spec.side_dim, a.cols()), a.shape()));
        }
        Ok(())
    }

    /// Column `(j₁, j₂)` (index `j₁·J2.cols + j₂`) of the result is the
    /// sketch of `J1[:, j₁] ⊗ J2[:, j₂]`.
    pub fn apply_pair(&self, j1: &DenseMatrix, j2: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rows("apply_tensor_pair", j1)?;
        self.check_rows("apply_tensor_pair", j2)?;
        let (c1, c2) = (j1.cols(), j2.cols());
        let cols = c1
            .checked_mul(c2)
            .ok_or_else(|| Error::DimensionOverflow("tensor pair column count".into()))?;
        let out_dim = self.spec.output_dim;
        let mut out = DenseMatrix::zeros(out_dim, cols);
        let left: Vec<Vec<f64>> = (0..c1).map(|c| j1.column(c)).collect();
        let right: Vec<Vec<f64>> = (0..c2).map(|c| j2.column(c)).collect();
        let nonzero = |v: &Vec<f64>| v.iter().any(|&x| x != 0.0);
        match &self.kind {
            Kind::Convolution { conv, .. } => {
                let spec_of =
                    |side: usize, v: &Vec<f64>| nonzero(v).then(|| conv.spectrum(&self.count_sketch(side, v)));
                let ls: Vec<_> = left.iter().map(|v| spec_of(0, v)).collect();
                let rs: Vec<_> = right.iter().map(|v| spec_of(1, v)).collect();
                let mut scratch = vec![Complex64::new(0.0, 0.0); out_dim];
                let mut col = vec![0.0; out_dim];
                for (a, lsa) in ls.iter().enumerate() {
                    let Some(lsa) = lsa else { continue };
                    for (b, rsb) in rs.iter().enumerate() {
                        let Some(rsb) = rsb else { continue };
                        conv.convolve_spectra(lsa, rsb, &mut scratch, &mut col);
                        let c = a * c2 + b;
                        for (r, &x) in col.iter().enumerate() {
                            out[(r, c)] = x;
                        }
                    }
                }
            }
            Kind::Sampled { pairs, .. } => {
                let lt: Vec<_> = left.iter().map(|v| self.hadamard_side(0, v)).collect();
                let rt: Vec<_> = right.iter().map(|v| self.hadamard_side(1, v)).collect();
                let scale = 1.0 / (out_dim as f64).sqrt();
                for (a, ga) in lt.iter().enumerate() {
                    for (b, gb) in rt.iter().enumerate() {
                        let c = a * c2 + b;
                        for (r, &(i, j)) in pairs.iter().enumerate() {
                            out[(r, c)] = scale * ga[i] * gb[j];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sketch of a single `u ⊗ v`.
    pub fn apply_vectors(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let m = self.spec.side_dim;
        if u.len() != m || v.len() != m {
            return Err(Error::mismatch("apply_tensor_vectors", (m, m), (u.len(), v.len())));
        }
        let out_dim = self.spec.output_dim;
        match &self.kind {
            Kind::Convolution { conv, .. } => {
                if u.iter().all(|&x| x == 0.0) || v.iter().all(|&x| x == 0.0) {
                    return Ok(vec![0.0; out_dim]);
                }
                Ok(conv.convolve(&self.count_sketch(0, u), &self.count_sketch(1, v)))
            }
            Kind::Sampled { pairs, .. } => {
                let (gu, gv) = (self.hadamard_side(0, u), self.hadamard_side(1, v));
                let scale = 1.0 / (out_dim as f64).sqrt();
                Ok(pairs.iter().map(|&(i, j)| scale * gu[i] * gv[j]).collect())
            }
        }
    }

    fn count_sketch(&self, side: usize, v: &[f64]) -> Vec<f64> {
        let Kind::Convolution { h1, h2, s1, s2, .. } = &self.kind else {
            unreachable!("count_sketch on a sampled tensor sketch")
        };
        let (h, s) = if side == 0 { (h1, s1) } else { (h2, s2) };
        let mut out = vec![0.0; self.spec.output_dim];
        for ((&x, &hi), &si) in v.iter().zip(h).zip(s) {
            out[hi] += si * x;
        }
        out
    }

    /// `H D v` over the padded length, `H` unnormalized.
    fn hadamard_side(&self, side: usize, v: &[f64]) -> Vec<f64> {
        let Kind::Sampled { padded, d1, d2, .. } = &self.kind else {
            unreachable!("hadamard_side on a convolution tensor sketch")
        };
        let d = if side == 0 { d1 } else { d2 };
        let mut buf = vec![0.0; *padded];
        for ((b, &x), &s) in buf.iter_mut().zip(v).zip(d) {
            *b = s * x;
        }
        fwht_in_place(&mut buf);
        buf
    }

    /// Explicit `m_out × m²` matrix from the entrywise definitions.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        let m = self.spec.side_dim;
        let out_dim = self.spec.output_dim;
        let cols = m
            .checked_mul(m)
            .and_then(|c| c.checked_mul(out_dim).map(|_| c))
            .ok_or_else(|| Error::DimensionOverflow("materialized tensor sketch".into()))?;
        let mut out = DenseMatrix::zeros(out_dim, cols);
        match &self.kind {
            Kind::Convolution { h1, h2, s1, s2, .. } => {
                for a in 0..m {
                    for b in 0..m {
                        out[((h1[a] + h2[b]) % out_dim, a * m + b)] += s1[a] * s2[b];
                    }
                }
            }
            Kind::Sampled { d1, d2, pairs, .. } => {
                let scale = 1.0 / (out_dim as f64).sqrt();
                for (r, &(i, j)) in pairs.iter().enumerate() {
                    for a in 0..m {
                        for b in 0..m {
                            out[(r, a * m + b)] = scale * hadamard_sign(i, a) * d1[a] * hadamard_sign(j, b) * d2[b];
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
