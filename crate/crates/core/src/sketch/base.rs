//! Base sketches applied to a single factor: CountSketch, OSNAP and SRHT.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BaseFamily;
use crate::error::{Error, Result};
use crate::linalg::{fwht_in_place, hadamard_sign, DenseMatrix};

/// Seeded description of one base sketch draw `ℝ^n → ℝ^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BaseSketchSpec {
    pub family: BaseFamily,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Nonzeros per column. Always 1 for CountSketch; ignored for SRHT.
    pub sparsity: usize,
    pub seed: u64,
}

impl BaseSketchSpec {
    pub fn count_sketch(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        Self {
            family: BaseFamily::CountSketch,
            input_dim,
            output_dim,
            sparsity: 1,
            seed,
        }
    }

    pub fn osnap(input_dim: usize, output_dim: usize, sparsity: usize, seed: u64) -> Self {
        Self {
            family: BaseFamily::Osnap,
            input_dim,
            output_dim,
            sparsity,
            seed,
        }
    }

    pub fn srht(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        Self {
            family: BaseFamily::Srht,
            input_dim,
            output_dim,
            sparsity: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_dim == 0 {
            return Err(Error::Config("sketch output dimension must be at least 1".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("sketch input dimension must be at least 1".into()));
        }
        match self.family {
            BaseFamily::CountSketch if self.sparsity != 1 => {
                Err(Error::Config("CountSketch has exactly one nonzero per column".into()))
            }
            BaseFamily::Osnap if self.sparsity == 0 || self.sparsity > self.output_dim => Err(Error::Config(format!(
                "OSNAP sparsity {} must lie in [1, {}]",
                self.sparsity, self.output_dim
            ))),
            _ => Ok(()),
        }
    }

    pub fn realize(&self) -> Result<BaseSketch> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (n, m) = (self.input_dim, self.output_dim);
        let kind = match self.family {
            BaseFamily::CountSketch | BaseFamily::Osnap => {
                let s = self.sparsity;
                let value = 1.0 / (s as f64).sqrt();
                let mut entries = Vec::with_capacity(n * s);
                for _ in 0..n {
                    for row in sample(&mut rng, m, s) {
                        let sign = if rng.random::<bool>() { value } else { -value };
                        entries.push((row, sign));
                    }
                }
                Kind::Hashed { per_column: s, entries }
            }
            BaseFamily::Srht => {
                let padded = n.next_power_of_two();
                let signs = (0..padded)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                // Without replacement when possible; with replacement once m
                // exceeds the padded length.
                let rows = if m <= padded {
                    sample(&mut rng, padded, m).into_vec()
                } else {
                    (0..m).map(|_| rng.random_range(0..padded)).collect()
                };
                Kind::Srht { padded, signs, rows }
            }
        };
        Ok(BaseSketch { spec: *self, kind })
    }

    pub fn materialize(&self) -> Result<DenseMatrix> {
        Ok(self.realize()?.materialize())
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// Column `j` has entries `entries[j*s .. (j+1)*s]` as `(row, value)`.
    Hashed {
        per_column: usize,
        entries: Vec<(usize, f64)>,
    },
    /// `√(padded/m) · S · H · D` with orthonormal `H` over the padded length.
    Srht {
        padded: usize,
        signs: Vec<f64>,
        rows: Vec<usize>,
    },
}

/// A base sketch with its random choices drawn, ready to apply.
#[derive(Debug, Clone)]
pub struct BaseSketch {
    spec: BaseSketchSpec,
    kind: Kind,
}

impl BaseSketch {
    /// CountSketch with explicit hash values and signs (zero-based rows).
    pub fn count_sketch_from_hashes(output_dim: usize, rows: &[usize], signs: &[f64]) -> Result<Self> {
        if rows.len() != signs.len() {
            return Err(Error::mismatch(
                "count_sketch_from_hashes",
                (rows.len(), 1),
                (signs.len(), 1),
            ));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= output_dim) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: output_dim,
            });
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Config("CountSketch signs must be ±1".into()));
        }
        Ok(Self {
            spec: BaseSketchSpec::count_sketch(rows.len(), output_dim, 0),
            kind: Kind::Hashed {
                per_column: 1,
                entries: rows.iter().copied().zip(signs.iter().copied()).collect(),
            },
        })
    }

    pub fn spec(&self) -> &BaseSketchSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    /// `C · A`. Hashing sketches touch only nonzero rows of `A`; SRHT runs
    /// one Walsh–Hadamard transform per column.
    pub fn apply(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let (n, m) = (self.spec.input_dim, self.spec.output_dim);
        if a.rows() != n {
            return Err(Error::mismatch("apply_base", (n, a.cols()), a.shape()));
        }
        let cols = a.cols();
        let mut out = DenseMatrix::zeros(m, cols);
        match &self.kind {
            Kind::Hashed { per_column, entries } => {
                for j in 0..n {
                    let src = a.row(j);
                    if src.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    for &(r, val) in &entries[j * per_column..(j + 1) * per_column] {
                        for (o, &x) in out.row_mut(r).iter_mut().zip(src) {
                            *o += val * x;
                        }
                    }
                }
            }
            Kind::Srht { padded, signs, rows } => {
                // √(padded/m) from the definition times 1/√padded from the
                // orthonormal Hadamard.
                let scale = 1.0 / (m as f64).sqrt();
                let mut buf = vec![0.0; *padded];
                for c in 0..cols {
                    buf.iter_mut().for_each(|x| *x = 0.0);
                    for j in 0..n {
                        buf[j] = signs[j] * a.get(j, c);
                    }
                    if buf.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    fwht_in_place(&mut buf);
                    for (r, &src) in rows.iter().enumerate() {
                        out[(r, c)] = scale * buf[src];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Column `j` of the sketch matrix, i.e. `C e_j`, as a dense `m`-vector.
    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        let (n, m) = (self.spec.input_dim, self.spec.output_dim);
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        let mut col = vec![0.0; m];
        match &self.kind {
            Kind::Hashed { per_column, entries } => {
                for &(r, val) in &entries[j * per_column..(j + 1) * per_column] {
                    col[r] += val;
                }
            }
            Kind::Srht { padded, signs, rows } => {
                let scale = (*padded as f64 / m as f64).sqrt() / (*padded as f64).sqrt();
                for (r, &src) in rows.iter().enumerate() {
                    col[r] = scale * hadamard_sign(src, j) * signs[j];
                }
            }
        }
        Ok(col)
    }

    /// Explicit `m × n` matrix built entrywise from the definitions.
    pub fn materialize(&self) -> DenseMatrix {
        let (n, m) = (self.spec.input_dim, self.spec.output_dim);
        let mut out = DenseMatrix::zeros(m, n);
        match &self.kind {
            Kind::Hashed { per_column, entries } => {
                for j in 0..n {
                    for &(r, val) in &entries[j * per_column..(j + 1) * per_column] {
                        out[(r, j)] += val;
                    }
                }
            }
            Kind::Srht { padded, signs, rows } => {
                let p = *padded as f64;
                let outer = (p / m as f64).sqrt();
                for (r, &src) in rows.iter().enumerate() {
                    for j in 0..n {
                        out[(r, j)] = outer * hadamard_sign(src, j) / p.sqrt() * signs[j];
                    }
                }
            }
        }
        out
    }
}
