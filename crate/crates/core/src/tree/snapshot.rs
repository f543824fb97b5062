//! Binary tree snapshot: configuration, factors and sketch specs.
//!
//! Layout (all integers `u64` little-endian unless noted, floats `f64` LE):
//! magic `KTTR1`; config (`u8` base family, `u8` tensor family, m, eps,
//! delta, `u8` adaptive, seed, OSNAP sparsity with 0 for the default, epoch);
//! q; per factor rows, cols and row-major data; per leaf `u8` family,
//! input dim, output dim, sparsity, seed; number of internal levels; per
//! level its width and per node a `u8` presence flag followed, if present,
//! by `u8` family, side dim, output dim, seed.
//! Node matrices are not stored; they are recomputed on load.

use super::{TensorTree, TreeConfig};
use crate::error::{Error, ParseError, Result};
use crate::linalg::DenseMatrix;
use crate::sketch::{BaseFamily, BaseSketchSpec, TensorFamily, TensorSketchSpec};

const MAGIC: &[u8; 5] = b"KTTR1";

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ParseError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(ParseError::Truncated {
                offset: self.pos,
                expected: n,
                found: self.buf.len() - self.pos,
            });
        };
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, ParseError> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64, ParseError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize, ParseError> {
        let offset = self.pos;
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.invalid(offset, format!("count {v} does not fit in usize")))
    }

    fn f64(&mut self) -> Result<f64, ParseError> {
        let offset = self.pos;
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ParseError::NonFinite { offset })
        }
    }

    fn flag(&mut self) -> Result<bool, ParseError> {
        let offset = self.pos;
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(self.invalid(offset, format!("flag byte {v} is neither 0 nor 1"))),
        }
    }

    fn base_family(&mut self) -> Result<BaseFamily, ParseError> {
        let offset = self.pos;
        let code = self.u8()?;
        BaseFamily::from_code(code).ok_or_else(|| self.invalid(offset, format!("unknown base family code {code}")))
    }

    fn tensor_family(&mut self) -> Result<TensorFamily, ParseError> {
        let offset = self.pos;
        let code = self.u8()?;
        TensorFamily::from_code(code).ok_or_else(|| self.invalid(offset, format!("unknown tensor family code {code}")))
    }

    /// Guards allocation sizes against the bytes actually remaining.
    fn count(&mut self, min_bytes_each: usize) -> Result<usize, ParseError> {
        let offset = self.pos;
        let n = self.usize()?;
        let remaining = self.buf.len() - self.pos;
        if n.checked_mul(min_bytes_each).is_none_or(|b| b > remaining) {
            return Err(ParseError::Truncated {
                offset,
                expected: n,
                found: remaining / min_bytes_each.max(1),
            });
        }
        Ok(n)
    }

    fn invalid(&self, offset: usize, message: String) -> ParseError {
        ParseError::InvalidRecord { offset, message }
    }
}

impl TensorTree {
    pub fn to_snapshot(&self) -> Vec<u8> {
        let mut w = Writer(MAGIC.to_vec());
        let c = &self.config;
        w.u8(c.c_family.code());
        w.u8(c.t_family.code());
        w.usize(c.m);
        w.f64(c.eps);
        w.f64(c.delta);
        w.u8(c.adaptive as u8);
        w.u64(c.seed);
        w.usize(c.osnap_sparsity.unwrap_or(0));
        w.u64(self.epoch);
        w.usize(self.factors.len());
        for a in &self.factors {
            w.usize(a.rows());
            w.usize(a.cols());
            a.as_slice().iter().for_each(|&v| w.f64(v));
        }
        for spec in self.leaf_specs() {
            w.u8(spec.family.code());
            w.usize(spec.input_dim);
            w.usize(spec.output_dim);
            w.usize(spec.sparsity);
            w.u64(spec.seed);
        }
        let nodes = self.node_specs();
        w.usize(nodes.len());
        for level in &nodes {
            w.usize(level.len());
            for spec in level {
                match spec {
                    Some(s) => {
                        w.u8(1);
                        w.u8(s.family.code());
                        w.usize(s.side_dim);
                        w.usize(s.output_dim);
                        w.u64(s.seed);
                    }
                    None => w.u8(0),
                }
            }
        }
        w.0
    }

    pub fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(MAGIC) {
            return Err(ParseError::BadMagic.into());
        }
        let mut r = Reader {
            buf: bytes,
            pos: MAGIC.len(),
        };
        let c_family = r.base_family()?;
        let t_family = r.tensor_family()?;
        let m = r.usize()?;
        let eps = r.f64()?;
        let delta = r.f64()?;
        let adaptive = r.flag()?;
        let seed = r.u64()?;
        let sparsity = r.usize()?;
        let epoch = r.u64()?;
        let config = TreeConfig {
            c_family,
            t_family,
            m,
            eps,
            delta,
            adaptive,
            seed,
            osnap_sparsity: (sparsity != 0).then_some(sparsity),
        };
        let q = r.count(16)?;
        let mut factors = Vec::with_capacity(q);
        for _ in 0..q {
            let offset = r.pos;
            let (rows, cols) = (r.usize()?, r.usize()?);
            let len = rows
                .checked_mul(cols)
                .ok_or_else(|| r.invalid(offset, "factor size overflows".into()))?;
            if len.checked_mul(8).is_none_or(|b| b > r.buf.len() - r.pos) {
                return Err(ParseError::Truncated {
                    offset: r.pos,
                    expected: len,
                    found: (r.buf.len() - r.pos) / 8,
                }
                .into());
            }
            let data = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            factors.push(DenseMatrix::new(rows, cols, data)?);
        }
        let mut leaf_specs = Vec::with_capacity(q);
        for _ in 0..q {
            leaf_specs.push(BaseSketchSpec {
                family: r.base_family()?,
                input_dim: r.usize()?,
                output_dim: r.usize()?,
                sparsity: r.usize()?,
                seed: r.u64()?,
            });
        }
        let levels = r.count(8)?;
        let mut node_specs = Vec::with_capacity(levels);
        for _ in 0..levels {
            let width = r.count(1)?;
            let mut level = Vec::with_capacity(width);
            for _ in 0..width {
                level.push(if r.flag()? {
                    Some(TensorSketchSpec {
                        family: r.tensor_family()?,
                        side_dim: r.usize()?,
                        output_dim: r.usize()?,
                        seed: r.u64()?,
                    })
                } else {
                    None
                });
            }
            node_specs.push(level);
        }
        if r.pos != bytes.len() {
            return Err(ParseError::TrailingData { offset: r.pos }.into());
        }
        Self::build(factors, config, leaf_specs, node_specs, epoch)
    }

    pub fn write_snapshot(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_snapshot()).map_err(|e| Error::io(path, e))
    }

    pub fn read_snapshot(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_snapshot(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tree(adaptive: bool) -> TensorTree {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let factors = (0..3)
            .map(|_| DenseMatrix::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let mut cfg = TreeConfig::new(BaseFamily::Osnap, TensorFamily::TensorSrht, 6)
            .with_seed(42)
            .with_adaptive(adaptive);
        cfg.osnap_sparsity = Some(2);
        TensorTree::initialize(factors, cfg).unwrap()
    }

    #[test]
    fn round_trip_restores_nodes_and_specs() {
        let mut t = tree(true);
        t.update_adaptive(2, &DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64))
            .unwrap();
        let bytes = t.to_snapshot();
        assert_eq!(&bytes[..5], b"KTTR1");
        let back = TensorTree::from_snapshot(&bytes).unwrap();
        assert_eq!(back.config(), t.config());
        assert_eq!(back.leaf_specs(), t.leaf_specs());
        assert_eq!(back.node_specs(), t.node_specs());
        assert_eq!(back.root(), t.root());
        assert_eq!(back.to_snapshot(), bytes);
        // Adaptive seeds continue from the stored epoch.
        let mut a = t.clone();
        let mut b = back;
        let delta = DenseMatrix::identity(2).vstack(&DenseMatrix::zeros(2, 2)).unwrap();
        a.update_adaptive(0, &delta).unwrap();
        b.update_adaptive(0, &delta).unwrap();
        assert_eq!(a.leaf_specs(), b.leaf_specs());
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let bytes = tree(false).to_snapshot();
        assert!(matches!(
            TensorTree::from_snapshot(b"NOPE!"),
            Err(Error::Parse(ParseError::BadMagic))
        ));
        for cut in [6, 30, bytes.len() - 1] {
            assert!(matches!(
                TensorTree::from_snapshot(&bytes[..cut]),
                Err(Error::Parse(ParseError::Truncated { .. }))
            ));
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            TensorTree::from_snapshot(&extra),
            Err(Error::Parse(ParseError::TrailingData { .. }))
        ));
        let mut bad_family = bytes.clone();
        bad_family[5] = 7;
        assert!(matches!(
            TensorTree::from_snapshot(&bad_family),
            Err(Error::Parse(ParseError::InvalidRecord { offset: 5, .. }))
        ));
    }
}
