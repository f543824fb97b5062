//! Dynamic sketch of a Kronecker product, kept in a binary tree.
//!
//! Level 0 holds `C_i A_i` for every factor. Each higher level pairs adjacent
//! nodes left to right and stores `T (J_left ⊗ J_right)`; an unpaired
//! rightmost node is promoted unchanged. The single node of the top level is
//! the root, an `m × d` sketch of `A_1 ⊗ … ⊗ A_q`.

mod snapshot;

use crate::error::{Error, Result};
use crate::linalg::{kron, unravel_index, DenseMatrix, DenseVector, SparseVector};
use crate::sketch::{BaseFamily, BaseSketch, BaseSketchSpec, TensorFamily, TensorPairSketch, TensorSketchSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub c_family: BaseFamily,
    pub t_family: TensorFamily,
    /// Rows of every node matrix.
    pub m: usize,
    pub eps: f64,
    pub delta: f64,
    /// Allow `update_adaptive`, which redraws the sketches on the update path.
    pub adaptive: bool,
    pub seed: u64,
    /// Nonzeros per column for OSNAP leaves; `None` means `min(m, 4)`.
    pub osnap_sparsity: Option<usize>,
}

impl TreeConfig {
    pub fn new(c_family: BaseFamily, t_family: TensorFamily, m: usize) -> Self {
        Self {
            c_family,
            t_family,
            m,
            eps: 0.5,
            delta: 0.1,
            adaptive: false,
            seed: 0,
            osnap_sparsity: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_adaptive(mut self, adaptive: bool) -> Self {
        self.adaptive = adaptive;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("sketch dimension m must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(s) = self.osnap_sparsity {
            if s == 0 || s > self.m {
                return Err(Error::Config(format!("OSNAP sparsity {s} must lie in [1, {}]", self.m)));
            }
        }
        Ok(())
    }

    pub fn sparsity(&self) -> usize {
        self.osnap_sparsity.unwrap_or(self.m.min(4))
    }

    fn leaf_spec(&self, n: usize, seed: u64) -> BaseSketchSpec {
        match self.c_family {
            BaseFamily::CountSketch => BaseSketchSpec::count_sketch(n, self.m, seed),
            BaseFamily::Osnap => BaseSketchSpec::osnap(n, self.m, self.sparsity(), seed),
            BaseFamily::Srht => BaseSketchSpec::srht(n, self.m, seed),
        }
    }

    fn node_spec(&self, seed: u64) -> TensorSketchSpec {
        TensorSketchSpec::new(self.t_family, self.m, self.m, seed)
    }
}

/// SplitMix64 finalizer over the node coordinates.
fn derive_seed(seed: u64, level: usize, index: usize, epoch: u64) -> u64 {
    let mut z = seed;
    for word in [level as u64, index as u64, epoch] {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(word);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Number of nodes on each level for `q` leaves.
fn level_sizes(q: usize) -> Vec<usize> {
    let mut sizes = vec![q];
    while *sizes.last().unwrap() > 1 {
        sizes.push(sizes.last().unwrap().div_ceil(2));
    }
    sizes
}

#[derive(Debug, Clone)]
pub struct TensorTree {
    config: TreeConfig,
    factors: Vec<DenseMatrix>,
    leaves: Vec<BaseSketch>,
    /// `internal[l - 1][k]` sketches node `k` of level `l`; `None` when promoted.
    internal: Vec<Vec<Option<TensorPairSketch>>>,
    levels: Vec<Vec<DenseMatrix>>,
    epoch: u64,
    last_recompute: usize,
}

impl TensorTree {
    pub fn initialize(factors: Vec<DenseMatrix>, config: TreeConfig) -> Result<Self> {
        config.validate()?;
        if factors.is_empty() {
            return Err(Error::Config("at least one factor is required".into()));
        }
        let sizes = level_sizes(factors.len());
        let leaf_specs = factors
            .iter()
            .enumerate()
            .map(|(k, a)| config.leaf_spec(a.rows(), derive_seed(config.seed, 0, k, 0)))
            .collect();
        let node_specs = sizes[1..]
            .iter()
            .enumerate()
            .map(|(l, &count)| {
                let below = sizes[l];
                (0..count)
                    .map(|k| (2 * k + 1 < below).then(|| config.node_spec(derive_seed(config.seed, l + 1, k, 0))))
                    .collect()
            })
            .collect();
        Self::from_specs(factors, config, leaf_specs, node_specs)
    }

    /// Builds a tree with explicit sketch draws. `node_specs[l - 1][k]` is
    /// the sketch spec of node `k` on level `l`, `None` exactly for promoted nodes.
    pub fn from_specs(
        factors: Vec<DenseMatrix>,
        config: TreeConfig,
        leaf_specs: Vec<BaseSketchSpec>,
        node_specs: Vec<Vec<Option<TensorSketchSpec>>>,
    ) -> Result<Self> {
        Self::build(factors, config, leaf_specs, node_specs, 0)
    }

    fn build(
        factors: Vec<DenseMatrix>,
        config: TreeConfig,
        leaf_specs: Vec<BaseSketchSpec>,
        node_specs: Vec<Vec<Option<TensorSketchSpec>>>,
        epoch: u64,
    ) -> Result<Self> {
        config.validate()?;
        let q = factors.len();
        if q == 0 {
            return Err(Error::Config("at least one factor is required".into()));
        }
        if let Some(k) = factors.iter().position(|a| a.rows() == 0 || a.cols() == 0) {
            return Err(Error::Config(format!("factor {} is empty", k + 1)));
        }
        factors.iter().try_fold(1usize, |acc, a| {
            acc.checked_mul(a.cols())
                .ok_or_else(|| Error::DimensionOverflow("product of factor column counts".into()))
        })?;
        if leaf_specs.len() != q {
            return Err(Error::mismatch("tree leaf specs", (q, 1), (leaf_specs.len(), 1)));
        }
        let sizes = level_sizes(q);
        if node_specs.len() != sizes.len() - 1 {
            return Err(Error::mismatch(
                "tree levels",
                (sizes.len() - 1, 1),
                (node_specs.len(), 1),
            ));
        }
        let mut leaves = Vec::with_capacity(q);
        for (a, spec) in factors.iter().zip(&leaf_specs) {
            if spec.input_dim != a.rows() || spec.output_dim != config.m {
                return Err(Error::mismatch(
                    "leaf sketch spec",
                    (config.m, a.rows()),
                    (spec.output_dim, spec.input_dim),
                ));
            }
            leaves.push(spec.realize()?);
        }
        let mut internal = Vec::with_capacity(node_specs.len());
        for (l, specs) in node_specs.iter().enumerate() {
            let (count, below) = (sizes[l + 1], sizes[l]);
            if specs.len() != count {
                return Err(Error::mismatch("tree level width", (count, 1), (specs.len(), 1)));
            }
            let mut level = Vec::with_capacity(count);
            for (k, spec) in specs.iter().enumerate() {
                let paired = 2 * k + 1 < below;
                match spec {
                    Some(s) if paired => {
                        if s.side_dim != config.m || s.output_dim != config.m {
                            return Err(Error::mismatch(
                                "node sketch spec",
                                (config.m, config.m),
                                (s.output_dim, s.side_dim),
                            ));
                        }
                        level.push(Some(s.realize()?));
                    }
                    None if !paired => level.push(None),
                    _ => {
                        return Err(Error::Config(format!(
                            "node {k} on level {} must {}have a sketch",
                            l + 1,
                            if paired { "" } else { "not " }
                        )))
                    }
                }
            }
            internal.push(level);
        }
        let mut tree = Self {
            config,
            factors,
            leaves,
            internal,
            levels: Vec::new(),
            epoch,
            last_recompute: 0,
        };
        tree.recompute_all()?;
        Ok(tree)
    }

    fn recompute_all(&mut self) -> Result<()> {
        let leaf_level = self
            .leaves
            .iter()
            .zip(&self.factors)
            .map(|(c, a)| c.apply(a))
            .collect::<Result<Vec<_>>>()?;
        self.levels = vec![leaf_level];
        for l in 1..=self.internal.len() {
            let below = &self.levels[l - 1];
            let level = self.internal[l - 1]
                .iter()
                .enumerate()
                .map(|(k, sk)| combine(sk.as_ref(), below, k))
                .collect::<Result<Vec<_>>>()?;
            self.levels.push(level);
        }
        Ok(())
    }

    fn check_update(&self, i: usize, b: &DenseMatrix) -> Result<()> {
        let q = self.factors.len();
        let a = self.factors.get(i).ok_or(Error::IndexOutOfRange { index: i, len: q })?;
        if a.shape() != b.shape() {
            return Err(Error::mismatch("tree update", a.shape(), b.shape()));
        }
        Ok(())
    }

    /// `A_i ← A_i + B`, propagating the sketched delta bilinearly up the
    /// path from leaf `i` (zero-based) to the root with the stored sketches.
    pub fn update(&mut self, i: usize, b: &DenseMatrix) -> Result<()> {
        self.check_update(i, b)?;
        let mut delta = self.leaves[i].apply(b)?;
        let mut deltas = Vec::with_capacity(self.levels.len());
        let mut idx = i;
        deltas.push(delta.clone());
        for l in 1..self.levels.len() {
            let parent = idx / 2;
            if let Some(sk) = &self.internal[l - 1][parent] {
                let sibling = &self.levels[l - 1][idx ^ 1];
                delta = if idx.is_multiple_of(2) {
                    sk.apply_pair(&delta, sibling)?
                } else {
                    sk.apply_pair(sibling, &delta)?
                };
            }
            deltas.push(delta.clone());
            idx = parent;
        }
        self.factors[i].add_assign(b)?;
        let mut idx = i;
        for (l, d) in deltas.iter().enumerate() {
            self.levels[l][idx].add_assign(d)?;
            idx /= 2;
        }
        self.last_recompute = deltas.len();
        Ok(())
    }

    /// `A_i ← A_i + B` with fresh sketches on the whole leaf-to-root path;
    /// path nodes are recomputed from scratch, off-path nodes are untouched.
    pub fn update_adaptive(&mut self, i: usize, b: &DenseMatrix) -> Result<()> {
        if !self.config.adaptive {
            return Err(Error::Config(
                "update_adaptive requires a tree built with adaptive = true".into(),
            ));
        }
        self.check_update(i, b)?;
        let epoch = self.epoch + 1;
        let seed = self.config.seed;
        let updated = self.factors[i].add(b)?;
        let leaf = self
            .config
            .leaf_spec(updated.rows(), derive_seed(seed, 0, i, epoch))
            .realize()?;
        let mut path = vec![leaf.apply(&updated)?];
        let mut fresh = Vec::new();
        let mut idx = i;
        for l in 1..self.levels.len() {
            let parent = idx / 2;
            let sk = match &self.internal[l - 1][parent] {
                Some(_) => Some(self.config.node_spec(derive_seed(seed, l, parent, epoch)).realize()?),
                None => None,
            };
            let child = path.last().unwrap();
            let node = match &sk {
                Some(t) if idx.is_multiple_of(2) => t.apply_pair(child, &self.levels[l - 1][idx ^ 1])?,
                Some(t) => t.apply_pair(&self.levels[l - 1][idx ^ 1], child)?,
                None => child.clone(),
            };
            path.push(node);
            fresh.push(sk);
            idx = parent;
        }
        self.epoch = epoch;
        self.factors[i] = updated;
        self.leaves[i] = leaf;
        let mut idx = i;
        for (l, node) in path.into_iter().enumerate() {
            self.levels[l][idx] = node;
            idx /= 2;
        }
        let mut idx = i;
        for (l, sk) in fresh.into_iter().enumerate() {
            idx /= 2;
            self.internal[l][idx] = sk;
        }
        self.last_recompute = self.levels.len();
        Ok(())
    }

    /// `Π b` for a vector indexed over `n_1 ⋯ n_q` (last factor fastest),
    /// evaluated one nonzero at a time through the tree.
    pub fn sketch_vector(&self, b: &SparseVector) -> Result<DenseVector> {
        let dims: Vec<usize> = self.factors.iter().map(|a| a.rows()).collect();
        let n = self.input_len()?;
        if b.len() != n {
            return Err(Error::mismatch("sketch_vector", (n, 1), (b.len(), 1)));
        }
        let mut out = vec![0.0; self.config.m];
        let mut idx = vec![0; dims.len()];
        for &(j, val) in b.entries() {
            unravel_index(j, &dims, &mut idx);
            let mut cur = idx
                .iter()
                .zip(&self.leaves)
                .map(|(&k, c)| c.column(k))
                .collect::<Result<Vec<_>>>()?;
            for level in &self.internal {
                let mut next = Vec::with_capacity(level.len());
                for (k, sk) in level.iter().enumerate() {
                    next.push(match sk {
                        Some(t) => t.apply_vectors(&cur[2 * k], &cur[2 * k + 1])?,
                        None => std::mem::take(&mut cur[2 * k]),
                    });
                }
                cur = next;
            }
            for (o, &x) in out.iter_mut().zip(&cur[0]) {
                *o += val * x;
            }
        }
        DenseVector::new(out)
    }

    /// Explicit `m × n` sketching matrix, built recursively from the
    /// materialized sketches as `T · (Π_left ⊗ Π_right)`.
    pub fn materialize_sketch(&self) -> Result<DenseMatrix> {
        self.input_len()?;
        let mut cur: Vec<DenseMatrix> = self.leaves.iter().map(BaseSketch::materialize).collect();
        for level in &self.internal {
            let mut next = Vec::with_capacity(level.len());
            for (k, sk) in level.iter().enumerate() {
                next.push(match sk {
                    Some(t) => t.materialize()?.matmul(&kron(&cur[2 * k], &cur[2 * k + 1])?)?,
                    None => cur[2 * k].clone(),
                });
            }
            cur = next;
        }
        Ok(cur.swap_remove(0))
    }

    fn input_len(&self) -> Result<usize> {
        self.factors.iter().try_fold(1usize, |acc, a| {
            acc.checked_mul(a.rows())
                .ok_or_else(|| Error::DimensionOverflow("product of factor row counts".into()))
        })
    }

    pub fn root(&self) -> &DenseMatrix {
        &self.levels.last().unwrap()[0]
    }

    /// Node `k` of level `l` (level 0 = leaves).
    pub fn node(&self, level: usize, k: usize) -> Option<&DenseMatrix> {
        self.levels.get(level)?.get(k)
    }

    pub fn levels(&self) -> &[Vec<DenseMatrix>] {
        &self.levels
    }

    pub fn q(&self) -> usize {
        self.factors.len()
    }

    /// Number of levels above the leaves, `ceil(log₂ q)`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Node matrices rebuilt by the most recent update (0 before any).
    pub fn recompute_count(&self) -> usize {
        self.last_recompute
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    /// `d = d_1 ⋯ d_q`.
    pub fn d(&self) -> usize {
        self.root().cols()
    }

    /// `n = n_1 ⋯ n_q`, or `None` when it overflows `usize`.
    pub fn n(&self) -> Option<usize> {
        self.input_len().ok()
    }

    pub fn factors(&self) -> &[DenseMatrix] {
        &self.factors
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn leaf_specs(&self) -> Vec<BaseSketchSpec> {
        self.leaves.iter().map(|c| *c.spec()).collect()
    }

    pub fn node_specs(&self) -> Vec<Vec<Option<TensorSketchSpec>>> {
        self.internal
            .iter()
            .map(|level| level.iter().map(|sk| sk.as_ref().map(|t| *t.spec())).collect())
            .collect()
    }
}

fn combine(sk: Option<&TensorPairSketch>, below: &[DenseMatrix], k: usize) -> Result<DenseMatrix> {
    match sk {
        Some(t) => t.apply_pair(&below[2 * k], &below[2 * k + 1]),
        None => Ok(below[2 * k].clone()),
    }
}
