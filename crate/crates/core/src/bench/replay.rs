//! Scenario replay and CSV reports.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use super::stream::Event;
use crate::error::{Error, ParseError, Result};
use crate::linalg::{kron_chain, kron_matvec, DenseMatrix, DenseVector, SparseVector};
use crate::oracle::{exact_kron_regression, exact_lowrank, exact_spline, leverage_sample_regression};
use crate::sketch::{choose_m, BaseFamily, DimensionRule, TensorFamily};
use crate::solvers::{spline_sketch_dim, DynamicRegression, LowRankResult, SplineSpec};
use crate::tree::{TensorTree, TreeConfig};

/// Largest `n · d` for which the spline's sketch dimension is computed from
/// the explicit product.
const EXPLICIT_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Regression,
    Spline,
    Lowrank,
    Baseline,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Regression => "regression",
            SolverKind::Spline => "spline",
            SolverKind::Lowrank => "lowrank",
            SolverKind::Baseline => "baseline",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Regression, Self::Spline, Self::Lowrank, Self::Baseline]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown solver '{s}' (expected regression, spline, lowrank or baseline)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchSettings {
    pub c_family: BaseFamily,
    pub t_family: TensorFamily,
    pub eps: f64,
    pub delta: f64,
    pub c_factor: f64,
    pub seed: u64,
    pub adaptive: bool,
    /// Overrides the dimension rule when set.
    pub m: Option<usize>,
}

impl Default for SketchSettings {
    fn default() -> Self {
        Self {
            c_family: BaseFamily::CountSketch,
            t_family: TensorFamily::TensorSketch,
            eps: 0.5,
            delta: 0.1,
            c_factor: 1.0,
            seed: 0,
            adaptive: false,
            m: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub factors: Vec<DenseMatrix>,
    pub label: SparseVector,
    pub solver: SolverKind,
    pub sketch: SketchSettings,
    pub events: Vec<Event>,
    pub oracle: bool,
    /// Required for the spline solver.
    pub spline: Option<SplineSpec>,
    /// Required for the low-rank solver.
    pub rank: Option<usize>,
    /// Start from this tree instead of initializing one; its factors and
    /// sketches take precedence.
    pub initial_tree: Option<TensorTree>,
}

impl Scenario {
    pub fn new(factors: Vec<DenseMatrix>, label: SparseVector, solver: SolverKind) -> Self {
        Self {
            factors,
            label,
            solver,
            sketch: SketchSettings::default(),
            events: Vec::new(),
            oracle: false,
            spline: None,
            rank: None,
            initial_tree: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sketch;
        if !(s.eps > 0.0 && s.eps < 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1), got {}", s.eps)));
        }
        if !(s.delta > 0.0 && s.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", s.delta)));
        }
        if self.factors.is_empty() {
            return Err(Error::Config("at least one factor is required".into()));
        }
        let n = self
            .factors
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.rows()))
            .ok_or_else(|| Error::DimensionOverflow("product of factor row counts".into()))?;
        if self.label.len() != n {
            return Err(Error::mismatch("label", (n, 1), (self.label.len(), 1)));
        }
        match self.solver {
            SolverKind::Spline if self.spline.is_none() => Err(Error::Config(
                "the spline solver needs a regularizer L and lambda".into(),
            )),
            SolverKind::Lowrank if self.rank.is_none() => Err(Error::Config("the lowrank solver needs a rank".into())),
            _ => Ok(()),
        }
    }

    fn d(&self) -> usize {
        self.factors.iter().map(DenseMatrix::cols).product()
    }

    /// Sketch dimension `m` for the configured solver.
    pub fn sketch_dim(&self) -> Result<usize> {
        let s = &self.sketch;
        if let Some(m) = s.m {
            return Ok(m);
        }
        let (q, d) = (self.factors.len(), self.d());
        match self.solver {
            SolverKind::Regression | SolverKind::Baseline => {
                choose_m(s.c_family, s.t_family, d as f64, q, s.eps, s.delta, s.c_factor)
            }
            SolverKind::Lowrank => {
                let k = self.rank.unwrap_or(1);
                choose_m(s.c_family, s.t_family, k as f64, q, s.eps, s.delta, s.c_factor)
            }
            SolverKind::Spline => {
                let spec = self
                    .spline
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing spline spec".into()))?;
                let rule = DimensionRule::for_families(s.c_family, s.t_family)?;
                let n = self.factors.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.rows()));
                let explicit = match n.and_then(|n| n.checked_mul(d)) {
                    Some(size) if size <= EXPLICIT_LIMIT => Some(kron_chain(&self.factors)?),
                    _ => None,
                };
                let cfg = TreeConfig {
                    eps: s.eps,
                    delta: s.delta,
                    ..TreeConfig::new(s.c_family, s.t_family, 1)
                };
                spline_sketch_dim(rule, explicit.as_ref(), spec, d, q, &cfg, s.c_factor)
            }
        }
    }

    pub fn tree_config(&self) -> Result<TreeConfig> {
        let s = &self.sketch;
        let m = self.sketch_dim()?;
        log::info!("{} with {}/{}: m = {m}", self.solver, s.c_family, s.t_family);
        Ok(TreeConfig {
            eps: s.eps,
            delta: s.delta,
            adaptive: s.adaptive,
            seed: s.seed,
            ..TreeConfig::new(s.c_family, s.t_family, m)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Init,
    Update,
    Query,
    Label,
}

impl RecordKind {
    pub fn name(self) -> &'static str {
        match self {
            RecordKind::Init => "init",
            RecordKind::Update => "update",
            RecordKind::Query => "query",
            RecordKind::Label => "label",
        }
    }
}

impl FromStr for RecordKind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        [Self::Init, Self::Update, Self::Query, Self::Label]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ParseError::InvalidRecord {
                offset: 0,
                message: format!("unknown record kind {s:?}"),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub event: usize,
    pub kind: RecordKind,
    pub wall_ns: u64,
    pub nodes_recomputed: Option<usize>,
    pub cost: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub ratio: Option<f64>,
}

impl BenchRecord {
    fn new(event: usize, kind: RecordKind, wall_ns: u64) -> Self {
        Self {
            event,
            kind,
            wall_ns,
            nodes_recomputed: None,
            cost: None,
            oracle_cost: None,
            ratio: None,
        }
    }
}

enum Engine {
    Tree(DynamicRegression),
    Baseline {
        factors: Vec<DenseMatrix>,
        label: SparseVector,
    },
}

impl Engine {
    fn factors(&self) -> &[DenseMatrix] {
        match self {
            Engine::Tree(dr) => dr.tree().factors(),
            Engine::Baseline { factors, .. } => factors,
        }
    }

    fn label(&self) -> &SparseVector {
        match self {
            Engine::Tree(dr) => dr.label(),
            Engine::Baseline { label, .. } => label,
        }
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos().min(u64::MAX as u128) as u64
}

/// Replays the scenario: one `init` record, then one record per event.
pub fn replay(scenario: &Scenario) -> Result<Vec<BenchRecord>> {
    Ok(replay_with_state(scenario)?.0)
}

/// Like [`replay`], also returning the final tree (none for the baseline).
pub fn replay_with_state(scenario: &Scenario) -> Result<(Vec<BenchRecord>, Option<TensorTree>)> {
    let mut scenario = scenario.clone();
    if let Some(tree) = &scenario.initial_tree {
        scenario.factors = tree.factors().to_vec();
    }
    scenario.validate()?;
    let start = Instant::now();
    let mut engine = match scenario.solver {
        SolverKind::Baseline => Engine::Baseline {
            factors: scenario.factors.clone(),
            label: scenario.label.clone(),
        },
        _ => {
            let tree = match scenario.initial_tree.take() {
                Some(t) => t,
                None => TensorTree::initialize(scenario.factors.clone(), scenario.tree_config()?)?,
            };
            Engine::Tree(DynamicRegression::new(tree, scenario.label.clone())?)
        }
    };
    let mut init = BenchRecord::new(0, RecordKind::Init, elapsed_ns(start));
    if let Engine::Tree(dr) = &engine {
        init.nodes_recomputed = Some(dr.tree().levels().iter().map(Vec::len).sum());
    }
    let mut records = vec![init];
    let q = scenario.factors.len();
    let mut queries = 0u64;
    for (k, event) in scenario.events.iter().enumerate() {
        let index = k + 1;
        let record = match event {
            Event::Update { factor, delta } => {
                if *factor >= q {
                    return Err(Error::IndexOutOfRange { index: *factor, len: q });
                }
                let start = Instant::now();
                let nodes = match &mut engine {
                    Engine::Tree(dr) => {
                        dr.update(*factor, delta)?;
                        Some(dr.tree().recompute_count())
                    }
                    Engine::Baseline { factors, .. } => {
                        factors[*factor].add_assign(delta)?;
                        None
                    }
                };
                let mut r = BenchRecord::new(index, RecordKind::Update, elapsed_ns(start));
                r.nodes_recomputed = nodes;
                r
            }
            Event::Label(delta) => {
                let start = Instant::now();
                match &mut engine {
                    Engine::Tree(dr) => dr.update_label(delta)?,
                    Engine::Baseline { label, .. } => *label = label.add(delta)?,
                }
                BenchRecord::new(index, RecordKind::Label, elapsed_ns(start))
            }
            Event::Query => {
                let query_seed = scenario.sketch.seed.wrapping_add(queries);
                queries += 1;
                let start = Instant::now();
                let answer = answer_query(&scenario, &engine, query_seed)?;
                let mut r = BenchRecord::new(index, RecordKind::Query, elapsed_ns(start));
                r.cost = Some(achieved_cost(&scenario, &engine, &answer)?);
                if scenario.oracle {
                    let opt = oracle_cost(&scenario, &engine)?;
                    r.oracle_cost = Some(opt);
                    r.ratio = (opt > 0.0).then(|| r.cost.unwrap() / opt);
                }
                r
            }
        };
        records.push(record);
    }
    let tree = match engine {
        Engine::Tree(dr) => Some(dr.into_tree()),
        Engine::Baseline { .. } => None,
    };
    Ok((records, tree))
}

enum Answer {
    Vector(DenseVector),
    LowRank(LowRankResult),
}

fn answer_query(scenario: &Scenario, engine: &Engine, seed: u64) -> Result<Answer> {
    let s = &scenario.sketch;
    Ok(match (scenario.solver, engine) {
        (SolverKind::Regression, Engine::Tree(dr)) => Answer::Vector(dr.regression()?),
        (SolverKind::Spline, Engine::Tree(dr)) => Answer::Vector(dr.spline(scenario.spline.as_ref().unwrap())?),
        (SolverKind::Lowrank, Engine::Tree(dr)) => Answer::LowRank(dr.lowrank(scenario.rank.unwrap())?),
        (SolverKind::Baseline, Engine::Baseline { factors, label }) => Answer::Vector(leverage_sample_regression(
            factors, label, s.eps, s.delta, s.c_factor, seed,
        )?),
        _ => unreachable!("engine matches solver"),
    })
}

fn achieved_cost(scenario: &Scenario, engine: &Engine, answer: &Answer) -> Result<f64> {
    let factors = engine.factors();
    match answer {
        Answer::Vector(x) => {
            let residual = kron_matvec(factors, x.as_slice())?
                .sub(&engine.label().to_dense())?
                .norm();
            match &scenario.spline {
                Some(spec) if scenario.solver == SolverKind::Spline => spec.objective(residual, x.as_slice()),
                _ => Ok(residual),
            }
        }
        Answer::LowRank(res) => {
            // ‖A − A P‖_F² = ‖A‖_F² − ‖A U_kᵀ‖_F² for the orthogonal projection P.
            let total: f64 = factors.iter().map(|a| a.frobenius_norm().powi(2)).product();
            let mut kept = 0.0;
            for i in 0..res.uk.rows() {
                kept += kron_matvec(factors, res.uk.row(i))?.norm().powi(2);
            }
            Ok((total - kept).max(0.0).sqrt())
        }
    }
}

fn oracle_cost(scenario: &Scenario, engine: &Engine) -> Result<f64> {
    let factors = engine.factors();
    let b = engine.label().to_dense();
    match scenario.solver {
        SolverKind::Regression | SolverKind::Baseline => Ok(exact_kron_regression(factors, &b)?.opt_cost),
        SolverKind::Spline => Ok(exact_spline(factors, &b, scenario.spline.as_ref().unwrap())?.opt_cost),
        SolverKind::Lowrank => exact_lowrank(factors, scenario.rank.unwrap()),
    }
}

/// One replay per seed `seed, seed + 1, …`, run on worker threads and
/// returned in seed order.
pub fn replay_seeds(scenario: &Scenario, seeds: usize) -> Result<Vec<(u64, Vec<BenchRecord>)>> {
    let base = scenario.sketch.seed;
    let all: Vec<u64> = (0..seeds as u64).map(|k| base.wrapping_add(k)).collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(all.len().max(1));
    let chunk = all.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<(u64, Vec<BenchRecord>)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = all
            .chunks(chunk)
            .map(|seeds| {
                s.spawn(move || {
                    seeds
                        .iter()
                        .map(|&seed| {
                            let mut sc = scenario.clone();
                            sc.sketch.seed = seed;
                            Ok((seed, replay(&sc)?))
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replay worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(seeds);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregateSummary {
    pub seeds: usize,
    /// Seeds with at least one query ratio.
    pub evaluated: usize,
    /// Evaluated seeds whose every query ratio is at most the target.
    pub passed: usize,
}

impl AggregateSummary {
    pub fn pass_rate(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.passed as f64 / self.evaluated as f64
        }
    }
}

pub fn summarize(runs: &[(u64, Vec<BenchRecord>)], target: f64) -> AggregateSummary {
    let mut summary = AggregateSummary {
        seeds: runs.len(),
        evaluated: 0,
        passed: 0,
    };
    for (_, records) in runs {
        let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
        if !ratios.is_empty() {
            summary.evaluated += 1;
            if ratios.iter().all(|&r| r <= target) {
                summary.passed += 1;
            }
        }
    }
    summary
}

pub const CSV_HEADER: &str = "event,kind,wall_ns,nodes_recomputed,cost,oracle_cost,ratio";

fn opt_float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn format_report(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.event,
            r.kind.name(),
            r.wall_ns,
            r.nodes_recomputed.map(|n| n.to_string()).unwrap_or_default(),
            opt_float(r.cost),
            opt_float(r.oracle_cost),
            opt_float(r.ratio),
        )
        .unwrap();
    }
    out
}

pub fn report(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to report".into()));
    }
    let path = path.as_ref();
    std::fs::write(path, format_report(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_report(text: &str) -> Result<Vec<BenchRecord>, ParseError> {
    let mut lines = text.split_inclusive('\n');
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        Some(_) => {
            return Err(ParseError::MalformedHeader {
                offset: 0,
                message: format!("expected {CSV_HEADER:?}"),
            })
        }
        None => return Err(ParseError::MissingHeader),
    }
    let mut offset = text.find('\n').map_or(text.len(), |i| i + 1);
    let mut out = Vec::new();
    for line in lines {
        let start = offset;
        offset += line.len();
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |message: String| ParseError::InvalidRecord { offset: start, message };
        if fields.len() != 7 {
            return Err(bad(format!("expected 7 fields, found {}", fields.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("invalid integer {s:?}")));
        let opt_int = |s: &str| if s.is_empty() { Ok(None) } else { int(s).map(Some) };
        let opt_f = |s: &str| {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| bad(format!("invalid number {s:?}")))
            }
        };
        out.push(BenchRecord {
            event: int(fields[0])? as usize,
            kind: fields[1]
                .parse()
                .map_err(|_| bad(format!("unknown kind {:?}", fields[1])))?,
            wall_ns: int(fields[2])?,
            nodes_recomputed: opt_int(fields[3])?.map(|n| n as usize),
            cost: opt_f(fields[4])?,
            oracle_cost: opt_f(fields[5])?,
            ratio: opt_f(fields[6])?,
        });
    }
    Ok(out)
}
