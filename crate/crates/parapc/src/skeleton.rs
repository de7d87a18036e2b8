//! Skeleton learning. Three modes share one conditioning-set scan:
//!
//! * `original` — ordered-pair sweep with adjacency updated in place, so
//!   removals shrink later candidate sets within the same level.
//! * `stable` — same sweep, but candidate sets come from a per-level frozen
//!   snapshot, making the edge set independent of variable order.
//! * `parallel` — the level's edges are grouped per edge (both endpoint
//!   scans together), split into memory-bounded batches, partitioned
//!   contiguously across workers, and merged at a synchronisation point.
//!   Results are identical to `stable` for every worker count and batch
//!   size.
//!
//! All enumeration is canonical (pairs sorted lexicographically, conditioning
//! sets in lexicographic combination order over ascending neighbour lists),
//! so outputs are bit-reproducible across runs and worker counts.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citest::{CiError, CiTest};
use crate::graph::{AdjacencySnapshot, Graph, SepsetStore};

#[derive(Error, Debug)]
pub enum SkeletonError {
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("CI test failed at level {level} on edge {x}-{y}: {source}")]
    Test {
        level: usize,
        x: usize,
        y: usize,
        #[source]
        source: CiError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Original,
    Stable,
    Parallel,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Mode::Original),
            "stable" => Ok(Mode::Stable),
            "parallel" => Ok(Mode::Parallel),
            other => Err(format!(
                "unknown mode {other:?} (expected original|stable|parallel)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchSize {
    /// Resolve from the memory budget and the per-verdict footprint.
    Auto,
    Fixed(usize),
}

impl FromStr for BatchSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(BatchSize::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(BatchSize::Fixed(n)),
            _ => Err(format!(
                "batch size must be a positive integer or \"auto\", got {s:?}"
            )),
        }
    }
}

pub const DEFAULT_MEM_BUDGET_BYTES: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub mode: Mode,
    pub alpha: f64,
    pub workers: usize,
    pub mem_efficient: bool,
    pub batch_size: BatchSize,
    pub max_depth: Option<usize>,
    /// Budget backing `BatchSize::Auto`.
    pub mem_budget_bytes: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            mode: Mode::Parallel,
            alpha: 0.05,
            workers: 1,
            mem_efficient: false,
            batch_size: BatchSize::Auto,
            max_depth: None,
            mem_budget_bytes: DEFAULT_MEM_BUDGET_BYTES,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), SkeletonError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SkeletonError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.workers < 1 {
            return Err(SkeletonError::Config("workers must be >= 1".into()));
        }
        if let BatchSize::Fixed(n) = self.batch_size {
            if n < 1 {
                return Err(SkeletonError::Config("batch size must be >= 1".into()));
            }
        }
        if self.mem_budget_bytes < 1 {
            return Err(SkeletonError::Config(
                "memory budget must be >= 1 byte".into(),
            ));
        }
        Ok(())
    }
}

/// One worker's decision about one edge: keep it, or remove it with the
/// separating set that was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeVerdict {
    pub x: usize,
    pub y: usize,
    pub keep: bool,
    pub sepset: Option<Vec<usize>>,
}

/// Accounted memory footprint of one buffered verdict at conditioning-set
/// size `level`: the struct itself plus the heap behind its separating set.
pub fn verdict_footprint_bytes(level: usize) -> usize {
    std::mem::size_of::<EdgeVerdict>() + level * std::mem::size_of::<usize>()
}

/// Resolves `BatchSize::Auto`: as many buffered verdicts as the budget
/// allows, never below one edge per batch.
pub fn auto_batch_size(mem_budget_bytes: usize, level: usize) -> usize {
    (mem_budget_bytes / verdict_footprint_bytes(level)).max(1)
}

/// Consecutive slices of `items`, each of `batch_size` elements except
/// possibly the last; concatenation reproduces the input.
pub fn split_batches<T>(items: &[T], batch_size: usize) -> Vec<&[T]> {
    assert!(batch_size >= 1, "batch size must be >= 1");
    items.chunks(batch_size).collect()
}

/// Contiguous partition of `batch` into `workers` sublists whose sizes
/// differ by at most one (leading sublists take the remainder).
pub fn partition_edges<T>(batch: &[T], workers: usize) -> Vec<&[T]> {
    assert!(workers >= 1, "worker count must be >= 1");
    let base = batch.len() / workers;
    let remainder = batch.len() % workers;
    let mut parts = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < remainder);
        parts.push(&batch[start..start + len]);
        start += len;
    }
    parts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub edges_at_start: usize,
    pub ci_tests: u64,
    pub edges_removed: usize,
    pub millis: u64,
}

#[derive(Debug, Clone)]
pub struct SkeletonResult {
    pub graph: Graph,
    pub sepsets: SepsetStore,
    pub levels: Vec<LevelStats>,
    /// True when the depth cap stopped the loop before natural termination.
    pub depth_truncated: bool,
    /// Most buffered edge verdicts held by the coordinator at any one time
    /// (parallel mode only; zero otherwise).
    pub verdict_high_water: usize,
}

impl SkeletonResult {
    pub fn total_ci_tests(&self) -> u64 {
        self.levels.iter().map(|l| l.ci_tests).sum()
    }

    pub fn total_edges_removed(&self) -> usize {
        self.levels.iter().map(|l| l.edges_removed).sum()
    }

    /// Per-level stats as TSV with a header row. Wall time is the only
    /// non-deterministic column.
    pub fn stats_tsv(&self) -> String {
        let mut out = String::from("level\tedges_at_start\tci_tests\tedges_removed\tmillis\n");
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                l.level, l.edges_at_start, l.ci_tests, l.edges_removed, l.millis
            );
        }
        out
    }
}

/// Learns the undirected skeleton over `p` nodes, starting from the complete
/// graph and testing conditioning sets of growing size until every adjacent
/// pair runs out of candidates (or the depth cap triggers).
pub fn learn_skeleton<T: CiTest + ?Sized>(
    test: &T,
    p: usize,
    cfg: &LearnerConfig,
) -> Result<SkeletonResult, SkeletonError> {
    cfg.validate()?;
    if p < 2 {
        return Err(SkeletonError::Config(format!(
            "need at least 2 nodes, got {p}"
        )));
    }
    let mut graph = Graph::complete(p);
    let mut sepsets = SepsetStore::new();
    let mut levels = Vec::new();
    let mut high_water = 0usize;
    let mut depth_truncated = false;
    let mut depth = 0usize;
    loop {
        let started = Instant::now();
        let edges_at_start = graph.edge_count();
        let mut tests_run = 0u64;
        let mut removed = 0usize;
        match cfg.mode {
            Mode::Original => run_level_sequential(
                test,
                &mut graph,
                None,
                depth,
                cfg.alpha,
                &mut sepsets,
                &mut tests_run,
                &mut removed,
            )?,
            Mode::Stable => {
                let snapshot = graph.snapshot();
                run_level_sequential(
                    test,
                    &mut graph,
                    Some(&snapshot),
                    depth,
                    cfg.alpha,
                    &mut sepsets,
                    &mut tests_run,
                    &mut removed,
                )?;
            }
            Mode::Parallel => {
                let snapshot = graph.snapshot();
                run_level_parallel(
                    test,
                    &mut graph,
                    &snapshot,
                    depth,
                    cfg,
                    &mut sepsets,
                    &mut tests_run,
                    &mut removed,
                    &mut high_water,
                )?;
            }
        }
        levels.push(LevelStats {
            level: depth,
            edges_at_start,
            ci_tests: tests_run,
            edges_removed: removed,
            millis: started.elapsed().as_millis() as u64,
        });
        if candidates_exhausted(&graph, depth + 1) {
            break;
        }
        if cfg.max_depth.is_some_and(|cap| depth + 1 > cap) {
            depth_truncated = true;
            break;
        }
        depth += 1;
    }
    Ok(SkeletonResult {
        graph,
        sepsets,
        levels,
        depth_truncated,
        verdict_high_water: high_water,
    })
}

/// Termination test: every adjacent pair has fewer than `next_depth`
/// conditioning candidates on both sides.
fn candidates_exhausted(graph: &Graph, next_depth: usize) -> bool {
    graph
        .adjacent_pairs()
        .iter()
        .all(|&(x, y)| graph.degree(x) - 1 < next_depth && graph.degree(y) - 1 < next_depth)
}

/// Ordered-pair sweep used by the original and stable modes. With a snapshot
/// the candidate sets are frozen for the level; without one they track the
/// working graph.
#[allow(clippy::too_many_arguments)]
fn run_level_sequential<T: CiTest + ?Sized>(
    test: &T,
    graph: &mut Graph,
    snapshot: Option<&AdjacencySnapshot>,
    depth: usize,
    alpha: f64,
    sepsets: &mut SepsetStore,
    tests_run: &mut u64,
    removed: &mut usize,
) -> Result<(), SkeletonError> {
    let p = graph.node_count();
    for x in 0..p {
        for y in 0..p {
            if y == x || !graph.has_edge(x, y) {
                continue;
            }
            let candidates = match snapshot {
                Some(s) => s.adjacent_excluding(x, y),
                None => graph.neighbors_excluding(x, y),
            };
            if candidates.len() < depth {
                continue;
            }
            let found = scan_conditioning_sets(test, x, y, &candidates, depth, alpha, tests_run)
                .map_err(|source| SkeletonError::Test {
                    level: depth,
                    x,
                    y,
                    source,
                })?;
            if let Some(sepset) = found {
                graph.remove_edge(x, y);
                sepsets.insert(x, y, sepset);
                *removed += 1;
            }
        }
    }
    Ok(())
}

/// One level of the parallel mode: fixed snapshot, batched edge list,
/// contiguous worker partition, barrier, then a synchronisation step that
/// applies all verdicts to the graph and the sepset store.
#[allow(clippy::too_many_arguments)]
fn run_level_parallel<T: CiTest + ?Sized>(
    test: &T,
    graph: &mut Graph,
    snapshot: &AdjacencySnapshot,
    depth: usize,
    cfg: &LearnerConfig,
    sepsets: &mut SepsetStore,
    tests_run: &mut u64,
    removed: &mut usize,
    high_water: &mut usize,
) -> Result<(), SkeletonError> {
    let pairs = graph.adjacent_pairs();
    if pairs.is_empty() {
        return Ok(());
    }
    let batch_size = if cfg.mem_efficient {
        match cfg.batch_size {
            BatchSize::Fixed(n) => n,
            BatchSize::Auto => auto_batch_size(cfg.mem_budget_bytes, depth),
        }
    } else {
        pairs.len()
    };
    for batch in split_batches(&pairs, batch_size) {
        let parts = partition_edges(batch, cfg.workers);
        let outcomes: Vec<WorkerOutcome> = std::thread::scope(|scope| {
            let handles: Vec<_> = parts
                .iter()
                .map(|part| {
                    scope.spawn(move || evaluate_edges(test, snapshot, part, depth, cfg.alpha))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("skeleton worker panicked"))
                .collect()
        });
        let mut verdicts: Vec<Vec<EdgeVerdict>> = Vec::with_capacity(outcomes.len());
        let mut in_flight = 0usize;
        for outcome in outcomes {
            let (worker_verdicts, count) =
                outcome.map_err(|(x, y, source)| SkeletonError::Test {
                    level: depth,
                    x,
                    y,
                    source,
                })?;
            *tests_run += count;
            in_flight += worker_verdicts.len();
            verdicts.push(worker_verdicts);
        }
        *high_water = (*high_water).max(in_flight);
        for verdict in verdicts.into_iter().flatten() {
            if !verdict.keep {
                graph.remove_edge(verdict.x, verdict.y);
                sepsets.insert(
                    verdict.x,
                    verdict.y,
                    verdict.sepset.expect("removal carries a sepset"),
                );
                *removed += 1;
            }
        }
    }
    Ok(())
}

type WorkerOutcome = Result<(Vec<EdgeVerdict>, u64), (usize, usize, CiError)>;

fn evaluate_edges<T: CiTest + ?Sized>(
    test: &T,
    snapshot: &AdjacencySnapshot,
    edges: &[(usize, usize)],
    depth: usize,
    alpha: f64,
) -> WorkerOutcome {
    let mut verdicts = Vec::with_capacity(edges.len());
    let mut tests_run = 0u64;
    for &(x, y) in edges {
        let verdict = evaluate_edge(test, snapshot, x, y, depth, alpha, &mut tests_run)
            .map_err(|source| (x, y, source))?;
        verdicts.push(verdict);
    }
    Ok((verdicts, tests_run))
}

/// Grouped scan for one edge: all conditioning sets drawn from the
/// smaller-index endpoint's neighbours, then all drawn from the other
/// endpoint's, stopping at the first independence.
fn evaluate_edge<T: CiTest + ?Sized>(
    test: &T,
    snapshot: &AdjacencySnapshot,
    x: usize,
    y: usize,
    depth: usize,
    alpha: f64,
    tests_run: &mut u64,
) -> Result<EdgeVerdict, CiError> {
    for (a, b) in [(x, y), (y, x)] {
        let candidates = snapshot.adjacent_excluding(a, b);
        if candidates.len() < depth {
            continue;
        }
        if let Some(sepset) =
            scan_conditioning_sets(test, a, b, &candidates, depth, alpha, tests_run)?
        {
            return Ok(EdgeVerdict {
                x,
                y,
                keep: false,
                sepset: Some(sepset),
            });
        }
    }
    Ok(EdgeVerdict {
        x,
        y,
        keep: true,
        sepset: None,
    })
}

/// Tests I(x, y | Z) for every size-`depth` subset Z of `candidates` in
/// lexicographic combination order; returns the first separating set found.
fn scan_conditioning_sets<T: CiTest + ?Sized>(
    test: &T,
    x: usize,
    y: usize,
    candidates: &[usize],
    depth: usize,
    alpha: f64,
    tests_run: &mut u64,
) -> Result<Option<Vec<usize>>, CiError> {
    for cond in candidates.iter().copied().combinations(depth) {
        *tests_run += 1;
        if test.test(x, y, &cond, alpha)?.independent {
            return Ok(Some(cond));
        }
    }
    Ok(None)
}
