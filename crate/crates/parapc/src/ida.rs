//! Intervention-effect estimation from a CPDAG and data: every locally valid
//! parent set of the treatment yields one adjusted regression coefficient,
//! and the sign-carrying minimum-absolute effect summarizes the multiset.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::data::Dataset;
use crate::graph::CpdagGraph;

#[derive(Error, Debug)]
pub enum IdaError {
    #[error("variable {node} out of range for graph with {p} nodes")]
    NodeOutOfRange { node: usize, p: usize },
    #[error("invalid regression spec: {0}")]
    InvalidRegression(String),
}

/// Effects of one treatment on one target: one entry per locally valid
/// parent set, summarized by the minimum-absolute effect (keeping its sign).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimate {
    pub treatment: usize,
    pub target: usize,
    pub effects: Vec<f64>,
    pub summary: f64,
}

/// Adjusted regression coefficient; `singular` marks a rank-deficient design
/// resolved by the minimum-norm solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedEffect {
    pub coefficient: f64,
    pub singular: bool,
}

/// All locally valid parent sets of `x`: the directed parents D plus every
/// subset S of the undirected neighbours whose inward orientation creates no
/// new v-structure at `x` — that is, every two members of S, and every
/// member of S paired with a member of D, must be adjacent. Sets are
/// enumerated by ascending size, each in lexicographic combination order.
pub fn local_parent_sets(g: &CpdagGraph, x: usize) -> Result<Vec<Vec<usize>>, IdaError> {
    let p = g.node_count();
    if x >= p {
        return Err(IdaError::NodeOutOfRange { node: x, p });
    }
    let directed = g.parents_of(x);
    let undirected = g.undirected_neighbors_of(x);
    let mut out = Vec::new();
    for size in 0..=undirected.len() {
        'subset: for subset in combinations(&undirected, size) {
            for (i, &s) in subset.iter().enumerate() {
                for &t in &subset[i + 1..] {
                    if !g.is_adjacent(s, t) {
                        continue 'subset;
                    }
                }
                for &d in &directed {
                    if !g.is_adjacent(s, d) {
                        continue 'subset;
                    }
                }
            }
            let mut parents = directed.clone();
            parents.extend_from_slice(&subset);
            parents.sort_unstable();
            out.push(parents);
        }
    }
    Ok(out)
}

fn combinations(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    items.iter().copied().combinations(size).collect()
}

/// Coefficient of `x` in the least-squares regression of `y` on {x} union
/// `pa` (with intercept). A singular design is resolved by the minimum-norm
/// solution and flagged.
pub fn adjusted_effect(
    d: &Dataset,
    x: usize,
    y: usize,
    pa: &[usize],
) -> Result<AdjustedEffect, IdaError> {
    let p = d.p();
    for &v in [x, y].iter().chain(pa) {
        if v >= p {
            return Err(IdaError::NodeOutOfRange { node: v, p });
        }
    }
    if x == y {
        return Err(IdaError::InvalidRegression(
            "treatment equals target".into(),
        ));
    }
    if pa.contains(&x) || pa.contains(&y) {
        return Err(IdaError::InvalidRegression(
            "adjustment set must exclude treatment and target".into(),
        ));
    }
    let mut regressors = Vec::with_capacity(pa.len() + 1);
    regressors.push(x);
    regressors.extend_from_slice(pa);
    let centered: Vec<Vec<f64>> = regressors
        .iter()
        .chain([&y])
        .map(|&col| center(d.column(col)))
        .collect();
    let k = regressors.len();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&centered[i], &centered[j]));
    let rhs = DVector::from_fn(k, |i, _| dot(&centered[i], &centered[k]));
    Ok(solve_normal_equations(gram, rhs))
}

fn center(col: &[f64]) -> Vec<f64> {
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    col.iter().map(|&v| v - mean).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Minimum-norm least-squares solve of the centered normal equations; the
/// intercept is absorbed by the centering.
fn solve_normal_equations(gram: DMatrix<f64>, rhs: DVector<f64>) -> AdjustedEffect {
    let k = gram.nrows();
    let svd = gram.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = (max_sv * k as f64 * f64::EPSILON).max(f64::MIN_POSITIVE);
    let singular = svd.rank(eps) < k;
    let beta = svd.solve(&rhs, eps).expect("SVD was computed with u and v");
    AdjustedEffect {
        coefficient: beta[0],
        singular,
    }
}

/// IDA effects for every (treatment, target) pair with treatment != target.
/// Pairs are evaluated by a contiguous worker partition sharing the dataset
/// and graph read-only; results are sorted by |summary| descending (ties by
/// treatment then target index).
pub fn ida_all_effects(
    d: &Dataset,
    g: &CpdagGraph,
    treatments: &[usize],
    targets: &[usize],
    workers: usize,
) -> Result<Vec<EffectEstimate>, IdaError> {
    assert!(workers >= 1, "worker count must be >= 1");
    let p = d.p();
    assert_eq!(g.node_count(), p, "graph and dataset disagree on p");
    for &v in treatments.iter().chain(targets) {
        if v >= p {
            return Err(IdaError::NodeOutOfRange { node: v, p });
        }
    }
    // Parent sets depend only on the treatment; resolve them once up front.
    let mut parent_sets = vec![None; p];
    for &t in treatments {
        if parent_sets[t].is_none() {
            parent_sets[t] = Some(local_parent_sets(g, t)?);
        }
    }
    let gram = CenteredGram::new(d);
    let pairs: Vec<(usize, usize)> = treatments
        .iter()
        .flat_map(|&t| {
            targets
                .iter()
                .filter(move |&&y| y != t)
                .map(move |&y| (t, y))
        })
        .collect();
    let parts = crate::skeleton::partition_edges(&pairs, workers);
    let estimates: Vec<Vec<EffectEstimate>> = std::thread::scope(|scope| {
        let handles: Vec<_> = parts
            .iter()
            .map(|part| {
                let gram = &gram;
                let parent_sets = &parent_sets;
                scope.spawn(move || {
                    part.iter()
                        .map(|&(t, y)| {
                            let psets = parent_sets[t].as_ref().expect("precomputed");
                            estimate_pair(gram, t, y, psets)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ida worker panicked"))
            .collect()
    });
    let mut all: Vec<EffectEstimate> = estimates.into_iter().flatten().collect();
    all.sort_by(|a, b| {
        b.summary
            .abs()
            .total_cmp(&a.summary.abs())
            .then_with(|| (a.treatment, a.target).cmp(&(b.treatment, b.target)))
    });
    Ok(all)
}

fn estimate_pair(
    gram: &CenteredGram,
    treatment: usize,
    target: usize,
    parent_sets: &[Vec<usize>],
) -> EffectEstimate {
    let effects: Vec<f64> = parent_sets
        .iter()
        .map(|pa| {
            if pa.contains(&target) {
                // intervening on a variable cannot affect its own parent
                0.0
            } else {
                gram.effect(treatment, target, pa).coefficient
            }
        })
        .collect();
    let mut summary = effects[0];
    for &e in &effects[1..] {
        if e.abs() < summary.abs() {
            summary = e;
        }
    }
    EffectEstimate {
        treatment,
        target,
        effects,
        summary,
    }
}

/// Ranked effect table as TSV: treatment, target, summary effect, number of
/// parent sets, and the comma-joined effect multiset.
pub fn effects_tsv(estimates: &[EffectEstimate], names: &[String]) -> String {
    let mut out = String::from("treatment\ttarget\tsummary_effect\tn_parent_sets\teffects\n");
    for e in estimates {
        let effects = e
            .effects
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            names[e.treatment],
            names[e.target],
            e.summary,
            e.effects.len(),
            effects
        );
    }
    out
}

/// Centered cross-product matrix shared read-only by all regression workers.
struct CenteredGram {
    p: usize,
    entries: Vec<f64>,
}

impl CenteredGram {
    fn new(d: &Dataset) -> Self {
        let p = d.p();
        let centered: Vec<Vec<f64>> = (0..p).map(|j| center(d.column(j))).collect();
        let mut entries = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let v = dot(&centered[i], &centered[j]);
                entries[i * p + j] = v;
                entries[j * p + i] = v;
            }
        }
        CenteredGram { p, entries }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.p + j]
    }

    fn effect(&self, x: usize, y: usize, pa: &[usize]) -> AdjustedEffect {
        let mut regressors = Vec::with_capacity(pa.len() + 1);
        regressors.push(x);
        regressors.extend_from_slice(pa);
        let k = regressors.len();
        let gram = DMatrix::from_fn(k, k, |i, j| self.at(regressors[i], regressors[j]));
        let rhs = DVector::from_fn(k, |i, _| self.at(regressors[i], y));
        solve_normal_equations(gram, rhs)
    }
}
