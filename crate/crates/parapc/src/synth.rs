//! Random DAG generation and linear-Gaussian SEM sampling: ground truth for
//! oracle tests and scalable benchmark inputs.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::data::Dataset;
use crate::graph::Dag;

#[derive(Error, Debug)]
pub enum SynthError {
    #[error("model line {line}: {message}")]
    ModelParse { line: usize, message: String },
    #[error("weights/noise do not match the DAG: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// Linear structural equation model: every node is a weighted sum of its
/// parents plus independent Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SemModel {
    dag: Dag,
    /// Aligned with `dag.edges()`.
    weights: Vec<f64>,
    noise_sd: Vec<f64>,
}

impl SemModel {
    pub fn new(dag: Dag, weights: Vec<f64>, noise_sd: Vec<f64>) -> Result<Self, SynthError> {
        if weights.len() != dag.edges().len() {
            return Err(SynthError::Mismatch(format!(
                "{} weights for {} edges",
                weights.len(),
                dag.edges().len()
            )));
        }
        if noise_sd.len() != dag.node_count() {
            return Err(SynthError::Mismatch(format!(
                "{} noise entries for {} nodes",
                noise_sd.len(),
                dag.node_count()
            )));
        }
        if noise_sd.iter().any(|&s| s.is_nan() || s <= 0.0) {
            return Err(SynthError::Mismatch("noise sd must be positive".into()));
        }
        Ok(SemModel {
            dag,
            weights,
            noise_sd,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noise_sd(&self) -> &[f64] {
        &self.noise_sd
    }

    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        self.dag
            .edges()
            .iter()
            .position(|&e| e == (src, dst))
            .map(|i| self.weights[i])
    }

    /// TSV edge list `src<TAB>dst<TAB>weight` followed by one
    /// `node<TAB>noise_sd` line per node.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, &(src, dst)) in self.dag.edges().iter().enumerate() {
            let _ = writeln!(out, "{src}\t{dst}\t{}", self.weights[i]);
        }
        for (v, &sd) in self.noise_sd.iter().enumerate() {
            let _ = writeln!(out, "{v}\t{sd}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, SynthError> {
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        let mut noise = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let parse_usize = |s: &str| {
                s.parse::<usize>().map_err(|_| SynthError::ModelParse {
                    line,
                    message: format!("bad node index {s:?}"),
                })
            };
            let parse_f64 = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SynthError::ModelParse {
                        line,
                        message: format!("bad number {s:?}"),
                    })
            };
            match fields.len() {
                3 => {
                    edges.push((parse_usize(fields[0])?, parse_usize(fields[1])?));
                    weights.push(parse_f64(fields[2])?);
                }
                2 => {
                    let v = parse_usize(fields[0])?;
                    if v != noise.len() {
                        return Err(SynthError::ModelParse {
                            line,
                            message: format!("noise lines must cover nodes in order, got {v}"),
                        });
                    }
                    noise.push(parse_f64(fields[1])?);
                }
                k => {
                    return Err(SynthError::ModelParse {
                        line,
                        message: format!("expected 2 or 3 fields, got {k}"),
                    })
                }
            }
        }
        let dag = Dag::new(noise.len(), &edges)?;
        // Dag::new sorts its edge list; realign the weights.
        let mut aligned = vec![0.0; weights.len()];
        for (i, &e) in dag.edges().iter().enumerate() {
            let j = edges.iter().position(|&x| x == e).unwrap();
            aligned[i] = weights[j];
        }
        SemModel::new(dag, aligned, noise)
    }
}

/// Random DAG over the fixed topological order `0..p`: every forward edge
/// `i -> j` (i < j) is included independently with probability
/// `expected_degree / (p - 1)`, clamped to [0, 1]. Deterministic per seed.
pub fn random_dag(p: usize, expected_degree: f64, seed: u64) -> Dag {
    assert!(p >= 2, "need at least two nodes");
    let prob = (expected_degree / (p - 1) as f64).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    Dag::new(p, &edges).expect("forward edges cannot form a cycle")
}

/// Attaches random edge weights (uniform magnitude in [0.5, 2.0], random
/// sign) and unit noise to a DAG. Deterministic per seed.
pub fn random_weights(dag: Dag, seed: u64) -> SemModel {
    random_weights_in(dag, seed, 0.5, 2.0)
}

/// Like [`random_weights`] with a caller-chosen magnitude range.
pub fn random_weights_in(dag: Dag, seed: u64, min_magnitude: f64, max_magnitude: f64) -> SemModel {
    assert!(0.0 < min_magnitude && min_magnitude < max_magnitude);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = dag
        .edges()
        .iter()
        .map(|_| {
            let magnitude = rng.random_range(min_magnitude..max_magnitude);
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();
    let noise = vec![1.0; dag.node_count()];
    SemModel::new(dag, weights, noise).expect("generated lengths match")
}

/// Draws `n` joint samples from the SEM in topological order; column `j` of
/// the result is variable `j`, named `V{j+1}`. Deterministic per seed.
pub fn sample_sem(model: &SemModel, n: usize, seed: u64) -> Dataset {
    let p = model.dag.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = model.dag.topological_order().expect("SemModel holds a DAG");
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    for &v in &order {
        let mut col: Vec<f64> = (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                e * model.noise_sd[v]
            })
            .collect();
        for &pa in model.dag.parents_of(v) {
            let w = model.weight(pa, v).expect("edge weight exists");
            let parent_col = &columns[pa];
            for (c, &pv) in col.iter_mut().zip(parent_col) {
                *c += w * pv;
            }
        }
        columns[v] = col;
    }
    let names = (1..=p).map(|j| format!("V{j}")).collect();
    Dataset::from_columns(names, columns).expect("SEM samples are finite")
}
