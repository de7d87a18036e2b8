//! Constraint-based causal discovery for multi-core machines: skeleton
//! learning (original, stable, and level-parallel modes), CPDAG orientation,
//! and IDA-style intervention-effect estimation, plus synthetic-model
//! generation for benchmarks and ground-truth tests.

pub mod citest;
pub mod data;
pub mod graph;
pub mod ida;
pub mod orient;
pub mod skeleton;
pub mod synth;

pub use citest::{
    d_separated, fisher_z_test, partial_correlation, CiError, CiTest, DsepOracle, FisherZ,
    ScriptedOracle, TestResult,
};
pub use data::{correlations, load_dataset, parse_dataset, CorrelationMatrix, DataError, Dataset};
pub use graph::{AdjacencySnapshot, CpdagGraph, Dag, Graph, GraphError, SepsetStore};
pub use ida::{
    adjusted_effect, effects_tsv, ida_all_effects, local_parent_sets, AdjustedEffect,
    EffectEstimate, IdaError,
};
pub use orient::{meek_closure, orient_colliders, orient_cpdag, OrientError};
pub use skeleton::{
    auto_batch_size, learn_skeleton, partition_edges, split_batches, BatchSize, EdgeVerdict,
    LearnerConfig, LevelStats, Mode, SkeletonError, SkeletonResult,
};
pub use synth::{random_dag, random_weights, random_weights_in, sample_sem, SemModel, SynthError};
