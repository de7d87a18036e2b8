//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use parapc::{
    correlations, ida_all_effects, learn_skeleton, load_dataset, orient_cpdag, random_dag,
    random_weights, sample_sem, BatchSize, CorrelationMatrix, Dataset, FisherZ, LearnerConfig,
    Mode, SkeletonResult,
};

use crate::manifest::ManifestBuilder;
use crate::{BenchArgs, CliError, IdaArgs, InputArgs, LearnArgs, OutArgs, SkeletonArgs, SynthArgs};

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn runtime(message: impl Into<String>) -> CliError {
    CliError::Runtime(message.into())
}

fn parse_delimiter(raw: &str) -> Result<char, CliError> {
    match raw {
        "\\t" | "\t" | "tab" => Ok('\t'),
        s => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii() => Ok(c),
                _ => Err(usage(format!(
                    "delimiter must be a single ASCII character, got {raw:?}"
                ))),
            }
        }
    }
}

fn resolve_workers(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        if n < 1 {
            return Err(usage("workers must be >= 1"));
        }
        return Ok(n);
    }
    if let Ok(raw) = std::env::var("PARAPC_WORKERS") {
        return match raw.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(usage(format!(
                "PARAPC_WORKERS must be a positive integer, got {raw:?}"
            ))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |c| c.get()))
}

fn learner_config(args: &LearnArgs) -> Result<LearnerConfig, CliError> {
    let mode: Mode = args.mode.parse().map_err(usage)?;
    let batch_size: BatchSize = args.batch_size.parse().map_err(usage)?;
    let cfg = LearnerConfig {
        mode,
        alpha: args.alpha,
        workers: resolve_workers(args.workers)?,
        mem_efficient: args.mem_efficient,
        batch_size,
        max_depth: args.max_depth,
        mem_budget_bytes: args
            .mem_budget_mb
            .checked_mul(1024 * 1024)
            .ok_or_else(|| usage("memory budget overflows"))?,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn load_input(args: &InputArgs) -> Result<Dataset, CliError> {
    let delimiter = parse_delimiter(&args.delimiter)?;
    load_dataset(&args.input, delimiter, !args.no_header).map_err(|e| usage(e.to_string()))
}

fn write_file(
    dir: &Path,
    name: &str,
    contents: &str,
    manifest: &mut ManifestBuilder,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| runtime(format!("writing {}: {e}", path.display())))?;
    manifest.record_output(&path);
    Ok(path)
}

struct LearnedSkeleton {
    data: Dataset,
    cfg: LearnerConfig,
    result: SkeletonResult,
}

fn run_skeleton(input: &InputArgs, learn: &LearnArgs) -> Result<LearnedSkeleton, CliError> {
    let cfg = learner_config(learn)?;
    let data = load_input(input)?;
    let corr = correlations(&data).map_err(|e| usage(e.to_string()))?;
    let test = FisherZ::new(corr);
    let result = learn_skeleton(&test, data.p(), &cfg).map_err(|e| runtime(e.to_string()))?;
    if result.depth_truncated {
        eprintln!("warning: stopped at the depth cap; larger conditioning sets were not tested");
    }
    Ok(LearnedSkeleton { data, cfg, result })
}

fn write_skeleton_outputs(
    learned: &LearnedSkeleton,
    out: &OutArgs,
    manifest: &mut ManifestBuilder,
) -> Result<(), CliError> {
    let names = learned.data.names();
    write_file(
        &out.out,
        "edges.tsv",
        &learned.result.graph.edges_tsv(names),
        manifest,
    )?;
    write_file(
        &out.out,
        "sepsets.tsv",
        &learned.result.sepsets.to_tsv(names),
        manifest,
    )?;
    write_file(&out.out, "stats.tsv", &learned.result.stats_tsv(), manifest)?;
    Ok(())
}

pub fn skeleton(args: SkeletonArgs) -> Result<(), CliError> {
    let learned = run_skeleton(&args.input, &args.learn)?;
    let mut manifest = ManifestBuilder::new("skeleton")
        .input(&args.input.input)
        .config(learned.cfg)
        .depth_truncated(learned.result.depth_truncated);
    write_skeleton_outputs(&learned, &args.out, &mut manifest)?;
    manifest.write(&args.out.out)
}

pub fn cpdag(args: SkeletonArgs) -> Result<(), CliError> {
    let learned = run_skeleton(&args.input, &args.learn)?;
    let graph = orient_cpdag(&learned.result.graph, &learned.result.sepsets)
        .map_err(|e| runtime(e.to_string()))?;
    let mut manifest = ManifestBuilder::new("cpdag")
        .input(&args.input.input)
        .config(learned.cfg)
        .depth_truncated(learned.result.depth_truncated);
    write_skeleton_outputs(&learned, &args.out, &mut manifest)?;
    write_file(
        &args.out.out,
        "cpdag.dot",
        &graph.to_dot(learned.data.names()),
        &mut manifest,
    )?;
    manifest.write(&args.out.out)
}

fn read_name_list(path: &Path, data: &Dataset, role: &str) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("reading {role} file {}: {e}", path.display())))?;
    let mut indices = Vec::new();
    for name in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let idx = data
            .column_index(name)
            .ok_or_else(|| usage(format!("unknown {role} variable {name:?}")))?;
        if !indices.contains(&idx) {
            indices.push(idx);
        }
    }
    if indices.is_empty() {
        return Err(usage(format!(
            "{role} file {} names no variables",
            path.display()
        )));
    }
    Ok(indices)
}

pub fn ida(args: IdaArgs) -> Result<(), CliError> {
    let learned = run_skeleton(&args.input, &args.learn)?;
    let graph = orient_cpdag(&learned.result.graph, &learned.result.sepsets)
        .map_err(|e| runtime(e.to_string()))?;
    let everyone: Vec<usize> = (0..learned.data.p()).collect();
    let treatments = match &args.treatments {
        Some(path) => read_name_list(path, &learned.data, "treatment")?,
        None => everyone.clone(),
    };
    let targets = match &args.targets {
        Some(path) => read_name_list(path, &learned.data, "target")?,
        None => everyone,
    };
    let regression_data = if args.zscore {
        learned.data.zscored().map_err(|e| usage(e.to_string()))?
    } else {
        learned.data.clone()
    };
    let effects = ida_all_effects(
        &regression_data,
        &graph,
        &treatments,
        &targets,
        learned.cfg.workers,
    )
    .map_err(|e| runtime(e.to_string()))?;

    #[derive(Serialize)]
    struct IdaConfig<'a> {
        learner: &'a LearnerConfig,
        zscore: bool,
        treatments: usize,
        targets: usize,
    }
    let mut manifest = ManifestBuilder::new("ida")
        .input(&args.input.input)
        .config(IdaConfig {
            learner: &learned.cfg,
            zscore: args.zscore,
            treatments: treatments.len(),
            targets: targets.len(),
        })
        .depth_truncated(learned.result.depth_truncated);
    write_skeleton_outputs(&learned, &args.out, &mut manifest)?;
    write_file(
        &args.out.out,
        "cpdag.dot",
        &graph.to_dot(learned.data.names()),
        &mut manifest,
    )?;
    write_file(
        &args.out.out,
        "effects.tsv",
        &parapc::effects_tsv(&effects, learned.data.names()),
        &mut manifest,
    )?;
    manifest.write(&args.out.out)
}

/// Peak resident set size of this process, from /proc (Linux).
fn peak_rss_bytes() -> u64 {
    let Ok(status) = fs::read_to_string("/proc/self/status") else {
        return 0;
    };
    status
        .lines()
        .find_map(|line| {
            let rest = line.strip_prefix("VmHWM:")?;
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            Some(kb * 1024)
        })
        .unwrap_or(0)
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    if args.p < 2 {
        return Err(usage("p must be >= 2"));
    }
    if args.seeds < 1 {
        return Err(usage("seeds must be >= 1"));
    }
    let worker_counts: Vec<usize> = args
        .workers_list
        .split(',')
        .map(|s| match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(usage(format!("bad worker count {s:?} in --workers-list"))),
        })
        .collect::<Result<_, _>>()?;
    if worker_counts.is_empty() {
        return Err(usage("--workers-list names no worker counts"));
    }
    let batch_size: BatchSize = args.batch_size.parse().map_err(usage)?;

    // one dataset per seed, shared across all worker counts
    let datasets: Vec<CorrelationMatrix> = (0..args.seeds)
        .map(|k| {
            let model = random_weights(
                random_dag(args.p, args.degree, args.seed + k),
                args.seed + k,
            );
            let data = sample_sem(&model, args.n, args.seed + k);
            correlations(&data).map_err(|e| runtime(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    struct Row {
        workers: usize,
        mean_millis: f64,
        ci_tests: u64,
        edges: usize,
        peak_rss: u64,
    }
    let mut rows = Vec::new();
    for &workers in &worker_counts {
        let cfg = LearnerConfig {
            mode: Mode::Parallel,
            alpha: args.alpha,
            workers,
            mem_efficient: args.mem_efficient,
            batch_size,
            max_depth: None,
            mem_budget_bytes: parapc::skeleton::DEFAULT_MEM_BUDGET_BYTES,
        };
        let mut total_secs = 0.0;
        let mut ci_tests = 0u64;
        let mut edges = 0usize;
        for corr in &datasets {
            let test = FisherZ::new(corr.clone());
            let started = Instant::now();
            let result = learn_skeleton(&test, args.p, &cfg).map_err(|e| runtime(e.to_string()))?;
            total_secs += started.elapsed().as_secs_f64();
            ci_tests += result.total_ci_tests();
            edges += result.graph.edge_count();
        }
        rows.push(Row {
            workers,
            mean_millis: total_secs * 1000.0 / args.seeds as f64,
            ci_tests,
            edges,
            peak_rss: peak_rss_bytes(),
        });
    }

    let reference = rows.iter().find(|r| r.workers == 1).map(|r| r.mean_millis);
    let mut csv = String::from("workers,runs,mean_millis,speedup,ci_tests,edges,peak_rss_bytes\n");
    for row in &rows {
        let speedup = reference
            .map(|base| format!("{:.3}", base / row.mean_millis))
            .unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{:.3},{},{},{},{}",
            row.workers,
            args.seeds,
            row.mean_millis,
            speedup,
            row.ci_tests,
            row.edges,
            row.peak_rss
        );
    }

    #[derive(Serialize)]
    struct BenchConfig<'a> {
        p: usize,
        degree: f64,
        n: usize,
        seeds: u64,
        workers_list: &'a [usize],
        alpha: f64,
        mem_efficient: bool,
        batch_size: BatchSize,
    }
    let mut manifest = ManifestBuilder::new("bench")
        .seed(args.seed)
        .config(BenchConfig {
            p: args.p,
            degree: args.degree,
            n: args.n,
            seeds: args.seeds,
            workers_list: &worker_counts,
            alpha: args.alpha,
            mem_efficient: args.mem_efficient,
            batch_size,
        });
    write_file(&args.out.out, "bench.csv", &csv, &mut manifest)?;
    manifest.write(&args.out.out)
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    if args.p < 2 {
        return Err(usage("p must be >= 2"));
    }
    if args.n < 2 {
        return Err(usage("n must be >= 2"));
    }
    let model = random_weights(random_dag(args.p, args.degree, args.seed), args.seed);
    let data = sample_sem(&model, args.n, args.seed);

    #[derive(Serialize)]
    struct SynthConfig {
        p: usize,
        degree: f64,
        n: usize,
    }
    let mut manifest = ManifestBuilder::new("synth")
        .seed(args.seed)
        .config(SynthConfig {
            p: args.p,
            degree: args.degree,
            n: args.n,
        });
    write_file(
        &args.out.out,
        "data.csv",
        &data.to_delimited(','),
        &mut manifest,
    )?;
    write_file(&args.out.out, "model.tsv", &model.to_tsv(), &mut manifest)?;
    manifest.write(&args.out.out)
}
