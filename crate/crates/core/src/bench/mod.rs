//! Multi-start benchmarking: sampling, parallel runs, summary statistics and tables.

mod io;

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::solver::{rate_warning, run, Method, SolverConfig, Status};

pub use io::{
    read_runs_csv, read_trace_csv, write_images_csv, write_iterates_csv, write_runs_csv,
    write_trace_csv, TraceRow,
};

/// Bumped whenever a field of an emitted JSON or CSV file changes.
pub const FORMAT_VERSION: u32 = 1;

/// Start `index` drawn uniformly from `bounds` by a generator keyed on `(seed, index)`.
pub fn sample_start(bounds: &[(f64, f64)], seed: u64, index: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    DVector::from_iterator(
        bounds.len(),
        bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)),
    )
}

pub fn sample_starts(bounds: &[(f64, f64)], seed: u64, count: usize) -> Vec<DVector<f64>> {
    (0..count).map(|i| sample_start(bounds, seed, i)).collect()
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub starts: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Overrides the problem's sample box.
    pub sample_box: Option<Vec<(f64, f64)>>,
    pub jobs: usize,
    /// Shared settings; `method` is replaced per run.
    pub solver: SolverConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            starts: 100,
            methods: vec![Method::QuasiNewton, Method::SteepestDescent],
            seed: 0,
            sample_box: None,
            jobs: 1,
            solver: SolverConfig::default(),
        }
    }
}

/// One solver run inside a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub start: usize,
    pub method: Method,
    pub status: Status,
    pub iterations: usize,
    pub seconds: f64,
    pub x0: Vec<f64>,
    pub final_x: Vec<f64>,
}

/// `(Min, Max, Mean, Median, Mode, SD)` of iteration counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
    /// Most frequent count; ties go to the smallest.
    pub mode: usize,
    /// Sample standard deviation (`n - 1`), 0 for a single run.
    pub sd: f64,
}

/// `(Min, Max, Mean, Median, ⌈Mode⌉, SD)` of wall times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Mode of the times rounded up to whole seconds.
    pub mode_ceil: u64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    /// Runs that ended Converged or MaxIterations.
    pub counted: usize,
    pub status_counts: BTreeMap<String, usize>,
    pub iterations: Option<IterationStats>,
}

/// Iteration statistics only, so that the file is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub format_version: u32,
    pub problem: String,
    pub seed: u64,
    pub starts: usize,
    pub methods: Vec<MethodStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    pub seconds: Option<TimeStats>,
}

/// Wall-time statistics, kept apart from [`BenchStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTiming {
    pub format_version: u32,
    pub problem: String,
    pub seed: u64,
    pub starts: usize,
    pub methods: Vec<MethodTiming>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    /// Ordered by method, then start index.
    pub runs: Vec<RunRecord>,
    pub stats: BenchStats,
    pub timing: BenchTiming,
}

/// Runs every method from the same `starts` points on a pool of `jobs` threads.
pub fn run_bench(ps: &ProblemSpec, cfg: &BenchConfig) -> Result<BenchOutput> {
    if cfg.starts == 0 {
        return Err(Error::InvalidConfig("starts must be at least 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one method is required".into(),
        ));
    }
    cfg.solver.validate()?;
    let bounds = cfg.sample_box.as_ref().unwrap_or(&ps.sample_box);
    if bounds.len() != ps.n {
        return Err(Error::DimensionMismatch {
            expected: ps.n,
            found: bounds.len(),
        });
    }
    if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
        return Err(Error::InvalidConfig(format!(
            "sample box needs lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let starts = sample_starts(bounds, cfg.seed, cfg.starts);
    let tasks: Vec<(Method, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.starts).map(move |i| (m, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    let outcomes: Vec<(RunRecord, bool)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(method, i)| {
                let solver = SolverConfig {
                    method,
                    ..cfg.solver.clone()
                };
                let clock = Instant::now();
                let trace = run(ps, &starts[i], &solver)?;
                let slow = rate_warning(&trace).is_some();
                Ok((
                    RunRecord {
                        start: i,
                        method,
                        status: trace.status,
                        iterations: trace.iterations,
                        seconds: clock.elapsed().as_secs_f64(),
                        x0: trace.x0,
                        final_x: trace.final_x,
                    },
                    slow,
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let slow = outcomes.iter().filter(|(_, s)| *s).count();
    if slow > 0 {
        log::warn!(
            "local rate probe failed on {slow} converged quasi-Newton runs of {}",
            ps.name
        );
    }
    let runs: Vec<RunRecord> = outcomes.into_iter().map(|(r, _)| r).collect();
    let (stats, timing) = summarize(&ps.name, cfg.seed, cfg.starts, &cfg.methods, &runs);
    Ok(BenchOutput {
        runs,
        stats,
        timing,
    })
}

/// Recomputes both summaries from raw run records.
pub fn summarize(
    problem: &str,
    seed: u64,
    starts: usize,
    methods: &[Method],
    runs: &[RunRecord],
) -> (BenchStats, BenchTiming) {
    let mut per_method = Vec::new();
    let mut timings = Vec::new();
    for &m in methods {
        let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.method == m).collect();
        let mut status_counts = BTreeMap::new();
        for r in &mine {
            *status_counts
                .entry(r.status.as_str().to_string())
                .or_insert(0) += 1;
        }
        let counted: Vec<&RunRecord> = mine
            .iter()
            .copied()
            .filter(|r| matches!(r.status, Status::Converged | Status::MaxIterations))
            .collect();
        let its: Vec<usize> = counted.iter().map(|r| r.iterations).collect();
        let secs: Vec<f64> = counted.iter().map(|r| r.seconds).collect();
        per_method.push(MethodStats {
            method: m,
            counted: counted.len(),
            status_counts,
            iterations: iteration_stats(&its),
        });
        timings.push(MethodTiming {
            method: m,
            seconds: time_stats(&secs),
        });
    }
    (
        BenchStats {
            format_version: FORMAT_VERSION,
            problem: problem.to_string(),
            seed,
            starts,
            methods: per_method,
        },
        BenchTiming {
            format_version: FORMAT_VERSION,
            problem: problem.to_string(),
            seed,
            starts,
            methods: timings,
        },
    )
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

fn median_sorted(xs: &[f64]) -> f64 {
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Most frequent value, smallest on ties.
fn mode<T: Ord + Copy>(xs: &[T]) -> T {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for &x in xs {
        *counts.entry(x).or_insert(0) += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    counts
        .into_iter()
        .find(|&(_, c)| c == top)
        .map(|(v, _)| v)
        .expect("nonempty input")
}

pub fn iteration_stats(its: &[usize]) -> Option<IterationStats> {
    if its.is_empty() {
        return None;
    }
    let mut sorted = its.to_vec();
    sorted.sort_unstable();
    let as_f: Vec<f64> = sorted.iter().map(|&k| k as f64).collect();
    let (mean, sd) = mean_sd(&as_f);
    Some(IterationStats {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean,
        median: median_sorted(&as_f),
        mode: mode(&sorted),
        sd,
    })
}

pub fn time_stats(secs: &[f64]) -> Option<TimeStats> {
    if secs.is_empty() {
        return None;
    }
    let mut sorted = secs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, sd) = mean_sd(&sorted);
    let bins: Vec<u64> = sorted.iter().map(|s| s.ceil().max(0.0) as u64).collect();
    Some(TimeStats {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean,
        median: median_sorted(&sorted),
        mode_ceil: mode(&bins),
        sd,
    })
}

/// Fixed-width table in the layout `(Min, Max, Mean, Median, Mode, SD)`.
pub fn format_table(stats: &BenchStats, timing: Option<&BenchTiming>) -> String {
    let mut out = format!(
        "{} ({} initial points, seed {})\n{:<6} {:<44} {}\n",
        stats.problem,
        stats.starts,
        stats.seed,
        "Method",
        "Iterations (Min, Max, Mean, Median, Mode, SD)",
        "Time s (Min, Max, Mean, Median, ⌈Mode⌉, SD)"
    );
    for ms in &stats.methods {
        let its = match &ms.iterations {
            Some(s) => format!(
                "({}, {}, {:.2}, {:.1}, {}, {:.2})",
                s.min, s.max, s.mean, s.median, s.mode, s.sd
            ),
            None => "(no counted runs)".to_string(),
        };
        let time = timing
            .and_then(|t| t.methods.iter().find(|m| m.method == ms.method))
            .and_then(|m| m.seconds.as_ref())
            .map(|s| {
                format!(
                    "({:.4}, {:.4}, {:.4}, {:.4}, {}, {:.4})",
                    s.min, s.max, s.mean, s.median, s.mode_ceil, s.sd
                )
            })
            .unwrap_or_default();
        out.push_str(&format!(
            "{:<6} {:<44} {}\n",
            ms.method.short_name().to_uppercase(),
            its,
            time
        ));
        let failures: Vec<String> = ms
            .status_counts
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "Converged" | "MaxIterations"))
            .map(|(k, v)| format!("{k}: {v}"))
            .collect();
        if !failures.is_empty() {
            out.push_str(&format!("       not counted: {}\n", failures.join(", ")));
        }
    }
    out
}
