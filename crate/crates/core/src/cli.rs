//! The `setopt` command line: `solve`, `bench`, `plot-data` and `check`.
//!
//! Exit codes: 0 success, 2 iteration cap reached, 3 numerical failure or failed check,
//! 64 usage or input error, 74 file error.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::bench::{
    format_table, run_bench, sample_start, write_images_csv, write_iterates_csv, write_runs_csv,
    write_trace_csv, BenchConfig, TraceRow, FORMAT_VERSION,
};
use crate::direction::{solve_for_a, HessianStore, InnerConfig};
use crate::error::Error;
use crate::oracle::{
    brute_min, brute_wmin, certify_weak_minimality, fd_jacobian, gerstewitz_bisect, grid_minmax,
    GridSpec, Verdict,
};
use crate::problem::{builtin, load, scale_jacobian, ProblemSpec, BUILTIN_NAMES};
use crate::setorder::{minimal_elements, weakly_minimal_elements, MinimalStructure};
use crate::solver::{rate_warning, run, Method, SolverConfig, Status, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Default for `--out` when the flag is absent.
pub const OUT_DIR_ENV: &str = "SETOPT_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "setopt",
    version,
    about = "Quasi-Newton and steepest-descent methods for set optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solve and write its trace.
    Solve(SolveArgs),
    /// Multi-start statistics for one or more methods.
    Bench(BenchArgs),
    /// Image points and iterates of one solve, for external plotting.
    PlotData(SolveArgs),
    /// Validate a problem and audit it against the brute-force oracles.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct SolverFlags {
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.6)]
    nu: f64,
    /// Stop when the direction norm drops below this.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

impl SolverFlags {
    fn config(&self, method: Method, seed: u64) -> SolverConfig {
        SolverConfig {
            beta: self.beta,
            nu: self.nu,
            eps_stop: self.eps,
            max_iter: self.max_iter,
            method,
            seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Built-in name (ex1..ex7) or path to a problem file.
    #[arg(long)]
    problem: String,
    /// Comma-separated start point; defaults to the center of the sample box.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, default_value = "qnm")]
    method: Method,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; falls back to $SETOPT_OUT_DIR, then `setopt-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep F(x_k) for every iteration regardless of size.
    #[arg(long)]
    trace_images: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 100)]
    starts: usize,
    /// Comma-separated list of qnm, sd.
    #[arg(long, default_value = "qnm,sd")]
    methods: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample box as lo:hi per coordinate, comma separated.
    #[arg(long = "box", allow_hyphen_values = true)]
    sample_box: Option<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Gerstewitz,
    Min,
    Subproblem,
    Weakmin,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    problem: String,
    /// Random points (or vectors) per audit.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Additionally compare against one brute-force oracle.
    #[arg(long, value_enum)]
    oracle: Option<OracleKind>,
    /// Point to certify with `--oracle weakmin`.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Grid step for `--oracle weakmin`.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

/// What ended a command early.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_IO,
            Failure::Numerical(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Numerical(m) => m,
        }
    }
}

fn is_io(e: &Error) -> bool {
    matches!(e.root(), Error::Io { .. } | Error::Csv(_) | Error::Json(_))
}

/// Errors met while reading inputs.
fn input_err(e: Error) -> Failure {
    if is_io(&e) {
        Failure::Io(e.to_string())
    } else {
        Failure::Usage(e.to_string())
    }
}

/// Errors met while computing.
fn runtime_err(e: Error) -> Failure {
    if is_io(&e) {
        Failure::Io(e.to_string())
    } else {
        Failure::Numerical(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::PlotData(a) => cmd_plotdata(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

/// A built-in name, or else a path to a problem file.
pub fn resolve_problem(spec: &str) -> crate::error::Result<ProblemSpec> {
    if BUILTIN_NAMES.contains(&spec) {
        return builtin(spec);
    }
    let path = Path::new(spec);
    if path.exists() || spec.contains(['/', '\\']) || spec.ends_with(".prob") {
        return load(path);
    }
    Err(Error::UnknownProblem(spec.to_string()))
}

fn parse_vector(raw: &str, n: usize, what: &str) -> Result<DVector<f64>, Failure> {
    let vals: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            Failure::Usage(format!(
                "{what}: expected {n} comma-separated numbers, got {raw:?}"
            ))
        })?;
    if vals.len() != n || vals.iter().any(|v| !v.is_finite()) {
        return Err(Failure::Usage(format!(
            "{what}: expected {n} finite comma-separated numbers, got {raw:?}"
        )));
    }
    Ok(DVector::from_vec(vals))
}

fn parse_box(raw: &str, n: usize) -> Result<Vec<(f64, f64)>, Failure> {
    let usage = || {
        Failure::Usage(format!(
            "--box: expected {n} ranges lo:hi separated by commas, got {raw:?}"
        ))
    };
    let out: Vec<(f64, f64)> = raw
        .split(',')
        .map(|part| {
            let (lo, hi) = part.split_once(':').ok_or_else(usage)?;
            let lo: f64 = lo.trim().parse().map_err(|_| usage())?;
            let hi: f64 = hi.trim().parse().map_err(|_| usage())?;
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok((lo, hi))
            } else {
                Err(usage())
            }
        })
        .collect::<Result<_, _>>()?;
    if out.len() != n {
        return Err(usage());
    }
    Ok(out)
}

fn parse_methods(raw: &str) -> Result<Vec<Method>, Failure> {
    let mut methods = Vec::new();
    for part in raw.split(',').filter(|s| !s.trim().is_empty()) {
        let m: Method = part
            .parse()
            .map_err(|e: Error| Failure::Usage(e.to_string()))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Failure::Usage("--methods: at least one of qnm, sd".into()));
    }
    Ok(methods)
}

fn out_dir(flag: &Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = flag
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("setopt-out"));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::MaxIterations => EXIT_MAX_ITER,
        Status::LineSearchFailure | Status::NumericalError => EXIT_FAILURE,
    }
}

/// Contents of `summary.json` written by `solve`.
#[derive(Debug, Serialize)]
pub struct SolveSummary<'a> {
    pub format_version: u32,
    pub problem: &'a str,
    pub method: Method,
    pub config: &'a SolverConfig,
    pub x0: &'a [f64],
    pub final_x: &'a [f64],
    pub status: Status,
    pub message: Option<&'a str>,
    pub iterations: usize,
    pub final_norm_u: f64,
    pub final_phi: f64,
    pub final_varsigma: f64,
    pub total_skips: u64,
    pub violating: Option<usize>,
    pub elapsed_ms: f64,
}

fn setup_solve(
    a: &SolveArgs,
    force_images: bool,
) -> Result<(ProblemSpec, DVector<f64>, SolverConfig), Failure> {
    let ps = resolve_problem(&a.problem).map_err(input_err)?;
    let x0 = match &a.x0 {
        Some(raw) => parse_vector(raw, ps.n, "--x0")?,
        None => ps.box_center(),
    };
    let mut cfg = a.solver.config(a.method, a.seed);
    cfg.force_images = force_images;
    cfg.validate().map_err(input_err)?;
    Ok((ps, x0, cfg))
}

fn solve_trace(ps: &ProblemSpec, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<Trace, Failure> {
    let trace = run(ps, x0, cfg).map_err(runtime_err)?;
    let last = trace.last();
    println!(
        "{} {}: {} after {} iterations, x = {:?}, |u| = {:.3e}, phi = {:.3e}",
        trace.problem,
        trace.method,
        trace.status.as_str(),
        trace.iterations,
        trace.final_x,
        last.norm_u,
        last.phi
    );
    if let Some(msg) = &trace.message {
        eprintln!("{msg}");
    }
    if let Some(msg) = rate_warning(&trace) {
        log::warn!("{msg}");
    }
    Ok(trace)
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, Failure> {
    let (ps, x0, cfg) = setup_solve(a, a.trace_images)?;
    let dir = out_dir(&a.out)?;
    let trace = solve_trace(&ps, &x0, &cfg)?;

    let trace_path = dir.join("trace.csv");
    write_trace_csv(create(&trace_path)?, ps.n, &TraceRow::rows(&trace))
        .map_err(|e| io_err(&trace_path, e))?;
    let last = trace.last();
    let summary = SolveSummary {
        format_version: FORMAT_VERSION,
        problem: &trace.problem,
        method: trace.method,
        config: &cfg,
        x0: &trace.x0,
        final_x: &trace.final_x,
        status: trace.status,
        message: trace.message.as_deref(),
        iterations: trace.iterations,
        final_norm_u: last.norm_u,
        final_phi: last.phi,
        final_varsigma: last.varsigma,
        total_skips: trace.total_skips,
        violating: trace.violating,
        elapsed_ms: trace.elapsed_ms,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(status_code(trace.status))
}

fn cmd_plotdata(a: &SolveArgs) -> Result<i32, Failure> {
    let ps = resolve_problem(&a.problem).map_err(input_err)?;
    if ps.m > 3 {
        return Err(Failure::Usage(format!(
            "plot-data supports image dimension m <= 3, but {} has m = {}",
            ps.name, ps.m
        )));
    }
    let (ps, x0, cfg) = setup_solve(a, true)?;
    let dir = out_dir(&a.out)?;
    let trace = solve_trace(&ps, &x0, &cfg)?;
    let images = dir.join("images.csv");
    write_images_csv(create(&images)?, ps.m, &trace).map_err(|e| io_err(&images, e))?;
    let iterates = dir.join("iterates.csv");
    write_iterates_csv(create(&iterates)?, ps.n, &trace).map_err(|e| io_err(&iterates, e))?;
    Ok(status_code(trace.status))
}

fn cmd_bench(a: &BenchArgs) -> Result<i32, Failure> {
    let ps = resolve_problem(&a.problem).map_err(input_err)?;
    let methods = parse_methods(&a.methods)?;
    let sample_box = a
        .sample_box
        .as_deref()
        .map(|raw| parse_box(raw, ps.n))
        .transpose()?;
    if a.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let cfg = BenchConfig {
        starts: a.starts,
        methods,
        seed: a.seed,
        sample_box,
        jobs: a.jobs,
        solver: a.solver.config(Method::QuasiNewton, a.seed),
    };
    cfg.solver.validate().map_err(input_err)?;
    if cfg.starts == 0 {
        return Err(Failure::Usage("--starts must be at least 1".into()));
    }
    let dir = out_dir(&a.out)?;
    let out = run_bench(&ps, &cfg).map_err(runtime_err)?;

    write_json(&dir.join("stats.json"), &out.stats)?;
    write_json(&dir.join("timing.json"), &out.timing)?;
    let runs = dir.join("runs.csv");
    write_runs_csv(create(&runs)?, ps.n, &out.runs).map_err(|e| io_err(&runs, e))?;
    let table = format_table(&out.stats, Some(&out.timing));
    let table_path = dir.join("table.txt");
    fs::write(&table_path, &table).map_err(|e| io_err(&table_path, e))?;
    print!("{table}");
    Ok(EXIT_OK)
}

fn cmd_check(a: &CheckArgs) -> Result<i32, Failure> {
    let ps = resolve_problem(&a.problem).map_err(input_err)?;
    println!(
        "parse: ok ({}: n = {}, m = {}, p = {}, {} cone rows)",
        ps.name,
        ps.n,
        ps.m,
        ps.p,
        ps.cone.rows()
    );
    println!(
        "cone: ok (pointed, e interior, L = {:.6})",
        ps.cone.lipschitz()
    );

    // analytic Jacobians against central differences
    let mut worst: f64 = 0.0;
    for s in 0..a.samples {
        let x = sample_start(&ps.sample_box, a.seed, s);
        for i in 0..ps.p {
            let an = ps.jacobian(i, &x).map_err(runtime_err)?;
            let fd = fd_jacobian(&ps, i, &x, 1e-6).map_err(runtime_err)?;
            for (e_an, e_fd) in an.iter().zip(fd.iter()) {
                let dev = (e_an - e_fd).abs();
                worst = worst.max(dev);
                if dev > 1e-5 * (1.0 + e_an.abs()) {
                    println!("jacobian: FAIL");
                    return Err(Failure::Numerical(format!(
                        "jacobian check failed for f^{} at x = {:?}: analytic {e_an}, finite difference {e_fd}",
                        i + 1,
                        x.as_slice()
                    )));
                }
            }
        }
    }
    println!(
        "jacobian: ok at {} points (max deviation {worst:.3e})",
        a.samples
    );

    match a.oracle {
        None => Ok(EXIT_OK),
        Some(OracleKind::Gerstewitz) => check_gerstewitz(&ps, a),
        Some(OracleKind::Min) => check_min(&ps, a),
        Some(OracleKind::Subproblem) => check_subproblem(&ps, a),
        Some(OracleKind::Weakmin) => check_weakmin(&ps, a),
    }
}

fn check_gerstewitz(ps: &ProblemSpec, a: &CheckArgs) -> Result<i32, Failure> {
    let cube = vec![(-10.0, 10.0); ps.m];
    let mut worst: f64 = 0.0;
    for s in 0..a.samples {
        let y = sample_start(&cube, a.seed, s);
        let closed = ps.cone.gerstewitz(&y).map_err(runtime_err)?;
        let bisect = gerstewitz_bisect(&ps.cone, &y, 1e-12).map_err(runtime_err)?;
        worst = worst.max((closed - bisect).abs());
    }
    if worst > 1e-10 {
        return Err(Failure::Numerical(format!(
            "gerstewitz oracle check failed: max deviation {worst:.3e}"
        )));
    }
    println!(
        "oracle gerstewitz: ok on {} vectors (max deviation {worst:.3e})",
        a.samples
    );
    Ok(EXIT_OK)
}

fn check_min(ps: &ProblemSpec, a: &CheckArgs) -> Result<i32, Failure> {
    for s in 0..a.samples {
        let x = sample_start(&ps.sample_box, a.seed, s);
        let values = ps.eval_f(&x).map_err(runtime_err)?;
        let fast = minimal_elements(&ps.cone, &values).map_err(runtime_err)?;
        let weak = weakly_minimal_elements(&ps.cone, &values).map_err(runtime_err)?;
        if fast != brute_min(&ps.cone, &values).map_err(runtime_err)?
            || weak != brute_wmin(&ps.cone, &values).map_err(runtime_err)?
        {
            return Err(Failure::Numerical(format!(
                "min oracle check failed at x = {:?}",
                x.as_slice()
            )));
        }
    }
    println!("oracle min: ok at {} points", a.samples);
    Ok(EXIT_OK)
}

fn check_subproblem(ps: &ProblemSpec, a: &CheckArgs) -> Result<i32, Failure> {
    if ps.n > 2 {
        return Err(Failure::Usage(format!(
            "--oracle subproblem needs n <= 2 (grid search), {} has n = {}",
            ps.name, ps.n
        )));
    }
    let store = HessianStore::new(ps.n, ps.p, ps.cone.rows());
    let per_axis = if ps.n == 1 { 200_000.0 } else { 1_000.0 };
    let mut worst: f64 = 0.0;
    for s in 0..a.samples {
        let x = sample_start(&ps.sample_box, a.seed, s);
        let values = ps.eval_f(&x).map_err(runtime_err)?;
        let grads: Vec<_> = (0..ps.p)
            .map(|i| ps.jacobian(i, &x).map(|j| scale_jacobian(&ps.cone, &j)))
            .collect::<Result<_, _>>()
            .map_err(runtime_err)?;
        let ms = MinimalStructure::compute(&ps.cone, &values, 0.0, 1e-8).map_err(runtime_err)?;
        let first = ms.partitions().next().expect("Min is nonempty");
        let sol = solve_for_a(&grads, &store, &first, None, &InnerConfig::default())
            .map_err(runtime_err)?;
        let (g, h) = crate::direction::collect_terms(&grads, &store, &first);
        // with identity models |u*| <= max |g_t|
        let radius = g.iter().map(|t| t.norm()).fold(0.0, f64::max) + 1.0;
        let grid = GridSpec::uniform(&vec![(-radius, radius); ps.n], 2.0 * radius / per_axis)
            .map_err(runtime_err)?;
        let (_, phi) = grid_minmax(&g, &h, &grid).map_err(runtime_err)?;
        let dev = (phi - sol.phi).abs() / (1.0 + sol.phi.abs());
        worst = worst.max(dev);
        if dev > 1e-4 {
            return Err(Failure::Numerical(format!(
                "subproblem oracle check failed at x = {:?}: solver phi {}, grid phi {phi}",
                x.as_slice(),
                sol.phi
            )));
        }
    }
    println!(
        "oracle subproblem: ok at {} points (max relative phi deviation {worst:.3e})",
        a.samples
    );
    Ok(EXIT_OK)
}

fn check_weakmin(ps: &ProblemSpec, a: &CheckArgs) -> Result<i32, Failure> {
    let raw =
        a.x.as_deref()
            .ok_or_else(|| Failure::Usage("--oracle weakmin needs --x <point>".into()))?;
    let x = parse_vector(raw, ps.n, "--x")?;
    let grid = GridSpec::uniform(&ps.sample_box, a.step).map_err(input_err)?;
    match certify_weak_minimality(ps, &x, &grid).map_err(runtime_err)? {
        Verdict::NoneFoundAtResolution => {
            println!(
                "oracle weakmin: no dominating point on the sample box at step {} ({} points)",
                a.step,
                grid.count()
            );
            Ok(EXIT_OK)
        }
        Verdict::Violated(better) => Err(Failure::Numerical(format!(
            "weakmin oracle check failed: F({better:?}) strictly dominates F({:?})",
            x.as_slice()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_and_box_parsing() {
        assert_eq!(
            parse_vector("1, -2.5", 2, "--x0").unwrap().as_slice(),
            &[1.0, -2.5]
        );
        assert!(parse_vector("1", 2, "--x0").is_err());
        assert!(parse_vector("a,b", 2, "--x0").is_err());
        assert_eq!(
            parse_box("-5:5,0:1", 2).unwrap(),
            vec![(-5.0, 5.0), (0.0, 1.0)]
        );
        assert!(parse_box("5:-5", 1).is_err());
        assert_eq!(
            parse_methods("sd,qnm,sd").unwrap(),
            vec![Method::SteepestDescent, Method::QuasiNewton]
        );
        assert!(parse_methods("bfgs").is_err());
    }

    #[test]
    fn unknown_problem_is_a_usage_error() {
        assert!(matches!(
            resolve_problem("nosuch"),
            Err(Error::UnknownProblem(_))
        ));
        assert!(matches!(
            resolve_problem("missing/file.prob"),
            Err(Error::Io { .. })
        ));
    }
}
