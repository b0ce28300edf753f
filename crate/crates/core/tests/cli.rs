use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use setopt::bench::{iteration_stats, read_runs_csv, read_trace_csv, BenchStats};
use setopt::solver::{Method, Status};

fn setopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setopt"))
        .args(args)
        .env_remove("SETOPT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn problem_file(name: &str) -> String {
    format!("{}/problems/{name}.prob", env!("CARGO_MANIFEST_DIR"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = setopt(&[
        "solve",
        "--problem",
        "ex1",
        "--x0",
        "2.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let text = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(text.starts_with("k,x1,norm_u,phi,t,q,varsigma,gap,skips,millis\n"));
    let rows = read_trace_csv(text.as_bytes()).unwrap();
    assert!(rows.len() >= 2);
    assert_eq!(rows[0].x, vec![2.3]);
    assert!(rows.last().unwrap().t.is_none());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "Converged");
    assert_eq!(summary["problem"], "ex1");
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = setopt(&[
        "solve",
        "--problem",
        "ex1",
        "--x0",
        "2.3",
        "--beta",
        "1.5",
        "--out",
        out,
    ]);
    assert_eq!(code(&res), 64);
    assert!(stderr(&res).contains("(0,1)"), "{}", stderr(&res));

    let res = setopt(&["solve", "--problem", "nosuch", "--out", out]);
    assert_eq!(code(&res), 64);
    assert!(stderr(&res).contains("UnknownProblem"));

    let res = setopt(&["solve", "--problem", "ex3", "--x0", "1", "--out", out]);
    assert_eq!(code(&res), 64);

    assert_eq!(code(&setopt(&["frobnicate"])), 64);
}

#[test]
fn max_iterations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let res = setopt(&[
        "solve",
        "--problem",
        "ex4",
        "--x0",
        "-3,2",
        "--max-iter",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 2);
}

#[test]
fn io_errors_exit_74() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "");
    let res = setopt(&[
        "solve",
        "--problem",
        "ex1",
        "--x0",
        "2.3",
        "--out",
        &format!("{blocker}/sub"),
    ]);
    assert_eq!(code(&res), 74);
    let missing = dir.path().join("missing.prob");
    let res = setopt(&["solve", "--problem", missing.to_str().unwrap()]);
    assert_eq!(code(&res), 74);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_setopt"))
        .args(["solve", "--problem", "ex5", "--x0", "4.0"])
        .env("SETOPT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn plot_data_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex1");
    let res = setopt(&[
        "plot-data",
        "--problem",
        "ex1",
        "--x0",
        "2.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let images = fs::read_to_string(out.join("images.csv")).unwrap();
    let iterates = fs::read_to_string(out.join("iterates.csv")).unwrap();
    assert!(images.starts_with("k,i,y1,y2\n"));
    let recorded = iterates.lines().count() - 1;
    assert_eq!(images.lines().count() - 1, 50 * recorded);

    let out = dir.path().join("ex7");
    let res = setopt(&[
        "plot-data",
        "--problem",
        "ex7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let images = fs::read_to_string(out.join("images.csv")).unwrap();
    assert!(images.starts_with("k,i,y1,y2,y3\n"));

    let m4 = write(
        dir.path(),
        "m4.prob",
        "[meta] n=1 m=4 p=1\n[box]\n-1 1\n[functions]\nx1\nx1^2\nx1^3\nx1^4\n",
    );
    let res = setopt(&[
        "plot-data",
        "--problem",
        &m4,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 64);
    assert!(stderr(&res).contains("m <= 3"), "{}", stderr(&res));
}

#[test]
fn check_passes_on_shipped_problem_files() {
    for name in ["ex1", "ex5", "ex7"] {
        let res = setopt(&["check", "--problem", &problem_file(name)]);
        assert_eq!(code(&res), 0, "{name}: {}", stderr(&res));
        assert!(String::from_utf8_lossy(&res.stdout).contains("jacobian: ok"));
    }
}

#[test]
fn check_names_the_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    let rank = write(
        dir.path(),
        "rank.prob",
        "[meta] n=1 m=2 p=1\n[cone] rows=2\n1 1\n2 2\ne= 1 1\n[box]\n-1 1\n[functions]\nx1\nx1\n",
    );
    let res = setopt(&["check", "--problem", &rank]);
    assert_ne!(code(&res), 0);
    assert!(stderr(&res).contains("RankDeficient"), "{}", stderr(&res));

    let log = write(
        dir.path(),
        "log.prob",
        "[meta] n=1 m=1 p=1\n[box]\n-1 1\n[functions]\nlog(x1)\n",
    );
    let res = setopt(&["check", "--problem", &log]);
    assert_ne!(code(&res), 0);
    let msg = stderr(&res);
    assert!(
        msg.contains("DomainError") && msg.contains("x = ["),
        "{msg}"
    );
}

#[test]
fn bench_stats_are_rederivable_from_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let res = setopt(&[
        "bench",
        "--problem",
        "ex3",
        "--starts",
        "20",
        "--methods",
        "qnm,sd",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let stats: BenchStats =
        serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    let runs = read_runs_csv(fs::File::open(out.join("runs.csv")).unwrap()).unwrap();
    assert_eq!(runs.len(), 40);
    assert!(out.join("timing.json").exists());
    assert!(fs::read_to_string(out.join("table.txt"))
        .unwrap()
        .contains("QNM"));
    for ms in &stats.methods {
        let iters: Vec<usize> = runs
            .iter()
            .filter(|r| {
                r.method == ms.method
                    && matches!(r.status, Status::Converged | Status::MaxIterations)
            })
            .map(|r| r.iterations)
            .collect();
        assert_eq!(ms.iterations, iteration_stats(&iters));
    }
    let median = |m: Method| {
        stats
            .methods
            .iter()
            .find(|s| s.method == m)
            .and_then(|s| s.iterations.as_ref())
            .unwrap()
            .median
    };
    assert!(median(Method::QuasiNewton) <= median(Method::SteepestDescent));
}

#[test]
fn bench_single_start_has_degenerate_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one");
    let res = setopt(&[
        "bench",
        "--problem",
        "ex1",
        "--starts",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let stats: BenchStats =
        serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    for ms in &stats.methods {
        let it = ms.iterations.as_ref().unwrap();
        let k = it.min as f64;
        assert_eq!(
            (it.max as f64, it.mean, it.median, it.mode as f64),
            (k, k, k, k)
        );
        assert_eq!(it.sd, 0.0);
    }
}
