//! The descent loop shared by the quasi-Newton method and the steepest-descent baseline.
//!
//! Each iteration computes the minimal elements of `F(x_k)`, solves the direction
//! subproblem over the partition set, runs a cone Armijo backtracking search along the
//! chosen selection and (for the quasi-Newton method) refreshes every BFGS model.

mod config;
mod report;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::direction::{solve_subproblem, HessianStore, WarmStarts};
use crate::error::{check_dim, Error, Result};
use crate::problem::{scale_jacobian, ProblemSpec};
use crate::setorder::MinimalStructure;

pub use config::{Method, SolverConfig};
pub use report::{
    boundedness_bound, rate_probe, rate_warning, stationarity_report, RateProbe, StationarityReport,
};

/// Image snapshots are kept when `p * m` is at most this, unless forced.
pub const IMAGE_SNAPSHOT_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchFailure,
    NumericalError,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIterations => "MaxIterations",
            Status::LineSearchFailure => "LineSearchFailure",
            Status::NumericalError => "NumericalError",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Status::Converged,
            Status::MaxIterations,
            Status::LineSearchFailure,
            Status::NumericalError,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

/// Everything recorded at iterate `x_k`. Step fields are `None` at the terminal iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    /// `F(x_k)`, present when size-gated in.
    pub images: Option<Vec<Vec<f64>>>,
    pub minimal: Vec<usize>,
    pub w: usize,
    pub partitions: u128,
    pub a: Vec<usize>,
    pub u: Vec<f64>,
    pub norm_u: f64,
    pub phi: f64,
    pub t: Option<f64>,
    pub q: Option<u32>,
    pub varsigma: f64,
    pub gap: f64,
    pub inner_iterations: usize,
    /// BFGS pairs skipped by the curvature rule during this step.
    pub skips: usize,
    /// Largest relative secant residual of this step's updates.
    pub secant_residual: f64,
    /// `max_i |J f^i(x_k)|_F`.
    pub jac_norm: f64,
    /// Smallest eigenvalue over the models used at this iterate.
    pub min_eig: f64,
    /// Wall time since the start of the run.
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub problem: String,
    pub method: Method,
    pub x0: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub message: Option<String>,
    /// Number of accepted steps.
    pub iterations: usize,
    pub final_x: Vec<f64>,
    pub total_skips: u64,
    pub elapsed_ms: f64,
    /// The 1-based selection index `j` that blocked the line search, if any.
    pub violating: Option<usize>,
}

impl Trace {
    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("a trace has at least one record")
    }
}

/// Accepted Armijo step `t = nu^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    pub t: f64,
    pub q: u32,
}

/// Smallest `q` with `f^{a_j}(x + nu^q u) ⪯ f^{a_j}(x) + beta nu^q J f^{a_j}(x) u` for every `j`.
///
/// `jacobians[j]` is the raw Jacobian of `f^{a_j}` at `x`.
pub fn armijo_backtrack(
    ps: &ProblemSpec,
    x: &DVector<f64>,
    a: &[usize],
    u: &DVector<f64>,
    jacobians: &[DMatrix<f64>],
    cfg: &SolverConfig,
) -> Result<ArmijoStep> {
    check_dim(a.len(), jacobians.len())?;
    check_dim(ps.n, u.len())?;
    let base: Vec<DVector<f64>> = a.iter().map(|&i| ps.value(i, x)).collect::<Result<_>>()?;
    let slopes: Vec<DVector<f64>> = jacobians.iter().map(|j| j * u).collect();
    let mut violating = 0;
    for q in 0..=cfg.max_backtracks {
        let t = cfg.nu.powi(q as i32);
        let trial = x + u * t;
        let mut ok = true;
        for (j, &i) in a.iter().enumerate() {
            let lhs = match ps.value(i, &trial) {
                Ok(v) => v,
                // outside the domain counts as a failed trial
                Err(Error::Domain { .. }) => {
                    ok = false;
                    violating = j + 1;
                    break;
                }
                Err(e) => return Err(e),
            };
            let rhs = &base[j] + &slopes[j] * (cfg.beta * t);
            if !ps.cone.leq(&lhs, &rhs, cfg.tol_armijo)? {
                ok = false;
                violating = j + 1;
                break;
            }
        }
        if ok {
            return Ok(ArmijoStep { t, q });
        }
    }
    Err(Error::LineSearchFailure {
        backtracks: cfg.max_backtracks,
        violating,
    })
}

/// Function values, raw Jacobians and scalarized gradients at one point.
struct PointData {
    values: Vec<DVector<f64>>,
    jacobians: Vec<DMatrix<f64>>,
    grads: Vec<DMatrix<f64>>,
}

impl PointData {
    fn at(ps: &ProblemSpec, x: &DVector<f64>) -> Result<Self> {
        let values = ps.eval_f(x)?;
        let jacobians: Vec<DMatrix<f64>> = (0..ps.p)
            .map(|i| ps.jacobian(i, x))
            .collect::<Result<_>>()?;
        let grads = jacobians
            .iter()
            .map(|j| scale_jacobian(&ps.cone, j))
            .collect();
        Ok(Self {
            values,
            jacobians,
            grads,
        })
    }
}

struct Outcome {
    status: Status,
    message: Option<String>,
    violating: Option<usize>,
}

/// Runs the method selected in `cfg` from `x0`.
///
/// Configuration and dimension errors are returned directly; failures during the run
/// end the trace with a non-converged [`Status`].
pub fn run(ps: &ProblemSpec, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<Trace> {
    cfg.validate()?;
    check_dim(ps.n, x0.len())?;
    let start = Instant::now();
    let mut store = HessianStore::new(ps.n, ps.p, ps.cone.rows());
    let mut records = Vec::new();
    let mut x = x0.clone();
    let keep_images = cfg.force_images || ps.p * ps.m <= IMAGE_SNAPSHOT_LIMIT;

    let outcome = iterate(
        ps,
        cfg,
        &mut x,
        &mut store,
        &mut records,
        keep_images,
        start,
    );
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let violating = match e.root() {
                Error::LineSearchFailure { violating, .. } => Some(*violating),
                _ => None,
            };
            let status = if violating.is_some() {
                Status::LineSearchFailure
            } else {
                Status::NumericalError
            };
            Outcome {
                status,
                message: Some(e.to_string()),
                violating,
            }
        }
    };
    let iterations = records.iter().filter(|r| r.t.is_some()).count();
    let trace = Trace {
        problem: ps.name.clone(),
        method: cfg.method,
        x0: x0.iter().copied().collect(),
        iterations,
        final_x: x.iter().copied().collect(),
        total_skips: store.total_skips(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        records,
        status: outcome.status,
        message: outcome.message,
        violating: outcome.violating,
    };
    Ok(trace)
}

fn iterate(
    ps: &ProblemSpec,
    cfg: &SolverConfig,
    x: &mut DVector<f64>,
    store: &mut HessianStore,
    records: &mut Vec<IterationRecord>,
    keep_images: bool,
    start: Instant,
) -> Result<Outcome> {
    let inner = cfg.inner();
    let mut warm = WarmStarts::default();
    let mut here = PointData::at(ps, x)?;
    for k in 0..=cfg.max_iter {
        let ms = MinimalStructure::compute(&ps.cone, &here.values, cfg.tol_order, cfg.tol_group)?;
        let varsigma = ps.cone.varsigma(&here.values)?;
        let sub = solve_subproblem(&here.grads, store, &ms, &mut warm, &inner)?;
        let norm_u = sub.u.norm();
        let mut rec = IterationRecord {
            k,
            x: x.iter().copied().collect(),
            images: keep_images.then(|| {
                here.values
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect()
            }),
            minimal: ms.minimal.clone(),
            w: ms.w(),
            partitions: ms.partition_count(),
            a: sub.a.clone(),
            u: sub.u.iter().copied().collect(),
            norm_u,
            phi: sub.phi,
            t: None,
            q: None,
            varsigma,
            gap: sub.gap,
            inner_iterations: sub.inner_iterations,
            skips: 0,
            secant_residual: 0.0,
            jac_norm: here.jacobians.iter().map(|j| j.norm()).fold(0.0, f64::max),
            min_eig: store.min_eigenvalue(),
            millis: 0.0,
        };
        if norm_u < cfg.eps_stop {
            rec.millis = start.elapsed().as_secs_f64() * 1e3;
            records.push(rec);
            return Ok(Outcome {
                status: Status::Converged,
                message: None,
                violating: None,
            });
        }
        if k == cfg.max_iter {
            rec.millis = start.elapsed().as_secs_f64() * 1e3;
            records.push(rec);
            return Ok(Outcome {
                status: Status::MaxIterations,
                message: None,
                violating: None,
            });
        }

        let jac_a: Vec<DMatrix<f64>> = sub.a.iter().map(|&i| here.jacobians[i].clone()).collect();
        let step = match armijo_backtrack(ps, x, &sub.a, &sub.u, &jac_a, cfg) {
            Ok(s) => s,
            Err(e) => {
                rec.millis = start.elapsed().as_secs_f64() * 1e3;
                records.push(rec);
                return Err(e);
            }
        };
        let s = &sub.u * step.t;
        let x_next = &*x + &s;
        let next = match PointData::at(ps, &x_next) {
            Ok(d) => d,
            Err(e) => {
                records.push(rec);
                return Err(e);
            }
        };
        rec.t = Some(step.t);
        rec.q = Some(step.q);
        if cfg.method == Method::QuasiNewton {
            let nq = ps.cone.rows();
            let mut y_all = Vec::with_capacity(ps.p * nq);
            for i in 0..ps.p {
                for q in 0..nq {
                    y_all.push((next.grads[i].row(q) - here.grads[i].row(q)).transpose());
                }
            }
            let update = store
                .bfgs_update(&s, &y_all, cfg.c_curv)
                .and_then(|r| store.verify_spd().map(|_| r));
            match update {
                Ok(r) => {
                    rec.skips = r.skipped.len();
                    rec.secant_residual = r.max_secant_residual;
                }
                Err(e) => {
                    records.push(rec);
                    return Err(e);
                }
            }
        }
        rec.millis = start.elapsed().as_secs_f64() * 1e3;
        records.push(rec);
        *x = x_next;
        here = next;
    }
    unreachable!("the loop returns at k == max_iter")
}
