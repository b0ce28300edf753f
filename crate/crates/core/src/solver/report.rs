use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::direction::{solve_subproblem, HessianStore, WarmStarts};
use crate::error::Result;
use crate::problem::{scale_jacobian, ProblemSpec};
use crate::setorder::MinimalStructure;

use super::{Method, SolverConfig, Status, Trace};

/// First-order picture at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub x: Vec<f64>,
    pub phi: f64,
    pub u: Vec<f64>,
    pub norm_u: f64,
    /// `tol_stat * (1 + L)`.
    pub threshold: f64,
    pub stationary: bool,
    /// `Min(F(x)) = WMin(F(x))` as index sets.
    pub min_equals_wmin: bool,
    pub w: usize,
    /// Probe points at distance `radius` that have the same `w`. Heuristic.
    pub w_constant_probes: usize,
    pub probes: usize,
    pub radius: f64,
    /// Both regularity conditions held (the second only on the probes).
    pub regular: bool,
}

/// Evaluates `Φ` at `x` with the models in `store` (identity when `None`) and
/// probes the local constancy of `w` on 8 points at radius `1e-4`.
pub fn stationarity_report(
    ps: &ProblemSpec,
    x: &DVector<f64>,
    store: Option<&HessianStore>,
    cfg: &SolverConfig,
) -> Result<StationarityReport> {
    const RADIUS: f64 = 1e-4;
    const PROBES: usize = 8;
    let values = ps.eval_f(x)?;
    let grads: Vec<_> = (0..ps.p)
        .map(|i| ps.jacobian(i, x).map(|j| scale_jacobian(&ps.cone, &j)))
        .collect::<Result<_>>()?;
    let ms = MinimalStructure::compute(&ps.cone, &values, cfg.tol_order, cfg.tol_group)?;
    let identity;
    let store = match store {
        Some(s) => s,
        None => {
            identity = HessianStore::new(ps.n, ps.p, ps.cone.rows());
            &identity
        }
    };
    let sub = solve_subproblem(&grads, store, &ms, &mut WarmStarts::default(), &cfg.inner())?;

    let mut same_w = 0;
    let mut probed = 0;
    for k in 0..PROBES {
        // directions turn in the plane of two coordinates, cycling through the rest
        let angle = std::f64::consts::TAU * k as f64 / PROBES as f64;
        let mut d = DVector::<f64>::zeros(ps.n);
        d[k % ps.n] += angle.cos();
        d[(k + 1) % ps.n] += angle.sin();
        let norm = d.norm();
        if norm == 0.0 {
            continue;
        }
        let probe = x + d * (RADIUS / norm);
        let Ok(vals) = ps.eval_f(&probe) else {
            continue;
        };
        probed += 1;
        if MinimalStructure::compute(&ps.cone, &vals, cfg.tol_order, cfg.tol_group)?.w() == ms.w() {
            same_w += 1;
        }
    }

    let threshold = cfg.tol_stat * (1.0 + ps.cone.lipschitz());
    let min_equals_wmin = ms.minimal == ms.weakly_minimal;
    Ok(StationarityReport {
        x: x.iter().copied().collect(),
        phi: sub.phi,
        u: sub.u.iter().copied().collect(),
        norm_u: sub.u.norm(),
        threshold,
        stationary: sub.phi.abs() <= threshold,
        min_equals_wmin,
        w: ms.w(),
        w_constant_probes: same_w,
        probes: probed,
        radius: RADIUS,
        regular: min_equals_wmin && same_w == probed,
    })
}

/// `2 C L / ρ` with `C` the Jacobian norm bound and `ρ` the smallest model eigenvalue.
pub fn boundedness_bound(jac_norm: f64, lipschitz: f64, min_eig: f64) -> f64 {
    2.0 * jac_norm * lipschitz / min_eig
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateProbe {
    /// `|x_{k+1} - x*| / |x_k - x*|` over the last steps, `x*` the final iterate.
    pub ratios: Vec<f64>,
    pub non_increasing: bool,
    pub last_unit_step: bool,
}

/// Looks at the tail of a converged trace; `None` when there are fewer than four steps.
pub fn rate_probe(trace: &Trace) -> Option<RateProbe> {
    let recs = &trace.records;
    if recs.len() < 5 {
        return None;
    }
    let xs = DVector::from_column_slice(&trace.final_x);
    let dist: Vec<f64> = recs
        .iter()
        .map(|r| (DVector::from_column_slice(&r.x) - &xs).norm())
        .collect();
    // the last distance is zero by construction
    let tail = &dist[dist.len() - 5..dist.len() - 1];
    let ratios: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let non_increasing = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let last_unit_step = recs
        .iter()
        .rev()
        .find_map(|r| r.t)
        .is_some_and(|t| t == 1.0);
    Some(RateProbe {
        ratios,
        non_increasing,
        last_unit_step,
    })
}

/// Built-ins with strongly convex components, where the rate probe is expected to pass.
const RATE_PROBE_PROBLEMS: [&str; 2] = ["ex3", "ex4"];

/// A message when a converged quasi-Newton run on ex3 or ex4 fails the rate probe.
pub fn rate_warning(trace: &Trace) -> Option<String> {
    if trace.method != Method::QuasiNewton
        || trace.status != Status::Converged
        || !RATE_PROBE_PROBLEMS.contains(&trace.problem.as_str())
    {
        return None;
    }
    let probe = rate_probe(trace)?;
    (!(probe.non_increasing && probe.last_unit_step)).then(|| {
        format!(
            "local rate probe on {}: ratios {:?}, non-increasing {}, last step t = 1 {}",
            trace.problem, probe.ratios, probe.non_increasing, probe.last_unit_step
        )
    })
}
