//! Brute-force reference computations.
//!
//! Each oracle follows the defining formula as literally as possible and trades speed
//! for obviousness. The test suite compares the fast paths against these; `check`
//! exposes them on the command line. Grid scans carry an explicit cost guard.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::ConeSpec;
use crate::error::{check_dim, Error, Result};
use crate::problem::ProblemSpec;

/// Largest number of grid points any oracle will visit.
pub const GRID_LIMIT: u128 = 10_000_000;

/// Resolution of the pair weights in the cell lower bound of [`grid_minmax_rounds`].
const LB_WEIGHTS: usize = 64;

/// `G_e(y) = min { t : t e - y in K }` by bisection on `[-B, B]`, `B = 1 + L |y|`.
pub fn gerstewitz_bisect(cone: &ConeSpec, y: &DVector<f64>, tol: f64) -> Result<f64> {
    check_dim(cone.dim(), y.len())?;
    let e = cone.interior();
    let feasible = |t: f64| -> Result<bool> { cone.in_cone(&(e * t - y), 0.0) };
    let bound = 1.0 + cone.lipschitz() * y.norm();
    let (mut lo, mut hi) = (-bound, bound);
    if feasible(lo)? || !feasible(hi)? {
        return Err(Error::BracketFailure { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_values(cone: &ConeSpec, values: &[DVector<f64>]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    values
        .iter()
        .try_for_each(|v| check_dim(cone.dim(), v.len()))
}

/// Indices `i` with `(values[i] - K) ∩ values = {values[i]}`.
pub fn brute_min(cone: &ConeSpec, values: &[DVector<f64>]) -> Result<Vec<usize>> {
    check_values(cone, values)?;
    let mut out = Vec::new();
    for (i, z) in values.iter().enumerate() {
        let mut alone = true;
        for v in values {
            // v in z - K  <=>  A (z - v) >= 0
            let below = cone.facet_values(&(z - v))?.iter().all(|&c| c >= 0.0);
            if below && v != z {
                alone = false;
                break;
            }
        }
        if alone {
            out.push(i);
        }
    }
    Ok(out)
}

/// Indices `i` with `(values[i] - int K) ∩ values = ∅`.
pub fn brute_wmin(cone: &ConeSpec, values: &[DVector<f64>]) -> Result<Vec<usize>> {
    check_values(cone, values)?;
    let mut out = Vec::new();
    for (i, z) in values.iter().enumerate() {
        let mut dominated = false;
        for v in values {
            if cone.facet_values(&(z - v))?.iter().all(|&c| c > 0.0) {
                dominated = true;
                break;
            }
        }
        if !dominated {
            out.push(i);
        }
    }
    Ok(out)
}

/// A rectangular grid `lo + k * step`, `k = 0, 1, ...` while the point stays `<= hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<(f64, f64, f64)>,
}

impl GridSpec {
    pub fn new(axes: Vec<(f64, f64, f64)>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("a grid needs at least one axis".into()));
        }
        for (d, &(lo, hi, step)) in axes.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!(
                    "axis {}: need lo < hi, got [{lo}, {hi}]",
                    d + 1
                )));
            }
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis {}: step must be positive, got {step}",
                    d + 1
                )));
            }
        }
        let grid = Self { axes };
        let count = grid.count();
        if count > GRID_LIMIT {
            return Err(Error::GridTooLarge {
                count,
                limit: GRID_LIMIT,
            });
        }
        Ok(grid)
    }

    /// The same step on every axis of a box.
    pub fn uniform(bounds: &[(f64, f64)], step: f64) -> Result<Self> {
        Self::new(bounds.iter().map(|&(lo, hi)| (lo, hi, step)).collect())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[(f64, f64, f64)] {
        &self.axes
    }

    pub(crate) fn axis_len(&(lo, hi, step): &(f64, f64, f64)) -> u128 {
        // a little slack so that hi itself survives rounding of (hi - lo) / step
        let steps = ((hi - lo) / step * (1.0 + 1e-12)).floor();
        if steps >= 1e30 {
            u128::MAX / 4
        } else {
            steps as u128 + 1
        }
    }

    pub fn count(&self) -> u128 {
        self.axes
            .iter()
            .map(Self::axis_len)
            .fold(1u128, |acc, k| acc.saturating_mul(k))
    }

    fn coordinate(&self, d: usize, k: u128) -> f64 {
        let (lo, hi, step) = self.axes[d];
        (lo + k as f64 * step).min(hi)
    }

    /// Visits every point, last axis fastest.
    pub fn for_each(&self, mut f: impl FnMut(&DVector<f64>)) {
        let lens: Vec<u128> = self.axes.iter().map(Self::axis_len).collect();
        let mut idx = vec![0u128; self.dim()];
        let mut x =
            DVector::from_iterator(self.dim(), (0..self.dim()).map(|d| self.coordinate(d, 0)));
        loop {
            f(&x);
            let mut d = self.dim();
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < lens[d] {
                    x[d] = self.coordinate(d, idx[d]);
                    break;
                }
                idx[d] = 0;
                x[d] = self.coordinate(d, 0);
            }
        }
    }
}

/// `max_t g_t'u + ½ u'H_t u`.
pub fn minmax_objective(g: &[DVector<f64>], h: &[DMatrix<f64>], u: &DVector<f64>) -> f64 {
    let n = u.len();
    let mut best = f64::NEG_INFINITY;
    for (gt, ht) in g.iter().zip(h) {
        let mut v = 0.0;
        for r in 0..n {
            let mut hu = 0.0;
            for c in 0..n {
                hu += ht[(r, c)] * u[c];
            }
            v += u[r] * (gt[r] + 0.5 * hu);
        }
        best = best.max(v);
    }
    best
}

/// Exhaustive minimization of the min-max objective on `grid`, followed by two rounds
/// of 10x refinement. Returns `(u*, phi*)`.
pub fn grid_minmax(
    g: &[DVector<f64>],
    h: &[DMatrix<f64>],
    grid: &GridSpec,
) -> Result<(DVector<f64>, f64)> {
    grid_minmax_rounds(g, h, grid, 2)
}

/// [`grid_minmax`] with a chosen number of refinement rounds.
///
/// A round does not only zoom in on the best point. It refines the cell of every grid
/// point whose value is within a Lipschitz margin of the best value, and that set
/// always contains the cell of the true minimizer. This matters when two terms are
/// active: the minimizer then lies on a ridge, and the best grid point can sit many
/// cells away from it along the ridge.
pub fn grid_minmax_rounds(
    g: &[DVector<f64>],
    h: &[DMatrix<f64>],
    grid: &GridSpec,
    rounds: usize,
) -> Result<(DVector<f64>, f64)> {
    if g.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_dim(g.len(), h.len())?;
    let n = grid.dim();
    for (gt, ht) in g.iter().zip(h) {
        check_dim(n, gt.len())?;
        check_dim(n * n, ht.len())?;
    }
    let origin: Vec<f64> = grid.axes().iter().map(|a| a.0).collect();
    let mut steps: Vec<f64> = grid.axes().iter().map(|a| a.2).collect();
    let point = |idx: &[i64], steps: &[f64]| {
        DVector::from_iterator(n, (0..n).map(|d| origin[d] + idx[d] as f64 * steps[d]))
    };
    // Lower bound of the objective on the box c ± steps. For convex terms and weights
    // l on at most two of them, max_t q_t >= sum l_t q_t >= its tangent plane at c.
    // Pairs matter on a ridge, where every single gradient is large but a mix is small.
    let lower_bound = |c: &DVector<f64>, steps: &[f64], best_bound: f64| {
        let vals: Vec<f64> = g
            .iter()
            .zip(h)
            .map(|(gt, ht)| gt.dot(c) + 0.5 * c.dot(&(ht * c)))
            .collect();
        let grads: Vec<DVector<f64>> = g.iter().zip(h).map(|(gt, ht)| gt + ht * c).collect();
        let spread = |v: &DVector<f64>| v.iter().zip(steps).map(|(a, s)| a.abs() * s).sum::<f64>();
        let mut lb = f64::NEG_INFINITY;
        for a in 0..g.len() {
            lb = lb.max(vals[a] - spread(&grads[a]));
        }
        if lb > best_bound {
            return lb;
        }
        for a in 0..g.len() {
            for b in a + 1..g.len() {
                for k in 1..LB_WEIGHTS {
                    let l = k as f64 / LB_WEIGHTS as f64;
                    let mixed: f64 = (0..n)
                        .map(|d| ((1.0 - l) * grads[a][d] + l * grads[b][d]).abs() * steps[d])
                        .sum();
                    lb = lb.max((1.0 - l) * vals[a] + l * vals[b] - mixed);
                    if lb > best_bound {
                        return lb;
                    }
                }
            }
        }
        lb
    };

    // round 0: the full grid, last axis fastest
    let lens: Vec<i64> = grid
        .axes()
        .iter()
        .map(|a| GridSpec::axis_len(a) as i64)
        .collect();
    let unflatten = |mut k: usize| {
        let mut idx = vec![0i64; n];
        for d in (0..n).rev() {
            idx[d] = k as i64 % lens[d];
            k /= lens[d] as usize;
        }
        idx
    };
    let mut values = Vec::with_capacity(grid.count() as usize);
    grid.for_each(|u| values.push(minmax_objective(g, h, u)));
    let (best_k, best_val) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
            );
    let mut best_val = best_val;
    let mut best_idx = unflatten(best_k);
    // a cell can only hold the minimizer if its lower bound does not exceed the best value
    // a global slope bound on the grid box screens out most cells before the finer test
    let radius = grid
        .axes()
        .iter()
        .map(|&(lo, hi, _)| lo.abs().max(hi.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let slope = g
        .iter()
        .zip(h)
        .map(|(gt, ht)| gt.norm() + ht.norm() * (radius + 1.0))
        .fold(0.0, f64::max);
    let may_hold = |c: &DVector<f64>, value: f64, steps: &[f64], best: f64| {
        let diag = steps.iter().map(|s| s * s).sum::<f64>().sqrt();
        value - slope * diag <= best && lower_bound(c, steps, best) <= best
    };
    let mut candidates: Vec<Vec<i64>> = Vec::new();
    if rounds > 0 {
        let diag = steps.iter().map(|s| s * s).sum::<f64>().sqrt();
        for (k, &v) in values.iter().enumerate() {
            if v - slope * diag > best_val {
                continue;
            }
            let idx = unflatten(k);
            if may_hold(&point(&idx, &steps), v, &steps, best_val) {
                candidates.push(idx);
            }
        }
    }

    for round in 0..rounds {
        let mut fine: Vec<Vec<i64>> = Vec::new();
        let span = 21i64.pow(n as u32);
        for c in &candidates {
            for k in 0..span {
                let mut rest = k;
                let mut idx = Vec::with_capacity(n);
                for cd in c {
                    idx.push(10 * cd + rest % 21 - 10);
                    rest /= 21;
                }
                fine.push(idx);
            }
        }
        fine.sort_unstable();
        fine.dedup();
        if fine.len() as u128 > GRID_LIMIT {
            return Err(Error::GridTooLarge {
                count: fine.len() as u128,
                limit: GRID_LIMIT,
            });
        }
        steps.iter_mut().for_each(|s| *s /= 10.0);
        // the old best is a candidate, so it reappears on the finer lattice
        best_idx.iter_mut().for_each(|i| *i *= 10);
        let values: Vec<f64> = fine
            .iter()
            .map(|idx| minmax_objective(g, h, &point(idx, &steps)))
            .collect();
        for (idx, &v) in fine.iter().zip(&values) {
            if v < best_val {
                best_val = v;
                best_idx = idx.clone();
            }
        }
        if round + 1 < rounds {
            candidates = fine
                .into_iter()
                .zip(values)
                .filter(|(idx, v)| may_hold(&point(idx, &steps), *v, &steps, best_val))
                .map(|(idx, _)| idx)
                .collect();
        }
    }
    Ok((point(&best_idx, &steps), best_val))
}

/// Central-difference Jacobian of `f^{i+1}` at `x`.
pub fn fd_jacobian(ps: &ProblemSpec, i: usize, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    check_dim(ps.n, x.len())?;
    let mut jac = DMatrix::zeros(ps.m, ps.n);
    for k in 0..ps.n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (ps.value(i, &xp)? - ps.value(i, &xm)?) / (2.0 * h);
        jac.set_column(k, &col);
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    /// `F(x) ≺ F(x̄)` at this grid point.
    Violated(Vec<f64>),
    NoneFoundAtResolution,
}

/// `A ≺ B` for finite sets: every `b` has some `a` with `b - a in int K`.
pub fn set_strictly_dominates(
    cone: &ConeSpec,
    a: &[DVector<f64>],
    b: &[DVector<f64>],
) -> Result<bool> {
    for bv in b {
        let mut covered = false;
        for av in a {
            if cone.facet_values(&(bv - av))?.iter().all(|&c| c > 0.0) {
                covered = true;
                break;
            }
        }
        if !covered {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Scans `grid` for a point whose image set strictly dominates `F(x̄)`.
///
/// Grid points outside the domain are skipped. The answer only speaks for this grid.
pub fn certify_weak_minimality(
    ps: &ProblemSpec,
    xbar: &DVector<f64>,
    grid: &GridSpec,
) -> Result<Verdict> {
    check_dim(ps.n, xbar.len())?;
    check_dim(ps.n, grid.dim())?;
    let target = ps.eval_f(xbar)?;
    let mut found: Option<Vec<f64>> = None;
    let mut failure: Option<Error> = None;
    grid.for_each(|x| {
        if found.is_some() || failure.is_some() {
            return;
        }
        let Ok(images) = ps.eval_f(x) else { return };
        match set_strictly_dominates(&ps.cone, &images, &target) {
            Ok(true) => found = Some(x.iter().copied().collect()),
            Ok(false) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(match found {
        Some(x) => Verdict::Violated(x),
        None => Verdict::NoneFoundAtResolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, parse_problem};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn bisection_values() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert!((gerstewitz_bisect(&c, &v(&[3.0, -1.0]), 1e-12).unwrap() - 3.0).abs() <= 1e-12);
        assert!(gerstewitz_bisect(&c, &v(&[0.0, 0.0]), 1e-12).unwrap().abs() <= 1e-12);
        assert!((gerstewitz_bisect(&c, &v(&[-1.0, -1.0]), 1e-12).unwrap() + 1.0).abs() <= 1e-12);
        let ex5 = ConeSpec::from_rows(&[vec![6.0, -2.0], vec![-7.0, 10.0]], &[1.0, 1.0]).unwrap();
        assert!((gerstewitz_bisect(&ex5, &v(&[1.0, 0.0]), 1e-12).unwrap() - 1.5).abs() <= 1e-11);
    }

    #[test]
    fn brute_filters() {
        let c = ConeSpec::nonnegative_orthant(2);
        let s = [v(&[1.0, 2.0]), v(&[2.0, 1.0]), v(&[3.0, 3.0])];
        assert_eq!(brute_min(&c, &s).unwrap(), vec![0, 1]);
        let s = [v(&[1.0, 2.0]), v(&[1.0, 3.0])];
        assert_eq!(brute_min(&c, &s).unwrap(), vec![0]);
        assert_eq!(brute_wmin(&c, &s).unwrap(), vec![0, 1]);
        assert!(matches!(brute_min(&c, &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn grid_guard_and_order() {
        assert!(matches!(
            GridSpec::uniform(&[(0.0, 1.0), (0.0, 1.0)], 1e-4),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(GridSpec::new(vec![(1.0, 0.0, 0.1)]).is_err());
        let g = GridSpec::uniform(&[(0.0, 1.0), (0.0, 0.5)], 0.5).unwrap();
        assert_eq!(g.count(), 6);
        let mut pts = Vec::new();
        g.for_each(|x| pts.push((x[0], x[1])));
        assert_eq!(
            pts,
            vec![
                (0.0, 0.0),
                (0.0, 0.5),
                (0.5, 0.0),
                (0.5, 0.5),
                (1.0, 0.0),
                (1.0, 0.5)
            ]
        );
    }

    #[test]
    fn grid_minmax_single_term() {
        let grid = GridSpec::uniform(&[(-10.0, 10.0)], 1e-3).unwrap();
        let (u, phi) = grid_minmax(&[v(&[2.0])], &[DMatrix::identity(1, 1)], &grid).unwrap();
        assert!((u[0] + 2.0).abs() <= 2e-3);
        assert!((phi + 2.0).abs() <= 1e-4);
        assert!(matches!(
            grid_minmax(&[], &[], &grid),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn fd_matches_analytic() {
        let ps = builtin("ex1").unwrap();
        let x = v(&[2.3]);
        let fd = fd_jacobian(&ps, 9, &x, 1e-6).unwrap();
        let an = ps.jacobian(9, &x).unwrap();
        assert!((fd - an).amax() < 1e-6);
    }

    #[test]
    fn certifier_finds_the_better_point() {
        let ps =
            parse_problem("[meta] n=1 m=1 p=1\n[box]\n-2 2\n[functions]\nx1^2\n", "sq").unwrap();
        let grid = GridSpec::uniform(&[(-2.0, 2.0)], 1e-2).unwrap();
        assert!(matches!(
            certify_weak_minimality(&ps, &v(&[1.0]), &grid).unwrap(),
            Verdict::Violated(_)
        ));
        let far = GridSpec::uniform(&[(1.5, 2.0)], 1e-2).unwrap();
        assert_eq!(
            certify_weak_minimality(&ps, &v(&[1.0]), &far).unwrap(),
            Verdict::NoneFoundAtResolution
        );
        assert_eq!(
            certify_weak_minimality(&ps, &v(&[0.0]), &grid).unwrap(),
            Verdict::NoneFoundAtResolution
        );
    }
}
