//! `min_u max_t θ_t(u)` with `θ_t(u) = g_t'u + ½ u'H_t u` and every `H_t` SPD.
//!
//! The dual is `max_{λ in simplex} φ(λ)` where `φ(λ) = -½ g(λ)' H(λ)^{-1} g(λ)`,
//! `g(λ) = Σ λ_t g_t`, `H(λ) = Σ λ_t H_t`, with primal recovery `u(λ) = -H(λ)^{-1} g(λ)`.
//! Since `u(λ)` minimizes `Σ λ_t θ_t`, `φ(λ) = Σ λ_t θ_t(u(λ))` and `∂φ/∂λ_t = θ_t(u(λ))`.
//!
//! Pairwise Frank-Wolfe steps with an exact line search identify the active terms; a
//! Newton solve of the KKT system restricted to that support then finishes the job.
//! Every returned iterate carries the certified gap `max_t θ_t(u) - φ(λ) >= 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    /// Target for `gap / max(1, |phi|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxSolution {
    pub u: DVector<f64>,
    /// `max_t θ_t(u)`.
    pub phi: f64,
    /// Dual weights, one per input term.
    pub lambda: Vec<f64>,
    /// Dual value `φ(λ)`.
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct State {
    lam: Vec<f64>,
    u: DVector<f64>,
    dual: f64,
    theta: Vec<f64>,
    max_theta: f64,
    gap: f64,
}

struct Terms<'a> {
    g: Vec<&'a DVector<f64>>,
    h: Vec<&'a DMatrix<f64>>,
    n: usize,
}

impl Terms<'_> {
    fn len(&self) -> usize {
        self.g.len()
    }

    fn theta(&self, t: usize, u: &DVector<f64>) -> f64 {
        self.g[t].dot(u) + 0.5 * u.dot(&(self.h[t] * u))
    }

    fn recover(&self, lam: &[f64]) -> Result<(DVector<f64>, f64)> {
        let mut gs = DVector::zeros(self.n);
        let mut hs = DMatrix::zeros(self.n, self.n);
        for (t, &l) in lam.iter().enumerate() {
            if l != 0.0 {
                gs.axpy(l, self.g[t], 1.0);
                hs += self.h[t] * l;
            }
        }
        let chol = hs.cholesky().ok_or_else(|| {
            Error::SingularSystem("aggregated quadratic is not positive definite".into())
        })?;
        let u = -chol.solve(&gs);
        let dual = 0.5 * gs.dot(&u);
        Ok((u, dual))
    }

    fn state(&self, lam: Vec<f64>) -> Result<State> {
        let (u, dual) = self.recover(&lam)?;
        let theta: Vec<f64> = (0..self.len()).map(|t| self.theta(t, &u)).collect();
        let max_theta = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max_theta.is_finite() || !dual.is_finite() {
            return Err(Error::NumericalBreakdown(
                "non-finite subproblem value".into(),
            ));
        }
        Ok(State {
            gap: (max_theta - dual).max(0.0),
            lam,
            u,
            dual,
            theta,
            max_theta,
        })
    }

    /// `d/dγ φ(λ + γ dir) = Σ dir_t θ_t(u(λ + γ dir))`.
    fn slope(&self, lam: &[f64], dir: &[(usize, f64)], gamma: f64) -> Result<f64> {
        let mut shifted = lam.to_vec();
        for &(t, d) in dir {
            shifted[t] = (shifted[t] + gamma * d).max(0.0);
        }
        let (u, _) = self.recover(&shifted)?;
        Ok(dir.iter().map(|&(t, d)| d * self.theta(t, &u)).sum())
    }

    /// Exact line search on `[0, gmax]` for the concave `γ -> φ(λ + γ dir)`.
    fn line_search(
        &self,
        lam: &[f64],
        dir: &[(usize, f64)],
        slope0: f64,
        gmax: f64,
    ) -> Result<f64> {
        let fmax = self.slope(lam, dir, gmax)?;
        if fmax >= 0.0 {
            return Ok(gmax);
        }
        // Illinois variant of regula falsi on the decreasing derivative.
        let (mut lo, mut hi, mut flo, mut fhi) = (0.0, gmax, slope0, fmax);
        let mut side = 0i8;
        for _ in 0..100 {
            let mut g = (lo * fhi - hi * flo) / (fhi - flo);
            if !(g > lo && g < hi) {
                g = 0.5 * (lo + hi);
            }
            let fg = self.slope(lam, dir, g)?;
            if fg == 0.0 {
                return Ok(g);
            }
            if fg > 0.0 {
                lo = g;
                flo = fg;
                if side == 1 {
                    fhi *= 0.5;
                }
                side = 1;
            } else {
                hi = g;
                fhi = fg;
                if side == -1 {
                    flo *= 0.5;
                }
                side = -1;
            }
            if hi - lo <= 1e-15 * gmax {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn pairwise_step(&self, st: &State) -> Result<State> {
        let s = argmax(&st.theta);
        let a = (0..self.len())
            .filter(|&t| st.lam[t] > 0.0)
            .min_by(|&x, &y| st.theta[x].total_cmp(&st.theta[y]))
            .expect("weights sum to one");
        let gmax = st.lam[a];
        let dir = [(s, 1.0), (a, -1.0)];
        let gamma = self.line_search(&st.lam, &dir, st.theta[s] - st.theta[a], gmax)?;
        let mut lam = st.lam.clone();
        lam[s] += gamma;
        lam[a] = if gamma >= gmax { 0.0 } else { lam[a] - gamma };
        self.state(lam)
    }

    /// Newton on the KKT system of the support of `st`, adding violated terms and
    /// dropping negative weights until the support is consistent.
    fn polish(&self, st: &State, budget: &mut usize) -> Result<Option<State>> {
        let n = self.n;
        let mut support: Vec<usize> = (0..self.len()).filter(|&t| st.lam[t] > 0.0).collect();
        if support.len() > n + 1 {
            support.sort_by(|&x, &y| st.lam[y].total_cmp(&st.lam[x]));
            support.truncate(n + 1);
            support.sort_unstable();
        }
        let mut weights: Vec<f64> = support.iter().map(|&t| st.lam[t]).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut u = st.u.clone();
        let mut level = support
            .iter()
            .map(|&t| st.theta[t])
            .fold(f64::NEG_INFINITY, f64::max);

        for _ in 0..(2 * self.len() + 4) {
            let k = support.len();
            for _ in 0..30 {
                if *budget == 0 {
                    return Ok(None);
                }
                *budget -= 1;
                let dim = n + k + 1;
                let mut jac = DMatrix::zeros(dim, dim);
                let mut rhs = DVector::zeros(dim);
                for (c, &t) in support.iter().enumerate() {
                    let v = self.g[t] + self.h[t] * &u;
                    let w = weights[c];
                    for r in 0..n {
                        rhs[r] -= w * v[r];
                        jac[(r, n + c)] = v[r];
                        jac[(n + c, r)] = v[r];
                        for s in 0..n {
                            jac[(r, s)] += w * self.h[t][(r, s)];
                        }
                    }
                    jac[(n + c, n + k)] = -1.0;
                    jac[(n + k, n + c)] = 1.0;
                    rhs[n + c] = -(self.theta(t, &u) - level);
                }
                rhs[n + k] = -(weights.iter().sum::<f64>() - 1.0);
                let Some(step) = jac.lu().solve(&rhs) else {
                    return Ok(None);
                };
                if step.iter().any(|v| !v.is_finite()) {
                    return Ok(None);
                }
                for r in 0..n {
                    u[r] += step[r];
                }
                for c in 0..k {
                    weights[c] += step[n + c];
                }
                level += step[n + k];
                let scale = 1.0 + u.amax() + level.abs();
                if step.amax() <= 1e-14 * scale {
                    break;
                }
            }
            let (c_min, w_min) = weights
                .iter()
                .copied()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("support is nonempty");
            if w_min < 0.0 {
                support.remove(c_min);
                weights.remove(c_min);
                if support.is_empty() {
                    return Ok(None);
                }
                let total: f64 = weights.iter().sum();
                if total <= 0.0 {
                    return Ok(None);
                }
                weights.iter_mut().for_each(|w| *w /= total);
                continue;
            }
            let mut lam = vec![0.0; self.len()];
            for (c, &t) in support.iter().enumerate() {
                lam[t] = weights[c];
            }
            let cand = self.state(lam)?;
            // terms outside the support that the Newton point violates
            let violator = (0..self.len())
                .filter(|t| !support.contains(t))
                .filter(|&t| cand.theta[t] > level + 1e-14 * (1.0 + level.abs()))
                .max_by(|&x, &y| cand.theta[x].total_cmp(&cand.theta[y]));
            match violator {
                Some(t) if support.len() <= n => {
                    let pos = support.partition_point(|&s| s < t);
                    support.insert(pos, t);
                    weights.insert(pos, 0.0);
                }
                _ => return Ok(Some(cand)),
            }
        }
        Ok(None)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (t, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = t;
        }
    }
    best
}

/// Solves `min_u max_t g_t'u + ½u'H_t u`.
///
/// `warm` gives starting weights (renormalized; ignored if the length differs).
pub fn solve_minmax(
    g: &[DVector<f64>],
    h: &[DMatrix<f64>],
    warm: Option<&[f64]>,
    cfg: &InnerConfig,
) -> Result<MinMaxSolution> {
    if g.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_dim(g.len(), h.len())?;
    let n = g[0].len();
    for (gt, ht) in g.iter().zip(h) {
        check_dim(n, gt.len())?;
        if ht.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: ht.len(),
            });
        }
    }

    // identical terms share one dual weight
    let mut owner: Vec<usize> = Vec::with_capacity(g.len());
    let mut uniq: Vec<usize> = Vec::new();
    for t in 0..g.len() {
        match uniq.iter().position(|&r| g[r] == g[t] && h[r] == h[t]) {
            Some(k) => owner.push(k),
            None => {
                owner.push(uniq.len());
                uniq.push(t);
            }
        }
    }
    let terms = Terms {
        g: uniq.iter().map(|&t| &g[t]).collect(),
        h: uniq.iter().map(|&t| &h[t]).collect(),
        n,
    };
    let tcount = terms.len();

    let mut lam0 = vec![0.0; tcount];
    let warm = warm.filter(|w| {
        w.len() == g.len() && w.iter().all(|v| *v >= 0.0) && w.iter().sum::<f64>() > 0.0
    });
    match warm {
        Some(w) => {
            for (t, &v) in w.iter().enumerate() {
                lam0[owner[t]] += v;
            }
            let total: f64 = lam0.iter().sum();
            lam0.iter_mut().for_each(|v| *v /= total);
        }
        None => lam0.iter_mut().for_each(|v| *v = 1.0 / tcount as f64),
    }

    let target = |st: &State| cfg.tol * st.max_theta.abs().max(1.0);
    let mut st = terms.state(lam0)?;
    let mut best = st.clone();
    let mut iterations = 0usize;
    let mut since_polish = usize::MAX;
    while st.gap > target(&st) && iterations < cfg.max_iter {
        if since_polish >= 4 {
            since_polish = 0;
            let mut budget = cfg.max_iter - iterations;
            let before = budget;
            let cand = terms.polish(&st, &mut budget)?;
            iterations += before - budget;
            if let Some(c) = cand {
                if c.gap < st.gap {
                    st = c;
                    if st.gap < best.gap {
                        best = st.clone();
                    }
                    continue;
                }
            }
            if iterations >= cfg.max_iter {
                break;
            }
        }
        st = terms.pairwise_step(&st)?;
        iterations += 1;
        since_polish = since_polish.saturating_add(1);
        if st.gap < best.gap {
            best = st.clone();
        }
    }
    if st.gap < best.gap {
        best = st;
    }
    let converged = best.gap <= target(&best);

    let mut lambda = vec![0.0; g.len()];
    for (k, &t) in uniq.iter().enumerate() {
        lambda[t] = best.lam[k];
    }
    let (u, phi) = if best.max_theta > 0.0 {
        // u = 0 is always feasible with value 0
        (DVector::zeros(n), 0.0)
    } else {
        (best.u, best.max_theta)
    };
    Ok(MinMaxSolution {
        gap: (phi - best.dual).max(0.0),
        u,
        phi,
        lambda,
        dual: best.dual,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn eye(n: usize) -> DMatrix<f64> {
        DMatrix::identity(n, n)
    }

    #[test]
    fn single_term() {
        let s = solve_minmax(&[v(&[2.0])], &[eye(1)], None, &InnerConfig::default()).unwrap();
        assert_eq!(s.u, v(&[-2.0]));
        assert_eq!(s.phi, -2.0);
        assert_eq!(s.lambda, vec![1.0]);
        assert_eq!(s.gap, 0.0);
    }

    #[test]
    fn two_terms_in_one_dimension() {
        // slopes of opposite sign: 0 is in the hull, the optimum is u = 0
        let s = solve_minmax(
            &[v(&[3.0]), v(&[-1.0])],
            &[eye(1), eye(1)],
            None,
            &InnerConfig::default(),
        )
        .unwrap();
        assert!(s.u[0].abs() < 1e-10, "{}", s.u);
        assert!(s.phi.abs() < 1e-10);
        assert!(s.converged && s.gap <= 1e-10);

        // same sign: the flatter term is active, u = -1, phi = -0.5
        let s = solve_minmax(
            &[v(&[3.0]), v(&[1.0])],
            &[eye(1), eye(1)],
            None,
            &InnerConfig::default(),
        )
        .unwrap();
        assert!((s.u[0] + 1.0).abs() < 1e-10, "{}", s.u);
        assert!((s.phi + 0.5).abs() < 1e-10);
        assert!(s.converged);
    }

    #[test]
    fn stationary_input() {
        let s = solve_minmax(
            &[v(&[0.0, 0.0]), v(&[0.0, 0.0])],
            &[eye(2), eye(2) * 3.0],
            None,
            &InnerConfig::default(),
        )
        .unwrap();
        assert_eq!(s.u, v(&[0.0, 0.0]));
        assert_eq!(s.phi, 0.0);
    }

    #[test]
    fn zero_in_hull_gives_zero_direction() {
        let g = [v(&[1.0, 0.0]), v(&[-1.0, 1.0]), v(&[-1.0, -1.0])];
        let h = [eye(2), eye(2), eye(2)];
        let s = solve_minmax(&g, &h, None, &InnerConfig::default()).unwrap();
        assert!(s.u.norm() < 1e-8);
        assert!(s.phi.abs() < 1e-10 && s.phi <= 0.0);
    }

    #[test]
    fn duplicated_terms_and_warm_start() {
        let g = [v(&[3.0]), v(&[3.0]), v(&[-1.0])];
        let h = [eye(1), eye(1), eye(1)];
        let cold = solve_minmax(&g, &h, None, &InnerConfig::default()).unwrap();
        assert_eq!(cold.lambda[1], 0.0);
        let warm = solve_minmax(&g, &h, Some(&cold.lambda), &InnerConfig::default()).unwrap();
        assert!((warm.phi - cold.phi).abs() < 1e-12);
        assert!(warm.iterations <= cold.iterations);
    }

    #[test]
    fn scale_coherence() {
        let g = [v(&[1.0, 2.0]), v(&[-2.0, 0.5]), v(&[0.3, -1.5])];
        let h = [
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            eye(2),
            DMatrix::from_row_slice(2, 2, &[1.5, -0.2, -0.2, 0.7]),
        ];
        let base = solve_minmax(&g, &h, None, &InnerConfig::default()).unwrap();
        let c = 7.5;
        let gs: Vec<_> = g.iter().map(|x| x * c).collect();
        let hs: Vec<_> = h.iter().map(|x| x * c).collect();
        let scaled = solve_minmax(&gs, &hs, None, &InnerConfig::default()).unwrap();
        assert!((scaled.phi - c * base.phi).abs() < 1e-10 * c * base.phi.abs().max(1.0));
        assert!((scaled.u.clone() - base.u.clone()).amax() < 1e-10);
    }
}
