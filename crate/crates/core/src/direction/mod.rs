//! Quasi-Newton model maintenance and the direction-finding subproblem
//!
//! ```text
//! Φ(x) = min_{a in P_x} min_u max_{j, q} [ ∇h^{a_j,q}(x)'u + ½ u'B^{a_j,q} u ]
//! ```

mod hessian;
mod inner;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::setorder::MinimalStructure;

pub use hessian::{HessianStore, UpdateReport, DEFAULT_C_CURV};
pub use inner::{solve_minmax, InnerConfig, MinMaxSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    /// Minimizing partition element (zero-based function indices).
    pub a: Vec<usize>,
    pub u: DVector<f64>,
    pub phi: f64,
    /// Dual weights over the `w * Q` terms, ordered `(j, q)` with `q` fastest.
    pub lambda: Vec<f64>,
    pub gap: f64,
    pub inner_iterations: usize,
    pub converged: bool,
    /// Number of partition elements examined.
    pub partitions: usize,
}

/// Dual weights from the previous call, keyed by partition element.
#[derive(Debug, Clone, Default)]
pub struct WarmStarts {
    map: HashMap<Vec<usize>, Vec<f64>>,
}

impl WarmStarts {
    pub fn get(&self, a: &[usize]) -> Option<&[f64]> {
        self.map.get(a).map(Vec::as_slice)
    }
}

/// The `(g_t, H_t)` pairs for `a`: `g` from row `q` of `grads[a_j]`, `H = B^{a_j,q}`.
pub fn collect_terms(
    grads: &[DMatrix<f64>],
    store: &HessianStore,
    a: &[usize],
) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
    let (_, _, nq) = store.dims();
    let mut g = Vec::with_capacity(a.len() * nq);
    let mut h = Vec::with_capacity(a.len() * nq);
    for &i in a {
        for q in 0..nq {
            g.push(grads[i].row(q).transpose());
            h.push(store.get(i, q).clone());
        }
    }
    (g, h)
}

/// Solves the inner min-max problem for one partition element.
///
/// `grads[i]` is the `Q x n` matrix of scalarized gradients of `f^{i+1}`.
pub fn solve_for_a(
    grads: &[DMatrix<f64>],
    store: &HessianStore,
    a: &[usize],
    warm: Option<&[f64]>,
    cfg: &InnerConfig,
) -> Result<MinMaxSolution> {
    let (g, h) = collect_terms(grads, store, a);
    solve_minmax(&g, &h, warm, cfg).map_err(|e| Error::Subproblem {
        a: a.to_vec(),
        source: Box::new(e),
    })
}

/// Minimizes over every partition element of `ms`; ties keep the first element.
pub fn solve_subproblem(
    grads: &[DMatrix<f64>],
    store: &HessianStore,
    ms: &MinimalStructure,
    warm: &mut WarmStarts,
    cfg: &InnerConfig,
) -> Result<SubproblemSolution> {
    let mut best: Option<SubproblemSolution> = None;
    let mut next_warm = HashMap::new();
    let mut examined = 0;
    let mut inner_total = 0;
    for a in ms.partitions() {
        let sol = solve_for_a(grads, store, &a, warm.get(&a), cfg)?;
        examined += 1;
        inner_total += sol.iterations;
        if !sol.converged {
            log::warn!(
                "inner solver stopped after {} iterations with gap {:.3e} (a = {:?})",
                sol.iterations,
                sol.gap,
                a
            );
        }
        next_warm.insert(a.clone(), sol.lambda.clone());
        if best.as_ref().is_none_or(|b| sol.phi < b.phi) {
            best = Some(SubproblemSolution {
                a,
                u: sol.u,
                phi: sol.phi,
                lambda: sol.lambda,
                gap: sol.gap,
                inner_iterations: 0,
                converged: sol.converged,
                partitions: 0,
            });
        }
    }
    warm.map = next_warm;
    let mut best = best.ok_or(Error::EmptyInput)?;
    best.partitions = examined;
    best.inner_iterations = inner_total;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeSpec;

    #[test]
    fn picks_the_better_partition_element() {
        // f^1 and f^2 share the value (0, 1) and f^3 has value (1, 0): classes {0, 1}, {2}.
        let cone = ConeSpec::nonnegative_orthant(2);
        let values = vec![
            DVector::from_column_slice(&[0.0, 1.0]),
            DVector::from_column_slice(&[0.0, 1.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
        ];
        let ms = MinimalStructure::compute(&cone, &values, 0.0, 1e-8).unwrap();
        assert_eq!(ms.partition_count(), 2);
        // n = 1; gradients per function (Q = 2 rows)
        let grads = vec![
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[2.0, 2.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
        ];
        let store = HessianStore::new(1, 3, 2);
        let cfg = InnerConfig::default();
        let per_a: Vec<f64> = ms
            .partitions()
            .map(|a| solve_for_a(&grads, &store, &a, None, &cfg).unwrap().phi)
            .collect();
        // a = (0, 2): all g = 1 -> phi = -0.5; a = (1, 2): g in {1, 2} -> u = -1, phi = -0.5
        assert!((per_a[0] + 0.5).abs() < 1e-12);
        assert!((per_a[1] + 0.5).abs() < 1e-10);
        let mut warm = WarmStarts::default();
        let sol = solve_subproblem(&grads, &store, &ms, &mut warm, &cfg).unwrap();
        assert_eq!(sol.a, vec![0, 2]);
        assert_eq!(sol.partitions, 2);
        assert!(warm.get(&[1, 2]).is_some());
    }

    #[test]
    fn distinct_jacobians_take_the_minimum() {
        let grads = vec![
            DMatrix::from_row_slice(1, 1, &[4.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
        ];
        let cone = ConeSpec::nonnegative_orthant(1);
        let values = vec![DVector::from_element(1, 0.0); 2];
        let ms = MinimalStructure::compute(&cone, &values, 0.0, 1e-8).unwrap();
        let store = HessianStore::new(1, 2, 1);
        let sol = solve_subproblem(
            &grads,
            &store,
            &ms,
            &mut WarmStarts::default(),
            &InnerConfig::default(),
        )
        .unwrap();
        assert_eq!(sol.a, vec![0]);
        assert_eq!(sol.phi, -8.0);
        assert_eq!(sol.u[0], -4.0);
    }
}
