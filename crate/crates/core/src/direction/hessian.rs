use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Relative curvature threshold below which an update is skipped.
pub const DEFAULT_C_CURV: f64 = 1e-8;

/// One SPD approximation `B^{i,q}` per scalarized component `h^{i,q}`.
#[derive(Debug, Clone)]
pub struct HessianStore {
    n: usize,
    p: usize,
    q: usize,
    mats: Vec<DMatrix<f64>>,
    updates: Vec<u64>,
    skips: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateReport {
    /// `(i, q)` pairs that were updated.
    pub applied: Vec<(usize, usize)>,
    /// `(i, q)` pairs skipped by the curvature rule.
    pub skipped: Vec<(usize, usize)>,
    /// Largest `|B_new s - y| / max(|y|, |B_old s|)` over applied updates.
    pub max_secant_residual: f64,
}

impl HessianStore {
    /// `p * q` identity matrices of size `n`.
    pub fn new(n: usize, p: usize, q: usize) -> Self {
        Self {
            n,
            p,
            q,
            mats: vec![DMatrix::identity(n, n); p * q],
            updates: vec![0; p * q],
            skips: vec![0; p * q],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.p, self.q)
    }

    pub fn get(&self, i: usize, q: usize) -> &DMatrix<f64> {
        &self.mats[i * self.q + q]
    }

    pub fn update_count(&self, i: usize, q: usize) -> u64 {
        self.updates[i * self.q + q]
    }

    pub fn skip_count(&self, i: usize, q: usize) -> u64 {
        self.skips[i * self.q + q]
    }

    pub fn total_skips(&self) -> u64 {
        self.skips.iter().sum()
    }

    /// Applies the BFGS formula to every `(i, q)`.
    ///
    /// `y_all[i * Q + q]` is `∇h^{i,q}(x_{k+1}) - ∇h^{i,q}(x_k)`. A pair with
    /// `s'y < c_curv |s| |y|` keeps its matrix.
    pub fn bfgs_update(
        &mut self,
        s: &DVector<f64>,
        y_all: &[DVector<f64>],
        c_curv: f64,
    ) -> Result<UpdateReport> {
        check_dim(self.n, s.len())?;
        check_dim(self.mats.len(), y_all.len())?;
        let s_norm = s.norm();
        if s_norm == 0.0 {
            return Err(Error::InvalidConfig("BFGS step s must be nonzero".into()));
        }
        let mut report = UpdateReport::default();
        for (k, y) in y_all.iter().enumerate() {
            check_dim(self.n, y.len())?;
            let pair = (k / self.q, k % self.q);
            let sy = s.dot(y);
            if sy.is_nan() || sy <= 0.0 || sy < c_curv * s_norm * y.norm() {
                self.skips[k] += 1;
                report.skipped.push(pair);
                continue;
            }
            let b = &self.mats[k];
            let bs = b * s;
            let sbs = s.dot(&bs);
            if sbs.is_nan() || sbs <= 0.0 {
                return Err(Error::NumericalBreakdown(format!(
                    "s'Bs = {sbs} for B^({},{})",
                    pair.0 + 1,
                    pair.1 + 1
                )));
            }
            let raw = b - (&bs * bs.transpose()) / sbs + (y * y.transpose()) / sy;
            // keep exact symmetry
            let next = (&raw + raw.transpose()) * 0.5;
            let scale = y.norm().max(bs.norm());
            let residual = (&next * s - y).norm() / scale;
            report.max_secant_residual = report.max_secant_residual.max(residual);
            self.mats[k] = next;
            self.updates[k] += 1;
            report.applied.push(pair);
        }
        if report.max_secant_residual > 1e-10 {
            log::warn!(
                "secant residual {:.3e} exceeds 1e-10",
                report.max_secant_residual
            );
        }
        Ok(report)
    }

    /// Certifies every matrix by a Cholesky factorization.
    pub fn verify_spd(&self) -> Result<()> {
        for (k, b) in self.mats.iter().enumerate() {
            let asym = (b - b.transpose()).amax();
            if asym > 1e-12 * b.amax().max(1.0) || b.clone().cholesky().is_none() {
                return Err(Error::NumericalBreakdown(format!(
                    "B^({},{}) is not symmetric positive definite",
                    k / self.q + 1,
                    k % self.q + 1
                )));
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue over all stored matrices.
    pub fn min_eigenvalue(&self) -> f64 {
        self.mats
            .iter()
            .map(|b| b.clone().symmetric_eigen().eigenvalues.min())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn init_is_identity() {
        let st = HessianStore::new(2, 3, 2);
        assert_eq!(st.mats.len(), 6);
        assert!(st.mats.iter().all(|b| b == &DMatrix::identity(2, 2)));
        st.verify_spd().unwrap();
        assert_eq!(st.total_skips(), 0);
        assert_eq!(st.update_count(2, 1), 0);
    }

    #[test]
    fn update_examples() {
        let mut st = HessianStore::new(2, 1, 1);
        st.bfgs_update(&v(&[1.0, 0.0]), &[v(&[1.0, 0.0])], DEFAULT_C_CURV)
            .unwrap();
        assert_eq!(st.get(0, 0), &DMatrix::identity(2, 2));

        let r = st
            .bfgs_update(&v(&[1.0, 0.0]), &[v(&[2.0, 0.0])], DEFAULT_C_CURV)
            .unwrap();
        assert_eq!(st.get(0, 0), &DMatrix::from_diagonal(&v(&[2.0, 1.0])));
        assert_eq!(r.applied, vec![(0, 0)]);

        let r = st
            .bfgs_update(&v(&[1.0, 0.0]), &[v(&[-1.0, 0.0])], DEFAULT_C_CURV)
            .unwrap();
        assert_eq!(r.skipped, vec![(0, 0)]);
        assert_eq!(st.get(0, 0), &DMatrix::from_diagonal(&v(&[2.0, 1.0])));
        assert_eq!(st.skip_count(0, 0), 1);
    }

    #[test]
    fn secant_equation_holds() {
        let mut st = HessianStore::new(3, 2, 1);
        let s = v(&[0.3, -1.2, 0.5]);
        let ys = [v(&[0.9, -2.0, 1.1]), v(&[0.1, -0.4, 0.3])];
        let r = st.bfgs_update(&s, &ys, DEFAULT_C_CURV).unwrap();
        assert_eq!(r.applied.len(), 2);
        assert!(r.max_secant_residual < 1e-12);
        for (i, y) in ys.iter().enumerate() {
            assert!((st.get(i, 0) * &s - y).norm() < 1e-12);
        }
        st.verify_spd().unwrap();
        assert!(st.min_eigenvalue() > 0.0);
    }
}
