//! Set-valued objectives `F(x) = {f^1(x), ..., f^p(x)}` with `f^i : R^n -> R^m`.

mod builtin;
mod file;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cone::{row_dot, ConeSpec};
use crate::error::{check_dim, Error, Result};

pub use builtin::{builtin, BUILTIN_NAMES};
pub use file::{load, parse_problem};

/// The `p` vector functions of a problem. Indices are zero-based.
pub trait VectorFunctions: Send + Sync {
    /// `f^{i+1}(x)`, a vector of length `m`.
    fn value(&self, i: usize, x: &[f64]) -> Result<DVector<f64>>;
    /// Jacobian of `f^{i+1}` at `x`, an `m x n` matrix.
    fn jacobian(&self, i: usize, x: &[f64]) -> Result<DMatrix<f64>>;
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub cone: ConeSpec,
    /// Per-coordinate `(lo, hi)` used to draw random starting points.
    pub sample_box: Vec<(f64, f64)>,
    functions: Arc<dyn VectorFunctions>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("p", &self.p)
            .field("cone", &self.cone)
            .field("sample_box", &self.sample_box)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        p: usize,
        cone: ConeSpec,
        sample_box: Vec<(f64, f64)>,
        functions: Arc<dyn VectorFunctions>,
    ) -> Result<Self> {
        if n == 0 || m == 0 || p == 0 {
            return Err(Error::InvalidConfig(format!(
                "problem dimensions must be positive (n = {n}, m = {m}, p = {p})"
            )));
        }
        check_dim(m, cone.dim())?;
        check_dim(n, sample_box.len())?;
        if let Some((lo, hi)) = sample_box
            .iter()
            .find(|(lo, hi)| lo > hi || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "invalid sample interval [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            name: name.into(),
            n,
            m,
            p,
            cone,
            sample_box,
            functions,
        })
    }

    /// `f^{i+1}(x)`.
    pub fn value(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.n, x.len())?;
        let v = self.functions.value(i, x.as_slice())?;
        check_dim(self.m, v.len())?;
        Ok(v)
    }

    /// Jacobian of `f^{i+1}` at `x`.
    pub fn jacobian(&self, i: usize, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.n, x.len())?;
        let j = self.functions.jacobian(i, x.as_slice())?;
        if j.shape() != (self.m, self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.m * self.n,
                found: j.len(),
            });
        }
        Ok(j)
    }

    /// All `p` image vectors, entry `i` is `f^{i+1}(x)`.
    pub fn eval_f(&self, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        (0..self.p).map(|i| self.value(i, x)).collect()
    }

    /// Jacobians for the given (zero-based) function indices, in order.
    pub fn eval_jacobians(&self, x: &DVector<f64>, indices: &[usize]) -> Result<Vec<DMatrix<f64>>> {
        indices.iter().map(|&i| self.jacobian(i, x)).collect()
    }

    pub fn scalarize(&self) -> ScalarizedComponents<'_> {
        ScalarizedComponents { ps: self }
    }

    /// Centre of the sample box.
    pub fn box_center(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n,
            self.sample_box.iter().map(|(lo, hi)| 0.5 * (lo + hi)),
        )
    }

    /// Evaluates every function and Jacobian at the box centre and, for `n <= 3`, its corners.
    pub(crate) fn check_total_on_box(&self) -> Result<()> {
        let mut points = vec![self.box_center()];
        if self.n <= 3 {
            for mask in 0..(1usize << self.n) {
                points.push(DVector::from_iterator(
                    self.n,
                    self.sample_box.iter().enumerate().map(|(j, (lo, hi))| {
                        if mask >> j & 1 == 1 {
                            *hi
                        } else {
                            *lo
                        }
                    }),
                ));
            }
        }
        for x in &points {
            for i in 0..self.p {
                self.value(i, x)?;
                self.jacobian(i, x)?;
            }
        }
        Ok(())
    }
}

/// The per-facet scalar components `h^{i,q}(x) = (A f^i(x))_q / (Ae)_q`.
///
/// `G_e(f^i(x)) = max_q h^{i,q}(x)`, which reduces every Gerstewitz expression over a
/// linearised image to a max of smooth scalar functions.
#[derive(Clone, Copy)]
pub struct ScalarizedComponents<'a> {
    ps: &'a ProblemSpec,
}

impl ScalarizedComponents<'_> {
    /// Number of facets `Q`.
    pub fn rows(&self) -> usize {
        self.ps.cone.rows()
    }

    /// `(h^{i,1}(x), ..., h^{i,Q}(x))`.
    pub fn values(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(scale_rows(&self.ps.cone, &self.ps.value(i, x)?))
    }

    /// `Q x n` matrix whose row `q` is `∇h^{i,q}(x)^T = A_q J f^i(x) / (Ae)_q`.
    pub fn gradients(&self, i: usize, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(scale_jacobian(&self.ps.cone, &self.ps.jacobian(i, x)?))
    }
}

/// `(Ay)_q / (Ae)_q` for every row.
pub fn scale_rows(cone: &ConeSpec, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        cone.rows(),
        (0..cone.rows()).map(|q| row_dot(cone.matrix(), q, y) / cone.ae()[q]),
    )
}

/// `diag(1 / Ae) A J`.
pub fn scale_jacobian(cone: &ConeSpec, jac: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = cone.matrix() * jac;
    for q in 0..cone.rows() {
        let s = cone.ae()[q];
        g.row_mut(q).iter_mut().for_each(|v| *v /= s);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalarized_orthant_is_identity() {
        let ps = builtin("ex3").unwrap();
        let x = DVector::from_column_slice(&[0.4, -1.1]);
        let s = ps.scalarize();
        for i in [0, 7, 24] {
            assert_eq!(s.values(i, &x).unwrap(), ps.value(i, &x).unwrap());
            assert_eq!(s.gradients(i, &x).unwrap(), ps.jacobian(i, &x).unwrap());
        }
    }

    #[test]
    fn scalarized_ex5_first_row() {
        let ps = builtin("ex5").unwrap();
        let x = DVector::from_column_slice(&[3.1]);
        for i in 0..4 {
            let f = ps.value(i, &x).unwrap();
            let h = ps.scalarize().values(i, &x).unwrap();
            assert!((h[0] - (6.0 * f[0] - 2.0 * f[1]) / 4.0).abs() < 1e-12);
            assert!((h[1] - (-7.0 * f[0] + 10.0 * f[1]) / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scalarized_max_is_gerstewitz() {
        for name in BUILTIN_NAMES {
            let ps = builtin(name).unwrap();
            let x = ps.box_center().map(|v| v + 0.37);
            for i in 0..ps.p {
                let h = ps.scalarize().values(i, &x).unwrap();
                let g = ps.cone.gerstewitz(&ps.value(i, &x).unwrap()).unwrap();
                assert_eq!(h.max(), g, "{name} i={i}");
            }
        }
    }
}
