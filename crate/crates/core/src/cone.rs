//! Polyhedral ordering cones `K = {z : Az >= 0}` and the order relations they induce.
//!
//! A [`ConeSpec`] also carries the interior direction `e` used by the Gerstewitz
//! scalarizing functional. For a polyhedral cone the functional has the closed form
//!
//! ```text
//! G_e(y) = min { t : t e - y in K } = max_q (A y)_q / (A e)_q
//! ```
//!
//! since `t e - y in K` holds iff `t (Ae)_q >= (Ay)_q` for every row `q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Slack used by order tests inside iterative code paths.
pub const ITERATIVE_ORDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    a: DMatrix<f64>,
    e: DVector<f64>,
    ae: DVector<f64>,
    lipschitz: f64,
}

impl ConeSpec {
    /// Validates `A` (rows are facet normals) and the interior direction `e`.
    pub fn new(a: DMatrix<f64>, e: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        check_dim(a.ncols(), e.len())?;
        if a.iter().chain(e.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown("non-finite cone data".into()));
        }
        let m = a.ncols();
        let rank = numerical_rank(&a);
        if rank < m {
            return Err(Error::RankDeficient { rank, dim: m });
        }
        let ae = DVector::from_iterator(a.nrows(), (0..a.nrows()).map(|q| row_dot(&a, q, &e)));
        if let Some((row, &value)) = ae.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NotInterior {
                row: row + 1,
                value,
            });
        }
        let lipschitz = (0..a.nrows())
            .map(|q| a.row(q).norm() / ae[q])
            .fold(0.0, f64::max);
        Ok(Self {
            a,
            e,
            ae,
            lipschitz,
        })
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(rows: &[Vec<f64>], e: &[f64]) -> Result<Self> {
        let q = rows.len();
        if q == 0 {
            return Err(Error::EmptyMatrix);
        }
        let m = rows[0].len();
        for r in rows {
            check_dim(m, r.len())?;
        }
        let a = DMatrix::from_fn(q, m, |i, j| rows[i][j]);
        Self::new(a, DVector::from_column_slice(e))
    }

    /// The nonnegative orthant `R^m_+` with `e = (1, ..., 1)`.
    pub fn nonnegative_orthant(m: usize) -> Self {
        Self::new(DMatrix::identity(m, m), DVector::from_element(m, 1.0))
            .expect("identity cone is valid")
    }

    /// Image dimension `m`.
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Number of facet rows `Q`.
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn interior(&self) -> &DVector<f64> {
        &self.e
    }

    /// Cached `A e`, all entries strictly positive.
    pub fn ae(&self) -> &DVector<f64> {
        &self.ae
    }

    /// Lipschitz constant of `G_e` w.r.t. the Euclidean norm: `max_q |A_q| / (Ae)_q`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// True when `A = I`, i.e. the cone is the nonnegative orthant.
    pub fn is_orthant(&self) -> bool {
        self.a.is_square() && self.a == DMatrix::identity(self.dim(), self.dim())
    }

    /// `(A z)_q` for every row.
    pub fn facet_values(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(DVector::from_iterator(
            self.rows(),
            (0..self.rows()).map(|q| row_dot(&self.a, q, z)),
        ))
    }

    /// `z in K` up to slack: `(Az)_q >= -tol` for all `q`.
    pub fn in_cone(&self, z: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        Ok((0..self.rows()).all(|q| row_dot(&self.a, q, z) >= -tol))
    }

    /// `z in int(K)`: `(Az)_q > tol` for all `q`.
    pub fn in_int_cone(&self, z: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        Ok((0..self.rows()).all(|q| row_dot(&self.a, q, z) > tol))
    }

    /// `y ⪯ z`, i.e. `z - y in K`.
    pub fn leq(&self, y: &DVector<f64>, z: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), y.len())?;
        check_dim(self.dim(), z.len())?;
        Ok(self.leq_unchecked(y, z, tol))
    }

    /// `y ≺ z`, i.e. `z - y in int(K)`.
    pub fn lt(&self, y: &DVector<f64>, z: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), y.len())?;
        check_dim(self.dim(), z.len())?;
        Ok(self.lt_unchecked(y, z, tol))
    }

    /// `(A (z - y))_q` without allocating; same rounding as `facet_values(&(z - y))`.
    fn diff_row(&self, q: usize, y: &DVector<f64>, z: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for j in 0..self.a.ncols() {
            s += self.a[(q, j)] * (z[j] - y[j]);
        }
        s
    }

    pub(crate) fn leq_unchecked(&self, y: &DVector<f64>, z: &DVector<f64>, tol: f64) -> bool {
        (0..self.rows()).all(|q| self.diff_row(q, y, z) >= -tol)
    }

    pub(crate) fn lt_unchecked(&self, y: &DVector<f64>, z: &DVector<f64>, tol: f64) -> bool {
        (0..self.rows()).all(|q| self.diff_row(q, y, z) > tol)
    }

    /// Gerstewitz functional `G_e(y)` in closed form.
    pub fn gerstewitz(&self, y: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), y.len())?;
        Ok((0..self.rows())
            .map(|q| row_dot(&self.a, q, y) / self.ae[q])
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `ς(S) = min_{v in S} G_e(v)`.
    pub fn varsigma(&self, values: &[DVector<f64>]) -> Result<f64> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        values
            .iter()
            .map(|v| self.gerstewitz(v))
            .try_fold(f64::INFINITY, |acc, g| g.map(|g| acc.min(g)))
    }
}

/// Row-by-vector product with a fixed summation order, shared by every order test so
/// that `in_cone(-y)` and `G_e(y) <= 0` agree bit-for-bit.
#[inline]
pub(crate) fn row_dot(a: &DMatrix<f64>, q: usize, z: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        s += a[(q, j)] * z[j];
    }
    s
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    svd.singular_values.iter().filter(|s| **s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex5() -> ConeSpec {
        ConeSpec::from_rows(&[vec![6.0, -2.0], vec![-7.0, 10.0]], &[1.0, 1.0]).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn validate_examples() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert_eq!(c.ae(), &v(&[1.0, 1.0]));
        assert_eq!(ex5().ae(), &v(&[4.0, 3.0]));
        let err = ConeSpec::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 1, dim: 2 }));
    }

    #[test]
    fn validate_errors() {
        assert!(matches!(
            ConeSpec::new(DMatrix::zeros(0, 2), v(&[1.0, 1.0])),
            Err(Error::EmptyMatrix)
        ));
        // (2, -6) . (1, 1) = -4
        let err =
            ConeSpec::from_rows(&[vec![2.0, -6.0], vec![-6.0, 7.0]], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotInterior { row: 1, .. }));
        assert!(matches!(
            ConeSpec::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn redundant_rows_are_allowed() {
        let c = ConeSpec::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            &[1.0, 1.0],
        )
        .unwrap();
        assert_eq!(c.rows(), 3);
        assert_eq!(c.gerstewitz(&v(&[3.0, -1.0])).unwrap(), 3.0);
    }

    #[test]
    fn membership() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert!(c.in_cone(&v(&[0.0, 0.0]), 0.0).unwrap());
        assert!(ex5().in_cone(&v(&[1.0, 1.0]), 0.0).unwrap());
        assert!(c.in_cone(&v(&[-1e-14, 1.0]), 1e-12).unwrap());
        assert!(!c.in_cone(&v(&[-1e-14, 1.0]), 0.0).unwrap());

        assert!(c.in_int_cone(&v(&[1.0, 1.0]), 0.0).unwrap());
        assert!(!c.in_int_cone(&v(&[0.0, 1.0]), 0.0).unwrap());
        assert!(ex5().in_int_cone(&v(&[1.0, 1.0]), 0.0).unwrap());
        assert!(matches!(
            c.in_cone(&v(&[1.0]), 0.0),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn order_relations() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert!(c.leq(&v(&[1.0, 2.0]), &v(&[1.0, 3.0]), 0.0).unwrap());
        assert!(!c.lt(&v(&[1.0, 2.0]), &v(&[1.0, 3.0]), 0.0).unwrap());
        assert!(ex5().lt(&v(&[0.0, 0.0]), &v(&[1.0, 1.0]), 0.0).unwrap());
        let y = v(&[0.3, -7.1]);
        assert!(ex5().leq(&y, &y, 0.0).unwrap());
    }

    #[test]
    fn gerstewitz_values() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert_eq!(c.gerstewitz(&v(&[3.0, -1.0])).unwrap(), 3.0);
        assert_eq!(c.gerstewitz(&v(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(ex5().gerstewitz(&v(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(ex5().gerstewitz(&v(&[1.0, 0.0])).unwrap(), 1.5);
    }

    #[test]
    fn varsigma_values() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert_eq!(c.varsigma(&[v(&[3.0, -1.0]), v(&[0.0, 2.0])]).unwrap(), 2.0);
        let s = v(&[0.7, -0.2]);
        assert_eq!(
            ex5().varsigma(std::slice::from_ref(&s)).unwrap(),
            ex5().gerstewitz(&s).unwrap()
        );
        assert_eq!(ex5().varsigma(&[v(&[1.0, 1.0])]).unwrap(), 1.0);
        assert!(matches!(c.varsigma(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn lipschitz_constant() {
        assert_eq!(ConeSpec::nonnegative_orthant(3).lipschitz(), 1.0);
        let l = ex5().lipschitz();
        let expected = (40f64.sqrt() / 4.0).max(149f64.sqrt() / 3.0);
        assert!((l - expected).abs() < 1e-15);
    }
}
