//! The seven reference instances ex1..ex7 with hand-coded Jacobians.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ProblemSpec, VectorFunctions};
use crate::cone::ConeSpec;
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 7] = ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex7"];

/// `(value, row-major Jacobian)` of `f^i` for a 1-based `i`.
type Eval = fn(usize, &[f64]) -> (Vec<f64>, Vec<f64>);

struct Analytic {
    m: usize,
    n: usize,
    eval: Eval,
}

impl Analytic {
    fn run(&self, i: usize, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (v, j) = (self.eval)(i + 1, x);
        if v.iter().chain(&j).any(|t| !t.is_finite()) {
            return Err(Error::Domain {
                function: i + 1,
                x: x.to_vec(),
                detail: "non-finite value".into(),
            });
        }
        Ok((v, j))
    }
}

impl VectorFunctions for Analytic {
    fn value(&self, i: usize, x: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.run(i, x)?.0))
    }

    fn jacobian(&self, i: usize, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(self.m, self.n, &self.run(i, x)?.1))
    }
}

fn angle(i: usize, period: f64) -> f64 {
    2.0 * PI * (i as f64 - 1.0) / period
}

fn ex1(i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let x = x[0];
    let t = angle(i, 50.0);
    let ex = x.exp();
    let (s2, c2) = (2.0 * x).sin_cos();
    (
        vec![x * ex + t.sin(), 2.0 * x * c2 + t.cos()],
        vec![(1.0 + x) * ex, 2.0 * c2 - 4.0 * x * s2],
    )
}

fn ex2(i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let x = x[0];
    let t = angle(i, 30.0);
    let e2 = (2.0 * x).exp();
    let d = 1.0 + e2;
    (
        vec![
            0.27 * t.sin() * t.cos() + x * x,
            (2.0 * x).cos() + 1.0 / d + 0.27 * t.cos(),
            0.27 * x * x + (i as f64 - 1.0) / 30.0,
        ],
        vec![
            2.0 * x,
            -2.0 * (2.0 * x).sin() - 2.0 * e2 / (d * d),
            0.54 * x,
        ],
    )
}

fn ex3(i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (x[0], x[1]);
    let (s, c) = angle(i, 100.0).sin_cos();
    (
        vec![
            a * a + b.cos() + c * s * s + b * b,
            2.0 * a * a + a.sin() + c * c * s + 2.0 * b * b,
        ],
        vec![2.0 * a, -b.sin() + 2.0 * b, 4.0 * a + a.cos(), 4.0 * b],
    )
}

fn ex4(i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (x[0], x[1]);
    let (s, c) = angle(i, 20.0).sin_cos();
    let (ea, eb) = (a.exp(), b.exp());
    (
        vec![
            ea + s + eb,
            2.0 * ea + c + 2.0 * eb,
            a * a + (i as f64 - 1.0) / 20.0 + b * b,
        ],
        vec![ea, eb, 2.0 * ea, 2.0 * eb, 2.0 * a, 2.0 * b],
    )
}

fn ex5(i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let x = x[0];
    let i = i as f64;
    let (s, c) = x.sin_cos();
    (
        vec![
            2.0 * x * x + x.exp() + (i - 3.0) / 2.0,
            0.5 * x * c + 0.5 * (3.0 - i) * s * s,
        ],
        vec![4.0 * x + x.exp(), 0.5 * c - 0.5 * x * s + (3.0 - i) * s * c],
    )
}

fn ex6(i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (x[0], x[1]);
    let (s, c) = angle(i, 100.0).sin_cos();
    let e = (a + b).exp();
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    (
        vec![
            a * a + sa + a * a * cb + 0.25 * c * s * s + e + b * b,
            2.0 * a * a + b * b * ca + 0.25 * c * c * s + cb + e + 2.0 * b * b,
        ],
        vec![
            2.0 * a + ca + 2.0 * a * cb + e,
            -a * a * sb + e + 2.0 * b,
            4.0 * a - b * b * sa + e,
            2.0 * b * ca - sb + e + 4.0 * b,
        ],
    )
}

/// Uncertainty offset `u_i` of ex7: a 10 x 10 grid over `[-1, 1]^2`.
pub(crate) fn ex7_offset(i: usize) -> [f64; 2] {
    let k = i - 1;
    let grid = |t: usize| -1.0 + 2.0 * t as f64 / 9.0;
    [grid(k / 10), grid(k % 10)]
}

const EX7_ANCHORS: [[f64; 2]; 3] = [[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]];

fn ex7(i: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let u = ex7_offset(i);
    let mut v = Vec::with_capacity(3);
    let mut j = Vec::with_capacity(6);
    for l in EX7_ANCHORS {
        let d = [x[0] - l[0] - u[0], x[1] - l[1] - u[1]];
        v.push(0.5 * (d[0] * d[0] + d[1] * d[1]));
        j.extend_from_slice(&d);
    }
    (v, j)
}

/// One of the reference instances `ex1` .. `ex7`.
pub fn builtin(name: &str) -> Result<ProblemSpec> {
    let orthant = ConeSpec::nonnegative_orthant;
    let (n, m, p, cone, sample_box, eval): (usize, usize, usize, ConeSpec, Vec<(f64, f64)>, Eval) =
        match name {
            "ex1" => (1, 2, 50, orthant(2), vec![(-5.0, 5.0)], ex1),
            "ex2" => (1, 3, 30, orthant(3), vec![(-5.0, 5.0)], ex2),
            "ex3" => (2, 2, 25, orthant(2), vec![(-5.0, 5.0); 2], ex3),
            "ex4" => (2, 3, 10, orthant(3), vec![(-4.0, 3.0); 2], ex4),
            "ex5" => (
                1,
                2,
                4,
                ConeSpec::from_rows(&[vec![6.0, -2.0], vec![-7.0, 10.0]], &[1.0, 1.0])?,
                vec![(2.335, 4.401)],
                ex5,
            ),
            "ex6" => (
                2,
                2,
                100,
                ConeSpec::from_rows(&[vec![-2.0, 6.0], vec![6.0, -7.0]], &[1.0, 0.6])?,
                vec![(-PI, PI); 2],
                ex6,
            ),
            "ex7" => (2, 3, 100, orthant(3), vec![(-50.0, 50.0); 2], ex7),
            _ => return Err(Error::UnknownProblem(name.to_string())),
        };
    ProblemSpec::new(
        name,
        n,
        m,
        p,
        cone,
        sample_box,
        Arc::new(Analytic { m, n, eval }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn close(a: &DVector<f64>, b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(p, q)| (p - q).abs() <= tol)
    }

    #[test]
    fn dimensions() {
        let dims: Vec<_> = BUILTIN_NAMES
            .iter()
            .map(|n| {
                let ps = builtin(n).unwrap();
                (ps.p, ps.n, ps.m)
            })
            .collect();
        assert_eq!(
            dims,
            vec![
                (50, 1, 2),
                (30, 1, 3),
                (25, 2, 2),
                (10, 2, 3),
                (4, 1, 2),
                (100, 2, 2),
                (100, 2, 3)
            ]
        );
        assert!(
            builtin("ex5").unwrap().cone.matrix()
                == &DMatrix::from_row_slice(2, 2, &[6.0, -2.0, -7.0, 10.0])
        );
        assert!(matches!(builtin("ex8"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn ex1_trace_row_zero() {
        let ps = builtin("ex1").unwrap();
        let f = ps.eval_f(&x(&[2.3])).unwrap();
        assert!(close(&f[9], &[23.8454, -0.0901], 5e-4));
        assert!(close(&f[24], &[23.0660, -1.5080], 5e-4));
        assert!(close(&f[49], &[22.8153, 0.4762], 5e-4));
    }

    #[test]
    fn ex5_trace_row_zero() {
        let ps = builtin("ex5").unwrap();
        let f = ps.eval_f(&x(&[4.0])).unwrap();
        let want = [
            [85.5982, -0.7345],
            [86.0982, -1.0209],
            [86.5982, -1.3073],
            [87.0982, -1.5937],
        ];
        for (fi, w) in f.iter().zip(want) {
            assert!(close(fi, &w, 5e-4), "{fi} vs {w:?}");
        }
    }

    #[test]
    fn ex1_jacobian_at_2_3() {
        let j = builtin("ex1").unwrap().jacobian(0, &x(&[2.3])).unwrap();
        assert!((j[(0, 0)] - 32.9148).abs() < 1e-3);
        assert!((j[(1, 0)] - 8.9177).abs() < 1e-3);
    }

    #[test]
    fn ex7_vanishes_at_shifted_anchor() {
        let ps = builtin("ex7").unwrap();
        for i in [1, 13, 58, 100] {
            let u = ex7_offset(i);
            let xi = x(&u);
            assert_eq!(ps.value(i - 1, &xi).unwrap()[0], 0.0);
            let j = ps.jacobian(i - 1, &x(&[3.0, -2.0])).unwrap();
            assert_eq!(
                j.row(1).iter().copied().collect::<Vec<_>>(),
                vec![3.0 - 8.0 - u[0], -2.0 - u[1]]
            );
        }
        assert_eq!(ex7_offset(1), [-1.0, -1.0]);
        assert_eq!(ex7_offset(100), [1.0, 1.0]);
    }

    #[test]
    fn overflow_is_a_domain_error() {
        let ps = builtin("ex4").unwrap();
        assert!(matches!(
            ps.value(0, &x(&[800.0, 0.0])),
            Err(Error::Domain { function: 1, .. })
        ));
    }
}
