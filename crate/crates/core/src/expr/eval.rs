use std::f64::consts::PI;

use super::{BinaryOp, DualNumber, Expr, ExprError, Func, Node, Pos};

/// Arithmetic needed by the tree walker, implemented for `f64` and [`DualNumber`].
trait Scalar: Clone {
    fn lift(v: f64, n: usize) -> Self;
    fn var(v: f64, j: usize, n: usize) -> Self;
    fn value(&self) -> f64;
    fn is_constant(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// Caller guarantees a nonzero denominator.
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Apply a scalar function with value `value` and derivative `slope` at `self`.
    fn map(&self, value: f64, slope: f64) -> Self;
    /// `self ^ o` with the general rule `d(a^b) = a^b (b' ln a + b a'/a)`; requires `self > 0`.
    fn pow_general(&self, o: &Self, value: f64) -> Self;
}

impl Scalar for f64 {
    fn lift(v: f64, _: usize) -> Self {
        v
    }
    fn var(v: f64, _: usize, _: usize) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn map(&self, value: f64, _: f64) -> Self {
        value
    }
    fn pow_general(&self, _: &Self, value: f64) -> Self {
        value
    }
}

impl Scalar for DualNumber {
    fn lift(v: f64, n: usize) -> Self {
        DualNumber::constant(v, n)
    }
    fn var(v: f64, j: usize, n: usize) -> Self {
        DualNumber::variable(v, j, n)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn is_constant(&self) -> bool {
        DualNumber::is_constant(self)
    }
    fn add(&self, o: &Self) -> Self {
        DualNumber::combine(self, 1.0, o, 1.0, self.value + o.value)
    }
    fn sub(&self, o: &Self) -> Self {
        DualNumber::combine(self, 1.0, o, -1.0, self.value - o.value)
    }
    fn mul(&self, o: &Self) -> Self {
        DualNumber::combine(self, o.value, o, self.value, self.value * o.value)
    }
    fn div(&self, o: &Self) -> Self {
        let q = self.value / o.value;
        DualNumber::combine(self, 1.0 / o.value, o, -q / o.value, q)
    }
    fn neg(&self) -> Self {
        self.chain(-self.value, -1.0)
    }
    fn map(&self, value: f64, slope: f64) -> Self {
        self.chain(value, slope)
    }
    fn pow_general(&self, o: &Self, value: f64) -> Self {
        DualNumber::combine(
            self,
            value * o.value / self.value,
            o,
            value * self.value.ln(),
            value,
        )
    }
}

struct Walker<'a, S> {
    vars: &'a [S],
    param: f64,
    n: usize,
    dual: bool,
    nonsmooth: bool,
}

fn domain(pos: Pos, message: impl Into<String>) -> ExprError {
    ExprError::Domain {
        pos,
        message: message.into(),
    }
}

impl<S: Scalar> Walker<'_, S> {
    fn eval(&mut self, e: &Expr) -> Result<S, ExprError> {
        let out = match &e.node {
            Node::Const(c) => S::lift(*c, self.n),
            Node::Var(j) => self.vars[*j].clone(),
            Node::Param => S::lift(self.param, self.n),
            Node::Pi => S::lift(PI, self.n),
            Node::Neg(a) => self.eval(a)?.neg(),
            Node::Binary(op, a, b) => {
                let a = self.eval(a)?;
                let b = self.eval(b)?;
                match op {
                    BinaryOp::Add => a.add(&b),
                    BinaryOp::Sub => a.sub(&b),
                    BinaryOp::Mul => a.mul(&b),
                    BinaryOp::Div => {
                        if b.value() == 0.0 {
                            return Err(domain(e.pos, "division by zero"));
                        }
                        a.div(&b)
                    }
                    BinaryOp::Pow => self.pow(e.pos, &a, &b)?,
                }
            }
            Node::Call(f, args) => {
                let a = self.eval(&args[0])?;
                if *f == Func::Pow {
                    let b = self.eval(&args[1])?;
                    self.pow(e.pos, &a, &b)?
                } else {
                    self.call(e.pos, *f, &a)?
                }
            }
        };
        if !out.value().is_finite() {
            return Err(domain(e.pos, format!("non-finite value {}", out.value())));
        }
        Ok(out)
    }

    fn call(&mut self, pos: Pos, f: Func, a: &S) -> Result<S, ExprError> {
        let v = a.value();
        Ok(match f {
            Func::Sin => a.map(v.sin(), v.cos()),
            Func::Cos => a.map(v.cos(), -v.sin()),
            Func::Tan => {
                let c = v.cos();
                a.map(v.tan(), 1.0 / (c * c))
            }
            Func::Exp => {
                let ev = v.exp();
                a.map(ev, ev)
            }
            Func::Log => {
                if v <= 0.0 {
                    return Err(domain(pos, format!("log of non-positive argument {v}")));
                }
                a.map(v.ln(), 1.0 / v)
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(domain(pos, format!("sqrt of negative argument {v}")));
                }
                if v == 0.0 {
                    if self.dual && !a.is_constant() {
                        return Err(domain(pos, "sqrt is not differentiable at 0"));
                    }
                    a.map(0.0, 0.0)
                } else {
                    let r = v.sqrt();
                    a.map(r, 0.5 / r)
                }
            }
            Func::Abs => {
                if v == 0.0 && !a.is_constant() {
                    self.nonsmooth = true;
                }
                let slope = if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                a.map(v.abs(), slope)
            }
            Func::Floor => a.map(v.floor(), 0.0),
            Func::Pow => unreachable!("pow is binary"),
        })
    }

    fn pow(&mut self, pos: Pos, a: &S, b: &S) -> Result<S, ExprError> {
        let (x, y) = (a.value(), b.value());
        if x < 0.0 && y.fract() != 0.0 {
            return Err(domain(
                pos,
                format!("negative base {x} with non-integer exponent {y}"),
            ));
        }
        if x == 0.0 && y < 0.0 {
            return Err(domain(pos, "zero raised to a negative power"));
        }
        let value = x.powf(y);
        if b.is_constant() {
            if y == 0.0 {
                return Ok(a.map(value, 0.0));
            }
            if x == 0.0 && y < 1.0 && self.dual && !a.is_constant() {
                return Err(domain(pos, format!("x^{y} is not differentiable at 0")));
            }
            return Ok(a.map(value, y * x.powf(y - 1.0)));
        }
        if x <= 0.0 {
            return Err(domain(
                pos,
                format!("variable exponent requires a positive base, got {x}"),
            ));
        }
        Ok(a.pow_general(b, value))
    }
}

impl Expr {
    /// Evaluates at `x` with function index `i` (1-based).
    pub fn eval(&self, x: &[f64], i: usize) -> Result<f64, ExprError> {
        let mut w = Walker {
            vars: x,
            param: i as f64,
            n: x.len(),
            dual: false,
            nonsmooth: false,
        };
        self.check_arity(x.len())?;
        w.eval(self)
    }

    /// Value and gradient at `x` by forward-mode differentiation.
    pub fn eval_dual(&self, x: &[f64], i: usize) -> Result<DualNumber, ExprError> {
        self.eval_dual_flagged(x, i).map(|(d, _)| d)
    }

    /// As [`Expr::eval_dual`]; the flag is set when `abs` was differentiated at 0,
    /// where the reported slope 0 is a convention rather than a derivative.
    pub fn eval_dual_flagged(&self, x: &[f64], i: usize) -> Result<(DualNumber, bool), ExprError> {
        self.check_arity(x.len())?;
        let n = x.len();
        let vars: Vec<DualNumber> = x
            .iter()
            .enumerate()
            .map(|(j, v)| DualNumber::var(*v, j, n))
            .collect();
        let mut w = Walker {
            vars: &vars,
            param: i as f64,
            n,
            dual: true,
            nonsmooth: false,
        };
        let d = w.eval(self)?;
        if d.grad.iter().any(|g| !g.is_finite()) {
            return Err(domain(self.pos, "non-finite derivative"));
        }
        Ok((d, w.nonsmooth))
    }

    fn check_arity(&self, n: usize) -> Result<(), ExprError> {
        match self.free_variables().last() {
            Some(&j) if j >= n => Err(ExprError::Dimension {
                expected: j + 1,
                found: n,
            }),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn fd(src: &str, x: &[f64], i: usize) -> Vec<f64> {
        let e = parse(src, x.len()).unwrap();
        (0..x.len())
            .map(|j| {
                let h = 1e-6 * (1.0 + x[j].abs());
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[j] += h;
                xm[j] -= h;
                (e.eval(&xp, i).unwrap() - e.eval(&xm, i).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn evaluates_with_parameter() {
        let e = parse("x1*exp(x1) + sin(2*pi*(i-1)/50)", 1).unwrap();
        let theta = 2.0 * std::f64::consts::PI * 9.0 / 50.0;
        let want = 2.3 * 2.3f64.exp() + theta.sin();
        assert!((e.eval(&[2.3], 10).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn dual_matches_finite_differences() {
        let cases: [(&str, &[f64]); 6] = [
            ("x1^2 + cos(x2) + x2^2", &[1.0, -1.5]),
            ("2*x1^2 + sin(x1) + 2*x2^2 + i", &[0.3, 0.7]),
            ("exp(x1 + x2) * x1^2 * cos(x2)", &[0.2, -0.4]),
            ("log(1 + exp(2*x1)) / sqrt(x2)", &[0.5, 2.0]),
            ("pow(x1, x2) - tan(x1) / 3", &[1.3, 0.6]),
            ("1/(1+exp(2*x1)) - abs(x1 - x2)", &[-0.8, 0.1]),
        ];
        for (src, x) in cases {
            let e = parse(src, x.len()).unwrap();
            let d = e.eval_dual(x, 3).unwrap();
            assert!((d.value - e.eval(x, 3).unwrap()).abs() < 1e-15, "{src}");
            for (g, f) in d.grad.iter().zip(fd(src, x, 3)) {
                assert!((g - f).abs() < 1e-6 * (1.0 + g.abs()), "{src}: {g} vs {f}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        let dom = |src: &str, x: f64| {
            matches!(
                parse(src, 1).unwrap().eval(&[x], 1),
                Err(crate::expr::ExprError::Domain { .. })
            )
        };
        assert!(dom("log(x1)", 0.0));
        assert!(dom("log(x1)", -1.0));
        assert!(dom("sqrt(x1)", -1e-3));
        assert!(dom("1/x1", 0.0));
        assert!(dom("x1^0.5", -2.0));
        assert!(dom("x1^(-1)", 0.0));
        assert!(dom("exp(x1)", 1000.0));
        assert!(!dom("sqrt(x1)", 0.0));
        assert!(!dom("x1^3", -2.0));
        let e = parse("sqrt(x1)", 1).unwrap();
        assert!(e.eval_dual(&[0.0], 1).is_err());
    }

    #[test]
    fn abs_at_zero_is_flagged() {
        let e = parse("abs(x1)", 1).unwrap();
        let (d, flagged) = e.eval_dual_flagged(&[0.0], 1).unwrap();
        assert_eq!(d.grad, vec![0.0]);
        assert!(flagged);
        let (d, flagged) = e.eval_dual_flagged(&[-2.0], 1).unwrap();
        assert_eq!(d.grad, vec![-1.0]);
        assert!(!flagged);
    }

    #[test]
    fn floor_of_parameter() {
        let e = parse("floor((i-1)/10)", 1).unwrap();
        assert_eq!(e.eval(&[0.0], 1).unwrap(), 0.0);
        assert_eq!(e.eval(&[0.0], 23).unwrap(), 2.0);
        assert_eq!(e.eval_dual(&[0.4], 100).unwrap().grad, vec![0.0]);
    }
}
