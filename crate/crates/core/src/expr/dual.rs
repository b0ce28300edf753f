/// Forward-mode dual number: a value together with its gradient in `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualNumber {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl DualNumber {
    pub fn constant(value: f64, n: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; n],
        }
    }

    /// The seed for variable `j`: value `v`, gradient `e_j`.
    pub fn variable(value: f64, j: usize, n: usize) -> Self {
        let mut grad = vec![0.0; n];
        grad[j] = 1.0;
        Self { value, grad }
    }

    pub fn is_constant(&self) -> bool {
        self.grad.iter().all(|g| *g == 0.0)
    }

    /// Chain rule for a unary function with value `value` and derivative `slope`.
    pub(crate) fn chain(&self, value: f64, slope: f64) -> Self {
        Self {
            value,
            grad: self.grad.iter().map(|g| slope * g).collect(),
        }
    }

    /// `alpha * a' + beta * b'`.
    pub(crate) fn combine(a: &Self, alpha: f64, b: &Self, beta: f64, value: f64) -> Self {
        Self {
            value,
            grad: a
                .grad
                .iter()
                .zip(&b.grad)
                .map(|(ga, gb)| alpha * ga + beta * gb)
                .collect(),
        }
    }
}
