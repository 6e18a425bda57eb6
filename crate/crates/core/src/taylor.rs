//! Second-order truncated Taylor numbers.
//!
//! A [`Taylor2`] carries a value together with its gradient and Hessian with
//! respect to a fixed set of chart parameters. Parametrizations are written
//! once over this type and yield exact first and second derivatives, which is
//! what the families module uses for its analytic jets.
//!
//! Constants carry an empty gradient, so evaluating a parametrization at plain
//! numbers costs little more than an `f64` evaluation.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Taylor2 {
    value: f64,
    grad: Vec<f64>,
    /// Row-major `dim x dim`, symmetric.
    hess: Vec<f64>,
}

impl Taylor2 {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            grad: Vec::new(),
            hess: Vec::new(),
        }
    }

    /// The `index`-th of `dim` independent variables, evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        assert!(index < dim, "variable index {index} out of range for dim {dim}");
        let mut grad = vec![0.0; dim];
        grad[index] = 1.0;
        Self {
            value,
            grad,
            hess: vec![0.0; dim * dim],
        }
    }

    /// Seeds every coordinate of `point` as an independent variable.
    pub fn variables(point: &[f64]) -> Vec<Self> {
        let dim = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Self::variable(x, i, dim))
            .collect()
    }

    pub fn constants(point: &[f64]) -> Vec<Self> {
        point.iter().map(|&x| Self::constant(x)).collect()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// First partial derivative; zero for constants.
    pub fn d1(&self, i: usize) -> f64 {
        self.grad.get(i).copied().unwrap_or(0.0)
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let dim = self.dim();
        if dim == 0 {
            0.0
        } else {
            self.hess[i * dim + j]
        }
    }

    fn is_constant(&self) -> bool {
        self.grad.is_empty()
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    fn chain(&self, f: f64, df: f64, ddf: f64) -> Self {
        if self.is_constant() {
            return Self::constant(f);
        }
        let dim = self.dim();
        let grad = self.grad.iter().map(|g| df * g).collect();
        let mut hess = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                hess.push(df * self.hess[i * dim + j] + ddf * self.grad[i] * self.grad[j]);
            }
        }
        Self {
            value: f,
            grad,
            hess,
        }
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn recip(&self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn scale(&self, k: f64) -> Self {
        self.chain(k * self.value, k, 0.0)
    }

    pub fn offset(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.value += k;
        out
    }

    fn zip(&self, other: &Self, value: f64, fa: f64, fb: f64) -> Self {
        // Linear combination fa * self + fb * other in the derivative parts.
        match (self.is_constant(), other.is_constant()) {
            (true, true) => Self::constant(value),
            (false, true) => {
                let mut out = self.scale(fa);
                out.value = value;
                out
            }
            (true, false) => {
                let mut out = other.scale(fb);
                out.value = value;
                out
            }
            (false, false) => {
                assert_eq!(self.dim(), other.dim(), "mismatched Taylor dimensions");
                Self {
                    value,
                    grad: self
                        .grad
                        .iter()
                        .zip(&other.grad)
                        .map(|(a, b)| fa * a + fb * b)
                        .collect(),
                    hess: self
                        .hess
                        .iter()
                        .zip(&other.hess)
                        .map(|(a, b)| fa * a + fb * b)
                        .collect(),
                }
            }
        }
    }

    fn product(&self, other: &Self) -> Self {
        let value = self.value * other.value;
        if self.is_constant() || other.is_constant() {
            return self.zip(other, value, other.value, self.value);
        }
        let mut out = self.zip(other, value, other.value, self.value);
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                out.hess[i * dim + j] +=
                    self.grad[i] * other.grad[j] + other.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl From<f64> for Taylor2 {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl Neg for Taylor2 {
    type Output = Taylor2;
    fn neg(self) -> Taylor2 {
        self.scale(-1.0)
    }
}

impl Neg for &Taylor2 {
    type Output = Taylor2;
    fn neg(self) -> Taylor2 {
        self.scale(-1.0)
    }
}

macro_rules! binary_ops {
    ($($tr:ident :: $m:ident => |$a:ident, $b:ident| $body:expr;)*) => {$(
        impl $tr<&Taylor2> for &Taylor2 {
            type Output = Taylor2;
            fn $m(self, rhs: &Taylor2) -> Taylor2 {
                let ($a, $b) = (self, rhs);
                $body
            }
        }
        impl $tr<Taylor2> for Taylor2 {
            type Output = Taylor2;
            fn $m(self, rhs: Taylor2) -> Taylor2 {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Taylor2> for Taylor2 {
            type Output = Taylor2;
            fn $m(self, rhs: &Taylor2) -> Taylor2 {
                (&self).$m(rhs)
            }
        }
        impl $tr<Taylor2> for &Taylor2 {
            type Output = Taylor2;
            fn $m(self, rhs: Taylor2) -> Taylor2 {
                self.$m(&rhs)
            }
        }
        impl $tr<f64> for &Taylor2 {
            type Output = Taylor2;
            fn $m(self, rhs: f64) -> Taylor2 {
                self.$m(&Taylor2::constant(rhs))
            }
        }
        impl $tr<f64> for Taylor2 {
            type Output = Taylor2;
            fn $m(self, rhs: f64) -> Taylor2 {
                (&self).$m(&Taylor2::constant(rhs))
            }
        }
        impl $tr<&Taylor2> for f64 {
            type Output = Taylor2;
            fn $m(self, rhs: &Taylor2) -> Taylor2 {
                (&Taylor2::constant(self)).$m(rhs)
            }
        }
        impl $tr<Taylor2> for f64 {
            type Output = Taylor2;
            fn $m(self, rhs: Taylor2) -> Taylor2 {
                (&Taylor2::constant(self)).$m(&rhs)
            }
        }
    )*};
}

binary_ops! {
    Add::add => |a, b| a.zip(b, a.value + b.value, 1.0, 1.0);
    Sub::sub => |a, b| a.zip(b, a.value - b.value, 1.0, -1.0);
    Mul::mul => |a, b| a.product(b);
    Div::div => |a, b| a.product(&b.recip());
}
