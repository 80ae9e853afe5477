//! Forward-mode automatic differentiation scalars.
//!
//! [`Dual`] carries a value and a gradient with respect to `N` seeded
//! variables; [`HyperDual`] additionally carries the full Hessian. Both
//! implement [`Scalar`], so a strain-energy function written once over
//! `S: Scalar` yields ψ (with `f64`), ∂ψ (with `Dual`) or ∂ψ and ∂²ψ (with
//! `HyperDual`).

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Arithmetic needed by the constitutive and kinematic code.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    fn constant(value: f64) -> Self;
    fn value(&self) -> f64;
    fn ln(self) -> Self;
    fn powf(self, exponent: f64) -> Self;
    fn recip(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn powi(self, n: i32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..n.unsigned_abs() {
            acc = acc * self;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(value: f64) -> Self {
        value
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powf(self, exponent: f64) -> Self {
        f64::powf(self, exponent)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// First-order dual number over `N` variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub value: f64,
    pub grad: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn variable(value: f64, index: usize) -> Self {
        let mut grad = [0.0; N];
        grad[index] = 1.0;
        Self { value, grad }
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut grad = self.grad;
        for g in grad.iter_mut() {
            *g *= df;
        }
        Self { value: f, grad }
    }
}

/// Second-order (hyper-dual) number over `N` variables with a dense Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual<const N: usize> {
    pub value: f64,
    pub grad: [f64; N],
    pub hess: [[f64; N]; N],
}

impl<const N: usize> HyperDual<N> {
    pub fn variable(value: f64, index: usize) -> Self {
        let mut grad = [0.0; N];
        grad[index] = 1.0;
        Self {
            value,
            grad,
            hess: [[0.0; N]; N],
        }
    }

    /// Applies a scalar function given its value and first two derivatives.
    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self {
            value: f,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
        };
        for i in 0..N {
            out.grad[i] = df * self.grad[i];
            let gi = d2f * self.grad[i];
            for j in 0..N {
                out.hess[i][j] = df * self.hess[i][j] + gi * self.grad[j];
            }
        }
        out
    }
}

macro_rules! impl_common {
    ($ty:ident) => {
        impl<const N: usize> Add<f64> for $ty<N> {
            type Output = Self;
            #[inline]
            fn add(mut self, rhs: f64) -> Self {
                self.value += rhs;
                self
            }
        }

        impl<const N: usize> Sub<f64> for $ty<N> {
            type Output = Self;
            #[inline]
            fn sub(mut self, rhs: f64) -> Self {
                self.value -= rhs;
                self
            }
        }

        impl<const N: usize> Div<f64> for $ty<N> {
            type Output = Self;
            #[inline]
            fn div(self, rhs: f64) -> Self {
                let mut out = self * (1.0 / rhs);
                out.value = self.value / rhs;
                out
            }
        }

        impl<const N: usize> Div for $ty<N> {
            type Output = Self;
            #[inline]
            fn div(self, rhs: Self) -> Self {
                let mut out = self * rhs.recip();
                out.value = self.value / rhs.value;
                out
            }
        }

        impl<const N: usize> AddAssign for $ty<N> {
            #[inline]
            fn add_assign(&mut self, rhs: Self) {
                *self = *self + rhs;
            }
        }

        impl<const N: usize> SubAssign for $ty<N> {
            #[inline]
            fn sub_assign(&mut self, rhs: Self) {
                *self = *self - rhs;
            }
        }
    };
}

impl_common!(Dual);
impl_common!(HyperDual);

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for (a, b) in self.grad.iter_mut().zip(rhs.grad) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for (a, b) in self.grad.iter_mut().zip(rhs.grad) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.value *= rhs;
        for g in self.grad.iter_mut() {
            *g *= rhs;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut grad = [0.0; N];
        for i in 0..N {
            grad[i] = self.grad[i] * rhs.value + rhs.grad[i] * self.value;
        }
        Self {
            value: self.value * rhs.value,
            grad,
        }
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; N],
        }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    fn powf(self, exponent: f64) -> Self {
        let x = self.value;
        self.chain(x.powf(exponent), exponent * x.powf(exponent - 1.0))
    }
    fn recip(self) -> Self {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x))
    }
}

impl<const N: usize> Add for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for i in 0..N {
            self.grad[i] += rhs.grad[i];
            for j in 0..N {
                self.hess[i][j] += rhs.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.value -= rhs.value;
        for i in 0..N {
            self.grad[i] -= rhs.grad[i];
            for j in 0..N {
                self.hess[i][j] -= rhs.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Mul<f64> for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.value *= rhs;
        for i in 0..N {
            self.grad[i] *= rhs;
            for j in 0..N {
                self.hess[i][j] *= rhs;
            }
        }
        self
    }
}

impl<const N: usize> Mul for HyperDual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self.value, rhs.value);
        let mut out = Self {
            value: a * b,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
        };
        for i in 0..N {
            out.grad[i] = self.grad[i] * b + rhs.grad[i] * a;
            for j in 0..N {
                out.hess[i][j] = self.hess[i][j] * b
                    + rhs.hess[i][j] * a
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
            }
        }
        out
    }
}

impl<const N: usize> Scalar for HyperDual<N> {
    fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
        }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn ln(self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }
    fn powf(self, exponent: f64) -> Self {
        let x = self.value;
        let e = exponent;
        self.chain(
            x.powf(e),
            e * x.powf(e - 1.0),
            e * (e - 1.0) * x.powf(e - 2.0),
        )
    }
    fn recip(self) -> Self {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}
