//! Forward-mode dual numbers carrying two spatial tangents.
//!
//! [`Dual2`] propagates `(∂/∂x₁, ∂/∂x₂)` alongside a value. It drives the
//! spatial Jacobian of the network and the analytic differentiation of the
//! half-plane auxiliary displacements.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Minimal real-number interface shared by `f64` and [`Dual2`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn tanh(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan2(self, x: Self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

/// Value with two tangent components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2 {
    pub value: f64,
    pub tangents: [f64; 2],
}

impl Dual2 {
    pub const fn new(value: f64, tangents: [f64; 2]) -> Self {
        Self { value, tangents }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, [0.0, 0.0])
    }

    /// Independent variable along axis `axis` (0 or 1).
    pub fn variable(value: f64, axis: usize) -> Self {
        let mut tangents = [0.0; 2];
        tangents[axis] = 1.0;
        Self { value, tangents }
    }

    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        Self::new(value, [slope * self.tangents[0], slope * self.tangents[1]])
    }
}

impl Add for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(
            self.value + o.value,
            [self.tangents[0] + o.tangents[0], self.tangents[1] + o.tangents[1]],
        )
    }
}

impl Sub for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.value - o.value,
            [self.tangents[0] - o.tangents[0], self.tangents[1] - o.tangents[1]],
        )
    }
}

impl Mul for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.value * o.value,
            [
                self.tangents[0] * o.value + self.value * o.tangents[0],
                self.tangents[1] * o.value + self.value * o.tangents[1],
            ],
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.value;
        let q = self.value * inv;
        Self::new(
            q,
            [
                (self.tangents[0] - q * o.tangents[0]) * inv,
                (self.tangents[1] - q * o.tangents[1]) * inv,
            ],
        )
    }
}

impl Neg for Dual2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, [-self.tangents[0], -self.tangents[1]])
    }
}

impl Scalar for Dual2 {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.value
    }
    #[inline]
    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.chain(t, 1.0 - t * t)
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn atan2(self, x: Self) -> Self {
        let d = x.value * x.value + self.value * self.value;
        Self::new(
            self.value.atan2(x.value),
            [
                (x.value * self.tangents[0] - self.value * x.tangents[0]) / d,
                (x.value * self.tangents[1] - self.value * x.tangents[1]) / d,
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64, f64) -> f64>(f: F, x: f64, y: f64) -> [f64; 2] {
        let h = 1e-6;
        [
            (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            (f(x, y + h) - f(x, y - h)) / (2.0 * h),
        ]
    }

    #[test]
    fn tanh_tangent_is_one_minus_square() {
        let x = Dual2::variable(0.3, 0);
        let t = x.tanh();
        let th = 0.3f64.tanh();
        assert_eq!(t.tangents[0], 1.0 - th * th);
        assert_eq!(t.tangents[1], 0.0);
    }

    #[test]
    fn composite_matches_finite_differences() {
        fn g<S: Scalar>(x: S, y: S) -> S {
            (x * y + S::cst(2.0)).ln() / (x * x + y * y).sqrt() + y.atan2(x) - x.tanh()
        }
        let (x0, y0) = (0.7, -0.4);
        let d = g(Dual2::variable(x0, 0), Dual2::variable(y0, 1));
        let reference = fd(|x, y| g(x, y), x0, y0);
        assert!((d.value - g(x0, y0)).abs() < 1e-15);
        for k in 0..2 {
            assert!((d.tangents[k] - reference[k]).abs() < 1e-8, "{k}");
        }
    }
}
