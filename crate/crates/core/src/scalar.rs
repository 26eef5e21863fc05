//! Scalar abstractions shared by every numerical routine.
//!
//! [`Field`] is the arithmetic needed by determinant and elimination code and is
//! implemented by exact rationals as well as floating types. [`Real`] adds the
//! transcendental functions needed by quadrature, polynomial evaluation and the
//! asymptotic series. Precision is always passed explicitly in bits; fixed-width
//! types ignore it.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

/// Arithmetic closed under the four operations.
pub trait Field:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64, bits: u32) -> Self;
    fn abs_val(&self) -> Self;
    fn is_zero_val(&self) -> bool;
    fn to_f64_lossy(&self) -> f64;

    fn zero(bits: u32) -> Self {
        Self::from_i64(0, bits)
    }

    fn one(bits: u32) -> Self {
        Self::from_i64(1, bits)
    }
}

/// A real scalar with elementary and gamma functions.
pub trait Real: Field {
    fn from_f64(v: f64, bits: u32) -> Self;
    /// Working precision carried by this value in bits.
    fn precision(&self) -> u32;
    /// Copy of `self` rounded to `bits`.
    fn with_precision(&self, bits: u32) -> Self;
    fn sqrt(&self) -> Self;
    fn cbrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn cos(&self) -> Self;
    fn powf(&self, e: &Self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn ln_gamma(&self) -> Self;
    fn gamma(&self) -> Self;
    fn pi(bits: u32) -> Self;
    fn is_finite_val(&self) -> bool;

    /// Unit roundoff at `bits`.
    fn epsilon(bits: u32) -> Self {
        Self::from_f64(2.0, bits).powi(1 - bits.min(1000) as i32)
    }

    fn max_val(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_val(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

macro_rules! impl_primitive {
    ($t:ty, $lgamma:path, $tgamma:path, $bits:expr) => {
        impl Field for $t {
            fn from_i64(v: i64, _bits: u32) -> Self {
                v as $t
            }
            fn abs_val(&self) -> Self {
                num_traits::Float::abs(*self)
            }
            fn is_zero_val(&self) -> bool {
                *self == 0.0
            }
            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }
        }

        impl Real for $t {
            fn from_f64(v: f64, _bits: u32) -> Self {
                v as $t
            }
            fn precision(&self) -> u32 {
                $bits
            }
            fn with_precision(&self, _bits: u32) -> Self {
                *self
            }
            fn sqrt(&self) -> Self {
                num_traits::Float::sqrt(*self)
            }
            fn cbrt(&self) -> Self {
                num_traits::Float::cbrt(*self)
            }
            fn exp(&self) -> Self {
                num_traits::Float::exp(*self)
            }
            fn ln(&self) -> Self {
                num_traits::Float::ln(*self)
            }
            fn sinh(&self) -> Self {
                num_traits::Float::sinh(*self)
            }
            fn cosh(&self) -> Self {
                num_traits::Float::cosh(*self)
            }
            fn cos(&self) -> Self {
                num_traits::Float::cos(*self)
            }
            fn powf(&self, e: &Self) -> Self {
                num_traits::Float::powf(*self, *e)
            }
            fn powi(&self, n: i32) -> Self {
                num_traits::Float::powi(*self, n)
            }
            fn ln_gamma(&self) -> Self {
                $lgamma(*self)
            }
            fn gamma(&self) -> Self {
                $tgamma(*self)
            }
            fn pi(_bits: u32) -> Self {
                <$t as num_traits::FloatConst>::PI()
            }
            fn is_finite_val(&self) -> bool {
                num_traits::Float::is_finite(*self)
            }
            fn epsilon(_bits: u32) -> Self {
                <$t as num_traits::Float>::epsilon()
            }
        }
    };
}

impl_primitive!(f64, libm::lgamma, libm::tgamma, 53);
impl_primitive!(f32, libm::lgammaf, libm::tgammaf, 24);

impl Field for Float {
    fn from_i64(v: i64, bits: u32) -> Self {
        Float::with_val(bits, v)
    }
    fn abs_val(&self) -> Self {
        Float::abs(self.clone())
    }
    fn is_zero_val(&self) -> bool {
        self.is_zero()
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64()
    }
}

impl Real for Float {
    fn from_f64(v: f64, bits: u32) -> Self {
        Float::with_val(bits.max(53), v)
    }
    fn precision(&self) -> u32 {
        self.prec()
    }
    fn with_precision(&self, bits: u32) -> Self {
        Float::with_val(bits, self)
    }
    fn sqrt(&self) -> Self {
        Float::sqrt(self.clone())
    }
    fn cbrt(&self) -> Self {
        Float::cbrt(self.clone())
    }
    fn exp(&self) -> Self {
        Float::exp(self.clone())
    }
    fn ln(&self) -> Self {
        Float::ln(self.clone())
    }
    fn sinh(&self) -> Self {
        Float::sinh(self.clone())
    }
    fn cosh(&self) -> Self {
        Float::cosh(self.clone())
    }
    fn cos(&self) -> Self {
        Float::cos(self.clone())
    }
    fn powf(&self, e: &Self) -> Self {
        Pow::pow(self.clone(), e)
    }
    fn powi(&self, n: i32) -> Self {
        Pow::pow(self.clone(), n)
    }
    fn ln_gamma(&self) -> Self {
        Float::ln_gamma(self.clone())
    }
    fn gamma(&self) -> Self {
        Float::gamma(self.clone())
    }
    fn pi(bits: u32) -> Self {
        Float::with_val(bits, Constant::Pi)
    }
    fn is_finite_val(&self) -> bool {
        self.is_finite()
    }
    fn epsilon(bits: u32) -> Self {
        Float::with_val(bits, 1) >> (bits as i32 - 1)
    }
}

impl Field for BigRational {
    fn from_i64(v: i64, _bits: u32) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero_val(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Relative difference `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff<T: Field>(a: &T, b: &T) -> f64 {
    let scale = {
        let (x, y) = (a.abs_val(), b.abs_val());
        if x > y {
            x
        } else {
            y
        }
    };
    if scale.is_zero_val() {
        return 0.0;
    }
    let d = (a.clone() - b.clone()).abs_val() / scale;
    d.to_f64_lossy()
}

/// |Σ terms| / max |term|: the residual of an equation written as a sum of
/// terms that should cancel. Zero when every term vanishes.
pub fn relative_residual<T: Field>(terms: &[T]) -> f64 {
    let Some(first) = terms.first() else { return 0.0 };
    let mut sum = first.clone();
    let mut scale = first.abs_val();
    for t in &terms[1..] {
        sum = sum + t.clone();
        let a = t.abs_val();
        if a > scale {
            scale = a;
        }
    }
    if scale.is_zero_val() {
        return 0.0;
    }
    (sum.abs_val() / scale).to_f64_lossy()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_matches_native() {
        assert_eq!(<f64 as Real>::epsilon(53), f64::EPSILON);
        let e = <Float as Real>::epsilon(53);
        assert_eq!(e.to_f64(), f64::EPSILON);
    }

    #[test]
    fn gamma_agrees_across_types() {
        let x = 4.5;
        let g64 = Real::gamma(&x);
        let gmp = Real::gamma(&Float::with_val(128, x));
        assert!((g64 - gmp.to_f64()).abs() < 1e-13 * g64);
    }

    #[test]
    fn rational_field_is_exact() {
        let a = BigRational::from_i64(1, 0) / BigRational::from_i64(3, 0);
        let b = a.clone() * BigRational::from_i64(3, 0);
        assert_eq!(b, BigRational::from_i64(1, 0));
        assert_eq!(rel_diff(&a, &a), 0.0);
    }
}
