//! Exact scalar abstraction used by the linear solver.
//!
//! The simplex and branch-and-bound code in [`crate::ilp`] is written against
//! [`ExactField`] so it can run over arbitrary-precision rationals (the default,
//! see [`crate::Rational`]) or over machine-word rationals when the caller knows
//! the coefficients stay small. Floating point types are deliberately not
//! implemented: every comparison in the pivot loop must be exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use std::fmt::{Debug, Display};

pub trait ExactField:
    Clone + Ord + Signed + Debug + Display + Send + Sync + 'static
{
    fn from_bigint(n: &BigInt) -> Self;

    /// Integer value, if this scalar is integral.
    fn to_bigint(&self) -> Option<BigInt>;

    fn floor_value(&self) -> Self;

    fn ceil_value(&self) -> Self;

    fn is_integral(&self) -> bool;

    /// Distance to the nearest integer, used to pick the most fractional
    /// branching variable.
    fn fractionality(&self) -> Self {
        let down = self.clone() - self.floor_value();
        let up = self.ceil_value() - self.clone();
        down.min(up)
    }

    fn from_i64(n: i64) -> Self {
        Self::from_bigint(&BigInt::from(n))
    }
}

impl ExactField for Ratio<BigInt> {
    fn from_bigint(n: &BigInt) -> Self {
        Ratio::from_integer(n.clone())
    }

    fn to_bigint(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.numer().clone())
    }

    fn floor_value(&self) -> Self {
        self.floor()
    }

    fn ceil_value(&self) -> Self {
        self.ceil()
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }
}

impl<T> ExactField for Ratio<T>
where
    T: Clone + Integer + Signed + Debug + Display + Send + Sync + ToPrimitive + 'static,
    T: num_traits::NumCast + MachineInt,
{
    fn from_bigint(n: &BigInt) -> Self {
        let v = n
            .to_i64()
            .and_then(<T as num_traits::NumCast>::from)
            .expect("integer does not fit the machine scalar");
        Ratio::from_integer(v)
    }

    fn to_bigint(&self) -> Option<BigInt> {
        self.is_integer()
            .then(|| BigInt::from(self.numer().to_i64().expect("machine integer")))
    }

    fn floor_value(&self) -> Self {
        self.floor()
    }

    fn ceil_value(&self) -> Self {
        self.ceil()
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }
}

/// Marker for the fixed-width integer types usable as rational components.
pub trait MachineInt {}
impl MachineInt for i32 {}
impl MachineInt for i64 {}
impl MachineInt for i128 {}
