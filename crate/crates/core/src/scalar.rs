//! Real scalar abstraction shared by every numerical routine in the crate.
//!
//! Two families implement [`Real`]: plain `f64`, and [`Big<BITS>`], an
//! MPFR float whose mantissa width is fixed at compile time. Keeping the
//! precision in the type means values never disagree about their precision
//! and can be sent across threads without a shared context.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Special;
use rug::Float;

/// Operations the iteration, chart and Cantor-set code need from a real type.
pub trait Real:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Mantissa width in bits (53 for `f64`).
    const BITS: u32;

    fn from_f64(x: f64) -> Self;
    fn from_i64(x: i64) -> Self;
    fn to_f64(&self) -> f64;

    /// `num / den` rounded once at the working precision.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn zero() -> Self {
        Self::from_i64(0)
    }
    fn one() -> Self {
        Self::from_i64(1)
    }

    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;

    /// Unit roundoff scale, `2^(1 - BITS)`.
    fn epsilon() -> Self;

    fn is_finite(&self) -> bool;

    /// `log10 |x|` as an `f64`, valid far outside the `f64` exponent range.
    /// Returns `-inf` for zero.
    fn log10_abs(&self) -> f64;

    /// Decimal rendering with enough digits to round-trip at this precision.
    fn to_decimal(&self) -> String;

    /// Decimal rendering with `digits` significant digits.
    fn to_decimal_digits(&self, digits: usize) -> String;

    fn parse_decimal(s: &str) -> Option<Self>;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn is_sign_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn hypot(&self, other: &Self) -> Self {
        (self.square() + other.square()).sqrt()
    }

    /// `+1`, `-1`, or `0`.
    fn signum_i(&self) -> i32 {
        match self.partial_cmp(&Self::zero()) {
            Some(Ordering::Greater) => 1,
            Some(Ordering::Less) => -1,
            _ => 0,
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc *= self.clone();
        }
        acc
    }

    /// Relative tolerance used for "equal within working precision" bands.
    /// `1e-12` for `f64`, `eps^(3/4)` for the extended types.
    fn default_rel_tol() -> Self;

    /// Converts between precisions through a full-precision decimal string.
    fn convert_from<S: Real>(value: &S) -> Self {
        Self::parse_decimal(&value.to_decimal()).expect("decimal rendering always parses")
    }
}

impl Real for f64 {
    const BITS: u32 = 53;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn log10_abs(&self) -> f64 {
        f64::abs(*self).log10()
    }
    fn to_decimal(&self) -> String {
        // Rust's shortest representation round-trips exactly.
        format!("{self:?}")
    }
    fn to_decimal_digits(&self, digits: usize) -> String {
        format!("{:.*e}", digits.saturating_sub(1), self)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
    fn default_rel_tol() -> Self {
        1e-12
    }
}

/// MPFR float with a `BITS`-bit mantissa.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Big<const BITS: u32>(Float);

impl<const BITS: u32> Big<BITS> {
    pub fn from_float(f: Float) -> Self {
        if f.prec() == BITS {
            Big(f)
        } else {
            Big(Float::with_val(BITS, f))
        }
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }
}

impl<const BITS: u32> fmt::Debug for Big<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Big<{BITS}>({})", self.to_decimal_digits(24))
    }
}

impl<const BITS: u32> fmt::Display for Big<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => f.write_str(&self.to_decimal_digits(p.max(1))),
            None => f.write_str(&self.to_decimal()),
        }
    }
}

macro_rules! big_binop {
    ($tr:ident, $method:ident, $atr:ident, $amethod:ident) => {
        impl<const BITS: u32> $tr for Big<BITS> {
            type Output = Self;
            #[inline]
            fn $method(mut self, rhs: Self) -> Self {
                self.0.$amethod(rhs.0);
                self
            }
        }
        impl<'a, const BITS: u32> $tr<&'a Big<BITS>> for Big<BITS> {
            type Output = Self;
            #[inline]
            fn $method(mut self, rhs: &'a Big<BITS>) -> Self {
                self.0.$amethod(&rhs.0);
                self
            }
        }
        impl<const BITS: u32> $atr for Big<BITS> {
            #[inline]
            fn $amethod(&mut self, rhs: Self) {
                self.0.$amethod(rhs.0);
            }
        }
    };
}

big_binop!(Add, add, AddAssign, add_assign);
big_binop!(Sub, sub, SubAssign, sub_assign);
big_binop!(Mul, mul, MulAssign, mul_assign);
big_binop!(Div, div, DivAssign, div_assign);

impl<const BITS: u32> Neg for Big<BITS> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Big(-self.0)
    }
}

impl<const BITS: u32> Real for Big<BITS> {
    const BITS: u32 = BITS;

    fn from_f64(x: f64) -> Self {
        Big(Float::with_val(BITS, x))
    }
    fn from_i64(x: i64) -> Self {
        Big(Float::with_val(BITS, x))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn ratio(num: i64, den: i64) -> Self {
        let mut f = Float::with_val(BITS, num);
        f /= den;
        Big(f)
    }
    fn sqrt(&self) -> Self {
        Big(self.0.clone().sqrt())
    }
    fn abs(&self) -> Self {
        Big(self.0.clone().abs())
    }
    fn exp(&self) -> Self {
        Big(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Big(self.0.clone().ln())
    }
    fn epsilon() -> Self {
        let mut f = Float::with_val(BITS, 1);
        f >>= BITS - 1;
        Big(f)
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn log10_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        if !self.0.is_finite() {
            return f64::INFINITY;
        }
        let (mantissa, exp) = self.0.to_f64_exp();
        mantissa.abs().log10() + f64::from(exp) * std::f64::consts::LOG10_2
    }
    fn to_decimal(&self) -> String {
        let digits = (f64::from(BITS) * std::f64::consts::LOG10_2).ceil() as usize + 2;
        self.to_decimal_digits(digits)
    }
    fn to_decimal_digits(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return "0".to_string();
        }
        self.0.to_string_radix(10, Some(digits))
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        let parsed = Float::parse(s.trim()).ok()?;
        Some(Big(Float::with_val(BITS, parsed)))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }
    fn square(&self) -> Self {
        Big(self.0.clone().square())
    }
    fn hypot(&self, other: &Self) -> Self {
        Big(self.0.clone().hypot(&other.0))
    }
    fn default_rel_tol() -> Self {
        let mut f = Float::with_val(BITS, 1);
        f >>= (3 * BITS) / 4;
        Big(f)
    }
}

impl<const BITS: u32> Default for Big<BITS> {
    fn default() -> Self {
        Big(Float::with_val(BITS, Special::Zero))
    }
}

/// The precisions the runtime can dispatch to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrecisionLevel {
    Double,
    Bits128,
    Bits256,
    Bits512,
    Bits1024,
    Bits2048,
    Bits4096,
    Bits8192,
    Bits16384,
}

impl PrecisionLevel {
    pub const LADDER: [PrecisionLevel; 9] = [
        PrecisionLevel::Double,
        PrecisionLevel::Bits128,
        PrecisionLevel::Bits256,
        PrecisionLevel::Bits512,
        PrecisionLevel::Bits1024,
        PrecisionLevel::Bits2048,
        PrecisionLevel::Bits4096,
        PrecisionLevel::Bits8192,
        PrecisionLevel::Bits16384,
    ];

    /// Smallest supported level with at least `bits` of mantissa, or `None`
    /// when `bits` exceeds the largest level.
    pub fn at_least(bits: u32) -> Option<Self> {
        Self::LADDER.into_iter().find(|l| l.bits() >= bits)
    }

    pub fn bits(self) -> u32 {
        match self {
            PrecisionLevel::Double => 53,
            PrecisionLevel::Bits128 => 128,
            PrecisionLevel::Bits256 => 256,
            PrecisionLevel::Bits512 => 512,
            PrecisionLevel::Bits1024 => 1024,
            PrecisionLevel::Bits2048 => 2048,
            PrecisionLevel::Bits4096 => 4096,
            PrecisionLevel::Bits8192 => 8192,
            PrecisionLevel::Bits16384 => 16384,
        }
    }

    pub fn next(self) -> Option<Self> {
        let idx = Self::LADDER.iter().position(|l| *l == self)?;
        Self::LADDER.get(idx + 1).copied()
    }
}

/// Runs `$body` with `$R` bound to the scalar type for a [`PrecisionLevel`].
///
/// ```
/// use wilkinson_core::{with_precision, scalar::{PrecisionLevel, Real}};
/// let digits = with_precision!(PrecisionLevel::Bits256, R => R::ratio(1, 3).to_decimal_digits(30));
/// assert!(digits.starts_with("3.333333333"));
/// ```
#[macro_export]
macro_rules! with_precision {
    ($level:expr, $R:ident => $body:expr) => {{
        use $crate::scalar::PrecisionLevel as __Level;
        match $level {
            __Level::Double => {
                type $R = f64;
                $body
            }
            __Level::Bits128 => {
                type $R = $crate::scalar::Big<128>;
                $body
            }
            __Level::Bits256 => {
                type $R = $crate::scalar::Big<256>;
                $body
            }
            __Level::Bits512 => {
                type $R = $crate::scalar::Big<512>;
                $body
            }
            __Level::Bits1024 => {
                type $R = $crate::scalar::Big<1024>;
                $body
            }
            __Level::Bits2048 => {
                type $R = $crate::scalar::Big<2048>;
                $body
            }
            __Level::Bits4096 => {
                type $R = $crate::scalar::Big<4096>;
                $body
            }
            __Level::Bits8192 => {
                type $R = $crate::scalar::Big<8192>;
                $body
            }
            __Level::Bits16384 => {
                type $R = $crate::scalar::Big<16384>;
                $body
            }
        }
    }};
}

#[cfg(test)]
mod tests {
    use super::*;

    type B256 = Big<256>;

    #[test]
    fn big_arithmetic_matches_f64_on_small_values() {
        let a = B256::from_f64(1.5);
        let b = B256::from_f64(-0.25);
        assert_eq!((a.clone() + b.clone()).to_f64(), 1.25);
        assert_eq!((a.clone() * b.clone()).to_f64(), -0.375);
        assert_eq!((a / b).to_f64(), -6.0);
    }

    #[test]
    fn epsilon_has_expected_exponent() {
        assert!((B256::epsilon().log10_abs() - (-255.0 * std::f64::consts::LOG10_2)).abs() < 1e-9);
        assert_eq!(<f64 as Real>::epsilon(), f64::EPSILON);
    }

    #[test]
    fn log10_abs_beyond_f64_range() {
        let mut tiny = B256::one();
        for _ in 0..40 {
            tiny *= B256::from_f64(1e-10);
        }
        assert!((tiny.log10_abs() + 400.0).abs() < 1e-9);
        assert_eq!(tiny.to_f64(), 0.0);
    }

    #[test]
    fn decimal_round_trip_is_exact() {
        let third = B256::ratio(1, 3);
        let back = B256::parse_decimal(&third.to_decimal()).unwrap();
        assert_eq!(third, back);
        let x = 0.1f64 + 0.2;
        assert_eq!(f64::parse_decimal(&x.to_decimal()).unwrap(), x);
    }

    #[test]
    fn ladder_rounds_up() {
        assert_eq!(PrecisionLevel::at_least(53), Some(PrecisionLevel::Double));
        assert_eq!(PrecisionLevel::at_least(300), Some(PrecisionLevel::Bits512));
        assert_eq!(PrecisionLevel::at_least(512), Some(PrecisionLevel::Bits512));
        assert_eq!(PrecisionLevel::at_least(20000), None);
        assert_eq!(PrecisionLevel::Bits8192.next(), Some(PrecisionLevel::Bits16384));
    }

    #[test]
    fn convert_between_precisions() {
        let x = Big::<512>::ratio(2, 7);
        let y: B256 = Real::convert_from(&x);
        assert_eq!(y, B256::ratio(2, 7));
    }
}
