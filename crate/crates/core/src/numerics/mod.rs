//! Precision-managed elementary and special functions.
//!
//! Every routine takes a [`PrecisionContext`] and returns values whose
//! absolute error is below the context's target. Working precision in bits
//! is derived per call from the magnitudes involved, never fixed globally.

mod bernoulli;
mod bessel;
mod quad;
mod roots;
mod zeta;

pub use bernoulli::{bernoulli_even, tangent_numbers};
pub use bessel::{bessel_j0, bessel_j0_zero, bessel_j0_zeros};
pub use quad::{integrate, integrate_singular, Quadrature};
pub use roots::find_root;
pub use zeta::{hurwitz_zeta, zeta_minus_one, zeta_real};

use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};

/// Bits per decimal digit.
pub const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Extra bits carried on top of every derived precision.
pub const GUARD_BITS: u32 = 24;

/// Precision used for error magnitudes and other bookkeeping floats.
pub(crate) const AUX_BITS: u32 = 64;

pub(crate) fn digits_to_bits(digits: u32) -> u32 {
    (f64::from(digits) * LOG2_10).ceil() as u32
}

pub(crate) fn bits_to_digits(bits: u32) -> u32 {
    (f64::from(bits) / LOG2_10).ceil() as u32
}

/// Working precision plus absolute error target, threaded through every call.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionContext {
    working_digits: u32,
    target_abs_error: Float,
    max_digits: u32,
}

impl PrecisionContext {
    pub const MIN_DIGITS: u32 = 15;
    pub const DEFAULT_MAX_DIGITS: u32 = 6000;

    pub fn new(working_digits: u32, target_abs_error: &Float, max_digits: u32) -> Result<Self> {
        if working_digits < Self::MIN_DIGITS {
            return Err(Error::InvalidArgument(format!(
                "working precision must be at least {} digits, got {working_digits}",
                Self::MIN_DIGITS
            )));
        }
        if working_digits > max_digits {
            return Err(Error::PrecisionOverflow { needed: working_digits, cap: max_digits });
        }
        if !(target_abs_error.is_finite() && *target_abs_error > 0) {
            return Err(Error::InvalidArgument("target error must be positive and finite".into()));
        }
        Ok(Self {
            working_digits,
            target_abs_error: Float::with_val(AUX_BITS, target_abs_error),
            max_digits,
        })
    }

    /// Context aiming at `digits` correct decimals after the point.
    pub fn with_digits(digits: u32) -> Self {
        Self::with_digits_capped(digits, Self::DEFAULT_MAX_DIGITS.max(digits + 10))
    }

    pub fn with_digits_capped(digits: u32, max_digits: u32) -> Self {
        let working = (digits + 10).max(Self::MIN_DIGITS);
        let max_digits = max_digits.max(working);
        let target = Float::with_val(AUX_BITS, 1) / pow10(AUX_BITS, digits);
        Self { working_digits: working, target_abs_error: target, max_digits }
    }

    pub fn working_digits(&self) -> u32 {
        self.working_digits
    }

    pub fn max_digits(&self) -> u32 {
        self.max_digits
    }

    pub fn target_abs_error(&self) -> &Float {
        &self.target_abs_error
    }

    /// log2 of the absolute error target.
    pub fn target_log2(&self) -> f64 {
        log2_of(&self.target_abs_error)
    }

    pub fn working_bits(&self) -> u32 {
        digits_to_bits(self.working_digits) + GUARD_BITS
    }

    pub fn max_bits(&self) -> u32 {
        digits_to_bits(self.max_digits) + GUARD_BITS
    }

    /// Same caps, different absolute target. Working digits are raised so
    /// that the target is representable relative to unit-sized quantities.
    pub fn with_target(&self, target: &Float) -> Result<Self> {
        let needed = ((-log2_of(target)) / LOG2_10).ceil().max(0.0) as u32 + 5;
        let working = self.working_digits.max(needed).max(Self::MIN_DIGITS);
        if working > self.max_digits {
            return Err(Error::PrecisionOverflow { needed: working, cap: self.max_digits });
        }
        Self::new(working, target, self.max_digits)
    }

    /// Target multiplied by `2^shift` (negative shifts tighten it).
    pub fn scaled(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.target_abs_error = scale_pow2(&self.target_abs_error, shift);
        out
    }

    /// Precision (bits) so that rounding a quantity of size `2^magnitude_log2`
    /// stays below the absolute target, never less than the working precision.
    pub fn bits_for(&self, magnitude_log2: f64) -> Result<u32> {
        let need = (magnitude_log2 - self.target_log2()).ceil();
        let need = if need.is_finite() { need.max(0.0) as u32 } else { 0 };
        let bits = (need + GUARD_BITS).max(self.working_bits());
        self.check_bits(bits)
    }

    pub fn check_bits(&self, bits: u32) -> Result<u32> {
        if bits > self.max_bits() {
            return Err(Error::PrecisionOverflow { needed: bits_to_digits(bits), cap: self.max_digits });
        }
        Ok(bits)
    }

    /// Doubled working precision, for retries after detected cancellation.
    pub fn escalate(&self) -> Result<Self> {
        let doubled = self.working_digits.saturating_mul(2);
        if doubled > self.max_digits {
            return Err(Error::PrecisionOverflow { needed: doubled, cap: self.max_digits });
        }
        let mut out = self.clone();
        out.working_digits = doubled;
        Ok(out)
    }
}

/// Truncation and rounding components of an error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    pub truncation: Float,
    pub rounding: Float,
}

impl Default for ErrorBudget {
    fn default() -> Self {
        Self::zero()
    }
}

impl ErrorBudget {
    pub fn zero() -> Self {
        Self { truncation: Float::new(AUX_BITS), rounding: Float::new(AUX_BITS) }
    }

    pub fn new(truncation: &Float, rounding: &Float) -> Self {
        Self {
            truncation: Float::with_val(AUX_BITS, truncation.abs_ref()),
            rounding: Float::with_val(AUX_BITS, rounding.abs_ref()),
        }
    }

    pub fn total(&self) -> Float {
        Float::with_val(AUX_BITS, &self.truncation + &self.rounding)
    }

    pub fn add(&mut self, other: &ErrorBudget) {
        self.truncation += &other.truncation;
        self.rounding += &other.rounding;
    }

    pub fn scale(&mut self, factor: &Float) {
        let f = Float::with_val(AUX_BITS, factor.abs_ref());
        self.truncation *= &f;
        self.rounding *= &f;
    }
}

/// pi at the requested precision, recomputed on every call.
pub fn pi(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi)
}

pub fn pow10(bits: u32, exp: u32) -> Float {
    Float::with_val(bits, Float::u_pow_u(10, exp))
}

/// log2 |x| as an f64; -inf for zero.
pub fn log2_of(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + f64::from(e)
}

/// `x * 2^shift` with a fractional shift.
pub fn scale_pow2(x: &Float, shift: f64) -> Float {
    let whole = shift.floor();
    let frac = shift - whole;
    let mut out = Float::with_val(x.prec().max(AUX_BITS), x * frac.exp2());
    out <<= whole as i32;
    out
}

/// `2^e` as a float of the given precision.
pub fn exp2_float(bits: u32, e: f64) -> Float {
    scale_pow2(&Float::with_val(bits, 1), e)
}

/// Parse a decimal string into a float of the given precision.
pub fn parse_float(text: &str, bits: u32) -> Result<Float> {
    Float::parse(text.trim())
        .map(|p| Float::with_val(bits, p))
        .map_err(|e| Error::InvalidArgument(format!("cannot parse '{text}' as a number: {e}")))
}
