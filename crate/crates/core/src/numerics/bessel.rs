//! Bessel J0 and its positive zeros.
//!
//! J0 itself comes from MPFR, which rounds correctly at any precision; the
//! zeros are located here from McMahon starting values.

use rug::Float;

use super::{find_root, PrecisionContext};
use crate::error::{Error, Result};

/// J0(x) with absolute error below the context target.
pub fn bessel_j0(x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    let bits = ctx.bits_for(0.0)?;
    Ok(Float::with_val(bits, x.j0_ref()))
}

/// McMahon estimate of the k-th zero, accurate to O(k^-5).
fn mcmahon(k: u32) -> f64 {
    let beta = (f64::from(k) - 0.25) * std::f64::consts::PI;
    let b2 = beta * beta;
    beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta * b2) + 3779.0 / (15360.0 * beta * b2 * b2)
}

/// k-th positive zero of J0 (k >= 1).
pub fn bessel_j0_zero(k: u32, ctx: &PrecisionContext) -> Result<Float> {
    if k == 0 {
        return Err(Error::Domain("Bessel zeros are numbered from 1".into()));
    }
    // Zeros are more than 3 apart, and McMahon is within 0.01 for k >= 1.
    let guess = mcmahon(k);
    let bits = ctx.bits_for(guess.log2())?;
    let lo = Float::with_val(bits, guess - 0.5);
    let hi = Float::with_val(bits, guess + 0.5);
    find_root(|x| Ok(Float::with_val(bits, x.j0_ref())), &lo, &hi, ctx)
}

/// First `count` positive zeros of J0.
pub fn bessel_j0_zeros(count: u32, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    (1..=count).map(|k| bessel_j0_zero(k, ctx)).collect()
}
