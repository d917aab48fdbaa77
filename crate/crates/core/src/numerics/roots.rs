//! Bracketed real root finding.

use rug::Float;

use super::PrecisionContext;
use crate::error::{Error, Result};

/// Root of `f` in `[lo, hi]` by the Illinois variant of regula falsi, with a
/// bisection step whenever the bracket fails to shrink by half. Stops when
/// the bracket is narrower than the context target.
pub fn find_root<F>(mut f: F, lo: &Float, hi: &Float, ctx: &PrecisionContext) -> Result<Float>
where
    F: FnMut(&Float) -> Result<Float>,
{
    let bits = ctx.working_bits();
    let mut a = Float::with_val(bits, lo);
    let mut b = Float::with_val(bits, hi);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut fa = f(&a)?;
    let mut fb = f(&b)?;
    if fa.is_zero() {
        return Ok(a);
    }
    if fb.is_zero() {
        return Ok(b);
    }
    if fa.is_sign_negative() == fb.is_sign_negative() {
        return Err(Error::Bracket { lo: a.to_f64(), hi: b.to_f64() });
    }
    let tol = Float::with_val(bits, ctx.target_abs_error());
    // side: -1 when a was retained last step, +1 when b was.
    let mut side = 0i8;
    let max_iter = 4 * bits as usize + 200;
    for _ in 0..max_iter {
        let width = Float::with_val(bits, &b - &a);
        if width <= tol {
            return Ok(Float::with_val(bits, &a + &b) / 2u32);
        }
        let mut c = Float::with_val(bits, &b - &a);
        c *= &fb;
        c /= Float::with_val(bits, &fb - &fa);
        c = Float::with_val(bits, &b - &c);
        // Fall back to bisection when the secant leaves the interior.
        if !(c > a && c < b) {
            c = Float::with_val(bits, &a + &b) / 2u32;
        }
        let fc = f(&c)?;
        if fc.is_zero() {
            return Ok(c);
        }
        if fc.is_sign_negative() == fb.is_sign_negative() {
            b = c;
            fb = fc;
            if side == 1 {
                fa /= 2u32;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb /= 2u32;
            }
            side = -1;
        }
        let new_width = Float::with_val(bits, &b - &a);
        if Float::with_val(bits, &new_width * 2u32) > width {
            let mid = Float::with_val(bits, &a + &b) / 2u32;
            let fm = f(&mid)?;
            if fm.is_zero() {
                return Ok(mid);
            }
            if fm.is_sign_negative() == fa.is_sign_negative() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
            side = 0;
        }
    }
    Err(Error::Convergence("root finder exhausted its iteration budget".into()))
}
