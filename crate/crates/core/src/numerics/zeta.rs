//! Hurwitz and Riemann zeta at real arguments s > 1 by Euler-Maclaurin
//! summation.
//!
//! With f(k) = (k+a)^-s, which is completely monotone on k >= 0,
//!
//!   zeta(s, a) = sum_{k<N} f(k) + (N+a)^{1-s}/(s-1) + f(N)/2
//!              + sum_{j=1}^{M} B_{2j}/(2j)! (s)_{2j-1} (N+a)^{-s-2j+1} + R_M
//!
//! and because all even derivatives of f share one sign, R_M has the sign of
//! the first omitted correction and is smaller in magnitude. The loop below
//! stops on that term, so the truncation bound is derived rather than guessed.

use rug::ops::Pow;
use rug::Float;

use super::{bernoulli_even, log2_of, PrecisionContext, AUX_BITS};
use crate::error::{Error, Result};

struct Corrections {
    /// B_{2j}/(2j)! for j = 1..
    coeffs: Vec<Float>,
}

impl Corrections {
    fn new(count: usize, bits: u32) -> Self {
        let b = bernoulli_even(count);
        let mut fact = Float::with_val(bits, 1);
        let coeffs = b
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let two_j = 2 * (i as u32 + 1);
                fact *= two_j - 1;
                fact *= two_j;
                Float::with_val(bits, r) / &fact
            })
            .collect();
        Self { coeffs }
    }
}

/// Hurwitz zeta `sum_{k>=0} (k+a)^-s` for real `s > 1`, `a > 0`, with
/// absolute error below `ctx.target_abs_error()`.
pub fn hurwitz_zeta(s: &Float, a: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if !(s.is_finite() && *s > 1) {
        return Err(Error::Domain(format!("zeta needs s > 1, got {}", s.to_f64())));
    }
    if !(a.is_finite() && *a > 0) {
        return Err(Error::Domain(format!("Hurwitz zeta needs a > 0, got {}", a.to_f64())));
    }
    let s_f = s.to_f64();
    let a_f = a.to_f64();
    let target_log2 = ctx.target_log2();

    // Largest quantity in the formula: the first term a^-s or the integral term.
    let s_minus_1 = Float::with_val(s.prec().max(AUX_BITS), s - 1u32);
    let lead = -s_f * a_f.log2();

    // Terms of the direct sum below target need not be summed directly; pick
    // N so that the Bernoulli corrections have room to converge.
    let need_bits = (lead - target_log2).max(1.0);
    let mut n_terms = ((need_bits * std::f64::consts::LN_2) / (2.0 * std::f64::consts::PI) + s_f / 6.0)
        .ceil()
        .max(2.0) as u64;
    // Direct terms vanishing below target make the sum finite on its own.
    if s_f > 4.0 {
        let cutoff = ((lead - target_log2 + 4.0) / s_f).exp2() * a_f.max(1.0);
        if cutoff.is_finite() && cutoff < 1e15 {
            n_terms = n_terms.min(cutoff.ceil() as u64 + 1).max(2);
        }
    }

    loop {
        let big_n = a_f + n_terms as f64;
        let integral_log2 = (1.0 - s_f) * big_n.log2() - log2_of(&s_minus_1);
        let bits = ctx.bits_for(lead.max(integral_log2))?;
        match euler_maclaurin(s, a, &s_minus_1, n_terms, bits, target_log2)? {
            Some(v) => return Ok(v),
            None => n_terms *= 2,
        }
        if n_terms > 1 << 24 {
            return Err(Error::Convergence("Euler-Maclaurin tail did not converge".into()));
        }
    }
}

/// One attempt with a fixed cut N; `None` when the corrections start growing
/// before reaching the target.
fn euler_maclaurin(
    s: &Float,
    a: &Float,
    s_minus_1: &Float,
    n_terms: u64,
    bits: u32,
    target_log2: f64,
) -> Result<Option<Float>> {
    let s = Float::with_val(bits, s);
    let a = Float::with_val(bits, a);
    let neg_s = Float::with_val(bits, -&s);
    let mut sum = Float::new(bits);
    let mut base = a.clone();
    for _ in 0..n_terms {
        sum += Float::with_val(bits, (&base).pow(&neg_s));
        base += 1u32;
    }
    // base = N + a
    let f_n = Float::with_val(bits, (&base).pow(&neg_s));
    let integral = Float::with_val(bits, &f_n * &base) / Float::with_val(bits, s_minus_1);
    sum += &integral;
    sum += Float::with_val(bits, &f_n / 2u32);

    let inv_sq = Float::with_val(bits, base.square_ref()).recip();
    // u_j = (s)_{2j-1} (N+a)^{-s-2j+1}; u_1 = s (N+a)^{-s-1}
    let mut u = Float::with_val(bits, &f_n * &s) / &base;
    let max_terms = 4 * n_terms as usize + 64;
    let mut table = Corrections::new(32.min(max_terms), bits);
    let mut prev_log2 = f64::INFINITY;
    for j in 1..=max_terms {
        if j > table.coeffs.len() {
            table = Corrections::new((2 * table.coeffs.len()).min(max_terms), bits);
        }
        let term = Float::with_val(bits, &table.coeffs[j - 1] * &u);
        let t_log2 = log2_of(&term);
        if t_log2 < target_log2 - 2.0 {
            // |R| is below this first omitted term.
            return Ok(Some(sum));
        }
        if t_log2 > prev_log2 {
            return Ok(None);
        }
        prev_log2 = t_log2;
        sum += &term;
        let two_j = 2.0 * j as f64;
        u *= Float::with_val(bits, &s + (two_j - 1.0));
        u *= Float::with_val(bits, &s + two_j);
        u *= &inv_sq;
    }
    Ok(None)
}

/// Riemann zeta at real `s > 1`.
pub fn zeta_real(s: &Float, ctx: &PrecisionContext) -> Result<Float> {
    hurwitz_zeta(s, &Float::with_val(AUX_BITS, 1), ctx)
}

/// `zeta(s) - 1` computed without cancellation (absolute error below target).
pub fn zeta_minus_one(s: &Float, ctx: &PrecisionContext) -> Result<Float> {
    hurwitz_zeta(s, &Float::with_val(AUX_BITS, 2), ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::pi;

    fn close(a: &Float, b: &Float, tol: f64) -> bool {
        Float::with_val(a.prec(), a - b).abs().to_f64() < tol
    }

    #[test]
    fn even_values_match_closed_forms() {
        let ctx = PrecisionContext::with_digits(60);
        let p = pi(400);
        let cases: [(u32, Float); 3] = [
            (2, Float::with_val(400, p.clone().square()) / 6u32),
            (4, Float::with_val(400, (&p).pow(4u32)) / 90u32),
            (6, Float::with_val(400, (&p).pow(6u32)) / 945u32),
        ];
        for (s, want) in cases {
            let got = zeta_real(&Float::with_val(64, s), &ctx).unwrap();
            assert!(close(&got, &want, 1e-60), "zeta({s})");
        }
    }

    #[test]
    fn near_one_matches_laurent_leading_terms() {
        // zeta(1+e) = 1/e + gamma - gamma_1 e + O(e^2)
        let ctx = PrecisionContext::with_digits(30);
        let eps = Float::with_val(256, Float::parse("1e-12").unwrap());
        let s = Float::with_val(256, &eps + 1u32);
        let got = zeta_real(&s, &ctx).unwrap();
        let gamma = Float::with_val(256, rug::float::Constant::Euler);
        let want = Float::with_val(256, eps.recip_ref()) + &gamma;
        assert!(close(&got, &want, 1e-10));
    }

    #[test]
    fn zeta_minus_one_keeps_relative_accuracy() {
        let ctx = PrecisionContext::with_digits(20).scaled(-300.0);
        let s = Float::with_val(64, 120);
        let got = zeta_minus_one(&s, &ctx).unwrap();
        // 2^-120 + 3^-120 + ...
        let want = Float::with_val(400, Float::u_pow_u(2, 120)).recip()
            + Float::with_val(400, Float::u_pow_u(3, 120)).recip()
            + Float::with_val(400, Float::u_pow_u(4, 120)).recip();
        let rel = Float::with_val(400, &got - &want) / &want;
        assert!(rel.abs().to_f64() < 1e-40);
    }

    #[test]
    fn fractional_arguments_match_mpfr() {
        let ctx = PrecisionContext::with_digits(60);
        for v in ["1.3", "2.5", "7.25", "50.7", "1.00001"] {
            let s = Float::with_val(400, Float::parse(v).unwrap());
            let got = zeta_real(&s, &ctx).unwrap();
            let want = Float::with_val(400, s.zeta_ref());
            assert!(close(&got, &want, 1e-60), "s = {v}");
        }
    }

    #[test]
    fn hurwitz_at_half_is_scaled_riemann() {
        // zeta(s, 1/2) = (2^s - 1) zeta(s)
        let ctx = PrecisionContext::with_digits(40);
        let s = Float::with_val(256, 3.5);
        let half = Float::with_val(64, 0.5);
        let got = hurwitz_zeta(&s, &half, &ctx).unwrap();
        let z = zeta_real(&s, &ctx.scaled(-8.0)).unwrap();
        let want = (Float::with_val(256, Float::u_pow_u(2, 7)).sqrt() - 1u32) * z;
        assert!(close(&got, &want, 1e-39));
    }

    #[test]
    fn rejects_s_at_most_one() {
        let ctx = PrecisionContext::with_digits(20);
        assert!(matches!(zeta_real(&Float::with_val(64, 1), &ctx), Err(Error::Domain(_))));
        assert!(matches!(zeta_real(&Float::with_val(64, 0.5), &ctx), Err(Error::Domain(_))));
    }
}
