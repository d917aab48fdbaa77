//! Double-exponential (tanh-sinh) quadrature on finite intervals.
//!
//! Nodes are generated with their distances to both endpoints computed
//! directly, so integrands with endpoint singularities such as
//! `1/sqrt(1-t^2)` can be evaluated without cancellation.

use rug::Float;

use super::{log2_of, pi, ErrorBudget, PrecisionContext, AUX_BITS};
use crate::error::{Error, Result};

type Integrand<'a> = &'a mut dyn FnMut(&Float, &Float, &Float) -> Result<Float>;

/// Tanh-sinh driver. Levels halve the step; the error estimate is the change
/// between consecutive levels.
#[derive(Debug, Clone)]
pub struct Quadrature {
    ctx: PrecisionContext,
    min_level: u32,
    max_level: u32,
}

impl Quadrature {
    pub fn new(ctx: &PrecisionContext) -> Self {
        Self { ctx: ctx.clone(), min_level: 3, max_level: 12 }
    }

    pub fn max_level(mut self, level: u32) -> Self {
        self.max_level = level.max(self.min_level + 1);
        self
    }

    pub fn integrate<F>(&self, mut f: F, a: &Float, b: &Float) -> Result<(Float, ErrorBudget)>
    where
        F: FnMut(&Float) -> Result<Float>,
    {
        self.integrate_singular(|x, _, _| f(x), a, b)
    }

    /// `f(x, x - a, b - x)`; the distances are accurate even where `x`
    /// rounds to an endpoint.
    pub fn integrate_singular<F>(&self, mut f: F, a: &Float, b: &Float) -> Result<(Float, ErrorBudget)>
    where
        F: FnMut(&Float, &Float, &Float) -> Result<Float>,
    {
        if a > b {
            let (v, e) = self.run(&mut |x, da, db| f(x, db, da), b, a)?;
            return Ok((-v, e));
        }
        self.run(&mut f, a, b)
    }

    fn run(&self, f: Integrand<'_>, a: &Float, b: &Float) -> Result<(Float, ErrorBudget)> {
        let width = Float::with_val(a.prec().max(b.prec()).max(AUX_BITS), b - a);
        if width.is_zero() {
            return Ok((Float::new(self.ctx.working_bits()), ErrorBudget::zero()));
        }
        let target_log2 = self.ctx.target_log2();
        let bits = self.ctx.bits_for(log2_of(&width).max(0.0) + 8.0)?;
        let a = Float::with_val(bits, a);
        let b = Float::with_val(bits, b);
        let half = Float::with_val(bits, &b - &a) / 2u32;
        let mid = Float::with_val(bits, &a + &half);
        let half_pi = pi(bits) / 2u32;

        // Past t_max the weights times any integrand growing no faster than
        // an inverse square root fall below the target.
        let u_max = (-target_log2 + log2_of(&half).max(0.0) + 20.0) * std::f64::consts::LN_2;
        let t_max = (2.0 * u_max / std::f64::consts::PI).asinh() + 0.5;

        let mut node = |t: f64, scale: &mut Float| -> Result<Float> {
            let tf = Float::with_val(bits, t);
            let u = Float::with_val(bits, tf.sinh_ref()) * &half_pi;
            let cosh_u = Float::with_val(bits, u.cosh_ref());
            let mut w = Float::with_val(bits, tf.cosh_ref()) * &half_pi;
            w /= Float::with_val(bits, cosh_u.square_ref());
            w *= &half;
            // Distance from the nearer endpoint: half * 2/(1+e^{2|u|}).
            let e2 = (Float::with_val(bits, u.abs_ref()) * 2u32).exp();
            let near = Float::with_val(bits, &half * 2u32) / (e2 + 1u32);
            let far = Float::with_val(bits, &half * 2u32) - &near;
            let val = if t > 0.0 {
                let x = Float::with_val(bits, &b - &near);
                f(&x, &far, &near)?
            } else if t < 0.0 {
                let x = Float::with_val(bits, &a + &near);
                f(&x, &near, &far)?
            } else {
                f(&mid, &half, &half)?
            };
            let term = Float::with_val(bits, &val * &w);
            *scale += Float::with_val(AUX_BITS, term.abs_ref());
            Ok(term)
        };

        let mut scale = Float::new(AUX_BITS);
        let mut nodes = 0u64;
        let mut h = (-(self.min_level as f64)).exp2();
        let mut raw = node(0.0, &mut scale)?;
        nodes += 1;
        let mut j = 1u64;
        while (j as f64) * h <= t_max {
            let t = j as f64 * h;
            raw += node(t, &mut scale)?;
            raw += node(-t, &mut scale)?;
            nodes += 2;
            j += 1;
        }
        let mut prev = Float::with_val(bits, &raw * h);
        let mut diff = Float::with_val(AUX_BITS, f64::INFINITY);
        for _level in self.min_level + 1..=self.max_level {
            h /= 2.0;
            let mut j = 1u64;
            while (j as f64) * h <= t_max {
                let t = j as f64 * h;
                raw += node(t, &mut scale)?;
                raw += node(-t, &mut scale)?;
                nodes += 2;
                j += 2;
            }
            let cur = Float::with_val(bits, &raw * h);
            diff = Float::with_val(AUX_BITS, &cur - &prev).abs();
            prev = cur;
            if log2_of(&diff) < target_log2 {
                let rounding = Float::with_val(AUX_BITS, &scale * h)
                    * nodes as f64
                    * (-(bits as f64)).exp2();
                return Ok((prev, ErrorBudget::new(&diff, &rounding)));
            }
        }
        Err(Error::Quadrature { estimate: prev.to_f64(), error: diff.to_f64() })
    }
}

/// Integral of `f` over `[a, b]` with the default level schedule.
pub fn integrate<F>(f: F, a: &Float, b: &Float, ctx: &PrecisionContext) -> Result<(Float, ErrorBudget)>
where
    F: FnMut(&Float) -> Result<Float>,
{
    Quadrature::new(ctx).integrate(f, a, b)
}

/// Like [`integrate`], passing `(x, x - a, b - x)` to the integrand.
pub fn integrate_singular<F>(f: F, a: &Float, b: &Float, ctx: &PrecisionContext) -> Result<(Float, ErrorBudget)>
where
    F: FnMut(&Float, &Float, &Float) -> Result<Float>,
{
    Quadrature::new(ctx).integrate_singular(f, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let ctx = PrecisionContext::with_digits(40);
        let bits = ctx.working_bits();
        let (v, _) = integrate(
            |x| Ok(Float::with_val(bits, x.square_ref())),
            &Float::with_val(bits, 0),
            &Float::with_val(bits, 3),
            &ctx,
        )
        .unwrap();
        assert!((Float::with_val(bits, &v - 9u32)).abs().to_f64() < 1e-40);

        let (v, _) = integrate(
            |x| Ok(Float::with_val(bits, x.exp_ref())),
            &Float::with_val(bits, 0),
            &Float::with_val(bits, 1),
            &ctx,
        )
        .unwrap();
        let want = Float::with_val(bits, 1u32).exp() - 1u32;
        assert!(Float::with_val(bits, &v - &want).abs().to_f64() < 1e-40);
    }

    #[test]
    fn endpoint_singularity_integrates_to_pi() {
        let ctx = PrecisionContext::with_digits(30);
        let bits = ctx.working_bits();
        let (v, err) = integrate_singular(
            |_, da, db| Ok(Float::with_val(bits, da * db).sqrt().recip()),
            &Float::with_val(bits, 0),
            &Float::with_val(bits, 1),
            &ctx,
        )
        .unwrap();
        // integral of 1/sqrt(t(1-t)) over [0,1]
        let want = pi(bits);
        assert!(Float::with_val(bits, &v - &want).abs().to_f64() < 1e-30);
        assert!(err.total().to_f64() < 1e-30);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let ctx = PrecisionContext::with_digits(20);
        let bits = ctx.working_bits();
        let (v, _) = integrate(
            |x| Ok(Float::with_val(bits, x.cos_ref())),
            &Float::with_val(bits, 1),
            &Float::with_val(bits, 0),
            &ctx,
        )
        .unwrap();
        let want = -Float::with_val(bits, 1u32).sin();
        assert!(Float::with_val(bits, &v - &want).abs().to_f64() < 1e-20);
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let ctx = PrecisionContext::with_digits(30);
        let bits = ctx.working_bits();
        let r = Quadrature::new(&ctx).max_level(4).integrate(
            |x| Ok(Float::with_val(bits, x * 400u32).sin()),
            &Float::with_val(bits, 0),
            &Float::with_val(bits, 1),
        );
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
