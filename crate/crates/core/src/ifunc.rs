//! The per-prime factor `I(b, x) = (2/pi) int_0^1 cos(x arcsin(t/b)) dt / sqrt(1-t^2)`
//! for `b > 1`, in every representation used elsewhere in the crate.

use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::numerics::{bessel_j0, integrate, log2_of, pi, PrecisionContext, Quadrature, AUX_BITS};
use crate::qpoly::QTable;

fn check_b(b: &Float) -> Result<()> {
    if !(b.is_finite() && *b > 1) {
        return Err(Error::Domain(format!("I(b, x) needs b > 1, got {}", b.to_f64())));
    }
    Ok(())
}

/// `b` together with `beta = arcsin(1/b)`.
#[derive(Debug, Clone)]
pub struct IFactorParams {
    pub b: Float,
    pub beta: Float,
}

impl IFactorParams {
    pub fn new(b: &Float, ctx: &PrecisionContext) -> Result<Self> {
        check_b(b)?;
        let bits = ctx.working_bits().max(b.prec());
        let b = Float::with_val(bits, b);
        let beta = Float::with_val(bits, b.recip_ref()).asin();
        Ok(Self { b, beta })
    }
}

/// Constants appearing in the bounds on `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        use std::f64::consts::PI;
        let c2 = (2.0 - 4.0 / PI) / 3.0;
        let c3 = (2.0 / PI).sqrt();
        Self { c1: PI / 2.0 - 1.0, c2, c3, c4: (1.0 / (2.0f64).tanh()).sqrt(), c5: c2 / c3 }
    }
}

/// Constant of the uniform bound for `b >= sqrt 2`, `x >= 5`.
pub const UNIFORM_BOUND: f64 = 1.1512;

/// Plan for the hypergeometric sum: peak term size and stopping index,
/// estimated in double precision.
struct SeriesPlan {
    peak_log2: f64,
    terms: u64,
}

/// Term ratio `|t_{n+1} / t_n| = |n^2 - y^2| / ((n+1)^2 b^2)`. From index n
/// on, every ratio is at most `max(y^2, (n+1)^2) / ((n+1)^2 b^2)`.
fn tail_ratio(n: f64, y: f64, b2: f64) -> f64 {
    let m = (n + 1.0) * (n + 1.0);
    (y * y).max(m) / (m * b2)
}

fn plan_series(y: f64, b2: f64, target_log2: f64) -> SeriesPlan {
    let mut log_t = 0.0f64;
    let mut peak = 0.0f64;
    let mut n = 0u64;
    loop {
        let nf = n as f64;
        let r = tail_ratio(nf, y, b2);
        if r < 1.0 && log_t + (r / (1.0 - r)).log2() < target_log2 - 4.0 {
            return SeriesPlan { peak_log2: peak, terms: n };
        }
        let num = (nf * nf - y * y).abs();
        if num == 0.0 {
            return SeriesPlan { peak_log2: peak, terms: n };
        }
        log_t += num.log2() - 2.0 * (nf + 1.0).log2() - b2.log2();
        peak = peak.max(log_t);
        n += 1;
    }
}

/// `I(b, x)` from `I(b, 2y) = 1 + sum_n prod_{j<n} (j^2 - y^2) / (n!^2 b^{2n})`.
///
/// Working precision covers the largest term, so the alternating growth
/// phase for `|x| > 2b` loses nothing. The stopping rule bounds the tail
/// geometrically using [`tail_ratio`].
pub fn i_series(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_b(b)?;
    let bits = i_series_bits(b.to_f64(), x.to_f64(), ctx)?;
    let b2 = Float::with_val(bits.max(b.prec()), b.square_ref());
    i_series_b2(&b2, x, ctx)
}

/// Precision [`i_series`] runs at for this `(b, x)`; `b` must be supplied to
/// at least this many bits, since the peak term amplifies its rounding.
pub fn i_series_bits(b: f64, x: f64, ctx: &PrecisionContext) -> Result<u32> {
    let plan = plan_series(x.abs() / 2.0, b * b, ctx.target_log2() - 1.0);
    ctx.bits_for(plan.peak_log2 + (plan.terms as f64 + 1.0).log2() + 2.0)
}

/// [`i_series`] taking `b^2` directly.
pub fn i_series_b2(b2: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if !(b2.is_finite() && *b2 > 1) {
        return Err(Error::Domain(format!("I(b, x) needs b > 1, got b^2 = {}", b2.to_f64())));
    }
    let target_log2 = ctx.target_log2();
    let y_f = x.to_f64().abs() / 2.0;
    let b2_f = b2.to_f64();
    let plan = plan_series(y_f, b2_f, target_log2 - 1.0);
    let bits = ctx.bits_for(plan.peak_log2 + (plan.terms as f64 + 1.0).log2() + 2.0)?;
    let y = Float::with_val(bits, x) / 2u32;
    let y2 = Float::with_val(bits, y.square_ref());
    let inv_b2 = Float::with_val(bits, b2.recip_ref());
    let mut term = Float::with_val(bits, 1);
    let mut sum = Float::with_val(bits, 1);
    let mut n = 0u64;
    // The plan is a floor; keep going until the exact tail test passes.
    loop {
        let nf = n as f64;
        let r = tail_ratio(nf, y_f, b2_f);
        if term.is_zero() || (n >= plan.terms && r < 1.0 && log2_of(&term) + (r / (1.0 - r)).log2() < target_log2 - 2.0)
        {
            return Ok(sum);
        }
        let n2 = Float::with_val(bits, n * n);
        term *= Float::with_val(bits, &n2 - &y2);
        term *= &inv_b2;
        term /= (n + 1) * (n + 1);
        sum += &term;
        n += 1;
        if n > 64 * (plan.terms + 64) {
            return Err(Error::Convergence("hypergeometric series did not settle".into()));
        }
    }
}

/// Exact `I(b, x)` for rational `b^2 > 1` and even integer `x = 2m`, as
/// `(1 - b^-2)^m 2F1(-m, 1-m; 1; 1/(1 - b^2))`, a terminating sum.
pub fn i_rational(b2: &Rational, x: i64) -> Result<Rational> {
    if *b2 <= 1 {
        return Err(Error::Domain("exact I(b, x) needs b^2 > 1".into()));
    }
    if x % 2 != 0 {
        return Err(Error::Domain(format!("exact I(b, x) needs an even integer x, got {x}")));
    }
    let m = (x / 2).unsigned_abs();
    if m == 0 {
        return Ok(Rational::from(1));
    }
    let z = Rational::from(1) / Rational::from(1 - b2.clone());
    let mut term = Rational::from(1);
    let mut sum = Rational::from(1);
    for n in 0..m - 1 {
        // (-m)_n (1-m)_n / (n!)^2 z^n, advanced by one index.
        let a = Rational::from(n as i64 - m as i64);
        let c = Rational::from(n as i64 + 1 - m as i64);
        term *= a * c;
        term *= &z;
        term /= Rational::from((n + 1) * (n + 1));
        sum += &term;
    }
    let lead = Rational::from(1) - Rational::from(b2.recip_ref());
    Ok(sum * lead.pow(m as i32))
}

/// `I(b, x)` by quadrature of `(2/pi) int_0^{pi/2} cos(x arcsin(sin(u)/b)) du`.
pub fn i_quadrature(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_b(b)?;
    let bits = ctx.working_bits();
    let b = Float::with_val(bits, b);
    let x = Float::with_val(bits, x);
    let half_pi = pi(bits) / 2u32;
    let levels = 12 + (x.to_f64().abs().max(1.0).log2().ceil() as u32).min(6);
    let (v, _) = Quadrature::new(&ctx.scaled(-2.0)).max_level(levels).integrate(
        |u| {
            let s = Float::with_val(bits, u.sin_ref()) / &b;
            Ok((s.asin() * &x).cos())
        },
        &Float::new(bits),
        &half_pi,
    )?;
    Ok(v / half_pi)
}

/// `I(b, x)` by quadrature of `(1/pi) int_0^pi cos(x arctan(sin t / (b - cos t))) dt`.
pub fn i_quadrature_arctan(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    check_b(b)?;
    let bits = ctx.working_bits();
    let b = Float::with_val(bits, b);
    let x = Float::with_val(bits, x);
    let p = pi(bits);
    let (v, _) = integrate(
        |t| {
            let den = Float::with_val(bits, &b - Float::with_val(bits, t.cos_ref()));
            let ratio = Float::with_val(bits, t.sin_ref()) / den;
            Ok((ratio.atan() * &x).cos())
        },
        &Float::new(bits),
        &p,
        &ctx.scaled(-2.0),
    )?;
    Ok(v / p)
}

/// `I(b, x)` by quadrature of `(2b/pi) int_0^beta cos(x t) cos t / sqrt(1 - b^2 sin^2 t) dt`,
/// whose integrand has an inverse square root singularity at `beta`.
pub fn i_quadrature_singular(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    let params = IFactorParams::new(b, ctx)?;
    let bits = ctx.working_bits();
    let b = Float::with_val(bits, &params.b);
    let x = Float::with_val(bits, x);
    let b_cos_beta = Float::with_val(bits, params.beta.cos_ref()) * &b;
    let (v, _) = Quadrature::new(&ctx.scaled(-2.0)).max_level(14).integrate_singular(
        |t, _, d| {
            // 1 - b sin(beta - d) = 2 sin^2(d/2) + b cos(beta) sin d
            let half = Float::with_val(bits, d / 2u32).sin();
            let near = Float::with_val(bits, half.square_ref()) * 2u32
                + Float::with_val(bits, d.sin_ref()) * &b_cos_beta;
            let far = Float::with_val(bits, t.sin_ref()) * &b + 1u32;
            let root = Float::with_val(bits, near * far).sqrt();
            let num = Float::with_val(bits, t * &x).cos() * Float::with_val(bits, t.cos_ref());
            Ok(num / root)
        },
        &Float::new(bits),
        &params.beta,
    )?;
    Ok(v * b * 2u32 / pi(bits))
}

/// Terms of [`log_i_series`] needed for the context target.
pub fn log_i_series_terms(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<usize> {
    check_b(b)?;
    let y = x.to_f64().abs() / 2.0;
    let b_f = b.to_f64();
    if b_f <= y.max(1.0) {
        return Err(Error::Domain(format!("log series needs b > max(1, |x|/2), got b = {b_f}, x = {}", x.to_f64())));
    }
    // Q_n(y)/n!^2 <= min(1, y^2) M^{2n} / n, M = max(1, y).
    let r = y.max(1.0).powi(2) / (b_f * b_f);
    let lead = (y * y).min(1.0).max(f64::MIN_POSITIVE).log2() - (1.0 - r).log2();
    let target = ctx.target_log2() - 2.0;
    let mut n = 1usize;
    while lead + (n as f64 + 1.0) * r.log2() - (n as f64 + 1.0).log2() >= target {
        n += 1;
        if n > 1_000_000 {
            return Err(Error::Convergence("log series ratio too close to one".into()));
        }
    }
    Ok(n)
}

/// `log I(b, x) = -sum_n Q_n(x/2) / n!^2 b^{-2n}` for `b > max(1, |x|/2)`.
pub fn log_i_series(b: &Float, x: &Float, table: &QTable, ctx: &PrecisionContext) -> Result<Float> {
    let terms = log_i_series_terms(b, x, ctx)?;
    if terms > table.nmax() {
        return Err(Error::Capacity(format!("log series needs {terms} q-rows, table has {}", table.nmax())));
    }
    let bits = ctx.bits_for((terms as f64).log2() + 2.0)?;
    let term_ctx = ctx.scaled(-((terms as f64).log2() + 2.0));
    let y = Float::with_val(bits, x) / 2u32;
    let inv_b2 = Float::with_val(bits, b.square_ref()).recip();
    let mut scale = Float::with_val(bits, 1);
    let mut sum = Float::new(bits);
    for n in 1..=terms {
        scale *= &inv_b2;
        scale /= (n * n) as u32;
        // Q_n(y) can be huge while scale is tiny, so evaluate with the
        // target relative to that product.
        let q_ctx = term_ctx.scaled(-log2_of(&scale));
        let q = table.eval(n, &y, &q_ctx)?;
        sum -= Float::with_val(bits, &q * &scale);
    }
    Ok(sum)
}

/// Partial sum of the large-`x` expansion with 1 to 3 terms. No error bound.
pub fn i_asymptotic(b: &Float, x: &Float, terms: u32, ctx: &PrecisionContext) -> Result<Float> {
    check_b(b)?;
    if !(*x > 0) {
        return Err(Error::Domain("asymptotic expansion needs x > 0".into()));
    }
    if !(1..=3).contains(&terms) {
        return Err(Error::InvalidArgument(format!("asymptotic expansion has 1 to 3 terms, got {terms}")));
    }
    let bits = ctx.working_bits();
    let params = IFactorParams::new(b, ctx)?;
    let b2 = Float::with_val(bits, params.b.square_ref());
    let a = Float::with_val(bits, &b2 - 1u32);
    let p = pi(bits);
    let root_two_pi = Float::with_val(bits, &p * 2u32).sqrt();
    let phase = Float::with_val(bits, x * &params.beta) - Float::with_val(bits, &p / 4u32);
    let (s, c) = phase.sin_cos(Float::new(bits));
    let x = Float::with_val(bits, x);
    let a4 = Float::with_val(bits, a.root_ref(4));
    let mut out = Float::with_val(bits, &a4 * 2u32) / &root_two_pi / Float::with_val(bits, x.sqrt_ref()) * &c;
    if terms >= 2 {
        let coef = Float::with_val(bits, &b2 + 2u32) / 4u32 / &root_two_pi / &a4;
        let xp = Float::with_val(bits, (&x).pow(1.5f64));
        out += coef / xp * &s;
    }
    if terms >= 3 {
        let b4 = Float::with_val(bits, b2.square_ref());
        let poly = Float::with_val(bits, &b4 * 9u32) - Float::with_val(bits, &b2 * 28u32) + 4u32;
        let a34 = Float::with_val(bits, (&a4).pow(3u32));
        let coef = poly / 64u32 / &root_two_pi / a34;
        let xp = Float::with_val(bits, (&x).pow(2.5f64));
        out -= coef / xp * &c;
    }
    Ok(out)
}

/// `I(b, x) - beta^{1/2} (b^2-1)^{1/4} J0(beta x)`.
pub fn bessel_proximity(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
    let params = IFactorParams::new(b, ctx)?;
    let bits = ctx.working_bits();
    let i = i_series(b, x, &ctx.scaled(-2.0))?;
    let a4 = Float::with_val(bits, params.b.square_ref()) - 1u32;
    let amp = Float::with_val(bits, params.beta.sqrt_ref()) * a4.root(4);
    let arg = Float::with_val(bits, &params.beta * x);
    let j = bessel_j0(&arg, &ctx.scaled(-4.0))?;
    Ok(i - amp * j)
}

/// One evaluated bound: `holds` iff `value <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn margin(&self) -> f64 {
        self.bound - self.value
    }

    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

/// Every bound whose hypotheses apply at `(b, x)`, for `x > 0`.
pub fn check_bounds(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Vec<BoundCheck>> {
    check_b(b)?;
    let i = i_series(b, x, ctx)?;
    let abs_i = Float::with_val(AUX_BITS, i.abs_ref()).to_f64();
    let bf = b.to_f64();
    let xf = x.to_f64().abs();
    let k = BoundConstants::default();
    let mut out = vec![BoundCheck { name: "unit", value: abs_i, bound: 1.0 }];
    if xf > 0.0 {
        let bits = ctx.working_bits();
        let arg = Float::with_val(bits, x.abs_ref()) / b;
        let j = bessel_j0(&arg, ctx)?;
        let diff = Float::with_val(bits, &i - &j).abs().to_f64();
        out.push(BoundCheck { name: "bessel", value: diff, bound: k.c2 * xf / bf.powi(3) });
        out.push(BoundCheck {
            name: "two-term",
            value: abs_i,
            bound: k.c2 * xf / bf.powi(3) + k.c3 * (bf / xf).sqrt(),
        });
    }
    if xf > 1.0 && bf >= xf.sqrt() {
        out.push(BoundCheck {
            name: "uniform",
            value: abs_i,
            bound: k.c3 * (bf / xf).sqrt() * (1.0 + k.c5 / bf.sqrt()),
        });
    }
    if bf >= std::f64::consts::SQRT_2 && xf >= 5.0 {
        out.push(BoundCheck { name: "large-x", value: abs_i, bound: UNIFORM_BOUND * (bf / xf).sqrt() });
    }
    Ok(out)
}

/// Fails with an invariant error on the first violated bound.
pub fn assert_bounds(b: &Float, x: &Float, ctx: &PrecisionContext) -> Result<Vec<BoundCheck>> {
    let checks = check_bounds(b, x, ctx)?;
    if let Some(bad) = checks.iter().find(|c| !c.holds()) {
        return Err(Error::Invariant(format!(
            "{} bound violated at b = {}, x = {}: {:e} > {:e}",
            bad.name,
            b.to_f64(),
            x.to_f64(),
            bad.value,
            bad.bound
        )));
    }
    Ok(checks)
}

/// A grid point where `|I(b,x)| >= sqrt(2b/(pi x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureViolation {
    pub b: f64,
    pub x: f64,
    pub value: f64,
    pub envelope: f64,
}

/// Scans `|I(b,x)| < sqrt(2b/(pi x))` over the grid; returns violations.
pub fn conjecture_scan(bs: &[f64], xs: &[f64], ctx: &PrecisionContext) -> Result<Vec<ConjectureViolation>> {
    let mut out = Vec::new();
    for &b in bs {
        let bf = Float::with_val(AUX_BITS, b);
        for &x in xs {
            let xf = Float::with_val(AUX_BITS, x);
            let v = i_series(&bf, &xf, ctx)?.to_f64().abs();
            let envelope = (2.0 * b / (std::f64::consts::PI * x)).sqrt();
            if v >= envelope {
                out.push(ConjectureViolation { b, x, value: v, envelope });
            }
        }
    }
    Ok(out)
}
