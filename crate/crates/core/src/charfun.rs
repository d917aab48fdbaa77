//! The characteristic function `psi_sigma(x) = prod_p I(p^sigma, x)`.
//!
//! Primes up to `p0` are multiplied directly; the rest enter through
//! `exp(-sum_n Q_n(x/2)/n!^2 {P(2 n sigma) - sum_{p <= p0} p^{-2 n sigma}})`.

use std::sync::Arc;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::ifunc::{i_series_b2, i_series_bits, BoundConstants, UNIFORM_BOUND};
use crate::numerics::{log2_of, ErrorBudget, PrecisionContext, AUX_BITS};
use crate::primes::{prime_zeta, PrimeTable, PrimeZetaCache};
use crate::qpoly::QTable;

pub const DEFAULT_KAPPA: f64 = 4.0;

/// Floor on `p0`, so the tail series converges fast even near `x = 0`.
pub const MIN_P0: u64 = 17;

/// `|psi|` bound for `x >= 5`, found numerically for `sigma` in `(1/2, 1.1)`.
pub fn decay_envelope(sigma: f64, x: f64) -> f64 {
    let y = x.powf(1.0 / sigma);
    (-y / y.ln()).exp()
}

/// Rigorous upper bound on `|psi_sigma(x)|` from per-prime bounds on `I`:
/// `1.1512 sqrt(b/x)` (`b >= sqrt 2`, `x >= 5`), the uniform bound for
/// `b^2 >= x`, and `exp(-(x/2)^2 / b^2)` for `b > max(1, x/2)`, the last
/// because every term of the log series is negative.
#[derive(Debug, Clone)]
pub struct PsiBound {
    sigma: f64,
    primes: Arc<PrimeTable>,
    /// `p^sigma` per table prime.
    b: Vec<f64>,
    /// `tail[i] = sum_{j >= i} p_j^{-2 sigma}` including primes past the table.
    tail: Vec<f64>,
}

impl PsiBound {
    pub fn new(sigma: &Float, primes: Arc<PrimeTable>) -> Result<Self> {
        if !(*sigma > 0.5) {
            return Err(Error::Domain(format!("sigma must exceed 1/2, got {}", sigma.to_f64())));
        }
        let pz = prime_zeta(&Float::with_val(sigma.prec().max(AUX_BITS) + 32, sigma * 2u32), &PrecisionContext::with_digits(18))?
            .to_f64();
        Ok(Self::with_outer_tail(sigma.to_f64(), primes, Some(pz)))
    }

    /// Bound for the product over the table primes only, as for a
    /// characteristic function truncated at the table limit.
    pub fn truncated(sigma: &Float, primes: Arc<PrimeTable>) -> Result<Self> {
        if !(*sigma > 0.5) {
            return Err(Error::Domain(format!("sigma must exceed 1/2, got {}", sigma.to_f64())));
        }
        Ok(Self::with_outer_tail(sigma.to_f64(), primes, None))
    }

    fn with_outer_tail(s: f64, primes: Arc<PrimeTable>, prime_zeta_2s: Option<f64>) -> Self {
        let b: Vec<f64> = primes.primes().iter().map(|&p| (p as f64).powf(s)).collect();
        let mut tail = vec![0.0; b.len() + 1];
        if let Some(pz) = prime_zeta_2s {
            let head: f64 = b.iter().map(|v| 1.0 / (v * v)).sum();
            // Only this entry suffers cancellation; shade it down.
            tail[b.len()] = ((pz - head) * (1.0 - 1e-9) - 1e-15 * pz).max(0.0);
        }
        for i in (0..b.len()).rev() {
            tail[i] = tail[i + 1] + 1.0 / (b[i] * b[i]);
        }
        Self { sigma: s, primes, b, tail }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Natural log of the bound; 0 means no information.
    pub fn log_bound(&self, x: f64) -> f64 {
        self.log_bound_on(x, x)
    }

    /// Log of a bound on `|psi|` over all of `[x0, x1]`, `0 <= x0 <= x1`.
    /// Every per-prime form falls with `x`, so a form that applies on the
    /// whole interval may be taken at `x0`.
    pub fn log_bound_on(&self, x0: f64, x1: f64) -> f64 {
        let (x0, x1) = (x0.abs(), x1.abs());
        debug_assert!(x0 <= x1);
        if x1 == 0.0 {
            return 0.0;
        }
        let k = BoundConstants::default();
        let y0 = x0 / 2.0;
        let y1 = x1 / 2.0;
        let mut acc = 0.0f64;
        for (i, &b) in self.b.iter().enumerate() {
            let mut f = 0.0f64;
            if x0 >= 5.0 && b >= std::f64::consts::SQRT_2 {
                f = f.min(UNIFORM_BOUND.ln() + 0.5 * (b / x0).ln());
            }
            if x0 > 1.0 && b * b >= x1 {
                f = f.min(k.c3.ln() + 0.5 * (b / x0).ln() + (k.c5 / b.sqrt()).ln_1p());
            }
            if b > y1.max(1.0) {
                if b > x1 {
                    // exp regime wins from here on; take the rest in bulk.
                    return acc - y0 * y0 * self.tail[i];
                }
                f = f.min(-(y0 * y0) / (b * b));
            }
            acc += f;
        }
        acc
    }

    /// Bound on `int_x^inf t |psi(t)| dt` for `x >= 5`. Past `x` the factors
    /// `min(1, 1.1512 sqrt(b/t))` already below one fall like `t^{-1/2}`;
    /// infinite unless more than four of them are.
    pub fn first_moment_tail(&self, x: f64) -> f64 {
        if !(x >= 5.0) {
            return f64::INFINITY;
        }
        let mut log_u = 0.0f64;
        let mut n = 0usize;
        for &b in &self.b {
            let f = UNIFORM_BOUND.ln() + 0.5 * (b / x).ln();
            if f < 0.0 {
                log_u += f;
                n += 1;
            }
        }
        if n <= 4 {
            return f64::INFINITY;
        }
        x * x * log_u.exp() / (n as f64 / 2.0 - 2.0)
    }

    pub fn bound(&self, x: f64) -> f64 {
        self.log_bound(x).exp()
    }

    /// `P(2 sigma)` shaded down slightly; the table-only sum when truncated.
    pub fn prime_zeta_2sigma(&self) -> f64 {
        self.tail[0]
    }

    pub fn primes(&self) -> &Arc<PrimeTable> {
        &self.primes
    }
}

/// `psi` together with the error it carries.
#[derive(Debug, Clone)]
pub struct PsiValue {
    pub value: Float,
    pub budget: ErrorBudget,
    pub p0: u64,
    /// Number of tail terms `N'`.
    pub tail_terms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub x: f64,
    pub abs_psi: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Evaluates `psi_sigma` for `|x| <= xmax` at the context's absolute target.
#[derive(Debug, Clone)]
pub struct PsiEvaluator {
    sigma: Float,
    ctx: PrecisionContext,
    kappa: f64,
    xmax: f64,
    qtable: Arc<QTable>,
    pzcache: PrimeZetaCache,
    primes: Arc<PrimeTable>,
    bound: PsiBound,
}

fn p0_for(sigma: f64, kappa: f64, x: f64) -> u64 {
    let raw = (kappa * x.abs()).powf(1.0 / sigma).ceil();
    if raw.is_finite() && raw < 1e18 {
        (raw as u64).max(MIN_P0)
    } else {
        u64::MAX
    }
}

/// `log2` of the bound on `sum_{n > big_n} Q_n(y)/n!^2 tail_n(p0)` given
/// `tail_1`; `-inf` if `big_n` is large enough to make it vanish.
fn tail_series_log2(y: f64, p0_sigma: f64, tail1: f64, big_n: usize) -> f64 {
    let m = y.max(1.0);
    let r = (m / p0_sigma).powi(2);
    let n = big_n as f64;
    (y * y).min(1.0).log2() + tail1.log2() + 2.0 * m.log2() + n * r.log2() - (n + 1.0).log2() - (1.0 - r).log2()
}

fn tail_terms_needed(y: f64, p0_sigma: f64, tail1: f64, target_log2: f64) -> usize {
    if y == 0.0 || tail1 <= 0.0 {
        return 0;
    }
    let mut n = 1usize;
    while tail_series_log2(y, p0_sigma, tail1, n) > target_log2 {
        n += 1;
    }
    n
}

impl PsiEvaluator {
    pub fn new(sigma: &Float, xmax: f64, ctx: &PrecisionContext) -> Result<Self> {
        Self::with_kappa(sigma, xmax, DEFAULT_KAPPA, ctx)
    }

    /// `kappa` sets `p0 = ceil((kappa |x|)^{1/sigma})`; any `kappa > 1/2`
    /// keeps every tail factor away from its zeros.
    pub fn with_kappa(sigma: &Float, xmax: f64, kappa: f64, ctx: &PrecisionContext) -> Result<Self> {
        if !(*sigma > 0.5) {
            return Err(Error::Domain(format!("sigma must exceed 1/2, got {}", sigma.to_f64())));
        }
        if !(kappa > 0.5 && kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kappa must exceed 1/2, got {kappa}")));
        }
        if !(xmax.is_finite() && xmax >= 0.0) {
            return Err(Error::InvalidArgument(format!("xmax must be finite and nonnegative, got {xmax}")));
        }
        let s = sigma.to_f64();
        let p0max = p0_for(s, kappa, xmax);
        let primes = Arc::new(PrimeTable::sieve(p0max.max(1 << 12))?);
        let bound = PsiBound::new(sigma, primes.clone())?;

        // Size the tail series over a grid of x, worst case |A| = 1.
        let eps_log2 = ctx.target_log2() - 3.0;
        let mut nprime = 1usize;
        let mut probe = xmax;
        while probe > 1e-6 {
            let p0 = p0_for(s, kappa, probe);
            let i = primes.count_up_to(p0)?;
            let y = probe / 2.0;
            nprime = nprime.max(tail_terms_needed(y, (p0 as f64).powf(s), bound.tail[i], eps_log2 - 1.0));
            probe *= 0.9;
        }
        nprime += 2;

        // Row n is multiplied by at most min(1,y^2) max(1,y)^{2n} / n.
        let ymax = xmax / 2.0;
        let targets: Vec<Float> = (1..=nprime)
            .map(|n| {
                let c = (ymax * ymax).min(1.0).log2() + 2.0 * n as f64 * ymax.max(1.0).log2() - (n as f64).log2();
                crate::numerics::exp2_float(AUX_BITS, eps_log2 - 2.0 - (nprime as f64).log2() - c.max(0.0))
            })
            .collect();
        let pzcache = PrimeZetaCache::build(sigma, &primes, &targets, ctx)?;
        let qtable = Arc::new(QTable::build(nprime)?);
        Ok(Self { sigma: sigma.clone(), ctx: ctx.clone(), kappa, xmax, qtable, pzcache, primes, bound })
    }

    pub fn sigma(&self) -> &Float {
        &self.sigma
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn bound(&self) -> &PsiBound {
        &self.bound
    }

    pub fn p0(&self, x: f64) -> u64 {
        p0_for(self.sigma.to_f64(), self.kappa, x)
    }

    pub fn psi(&self, x: &Float) -> Result<Float> {
        Ok(self.psi_with_budget(x)?.value)
    }

    pub fn psi_with_budget(&self, x: &Float) -> Result<PsiValue> {
        if !x.is_finite() {
            return Err(Error::InvalidArgument("psi needs a finite argument".into()));
        }
        let bits = self.ctx.working_bits();
        if x.is_zero() {
            return Ok(PsiValue { value: Float::with_val(bits, 1), budget: ErrorBudget::zero(), p0: 0, tail_terms: 0 });
        }
        let x = Float::with_val(x.prec(), x.abs_ref());
        let x_f = x.to_f64();
        let s_f = self.sigma.to_f64();
        let p0 = self.p0(x_f);
        if p0 > self.primes.limit() {
            return Err(Error::Capacity(format!(
                "x = {x_f} needs primes to {p0}; evaluator was sized for |x| <= {}",
                self.xmax
            )));
        }
        let p0_sigma = (p0 as f64).powf(s_f);
        if 2.0 * p0_sigma <= x_f {
            return Err(Error::Invariant(format!("2 p0^sigma = {} does not exceed |x| = {x_f}", 2.0 * p0_sigma)));
        }
        let eps_log2 = self.ctx.target_log2();

        // A: direct product over p <= p0.
        let small = self.primes.up_to(p0)?;
        let per_prime = self.ctx.scaled(-2.0 - (small.len() as f64).log2());
        let abits = self.ctx.bits_for((small.len() as f64 + 1.0).log2() + 2.0)?;
        let mut a = Float::with_val(abits, 1);
        for &p in small {
            let b_f = (p as f64).powf(s_f);
            let pbits = i_series_bits(b_f, x_f, &per_prime)?;
            let s2 = Float::with_val(pbits.max(self.sigma.prec()), &self.sigma * 2u32);
            let b2 = Float::with_val(pbits, Float::with_val(pbits, p).pow(&s2));
            a *= i_series_b2(&b2, &x, &per_prime)?;
        }

        // B: exp of the tail series, accurate to eps / (4 |A|) in the exponent.
        let a_log2 = log2_of(&a).min(0.0);
        let logb_log2 = (eps_log2 - 2.0 - a_log2).min(0.0);
        let tail1 = self.pzcache.tail(1, p0)?.to_f64();
        let y_f = x_f / 2.0;
        let nprime = tail_terms_needed(y_f, p0_sigma, tail1, logb_log2 - 1.0);
        if nprime > self.pzcache.nmax() || nprime > self.qtable.nmax() {
            return Err(Error::Capacity(format!(
                "tail series needs {nprime} terms; evaluator holds {}",
                self.pzcache.nmax().min(self.qtable.nmax())
            )));
        }
        let logb_ctx = self.ctx.with_target(&crate::numerics::exp2_float(AUX_BITS, logb_log2))?;
        let mut expo = Float::with_val(logb_ctx.working_bits(), 0);
        for n in 1..=nprime {
            let tail = self.pzcache.tail(n, p0)?;
            if tail.is_zero() {
                continue;
            }
            let row = self.qtable.row(n).expect("row count checked above");
            // Q_n(y)/n!^2 <= min(1,y^2) max(1,y)^{2n} / n
            let c_log2 = (y_f * y_f).min(1.0).log2() + 2.0 * n as f64 * y_f.max(1.0).log2() - (n as f64).log2();
            let mag = c_log2 + log2_of(tail);
            let tbits = logb_ctx.bits_for(mag + (nprime as f64).log2() + (n as f64 + 2.0).log2() + 2.0)?;
            let y2 = Float::with_val(tbits, Float::with_val(tbits, &x / 2u32).square_ref());
            let mut q = Float::new(tbits);
            for c in row.iter().rev() {
                q += c;
                q *= &y2;
            }
            let f = Integer::from(Integer::factorial(n as u32));
            q /= Float::with_val(tbits, &f);
            q /= Float::with_val(tbits, &f);
            q *= tail;
            expo += q;
        }
        let b = Float::with_val(abits, (-expo).exp());
        let value = Float::with_val(bits, &a * &b);

        let trunc_log2 = tail_series_log2(y_f, p0_sigma, tail1, nprime) + a_log2;
        let truncation = crate::numerics::exp2_float(AUX_BITS, trunc_log2.max(eps_log2 - 2.0))
            + crate::numerics::exp2_float(AUX_BITS, eps_log2 - 2.0);
        let rounding = crate::numerics::exp2_float(AUX_BITS, eps_log2 - 2.0);
        Ok(PsiValue {
            value,
            budget: ErrorBudget::new(&Float::with_val(AUX_BITS, truncation), &rounding),
            p0,
            tail_terms: nprime,
        })
    }

    /// Same values as separate [`psi`](Self::psi) calls, evaluated in parallel.
    pub fn psi_batch(&self, xs: &[Float]) -> Result<Vec<Float>> {
        xs.par_iter().map(|x| self.psi(x)).collect()
    }

    pub fn psi_batch_with_budget(&self, xs: &[Float]) -> Result<Vec<PsiValue>> {
        xs.par_iter().map(|x| self.psi_with_budget(x)).collect()
    }

    /// Checks `|psi(x)| <= exp(-x^{1/sigma}/log x^{1/sigma})` for `x >= 5`
    /// and `sigma` in `(1/2, 1.1)`.
    pub fn psi_decay_check(&self, x: f64) -> Result<DecayReport> {
        let s = self.sigma.to_f64();
        if !(s > 0.5 && s < 1.1) {
            return Err(Error::Domain(format!("decay bound covers sigma in (0.5, 1.1), got {s}")));
        }
        if !(x >= 5.0) {
            return Err(Error::Domain(format!("decay bound covers x >= 5, got {x}")));
        }
        let v = self.psi_with_budget(&Float::with_val(self.ctx.working_bits(), x))?;
        let abs_psi = Float::with_val(AUX_BITS, v.value.abs_ref()).to_f64();
        let err = v.budget.total().to_f64();
        let bound = decay_envelope(s, x);
        if err >= bound {
            return Err(Error::InvalidArgument(format!(
                "evaluator target {err:e} cannot resolve the envelope {bound:e} at x = {x}"
            )));
        }
        let margin = bound - abs_psi - err;
        if margin < 0.0 {
            return Err(Error::Invariant(format!(
                "|psi({x})| = {abs_psi:e} exceeds exp(-x^(1/s)/log x^(1/s)) = {bound:e} at sigma = {s}"
            )));
        }
        Ok(DecayReport { x, abs_psi, bound, margin })
    }
}
