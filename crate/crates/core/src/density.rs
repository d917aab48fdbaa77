//! Densities of the limiting distribution of `arg zeta(sigma + it)`:
//! `d` (mass beyond `pi/2`), `a_k` (mass beyond `(k + 1/2) pi`),
//! `d_- = sum (-1)^k a_k` and `d_+ = 1 - d_-`, all from `psi_sigma`.
//!
//! The workhorse is the m-form
//! `a_k = 1 - (4k+2)/m - (2/pi) sum_n psi(4n/m) sin((4k+2) pi n / m) / n`,
//! exact for `sigma > 1` once the period clears the support, and a limit in
//! `m` for `sigma <= 1`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rug::Float;

use crate::charfun::{PsiBound, PsiEvaluator, DEFAULT_KAPPA};
use crate::error::{Error, Result};
use crate::numerics::{exp2_float, log2_of, pi, ErrorBudget, PrecisionContext, Quadrature, AUX_BITS};
use crate::primes::{support_length, PrimeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityKind {
    D,
    DMinus,
    DPlus,
    Ak(u32),
    /// `d - d_-`, summed directly as `a_1 - a_2 + a_3 - ...`.
    Gap,
}

impl DensityKind {
    pub fn parse(name: &str, k: Option<u32>) -> Result<Self> {
        match (name, k) {
            ("d", _) => Ok(Self::D),
            ("dminus" | "d_minus", _) => Ok(Self::DMinus),
            ("dplus" | "d_plus", _) => Ok(Self::DPlus),
            ("gap", _) => Ok(Self::Gap),
            ("ak" | "a_k", Some(k)) => Ok(Self::Ak(k)),
            ("ak" | "a_k", None) => Err(Error::InvalidArgument("kind ak needs k".into())),
            _ => Err(Error::InvalidArgument(format!("unknown density kind '{name}'"))),
        }
    }

    fn uses_all_k(self) -> bool {
        matches!(self, Self::DMinus | Self::DPlus | Self::Gap)
    }
}

impl fmt::Display for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::D => write!(f, "d"),
            Self::DMinus => write!(f, "d_minus"),
            Self::DPlus => write!(f, "d_plus"),
            Self::Ak(k) => write!(f, "a_k({k})"),
            Self::Gap => write!(f, "d-d_minus"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    ExactSum,
    LimitSum,
    Integral,
    /// The support of the distribution lies inside the window.
    Forced,
}

impl fmt::Display for SumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExactSum => "exact-sum",
            Self::LimitSum => "limit-sum",
            Self::Integral => "integral",
            Self::Forced => "forced",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DensityResult {
    pub sigma: Float,
    pub kind: DensityKind,
    pub value: Float,
    pub budget: ErrorBudget,
    pub method: SumMethod,
    /// Grid parameter of the last level summed.
    pub m: Option<f64>,
    /// Number of `psi` abscissae in the last level.
    pub terms: usize,
    /// Working precision of the `psi` values summed.
    pub psi_bits: u32,
}

/// Grid parameter `m = 4 l / pi` and an optional cap on the number of terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumParams {
    pub m: f64,
    pub nterms: Option<usize>,
}

impl SumParams {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 2.0 && m.is_finite()) {
            return Err(Error::InvalidArgument(format!("m must exceed 2, got {m}")));
        }
        Ok(Self { m, nterms: None })
    }

    /// `4` when `L < pi`, else the smallest even integer above `4L/pi + 2`;
    /// raised further so every window up to `k = kmax` stays clear of the
    /// periodic copies (`m >= 2k + 1 + 2L/pi`).
    pub fn default_for(support: f64, kmax: u32) -> Self {
        let clear = 2.0 * f64::from(kmax) + 1.0 + 2.0 * support / std::f64::consts::PI;
        let m = if support < std::f64::consts::PI && clear <= 4.0 {
            4.0
        } else {
            let lo = (4.0 * support / std::f64::consts::PI + 2.0).max(clear);
            let mut m = lo.floor() + 1.0;
            if m % 2.0 != 0.0 {
                m += 1.0;
            }
            m
        };
        Self { m, nterms: None }
    }
}

#[derive(Debug, Clone)]
pub struct DensityOptions {
    pub kappa: f64,
    /// Overrides the grid parameter (exact-sum only).
    pub m: Option<f64>,
    /// Largest `m` the limit-sum may reach.
    pub max_m: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { kappa: DEFAULT_KAPPA, m: None, max_m: 8192.0 }
    }
}

/// Sieve size for the `|psi|` bound; only the primes up to `x^{1/sigma}`
/// matter, the rest enter through the prime zeta tail.
const BOUND_SIEVE: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    /// `x = num / den` in lowest terms.
    Ratio(u64, u64),
    /// `x = 4n/m` for non-integral `m`, keyed by `(n, m bits)`.
    Raw(u64, u64),
}

#[derive(Debug, Clone)]
struct Cached {
    value: Float,
    err: f64,
}

/// `psi` values on m-form grids, shared across levels and windows.
struct Grid {
    sigma: Float,
    base: PrecisionContext,
    kappa: f64,
    bound: PsiBound,
    evaluator: Option<PsiEvaluator>,
    cache: HashMap<Key, Cached>,
}

/// Result of one m-form level: `a_0..=a_K` with per-entry error parts.
#[derive(Debug, Clone)]
struct Level {
    m: f64,
    a: Vec<Float>,
    psi_err: Vec<f64>,
    trunc_err: f64,
    round_err: f64,
    terms: usize,
    psi_bits: u32,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Smallest `N` with `sum_{n > N} w(n) g(n step) <= tol`, and that tail.
/// `g` is the rigorous `|psi|` bound; the scan runs until the terms are
/// `e^-60` below `tol` and falling, after which the rest is negligible.
fn truncation_point<W: Fn(u64) -> f64>(bound: &PsiBound, step: f64, weight: W, tol: f64) -> Result<(usize, f64)> {
    let mut terms = Vec::new();
    let stop = tol.ln() - 60.0;
    let mut n = 1u64;
    let mut falling = 0;
    let mut prev = f64::INFINITY;
    loop {
        let lg = bound.log_bound(step * n as f64) + weight(n).ln();
        terms.push(lg);
        falling = if lg < prev { falling + 1 } else { 0 };
        prev = lg;
        if lg < stop && falling >= 16 && step * n as f64 >= 5.0 {
            break;
        }
        n += 1;
        if n > 50_000_000 {
            return Err(Error::Capacity(format!("psi bound has not decayed by x = {}", step * n as f64)));
        }
    }
    let mut tail = 0.0f64;
    let mut big_n = terms.len();
    for i in (0..terms.len()).rev() {
        let next = tail + terms[i].exp();
        if next > tol {
            break;
        }
        tail = next;
        big_n = i;
    }
    Ok((big_n, tail))
}

impl Grid {
    fn new(sigma: &Float, base: &PrecisionContext, kappa: f64) -> Result<Self> {
        let primes = Arc::new(PrimeTable::sieve(BOUND_SIEVE)?);
        let bound = PsiBound::new(sigma, primes)?;
        Ok(Self { sigma: sigma.clone(), base: base.clone(), kappa, bound, evaluator: None, cache: HashMap::new() })
    }

    fn ensure_evaluator(&mut self, xmax: f64, psi_target_log2: f64) -> Result<()> {
        let fits = self.evaluator.as_ref().is_some_and(|e| e.xmax() >= xmax && e.ctx().target_log2() <= psi_target_log2);
        if !fits {
            let (old_x, old_t) =
                self.evaluator.as_ref().map_or((0.0, f64::INFINITY), |e| (e.xmax(), e.ctx().target_log2()));
            // Overshoot so the next doubling rarely rebuilds.
            let x = xmax.max(old_x) * 1.25;
            let t = psi_target_log2.min(old_t) - 4.0;
            let ctx = self.base.with_target(&exp2_float(AUX_BITS, t))?;
            self.evaluator = Some(PsiEvaluator::with_kappa(&self.sigma, x, self.kappa, &ctx)?);
        }
        Ok(())
    }

    /// `psi(4n/m)` for `n = 1..=big_n` where `keep(n)`, each with error below
    /// `2^target_log2`.
    fn psi_values(&mut self, m: f64, big_n: usize, target_log2: f64, keep: &dyn Fn(u64) -> bool) -> Result<Vec<Option<Cached>>> {
        let integral = m.fract() == 0.0 && m < 1e15;
        let key = |n: u64| {
            if integral {
                let (num, den) = (4 * n, m as u64);
                let g = gcd(num, den);
                Key::Ratio(num / g, den / g)
            } else {
                Key::Raw(n, m.to_bits())
            }
        };
        let bits = self.base.working_bits().max(self.base.bits_for(0.0)?) + 64;
        let mf = Float::with_val(bits, m);
        let mut missing = Vec::new();
        let mut missing_n = Vec::new();
        for n in 1..=big_n as u64 {
            if !keep(n) {
                continue;
            }
            let good = self.cache.get(&key(n)).is_some_and(|c| c.err.log2() <= target_log2);
            if !good {
                missing.push(Float::with_val(bits, Float::with_val(bits, 4 * n) / &mf));
                missing_n.push(n);
            }
        }
        if !missing.is_empty() {
            self.ensure_evaluator(4.0 * big_n as f64 / m, target_log2)?;
            let ev = self.evaluator.as_ref().expect("evaluator just built");
            let vals = ev.psi_batch_with_budget(&missing)?;
            for (n, v) in missing_n.iter().zip(vals) {
                self.cache.insert(key(*n), Cached { value: v.value, err: v.budget.total().to_f64() });
            }
        }
        Ok((1..=big_n as u64).map(|n| if keep(n) { self.cache.get(&key(n)).cloned() } else { None }).collect())
    }

    /// `a_0..=a_kmax` at grid parameter `m`, each within about `2^target_log2`.
    fn level(&mut self, m: f64, kmax: u32, target_log2: f64, nterms: Option<usize>) -> Result<Level> {
        let tol = target_log2.exp2();
        let two_over_pi = 2.0 / std::f64::consts::PI;
        let step = 4.0 / m;
        let (mut big_n, mut trunc) = truncation_point(&self.bound, step, |n| two_over_pi / n as f64, tol / 2.0)?;
        if let Some(cap) = nterms {
            if cap < big_n {
                // The rest of the tail is reported, not dropped.
                let extra: f64 = ((cap + 1)..=big_n)
                    .map(|n| (self.bound.log_bound(step * n as f64)).exp() * two_over_pi / n as f64)
                    .sum();
                trunc += extra;
                big_n = cap;
            }
        }
        let harmonic = 1.0 + (big_n.max(1) as f64).ln();
        let psi_target = target_log2 - 2.0 - (two_over_pi * harmonic).log2();

        // Terms with every sine zero are skipped (odd n only when m = 4).
        let integral = m.fract() == 0.0 && m < 1e15;
        let mi = m as u64;
        let keep = move |n: u64| !integral || (0..=u64::from(kmax)).any(|k| ((4 * k + 2) * n) % mi != 0);
        let psi = self.psi_values(m, big_n, psi_target, &keep)?;

        let bits = self.base.bits_for(harmonic.log2() + 4.0)?.max(self.base.with_target(&exp2_float(AUX_BITS, target_log2 - 4.0))?.working_bits())
            + (big_n.max(2) as f64).log2().ceil() as u32;
        let pi_b = pi(bits);
        let mf = Float::with_val(bits, m);
        let mut a = Vec::with_capacity(kmax as usize + 1);
        let mut psi_err = Vec::with_capacity(kmax as usize + 1);
        for k in 0..=u64::from(kmax) {
            let mut s = Float::new(bits);
            let mut e = 0.0f64;
            for (i, c) in psi.iter().enumerate() {
                let Some(c) = c else { continue };
                let n = i as u64 + 1;
                let theta = if integral {
                    let r = ((4 * k + 2) * n) % (2 * mi);
                    if r == 0 || r == mi {
                        continue;
                    }
                    Float::with_val(bits, &pi_b * r) / mi
                } else {
                    Float::with_val(bits, &pi_b * ((4 * k + 2) * n)) / &mf
                };
                let t = Float::with_val(bits, &c.value * theta.sin()) / n;
                s += t;
                e += c.err / n as f64;
            }
            let lead = Float::with_val(bits, 1) - Float::with_val(bits, Float::with_val(bits, 4 * k + 2) / &mf);
            let v = lead - s * 2u32 / &pi_b;
            a.push(v);
            psi_err.push(two_over_pi * e);
        }
        let round_err = exp2_float(AUX_BITS, -(f64::from(bits)) + harmonic.log2() + 4.0).to_f64();
        let psi_bits = self.evaluator.as_ref().map_or(0, |e| e.ctx().working_bits());
        Ok(Level { m, a, psi_err, trunc_err: trunc, round_err, terms: psi.iter().filter(|c| c.is_some()).count(), psi_bits })
    }
}

/// Value of `kind` from a level's `a_k`, with its error; `None` when the
/// level does not reach far enough in `k`.
fn combine(kind: DensityKind, lvl: &Level, kmax: u32, small: f64) -> Option<(Float, f64)> {
    let per = |k: usize| lvl.psi_err[k] + lvl.trunc_err + lvl.round_err;
    match kind {
        DensityKind::D => Some((lvl.a[0].clone(), per(0))),
        DensityKind::Ak(k) => Some((lvl.a[k as usize].clone(), per(k as usize))),
        DensityKind::DMinus | DensityKind::DPlus | DensityKind::Gap => {
            let first = usize::from(kind == DensityKind::Gap);
            let mut acc = Float::new(lvl.a[0].prec());
            let mut err = 0.0;
            let mut done = false;
            for k in first..=kmax as usize {
                let term = &lvl.a[k];
                let sign_plus = (k - first) % 2 == 0;
                if sign_plus {
                    acc += term;
                } else {
                    acc -= term;
                }
                err += per(k);
                if term.to_f64().abs() < small {
                    done = true;
                    break;
                }
            }
            if !done {
                return None;
            }
            if kind == DensityKind::DPlus {
                acc = Float::with_val(acc.prec(), 1) - acc;
            }
            Some((acc, err))
        }
    }
}

fn check_sigma(sigma: &Float) -> Result<()> {
    if !(sigma.is_finite() && *sigma > 0.5) {
        return Err(Error::Domain(format!("densities need sigma > 1/2, got {}", sigma.to_f64())));
    }
    Ok(())
}

/// `L(sigma)` with its error, or `None` for `sigma <= 1`.
fn support(sigma: &Float) -> Result<Option<(f64, f64)>> {
    if *sigma <= 1 {
        return Ok(None);
    }
    let ctx = PrecisionContext::with_digits(20);
    let l = support_length(sigma, &ctx)?;
    Ok(Some((l.to_f64(), 1e-18)))
}

fn forced(sigma: &Float, kind: DensityKind, value: i32) -> DensityResult {
    DensityResult {
        sigma: sigma.clone(),
        kind,
        value: Float::with_val(AUX_BITS, value),
        budget: ErrorBudget::zero(),
        method: SumMethod::Forced,
        m: None,
        terms: 0,
        psi_bits: 0,
    }
}

/// Number of windows `k` worth including for `sigma <= 1`: well past ten
/// standard deviations of `Im S`, whose variance is below `P(2 sigma)/2`.
fn k_estimate(bound: &PsiBound) -> u32 {
    let sd = (bound.prime_zeta_2sigma() / 2.0).sqrt();
    ((10.0 * sd + 2.0) / std::f64::consts::PI).ceil() as u32 + 1
}

/// `kind` at the absolute accuracy of `ctx`.
pub fn density(sigma: &Float, kind: DensityKind, ctx: &PrecisionContext, opts: &DensityOptions) -> Result<DensityResult> {
    check_sigma(sigma)?;
    let target_log2 = ctx.target_log2();
    let sup = support(sigma)?;
    if let (Some((l, l_err)), DensityKind::D | DensityKind::Ak(_)) = (sup, kind) {
        let k = if let DensityKind::Ak(k) = kind { k } else { 0 };
        if l + l_err <= (f64::from(k) + 0.5) * std::f64::consts::PI {
            return Ok(forced(sigma, kind, 0));
        }
    }
    let mut grid = Grid::new(sigma, ctx, opts.kappa)?;
    match sup {
        Some((l, l_err)) => exact_sum(&mut grid, kind, l + l_err, target_log2, opts),
        None => {
            if opts.m.is_some() {
                return Err(Error::InvalidArgument("a fixed m applies only for sigma > 1".into()));
            }
            limit_sum(&mut grid, kind, target_log2, opts)
        }
    }
}

fn exact_sum(grid: &mut Grid, kind: DensityKind, l: f64, target_log2: f64, opts: &DensityOptions) -> Result<DensityResult> {
    let sigma = grid.sigma.clone();
    // Windows (k + 1/2) pi >= L carry no mass.
    let live = |k: u32| (f64::from(k) + 0.5) * std::f64::consts::PI < l;
    let kmax = match kind {
        DensityKind::D => 0,
        DensityKind::Ak(k) => k,
        _ => {
            let mut k = 0;
            while live(k + 1) {
                k += 1;
            }
            k
        }
    };
    if kind.uses_all_k() && !live(0) {
        let v = if kind == DensityKind::DPlus { 1 } else { 0 };
        return Ok(forced(&sigma, kind, v));
    }
    let params = match opts.m {
        Some(m) => SumParams::new(m)?,
        None => SumParams::default_for(l, kmax),
    };
    let clear = 2.0 * f64::from(kmax) + 1.0 + 2.0 * l / std::f64::consts::PI;
    if !(params.m > 2.0 && params.m > 4.0 * l / std::f64::consts::PI && params.m >= clear) {
        return Err(Error::InvalidArgument(format!(
            "m = {} is too small for sigma = {} (needs m > {:.6} and m >= {clear:.6})",
            params.m,
            sigma.to_f64(),
            (4.0 * l / std::f64::consts::PI).max(2.0)
        )));
    }
    let count = f64::from(kmax + 1);
    let lvl = grid.level(params.m, kmax, target_log2 - 1.0 - count.log2(), params.nterms)?;
    let (value, err) = combine(kind, &lvl, kmax, f64::INFINITY).expect("all live windows are present");
    Ok(DensityResult {
        sigma,
        kind,
        budget: ErrorBudget::new(
            &Float::with_val(AUX_BITS, lvl.trunc_err * count),
            &Float::with_val(AUX_BITS, err - lvl.trunc_err * count),
        ),
        value,
        method: SumMethod::ExactSum,
        m: Some(params.m),
        terms: lvl.terms,
        psi_bits: lvl.psi_bits,
    })
}

fn limit_sum(grid: &mut Grid, kind: DensityKind, target_log2: f64, opts: &DensityOptions) -> Result<DensityResult> {
    let sigma = grid.sigma.clone();
    let target = target_log2.exp2();
    let kmax = match kind {
        DensityKind::D => 0,
        DensityKind::Ak(k) => k,
        _ => k_estimate(&grid.bound),
    };
    let count = f64::from(kmax + 1);
    let mut m = 4.0f64;
    while m <= 4.0 * f64::from(kmax) + 2.0 {
        m *= 2.0;
    }
    // Each level is good to target/4; three in a row within target/2 stop.
    let level_log2 = target_log2 - 2.0 - count.log2();
    let mut history: Vec<(f64, Option<(Float, f64)>, Level)> = Vec::new();
    loop {
        // Only windows well inside the period are trusted at this level.
        let k_here = kmax.min(((m - 2.0) / 4.0).floor().max(0.0) as u32);
        let lvl = grid.level(m, k_here, level_log2, None)?;
        let small = target / 10.0;
        let val = match kind {
            DensityKind::Ak(k) if k > k_here => None,
            _ => combine(kind, &lvl, k_here, small),
        };
        history.push((m, val, lvl));
        let n = history.len();
        if n >= 3 {
            let vals: Vec<&Option<(Float, f64)>> = history[n - 3..].iter().map(|h| &h.1).collect();
            if let [Some(v1), Some(v2), Some(v3)] = vals[..] {
                let d1 = Float::with_val(AUX_BITS, &v2.0 - &v1.0).abs().to_f64();
                let d2 = Float::with_val(AUX_BITS, &v3.0 - &v2.0).abs().to_f64();
                if d1 <= target / 2.0 && d2 <= target / 2.0 {
                    let (_, last, lvl) = history.pop().expect("three levels present");
                    let (value, err) = last.expect("checked above");
                    return Ok(DensityResult {
                        sigma,
                        kind,
                        value,
                        budget: ErrorBudget::new(
                            &Float::with_val(AUX_BITS, lvl.trunc_err * count + d2),
                            &Float::with_val(AUX_BITS, (err - lvl.trunc_err * count).max(0.0)),
                        ),
                        method: SumMethod::LimitSum,
                        m: Some(lvl.m),
                        terms: lvl.terms,
                        psi_bits: lvl.psi_bits,
                    });
                }
            }
        }
        m *= 2.0;
        if m > opts.max_m {
            let trail: Vec<String> = history
                .iter()
                .map(|(m, v, _)| match v {
                    Some((v, _)) => format!("m={m}: {}", v.to_string_radix(10, Some(25))),
                    None => format!("m={m}: incomplete"),
                })
                .collect();
            return Err(Error::Convergence(format!(
                "limit-sum for {kind} at sigma = {} did not settle by m = {}: {}",
                sigma.to_f64(),
                opts.max_m,
                trail.join("; ")
            )));
        }
    }
}

/// Raw m-form values `a_0..=a_kmax` at a fixed `m`, no forcing and no
/// validity check; for studying the dependence on `m`.
pub fn m_form(sigma: &Float, params: &SumParams, kmax: u32, ctx: &PrecisionContext) -> Result<Vec<(Float, ErrorBudget)>> {
    check_sigma(sigma)?;
    let mut grid = Grid::new(sigma, ctx, DEFAULT_KAPPA)?;
    let count = f64::from(kmax + 1);
    let lvl = grid.level(params.m, kmax, ctx.target_log2() - 1.0 - count.log2(), params.nterms)?;
    Ok((0..=kmax as usize)
        .map(|k| {
            let budget = ErrorBudget::new(
                &Float::with_val(AUX_BITS, lvl.trunc_err),
                &Float::with_val(AUX_BITS, lvl.psi_err[k] + lvl.round_err),
            );
            (lvl.a[k].clone(), budget)
        })
        .collect())
}

pub fn density_d(sigma: &Float, ctx: &PrecisionContext) -> Result<DensityResult> {
    density(sigma, DensityKind::D, ctx, &DensityOptions::default())
}

pub fn density_ak(sigma: &Float, k: u32, params: Option<&SumParams>, ctx: &PrecisionContext) -> Result<DensityResult> {
    let opts = DensityOptions { m: params.map(|p| p.m), ..DensityOptions::default() };
    density(sigma, DensityKind::Ak(k), ctx, &opts)
}

pub fn density_dminus(sigma: &Float, ctx: &PrecisionContext) -> Result<DensityResult> {
    density(sigma, DensityKind::DMinus, ctx, &DensityOptions::default())
}

/// `kind` to `digits` significant digits: the absolute target is tightened
/// until the budget is below half a unit in the last requested digit.
pub fn density_significant(
    sigma: &Float,
    kind: DensityKind,
    digits: u32,
    base: &PrecisionContext,
    opts: &DensityOptions,
) -> Result<DensityResult> {
    let rel_log2 = -(f64::from(digits)) * std::f64::consts::LOG2_10;
    let mut target_log2 = (rel_log2).max(-40.0);
    // Unresolved values move the target down by 50, 100, 200, 200, ... bits;
    // the precision cap ends a runaway search.
    let mut step = 25.0;
    for _ in 0..40 {
        let ctx = base.with_target(&exp2_float(AUX_BITS, target_log2))?;
        let r = density(sigma, kind, &ctx, opts)?;
        if r.method == SumMethod::Forced {
            return Ok(r);
        }
        let v = log2_of(&r.value);
        let err = log2_of(&r.budget.total());
        if v.is_finite() && err <= v + rel_log2 - 1.0 {
            return Ok(r);
        }
        target_log2 = if v.is_finite() && v > err + 3.0 {
            v + rel_log2 - 3.0
        } else {
            step = (step * 2.0f64).min(200.0);
            target_log2 - step
        };
    }
    Err(Error::Convergence(format!(
        "could not resolve {kind} at sigma = {} to {digits} significant digits",
        sigma.to_f64()
    )))
}

/// `d` from `1 - (2/pi) int_0^inf psi(x) sin(pi x / 2) dx / x`, by
/// tanh-sinh over unit-period pieces; a cross-check on the sums.
pub fn density_d_integral(sigma: &Float, ctx: &PrecisionContext) -> Result<DensityResult> {
    check_sigma(sigma)?;
    let target_log2 = ctx.target_log2();
    let mut grid = Grid::new(sigma, ctx, DEFAULT_KAPPA)?;
    let two_over_pi = 2.0 / std::f64::consts::PI;
    // Piece j covers [2j, 2j+2]; its tail weight is at most 2 g(2j) / (2j).
    let (pieces, trunc) = truncation_point(&grid.bound, 2.0, |j| two_over_pi * 2.0 / (2.0 * j as f64), target_log2.exp2() / 4.0)?;
    let pieces = pieces.max(1) + 1;
    let xmax = 2.0 * pieces as f64;
    let psi_log2 = target_log2 - 3.0 - (pieces as f64).log2();
    grid.ensure_evaluator(xmax, psi_log2)?;
    let ev = grid.evaluator.as_ref().expect("evaluator built");
    let bits = ev.ctx().working_bits() + 16;
    let piece_ctx = ctx.with_target(&exp2_float(AUX_BITS, target_log2 - 3.0 - (pieces as f64).log2()))?;
    let quad = Quadrature::new(&piece_ctx);
    let half_pi = pi(bits) / 2u32;
    let mut total = Float::new(bits);
    let mut quad_err = 0.0;
    for j in 0..pieces {
        let a = Float::with_val(bits, 2 * j);
        let b = Float::with_val(bits, 2 * j + 2);
        let (v, e) = quad.integrate(
            |x| {
                if x.is_zero() {
                    return Ok(half_pi.clone());
                }
                let s = Float::with_val(bits, x * &half_pi).sin();
                Ok(ev.psi(x)? * s / x)
            },
            &a,
            &b,
        )?;
        total += v;
        quad_err += e.total().to_f64();
    }
    let pi_b = pi(bits);
    let value = Float::with_val(bits, 1) - total * 2u32 / pi_b;
    Ok(DensityResult {
        sigma: sigma.clone(),
        kind: DensityKind::D,
        value,
        budget: ErrorBudget::new(
            &Float::with_val(AUX_BITS, trunc),
            &Float::with_val(AUX_BITS, two_over_pi * quad_err + psi_log2.exp2() * xmax),
        ),
        method: SumMethod::Integral,
        m: None,
        terms: pieces,
        psi_bits: bits - 16,
    })
}

/// The `2l`-periodic density
/// `rho~(x) = 1/(2l) + (1/l) sum_n psi(pi n / l) cos(pi n x / l)`,
/// equal to the true density on `[-l, l]` when `sigma > 1` and `l > L(sigma)`.
#[derive(Debug, Clone)]
pub struct RhoTilde {
    sigma: Float,
    ell: Float,
    psi: Vec<Float>,
    budget: f64,
    exact: bool,
}

impl RhoTilde {
    pub fn new(sigma: &Float, ell: f64, ctx: &PrecisionContext) -> Result<Self> {
        check_sigma(sigma)?;
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::InvalidArgument(format!("l must be positive, got {ell}")));
        }
        let exact = match support(sigma)? {
            Some((l, e)) => ell > l + e,
            None => false,
        };
        let target_log2 = ctx.target_log2();
        let mut grid = Grid::new(sigma, ctx, DEFAULT_KAPPA)?;
        let step = std::f64::consts::PI / ell;
        // Weight covers both point values and bin integrals.
        let (big_n, trunc) = truncation_point(
            &grid.bound,
            step,
            |n| 1.0 / ell + 2.0 / (std::f64::consts::PI * n as f64),
            target_log2.exp2() / 2.0,
        )?;
        let big_n = big_n.max(1);
        let psi_log2 = target_log2 - 2.0 - (big_n as f64 / ell + 1.0 + (big_n as f64).ln()).log2();
        grid.ensure_evaluator(step * big_n as f64, psi_log2)?;
        let ev = grid.evaluator.as_ref().expect("evaluator built");
        let bits = ev.ctx().working_bits() + 16;
        let ell_f = Float::with_val(bits, ell);
        let pi_b = pi(bits);
        let xs: Vec<Float> = (1..=big_n).map(|n| Float::with_val(bits, &pi_b * n as u64) / &ell_f).collect();
        let vals = ev.psi_batch_with_budget(&xs)?;
        let psi_err: f64 = vals.iter().map(|v| v.budget.total().to_f64()).sum();
        let psi = vals.into_iter().map(|v| v.value).collect();
        Ok(Self { sigma: sigma.clone(), ell: ell_f, psi, budget: trunc + psi_err * (1.0 / ell + 1.0), exact })
    }

    pub fn sigma(&self) -> &Float {
        &self.sigma
    }

    pub fn ell(&self) -> f64 {
        self.ell.to_f64()
    }

    /// Absolute error bound on values and bin integrals.
    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Whether the periodized density equals the true one on `[-l, l]`.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn terms(&self) -> usize {
        self.psi.len()
    }

    pub fn value(&self, x: f64) -> Float {
        let bits = self.ell.prec();
        let pi_b = pi(bits);
        let w = Float::with_val(bits, &pi_b * Float::with_val(bits, x)) / &self.ell;
        let mut s = Float::new(bits);
        for (i, p) in self.psi.iter().enumerate() {
            s += Float::with_val(bits, p * Float::with_val(bits, &w * (i as u64 + 1)).cos());
        }
        let two_l = Float::with_val(bits, &self.ell * 2u32);
        Float::with_val(bits, two_l.recip_ref()) + s / &self.ell
    }

    /// `int_a^b rho~`.
    pub fn integral(&self, a: f64, b: f64) -> Float {
        let bits = self.ell.prec();
        let pi_b = pi(bits);
        let wa = Float::with_val(bits, &pi_b * Float::with_val(bits, a)) / &self.ell;
        let wb = Float::with_val(bits, &pi_b * Float::with_val(bits, b)) / &self.ell;
        let mut s = Float::new(bits);
        for (i, p) in self.psi.iter().enumerate() {
            let n = i as u64 + 1;
            let d = Float::with_val(bits, &wb * n).sin() - Float::with_val(bits, &wa * n).sin();
            s += Float::with_val(bits, p * d) / n;
        }
        let width = Float::with_val(bits, b - a);
        width / Float::with_val(bits, &self.ell * 2u32) + s / pi_b
    }
}

pub fn rho_tilde(sigma: &Float, x: f64, ell: f64, ctx: &PrecisionContext) -> Result<Float> {
    Ok(RhoTilde::new(sigma, ell, ctx)?.value(x))
}

/// Parses `"0.5+1e-11"` style sums as well as plain decimals.
pub fn parse_sigma(text: &str, bits: u32) -> Result<Float> {
    let mut total = Float::new(bits);
    let mut start = 0;
    let bytes = text.as_bytes();
    for i in 1..=bytes.len() {
        let split = i == bytes.len() || (bytes[i] == b'+' && !matches!(bytes[i - 1], b'e' | b'E'));
        if split {
            total += crate::numerics::parse_float(&text[start..i], bits)?;
            start = i + 1;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_sigma_sums() {
        let s = parse_sigma("0.5+1e-11", 128).unwrap();
        let want = Float::with_val(128, 0.5) + Float::with_val(128, Float::parse("1e-11").unwrap());
        assert_eq!(s, want);
        assert_eq!(parse_sigma("1.25", 64).unwrap(), 1.25);
        assert!(parse_sigma("x", 64).is_err());
    }

    #[test]
    fn default_m() {
        assert_eq!(SumParams::default_for(1.0, 0).m, 4.0);
        let p = SumParams::default_for(4.0, 0);
        assert!(p.m > 4.0 * 4.0 / std::f64::consts::PI + 2.0 && p.m % 2.0 == 0.0);
        assert!(SumParams::new(2.0).is_err());
    }

    #[test]
    fn kinds_parse_and_print() {
        assert_eq!(DensityKind::parse("ak", Some(2)).unwrap(), DensityKind::Ak(2));
        assert!(DensityKind::parse("ak", None).is_err());
        assert_eq!(DensityKind::DMinus.to_string(), "d_minus");
        assert_eq!(SumMethod::LimitSum.to_string(), "limit-sum");
    }

    #[test]
    fn domain() {
        let ctx = PrecisionContext::with_digits(10);
        assert!(matches!(density_d(&Float::with_val(64, 0.5), &ctx), Err(Error::Domain(_))));
    }
}
