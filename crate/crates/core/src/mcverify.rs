//! Monte Carlo oracle: draws of `Im S = sum_{p <= c} arg(1 - e^{i theta_p} p^{-sigma})`
//! with independent uniform `theta_p`, for checking the analytic densities.
//!
//! Each sample owns a SplitMix64 stream keyed by `(seed, sample)` whose
//! `i`-th output is the angle of the `i`-th prime, so a draw does not depend
//! on the chunking or thread count and raising the cutoff only appends.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use rug::Float;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::charfun::PsiBound;
use crate::density::RhoTilde;
use crate::error::{Error, Result};
use crate::numerics::PrecisionContext;
use crate::primes::{partial_prime_sum, prime_zeta, support_length, PrimeTable};

/// Draws advanced together in the inner loop.
const LANES: usize = 4;

/// Largest summed phase allowed inside one complex-product block.
const BLOCK_PHASE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub sigma: f64,
    pub samples: u64,
    pub prime_cutoff: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(sigma: f64, samples: u64, prime_cutoff: u64, seed: u64) -> Result<Self> {
        let cfg = Self { sigma, samples, prime_cutoff, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.5 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma must exceed 1/2, got {}", self.sigma)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be positive".into()));
        }
        if self.prime_cutoff < 2 {
            return Err(Error::InvalidArgument(format!("prime cutoff must be at least 2, got {}", self.prime_cutoff)));
        }
        Ok(())
    }
}

/// Proportion estimate; `std_error = sqrt(p (1 - p) / samples)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub events: u64,
    pub samples: u64,
}

impl McEstimate {
    fn from_counts(events: u64, samples: u64) -> Self {
        let p = events as f64 / samples as f64;
        Self { estimate: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), events, samples }
    }
}

/// `(cos 2 pi u, sin 2 pi u)` for `u` in `[0, 1)`, to about 1e-15.
pub fn sincos_turn(u: f64) -> (f64, f64) {
    let k = (u.rem_euclid(1.0) * TURN_SCALE) as u64;
    sincos_bits(k.min((1 << 53) - 1))
}

const TURN_SCALE: f64 = (1u64 << 53) as f64;

/// `sincos_turn(k / 2^53)` for a 53-bit `k`; the top two bits pick the
/// quadrant, so no floating-point rounding is needed.
#[inline(always)]
fn sincos_bits(k: u64) -> (f64, f64) {
    const FRAC: f64 = 1.0 / (1u64 << 51) as f64;
    let q = (k >> 51) as u32;
    let phi = (k & ((1 << 51) - 1)) as f64 * FRAC * FRAC_PI_2 - FRAC_PI_4;
    let p2 = phi * phi;
    // Taylor to degree 15/14 on |phi| <= pi/4.
    let s = phi
        * (1.0
            + p2 * (-1.0 / 6.0
                + p2 * (1.0 / 120.0
                    + p2 * (-1.0 / 5040.0
                        + p2 * (1.0 / 362_880.0
                            + p2 * (-1.0 / 39_916_800.0 + p2 * (1.0 / 6_227_020_800.0 - p2 / 1_307_674_368_000.0)))))));
    let c = 1.0
        + p2 * (-0.5
            + p2 * (1.0 / 24.0
                + p2 * (-1.0 / 720.0
                    + p2 * (1.0 / 40_320.0
                        + p2 * (-1.0 / 3_628_800.0 + p2 * (1.0 / 479_001_600.0 - p2 / 87_178_291_200.0))))));
    // Undo the pi/4 shift, then the quadrant without branches: odd q
    // rotates by pi/2, q >= 2 negates.
    let (cs, sn) = ((c - s) * FRAC_1_SQRT_2, (s + c) * FRAC_1_SQRT_2);
    let odd = f64::from(q & 1);
    let sign = 1.0 - 2.0 * f64::from(q >> 1);
    (sign * (cs - odd * (cs + sn)), sign * (sn + odd * (cs - sn)))
}

/// Precomputed `p^sigma` and product blocks for repeated draws.
#[derive(Debug, Clone)]
pub struct McSampler {
    cfg: McConfig,
    primes: Arc<PrimeTable>,
    inv_b: Vec<f64>,
    /// Block `j` covers primes `blocks[j]..blocks[j+1]`.
    blocks: Vec<usize>,
    key: u64,
}

impl McSampler {
    pub fn new(cfg: &McConfig) -> Result<Self> {
        cfg.validate()?;
        let primes = Arc::new(PrimeTable::sieve(cfg.prime_cutoff)?);
        let inv_b: Vec<f64> = primes.primes().iter().map(|&p| (p as f64).powf(-cfg.sigma)).collect();
        let mut blocks = vec![0];
        let mut phase = 0.0;
        for (i, &ib) in inv_b.iter().enumerate() {
            let a = ib.asin();
            if phase + a > BLOCK_PHASE && i > *blocks.last().expect("nonempty") {
                blocks.push(i);
                phase = 0.0;
            }
            phase += a;
        }
        blocks.push(inv_b.len());
        // One scramble of the seed, then sample numbers are xor-ed in.
        let key = SplitMix64::seed_from_u64(cfg.seed).next_u64();
        Ok(Self { cfg: *cfg, primes, inv_b, blocks, key })
    }

    pub fn config(&self) -> &McConfig {
        &self.cfg
    }

    pub fn primes(&self) -> &PrimeTable {
        &self.primes
    }

    /// `sum_{p <= c} arcsin p^{-sigma}`, the largest possible `|Im S|`.
    pub fn max_abs(&self) -> f64 {
        self.inv_b.iter().map(|v| v.asin()).sum()
    }

    fn stream(&self, sample: u64) -> SplitMix64 {
        SplitMix64::from_seed((self.key ^ sample.wrapping_mul(0xD1B5_4A32_D192_ED03)).to_le_bytes())
    }

    /// Draw number `sample`.
    pub fn draw(&self, sample: u64) -> f64 {
        self.draw_lanes([sample; LANES])[0]
    }

    /// Independent draws advanced together for instruction-level parallelism.
    fn draw_lanes(&self, samples: [u64; LANES]) -> [f64; LANES] {
        let mut g = samples.map(|n| self.stream(n));
        let mut total = [0.0f64; LANES];
        for w in self.blocks.windows(2) {
            let mut re = [1.0f64; LANES];
            let mut im = [0.0f64; LANES];
            for &ib in &self.inv_b[w[0]..w[1]] {
                for l in 0..LANES {
                    let (c, s) = sincos_bits(g[l].next_u64() >> 11);
                    // (re + i im) (1 - (c + i s) / b)
                    let (fr, fi) = (1.0 - c * ib, -s * ib);
                    (re[l], im[l]) = (re[l] * fr - im[l] * fi, re[l] * fi + im[l] * fr);
                }
            }
            for l in 0..LANES {
                total[l] += im[l].atan2(re[l]);
            }
        }
        total
    }

    /// A draw with the given angles (radians) in place of random ones;
    /// missing entries count as zero.
    pub fn draw_with_angles(&self, angles: &[f64]) -> f64 {
        self.inv_b
            .iter()
            .enumerate()
            .map(|(i, &ib)| {
                let t = angles.get(i).copied().unwrap_or(0.0);
                -(t.sin() * ib).atan2(1.0 - t.cos() * ib)
            })
            .sum()
    }

    /// Draws `0..samples` reduced by `f` into integer counts.
    fn count<F>(&self, f: F, slots: usize) -> Vec<u64>
    where
        F: Fn(f64, &mut [u64]) + Sync,
    {
        const CHUNK: u64 = 4096;
        let chunks = self.cfg.samples.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut local = vec![0u64; slots];
                let end = ((c + 1) * CHUNK).min(self.cfg.samples);
                let mut n = c * CHUNK;
                while n < end {
                    let lanes = std::array::from_fn(|l| n + l as u64);
                    let draws = self.draw_lanes(lanes);
                    for (l, v) in draws.into_iter().enumerate() {
                        if n + (l as u64) < end {
                            f(v, &mut local);
                        }
                    }
                    n += LANES as u64;
                }
                local
            })
            .reduce(
                || vec![0u64; slots],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    }
}

/// One draw of `Im S`, number `sample` of the seeded stream.
pub fn sample_im_s(cfg: &McConfig, sample: u64) -> Result<f64> {
    Ok(McSampler::new(cfg)?.draw(sample))
}

/// `Re zeta < 0` corresponds to `cos(arg) < 0`.
fn in_dminus(v: f64) -> bool {
    (v + FRAC_PI_2).rem_euclid(TAU) > PI
}

/// Bounds on how far the truncated variable's densities can sit from the
/// full ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBias {
    /// `E[T^2]` bound for the omitted `T = sum_{p > c}` part.
    pub tail_second_moment: f64,
    /// Bound on `sup |rho_c'|` for the truncated density.
    pub density_slope: f64,
    /// Bias bound on `d`.
    pub d: f64,
    /// Bias bound on `d_-`.
    pub d_minus: f64,
    /// `sum_{p > c} arcsin p^{-sigma}`, finite only for `sigma > 1`.
    pub support_tail: Option<f64>,
}

/// Bias bounds from a second-order expansion in the omitted part `T`.
///
/// With `S_c` symmetric and independent of `T`, the change in
/// `P(S_c + T in A)` is `E[G(T)]` with `G(0) = G'(0) = 0` and
/// `|G''| <= (edges of A meeting the support) sup |rho_c'|`, so the bias is
/// at most `E[T^2] sup |rho_c'| edges / 2`. `E[T^2] = sum_{p>c} Li_2(p^{-2s})/2`
/// and `sup |rho_c'| <= (1/pi) int_0^inf x |psi_c(x)| dx`.
pub fn truncation_bias(cfg: &McConfig) -> Result<TruncationBias> {
    cfg.validate()?;
    let ctx = PrecisionContext::with_digits(20);
    let bits = ctx.working_bits();
    let sigma = Float::with_val(bits, Float::parse(format!("{:e}", cfg.sigma)).map_err(|e| Error::InvalidArgument(e.to_string()))?);
    let table = Arc::new(PrimeTable::sieve(cfg.prime_cutoff)?);
    let two_s = Float::with_val(bits + 32, &sigma * 2u32);
    let full = prime_zeta(&two_s, &ctx)?;
    let head = partial_prime_sum(&two_s, cfg.prime_cutoff, &table, &ctx)?;
    let outer = Float::with_val(bits, full - head).to_f64().max(0.0);
    let z = (cfg.prime_cutoff as f64 + 1.0).powf(-2.0 * cfg.sigma);
    // Li_2(z) <= z / (1 - z) termwise; 1e-15 relative covers the subtraction.
    let second = 0.5 * outer / (1.0 - z) * (1.0 + 1e-12) + 1e-15;

    let bound = PsiBound::truncated(&sigma, table.clone())?;
    let slope = slope_bound(&bound)?;
    let l_c: f64 = table.primes().iter().map(|&p| (p as f64).powf(-cfg.sigma).asin()).sum();
    let support_tail = if cfg.sigma > 1.0 {
        let l = support_length(&sigma, &ctx)?.to_f64();
        Some((l - l_c).max(0.0))
    } else {
        None
    };
    let edges_dminus = 2.0 * l_c / PI + 1.0;
    Ok(TruncationBias {
        tail_second_moment: second,
        density_slope: slope,
        d: second * slope,
        d_minus: 0.5 * edges_dminus * second * slope,
        support_tail,
    })
}

/// `(1/pi) int_0^inf x B(x) dx` by upper sums over intervals.
fn slope_bound(bound: &PsiBound) -> Result<f64> {
    // Upper Riemann sum of x B(x): steps of 1/64 up to 8, then ratio 65/64.
    let mut total = 0.0f64;
    let mut x = 0.0f64;
    loop {
        let next = if x < 8.0 { x + 1.0 / 64.0 } else { x * (1.0 + 1.0 / 64.0) };
        total += next * bound.log_bound_on(x, next).exp() * (next - x);
        x = next;
        if x >= 8.0 {
            let tail = bound.first_moment_tail(x);
            if tail <= 1e-6 * total {
                total += tail;
                break;
            }
        }
        if x > 1e40 {
            return Err(Error::Convergence("|psi| bound for the truncated product did not decay".into()));
        }
    }
    Ok(total / PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimates {
    pub d: McEstimate,
    pub d_minus: McEstimate,
    pub bias: TruncationBias,
    /// `sum_{p <= c} arcsin p^{-sigma}`.
    pub max_abs: f64,
}

pub fn estimate_densities(cfg: &McConfig) -> Result<DensityEstimates> {
    let sampler = McSampler::new(cfg)?;
    let counts = sampler.count(
        |v, c| {
            if v.abs() > FRAC_PI_2 {
                c[0] += 1;
            }
            if in_dminus(v) {
                c[1] += 1;
            }
        },
        2,
    );
    Ok(DensityEstimates {
        d: McEstimate::from_counts(counts[0], cfg.samples),
        d_minus: McEstimate::from_counts(counts[1], cfg.samples),
        bias: truncation_bias(cfg)?,
        max_abs: sampler.max_abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramReport {
    /// `bins + 1` edges spanning `[-L, L]`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `samples * int_bin rho~`.
    pub expected: Vec<f64>,
    pub statistic: f64,
    pub dof: u32,
    /// 99.9% quantile of chi-square with `dof` degrees of freedom.
    pub critical: f64,
    pub pass: bool,
    pub ell: f64,
}

/// Chi-square comparison of the histogram of draws with bin integrals of
/// `rho~` (`l = 1.1 L`, exact for `sigma > 1`). Adjacent bins are pooled
/// until each expects at least 5 draws.
pub fn histogram_vs_rho(cfg: &McConfig, bins: usize, ctx: &PrecisionContext) -> Result<HistogramReport> {
    cfg.validate()?;
    if cfg.sigma <= 1.0 {
        return Err(Error::Domain(format!("rho~ is exact only for sigma > 1, got {}", cfg.sigma)));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument("need at least two bins".into()));
    }
    let bits = ctx.working_bits();
    let sigma = Float::with_val(bits, Float::parse(format!("{:e}", cfg.sigma)).map_err(|e| Error::InvalidArgument(e.to_string()))?);
    let l = support_length(&sigma, ctx)?.to_f64();
    let ell = 1.1 * l;
    let rho = RhoTilde::new(&sigma, ell, ctx)?;
    let edges: Vec<f64> = (0..=bins).map(|i| -l + 2.0 * l * i as f64 / bins as f64).collect();
    let n = cfg.samples as f64;
    let expected: Vec<f64> = edges.windows(2).map(|w| n * rho.integral(w[0], w[1]).to_f64()).collect();

    let sampler = McSampler::new(cfg)?;
    let width = 2.0 * l / bins as f64;
    let counts = sampler.count(
        |v, c| {
            let i = ((v + l) / width).floor();
            let i = (i.max(0.0) as usize).min(bins - 1);
            c[i] += 1;
        },
        bins,
    );

    let mut statistic = 0.0;
    let mut groups = 0u32;
    let (mut o, mut e) = (0.0, 0.0);
    for (c, x) in counts.iter().zip(&expected) {
        o += *c as f64;
        e += x.max(0.0);
        if e >= 5.0 {
            statistic += (o - e) * (o - e) / e;
            groups += 1;
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        // Fold a short last group into the statistic as its own cell.
        let e = e.max(1e-300);
        statistic += (o - e) * (o - e) / e;
        groups += 1;
    }
    let dof = groups.saturating_sub(1).max(1);
    let chi = ChiSquared::new(f64::from(dof)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let critical = chi.inverse_cdf(0.999);
    Ok(HistogramReport { edges, counts, expected, statistic, dof, critical, pass: statistic <= critical, ell })
}
