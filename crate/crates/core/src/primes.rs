//! Primes, the prime zeta function and the support length of the limiting
//! distribution.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{find_root, log2_of, pi, zeta_minus_one, PrecisionContext, AUX_BITS};

/// Largest sieve accepted; roughly 25 million primes.
pub const MAX_SIEVE_LIMIT: u64 = 500_000_000;

/// All primes up to `limit`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn sieve(limit: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::InvalidArgument(format!("sieve limit must be at least 2, got {limit}")));
        }
        if limit > MAX_SIEVE_LIMIT {
            return Err(Error::Capacity(format!(
                "sieve limit {limit} exceeds the supported maximum {MAX_SIEVE_LIMIT}"
            )));
        }
        let sieve = primal::Sieve::new(limit as usize);
        let primes = sieve.primes_from(0).take_while(|&p| p as u64 <= limit).map(|p| p as u64).collect();
        Ok(Self { limit, primes })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Number of primes `<= x`.
    pub fn count_up_to(&self, x: u64) -> Result<usize> {
        if x > self.limit {
            return Err(Error::Capacity(format!("prime table ends at {}, asked for {x}", self.limit)));
        }
        Ok(self.primes.partition_point(|&p| p <= x))
    }

    /// Primes `<= p0`.
    pub fn up_to(&self, p0: u64) -> Result<&[u64]> {
        Ok(&self.primes[..self.count_up_to(p0)?])
    }
}

/// Möbius function by trial division.
pub fn mobius(mut r: u64) -> i8 {
    if r == 0 {
        return 0;
    }
    let mut sign = 1i8;
    let mut d = 2u64;
    while d * d <= r {
        if r % d == 0 {
            r /= d;
            if r % d == 0 {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if r > 1 {
        sign = -sign;
    }
    sign
}

/// Upper bound on `log zeta(t)` for `t >= 2`: `zeta(t) - 1 <= 2^-t (1 + 2/(t-1))`.
fn log_zeta_bound_log2(t: f64) -> f64 {
    -t + (1.0 + 2.0 / (t - 1.0)).log2()
}

/// Prime zeta `P(s) = sum_p p^-s` for real `s > 1`, from
/// `P(s) = sum_r mu(r)/r log zeta(rs)`.
pub fn prime_zeta(s: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if !(s.is_finite() && *s > 1) {
        return Err(Error::Domain(format!("prime zeta needs s > 1, got {}", s.to_f64())));
    }
    let s_f = s.to_f64();
    let target_log2 = ctx.target_log2();
    // Find the cut R: terms r >= R with rs >= 2 sum to at most
    // 2 * bound(Rs) (ratio <= 1/2), kept below a quarter of the target.
    let mut r_max = 1u64;
    loop {
        let t = (r_max as f64) * s_f;
        if t >= 2.0 && log_zeta_bound_log2(t) + 1.0 - (r_max as f64).log2() < target_log2 - 2.0 {
            break;
        }
        r_max += 1;
    }
    let terms = r_max as f64;
    let term_ctx = ctx.scaled(-(terms.log2() + 2.0));
    // log zeta(s) can be as large as log(1/(s-1)).
    let bits = term_ctx.bits_for(8.0)?;
    let s_hi = Float::with_val(s.prec().max(bits), s);
    let mut sum = Float::new(bits);
    for r in 1..r_max {
        let mu = mobius(r);
        if mu == 0 {
            continue;
        }
        let rs = Float::with_val(s_hi.prec(), &s_hi * r);
        let zm1 = zeta_minus_one(&rs, &term_ctx.scaled(-2.0))?;
        let log_z = Float::with_val(bits, zm1.ln_1p_ref()) / r;
        if mu > 0 {
            sum += log_z;
        } else {
            sum -= log_z;
        }
    }
    Ok(sum)
}

/// `sum_{p <= p0} p^-s` over the table.
pub fn partial_prime_sum(s: &Float, p0: u64, table: &PrimeTable, ctx: &PrecisionContext) -> Result<Float> {
    let primes = table.up_to(p0)?;
    let bits = ctx.bits_for(0.0)?.max(s.prec());
    let neg_s = Float::with_val(bits, -s);
    let mut sum = Float::new(bits);
    for &p in primes {
        sum += Float::with_val(bits, Float::with_val(bits, p).pow(&neg_s));
    }
    Ok(sum)
}

/// `P(2 n sigma)` for `1 <= n <= nmax` together with prime tails
/// `sum_{p > p0} p^{-2 n sigma}` for every `p0` up to the table limit.
///
/// Tails are accumulated backwards from the table end, so no tail is ever
/// formed by cancelling a partial sum against `P`.
#[derive(Debug, Clone)]
pub struct PrimeZetaCache {
    sigma: Float,
    limit: u64,
    primes: Vec<u64>,
    prime_zeta: Vec<Float>,
    /// `tails[n-1][i] = sum over primes with index >= i`.
    tails: Vec<Vec<Float>>,
}

impl PrimeZetaCache {
    /// `targets[n-1]` is the absolute accuracy wanted for the n-th row.
    pub fn build(sigma: &Float, table: &PrimeTable, targets: &[Float], ctx: &PrecisionContext) -> Result<Self> {
        if !(*sigma > 0.5) {
            return Err(Error::Domain(format!("sigma must exceed 1/2, got {}", sigma.to_f64())));
        }
        let primes = table.primes().to_vec();
        let mut prime_zeta_rows = Vec::with_capacity(targets.len());
        let mut tails = Vec::with_capacity(targets.len());
        let sigma_f = sigma.to_f64();
        for (idx, target) in targets.iter().enumerate() {
            let n = idx as u32 + 1;
            let row_ctx = ctx.with_target(target)?;
            // 2n sigma exactly; rounding it would shift every tail off sigma.
            let s = Float::with_val(sigma.prec() + 32, sigma * (2 * n));
            let pz = prime_zeta(&s, &row_ctx.scaled(-1.0))?;
            // P(s) < 2^{1-s} once s is well above 1; near 1 it grows like -log(s-1).
            let mag = (1.0 - 2.0 * f64::from(n) * sigma_f).max(log2_of(&pz));
            let bits = row_ctx.bits_for(mag)?.max(AUX_BITS) + 8;
            let neg_s = Float::with_val(bits.max(sigma.prec()), -&s);
            let mut head = Float::new(bits);
            let powers: Vec<Float> = primes
                .iter()
                .map(|&p| Float::with_val(bits, Float::with_val(bits, p).pow(&neg_s)))
                .collect();
            for v in &powers {
                head += v;
            }
            let mut row = vec![Float::new(bits); primes.len() + 1];
            row[primes.len()] = Float::with_val(bits, &pz - &head);
            for i in (0..primes.len()).rev() {
                row[i] = Float::with_val(bits, &row[i + 1] + &powers[i]);
            }
            if row[primes.len()].is_sign_negative() && log2_of(&row[primes.len()]) > log2_of(target) {
                return Err(Error::Invariant(format!(
                    "prime tail for n = {n} came out negative beyond its error target"
                )));
            }
            prime_zeta_rows.push(pz);
            tails.push(row);
        }
        Ok(Self { sigma: sigma.clone(), limit: table.limit(), primes, prime_zeta: prime_zeta_rows, tails })
    }

    pub fn sigma(&self) -> &Float {
        &self.sigma
    }

    pub fn nmax(&self) -> usize {
        self.prime_zeta.len()
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// `P(2 n sigma)`.
    pub fn prime_zeta(&self, n: usize) -> &Float {
        &self.prime_zeta[n - 1]
    }

    /// `P(2 n sigma) - sum_{p <= p0} p^{-2 n sigma}`.
    pub fn tail(&self, n: usize, p0: u64) -> Result<&Float> {
        if n == 0 || n > self.nmax() {
            return Err(Error::Capacity(format!("prime zeta cache holds n <= {}, asked for {n}", self.nmax())));
        }
        if p0 > self.limit {
            return Err(Error::Capacity(format!("prime zeta cache ends at {}, asked for {p0}", self.limit)));
        }
        let i = self.primes.partition_point(|&p| p <= p0);
        Ok(&self.tails[n - 1][i])
    }

    /// `sum_{p <= p0} p^{-2 n sigma}`.
    pub fn partial(&self, n: usize, p0: u64) -> Result<Float> {
        let t = self.tail(n, p0)?;
        Ok(Float::with_val(t.prec(), self.prime_zeta(n) - t))
    }
}

/// `L(sigma) = sum_p arcsin(p^-sigma)` for `sigma > 1`, summed as
/// `sum_k c_k P((2k+1) sigma)` with `c_k` the arcsine Taylor coefficients.
pub fn support_length(sigma: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if !(sigma.is_finite() && *sigma > 1) {
        return Err(Error::Domain(format!(
            "support length is finite only for sigma > 1, got {}",
            sigma.to_f64()
        )));
    }
    let sigma_f = sigma.to_f64();
    let target_log2 = ctx.target_log2();
    // c_k P((2k+1) sigma) <= 3 * 2^{-(2k+1) sigma}; ratio of successive
    // bounds is below 1/4, so the tail after K is under 4/3 of term K.
    let mut k_max = 1u32;
    while (3.0f64).log2() - f64::from(2 * k_max + 1) * sigma_f + 1.0 > target_log2 - 3.0 {
        k_max += 1;
    }
    let term_ctx = ctx.scaled(-(f64::from(k_max + 1).log2() + 2.0));
    let bits = term_ctx.bits_for(8.0)?;
    let mut coeff = Float::with_val(bits, 1);
    let mut sum = Float::new(bits);
    for k in 0..k_max {
        if k > 0 {
            let num = (2 * k - 1) * (2 * k - 1);
            coeff *= num;
            coeff /= (2 * k) * (2 * k + 1);
        }
        let s = Float::with_val((sigma.prec() + 32).max(bits), sigma * (2 * k + 1));
        let p = prime_zeta(&s, &term_ctx)?;
        sum += Float::with_val(bits, &p * &coeff);
    }
    Ok(sum)
}

fn solve_support(level: u32, lo: f64, hi: f64, ctx: &PrecisionContext) -> Result<Float> {
    let bits = ctx.working_bits();
    let target = Float::with_val(bits, pi(bits) * level) / 2u32;
    let inner = ctx.scaled(-4.0);
    find_root(
        |s| {
            let l = support_length(s, &inner)?;
            Ok(Float::with_val(bits, &l - &target))
        },
        &Float::with_val(bits, lo),
        &Float::with_val(bits, hi),
        ctx,
    )
}

/// Root of `L(sigma) = pi/2`.
pub fn sigma0(ctx: &PrecisionContext) -> Result<Float> {
    solve_support(1, 1.1, 1.5, ctx)
}

/// Root of `L(sigma) = 3 pi/2`. `L` diverges at 1, so the bracket starts
/// just above it.
pub fn sigma1(ctx: &PrecisionContext) -> Result<Float> {
    solve_support(3, 1.001, 1.1, ctx)
}
