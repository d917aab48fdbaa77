#![allow(dead_code)]

use rug::ops::Pow;
use rug::Float;
use zetasign::primes::PrimeTable;

pub const ORACLE_BITS: u32 = 192;

/// Plain hypergeometric sum for `I(b, x)`, no precision planning; fine for
/// `|x| <= 2b` where the terms never grow.
pub fn i_plain(b2: &Float, x: f64) -> Float {
    let bits = ORACLE_BITS;
    let y2 = Float::with_val(bits, x * x / 4.0);
    let mut term = Float::with_val(bits, 1);
    let mut sum = Float::with_val(bits, 1);
    let mut n = 0u32;
    loop {
        term *= Float::with_val(bits, Float::with_val(bits, n * n) - &y2);
        term /= b2;
        term /= (n + 1) * (n + 1);
        sum += &term;
        n += 1;
        if f64::from(n) > x && term.clone().abs() < Float::with_val(bits, 1e-55) {
            return sum;
        }
    }
}

/// `prod_{p <= limit} I(p^sigma, x)` and an upper bound `T` on
/// `-log prod_{p > limit} I(p^sigma, x)`, from `sum_{p>N} p^{-s} <=
/// 1.1 N^{1-s} / ((s-1) log N)` and the geometric growth of later terms.
pub fn brute_force_psi(primes: &PrimeTable, sigma: f64, x: f64) -> (Float, f64) {
    let bits = ORACLE_BITS;
    let s2 = Float::with_val(bits, 2.0 * sigma);
    let mut prod = Float::with_val(bits, 1);
    for &p in primes.primes() {
        let b2 = Float::with_val(bits, Float::with_val(bits, p).pow(&s2));
        prod *= i_plain(&b2, x);
    }
    let n = primes.limit() as f64;
    let s = 2.0 * sigma;
    let tail = 1.1 * n.powf(1.0 - s) / ((s - 1.0) * n.ln());
    let y = x / 2.0;
    let m = y.max(1.0);
    let r = m * m / n.powf(s);
    (prod, y * y * tail / (1.0 - r))
}

/// Exponential integral `E1(z)` for `z >= 10` from its asymptotic series.
pub fn e1(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..30 {
        sum += term;
        let next = -term * f64::from(k) / z;
        if next.abs() > term.abs() {
            break;
        }
        term = next;
    }
    (-z).exp() / z * sum
}
