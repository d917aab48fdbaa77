//! Exact integer coefficients of the even polynomials `Q_n(x)` whose scaled
//! sum is `-log I(b, 2x)`, with `Q_n(x) = sum_k q[n][k] x^{2k}`.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::numerics::{bessel_j0_zeros, hurwitz_zeta, log2_of, pi, PrecisionContext};

fn binomial(n: u32, k: u32) -> Integer {
    Integer::from(Integer::binomial_u(n, k))
}

fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

/// Triangular table `q[n][k]`, `1 <= k <= n <= nmax`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTable {
    /// `rows[n-1][k-1] = q[n][k]`
    rows: Vec<Vec<Integer>>,
}

impl QTable {
    pub fn build(nmax: usize) -> Result<Self> {
        if nmax == 0 {
            return Err(Error::InvalidArgument("q table needs at least one row".into()));
        }
        let mut t = Self { rows: vec![vec![Integer::from(1)]] };
        t.extend_to(nmax);
        Ok(t)
    }

    pub fn nmax(&self) -> usize {
        self.rows.len()
    }

    /// Zero outside `1 <= k <= n`.
    pub fn q(&self, n: usize, k: usize) -> Integer {
        if n == 0 || k == 0 || k > n || n > self.nmax() {
            return Integer::new();
        }
        self.rows[n - 1][k - 1].clone()
    }

    pub fn row(&self, n: usize) -> Option<&[Integer]> {
        self.rows.get(n.wrapping_sub(1)).map(Vec::as_slice)
    }

    /// Appends rows until `nmax`, using
    /// `q[n+1][k] = sum_j C(n,j) C(n,j+1) sum_r q[j+1][r] q[n-j][k-r]`
    /// and `q[n+1][1] = (n!)^2`.
    pub fn extend_to(&mut self, nmax: usize) {
        while self.rows.len() < nmax {
            let n = self.rows.len();
            let nu = n as u32;
            let mut next = vec![Integer::new(); n + 1];
            next[0] = factorial(nu).square();
            // Terms j and n-1-j carry equal weights and commuting products.
            for j in 0..n.div_ceil(2) {
                let mut weight = binomial(nu, j as u32) * binomial(nu, j as u32 + 1);
                if 2 * j + 1 != n {
                    weight *= 2u32;
                }
                let left = &self.rows[j];
                let right = &self.rows[n - j - 1];
                for k in 2..=n + 1 {
                    let lo = 1.max((k + j).saturating_sub(n));
                    let hi = (j + 1).min(k - 1);
                    if lo > hi {
                        continue;
                    }
                    let mut acc = Integer::new();
                    for r in lo..=hi {
                        acc += Integer::from(&left[r - 1] * &right[k - r - 1]);
                    }
                    next[k - 1] += acc * &weight;
                }
            }
            self.rows.push(next);
        }
    }

    /// `Q_n(x)` at real `x`, absolute error below the context target.
    pub fn eval(&self, n: usize, x: &Float, ctx: &PrecisionContext) -> Result<Float> {
        let row = self
            .row(n)
            .ok_or_else(|| Error::Capacity(format!("q table has {} rows, asked for {n}", self.nmax())))?;
        let x_f = x.to_f64().abs();
        // |Q_n(x)| <= n!(n-1)! max(1,|x|)^{2n}
        let mag = log2_of(&Float::with_val(64, factorial(n as u32) * factorial(n as u32 - 1)))
            + 2.0 * n as f64 * x_f.max(1.0).log2();
        let bits = ctx.bits_for(mag + (n as f64).log2())?;
        let x2 = Float::with_val(bits, x.square_ref());
        let mut acc = Float::new(bits);
        for c in row.iter().rev() {
            acc += c;
            acc *= &x2;
        }
        Ok(acc)
    }

    /// Positivity, the first column `((n-1)!)^2` and row sums `n!(n-1)!`.
    pub fn verify_identities(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let n = i as u32 + 1;
            if let Some(k) = row.iter().position(|c| *c <= 0) {
                return Err(Error::Invariant(format!("q[{n}][{}] is not positive", k + 1)));
            }
            if row[0] != factorial(n - 1).square() {
                return Err(Error::Invariant(format!("q[{n}][1] != ((n-1)!)^2")));
            }
            let sum: Integer = row.iter().sum();
            if sum != factorial(n) * factorial(n - 1) {
                return Err(Error::Invariant(format!("row {n} does not sum to n!(n-1)!")));
            }
        }
        Ok(())
    }

    /// Residuals of the Riccati recurrence
    /// `g_n = -(x^2 + sum_{j<n} g_j g_{n-1-j}) / (n+1)` with
    /// `g_n = -Q_{n+1}(x) / (n! (n+1)!)`, for `n < nmax`, evaluated exactly.
    pub fn riccati_residuals(&self, x: &Rational) -> Vec<Rational> {
        let x2 = Rational::from(x.square_ref());
        let g: Vec<Rational> = (0..self.nmax())
            .map(|n| {
                let q = self.eval_exact(n + 1, &x2);
                let den = factorial(n as u32) * factorial(n as u32 + 1);
                -(q / Rational::from(den))
            })
            .collect();
        (0..g.len())
            .map(|n| {
                let mut conv = x2.clone();
                for j in 0..n {
                    conv += Rational::from(&g[j] * &g[n - 1 - j]);
                }
                let rhs = -(conv / Rational::from(n as u32 + 1));
                Rational::from(&g[n] - &rhs)
            })
            .collect()
    }

    /// `Q_n` at `x^2 = x2` in exact rationals.
    pub fn eval_exact(&self, n: usize, x2: &Rational) -> Rational {
        let mut acc = Rational::new();
        if let Some(row) = self.row(n) {
            for c in row.iter().rev() {
                acc += c;
                acc *= x2;
            }
        }
        acc
    }
}

/// Dense polynomial in `x` with integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPolynomial {
    pub n: usize,
    pub coeffs: Vec<Integer>,
}

impl QPolynomial {
    /// Coefficient of `x^{2k}`.
    pub fn even_coeff(&self, k: usize) -> Integer {
        self.coeffs.get(2 * k).cloned().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0).unwrap_or(0)
    }
}

fn poly_mul(a: &[Integer], b: &[Integer]) -> Vec<Integer> {
    let mut out = vec![Integer::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Integer::from(x * y);
        }
    }
    out
}

/// `Q_1..Q_nmax` from `Q_{n+1} = (n!)^2 x^2 + sum_j C(n,j) C(n,j+1) Q_{j+1} Q_{n-j}`,
/// as full polynomials in `x` (odd coefficients kept, and zero).
pub fn q_polynomials(nmax: usize) -> Vec<QPolynomial> {
    let mut polys: Vec<Vec<Integer>> = Vec::with_capacity(nmax);
    if nmax == 0 {
        return Vec::new();
    }
    polys.push(vec![Integer::new(), Integer::new(), Integer::from(1)]);
    for n in 1..nmax {
        let nu = n as u32;
        let mut next = vec![Integer::new(); 2 * n + 3];
        next[2] = factorial(nu).square();
        for j in 0..n {
            let weight = binomial(nu, j as u32) * binomial(nu, j as u32 + 1);
            for (d, c) in poly_mul(&polys[j], &polys[n - j - 1]).into_iter().enumerate() {
                next[d] += c * &weight;
            }
        }
        polys.push(next);
    }
    polys.into_iter().enumerate().map(|(i, coeffs)| QPolynomial { n: i + 1, coeffs }).collect()
}

/// One row of the diagonal comparison against sums over Bessel zeros.
#[derive(Debug, Clone)]
pub struct DiagonalRow {
    pub n: usize,
    pub exact: Integer,
    /// `2^{2n} n!(n-1)! sum_{k<=K} j_k^{-2n}`
    pub truncated: Float,
    /// Truncated value plus the asymptotic tail over `k > K`.
    pub corrected: Float,
    pub rel_error_truncated: f64,
    pub rel_error_corrected: f64,
    /// Rigorous relative bound on the truncated sum's missing tail.
    pub tail_bound: f64,
}

#[derive(Debug, Clone)]
pub struct DiagonalReport {
    pub zeros: u32,
    pub rows: Vec<DiagonalRow>,
}

impl DiagonalReport {
    pub fn max_rel_error_corrected(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_error_corrected).fold(0.0, f64::max)
    }

    /// True when every truncated sum sits inside its own tail bound.
    pub fn within_tail_bounds(&self) -> bool {
        self.rows.iter().all(|r| r.rel_error_truncated <= r.tail_bound)
    }
}

/// McMahon expansion `j_k / beta_k = 1 + sum_i a_i beta_k^{-2i}`,
/// `beta_k = (k - 1/4) pi`.
const MCMAHON: [(i64, i64); 4] = [(1, 8), (-31, 384), (3779, 15360), (-6277237, 3440640)];

/// Coefficients `e_i` of `(j/beta)^{-2n} = sum_i e_i beta^{-2i}`.
fn mcmahon_power_series(n: usize, bits: u32) -> Vec<Float> {
    let depth = MCMAHON.len();
    let mut f = vec![Float::with_val(bits, 1)];
    for &(p, q) in &MCMAHON {
        f.push(Float::with_val(bits, p) / q);
    }
    let alpha = -2.0 * n as f64;
    // Power of a series with f_0 = 1: g_m = (1/m) sum_i ((alpha+1) i - m) f_i g_{m-i}.
    let mut g = vec![Float::with_val(bits, 1)];
    for m in 1..=depth {
        let mut acc = Float::new(bits);
        for i in 1..=m {
            let w = (alpha + 1.0) * i as f64 - m as f64;
            acc += Float::with_val(bits, &f[i] * &g[m - i]) * w;
        }
        g.push(acc / m as f64);
    }
    g
}

/// Compares `q[n][n]` with `2^{2n} n!(n-1)! sum_k j_k^{-2n}` over the first
/// `zeros` Bessel zeros, for `1 <= n <= nmax_check`.
pub fn check_diagonal_bessel(
    table: &QTable,
    nmax_check: usize,
    zeros: u32,
    ctx: &PrecisionContext,
) -> Result<DiagonalReport> {
    if nmax_check > table.nmax() {
        return Err(Error::Capacity(format!("q table has {} rows, asked for {nmax_check}", table.nmax())));
    }
    let bits = ctx.working_bits();
    let zs = bessel_j0_zeros(zeros, ctx)?;
    let inv_sq: Vec<Float> = zs.iter().map(|z| Float::with_val(bits, z.square_ref()).recip()).collect();
    let pi_b = pi(bits);
    let shift = Float::with_val(bits, zeros) + 0.75f64;
    let mut rows = Vec::with_capacity(nmax_check);
    for n in 1..=nmax_check {
        let nu = n as u32;
        let scale = Float::with_val(bits, factorial(nu) * factorial(nu - 1)) << (2 * nu);
        let mut sum = Float::new(bits);
        for v in &inv_sq {
            sum += Float::with_val(bits, v.pow(nu));
        }
        // sum_{k>K} beta_k^{-s} = pi^{-s} zeta(s, K + 3/4), and j_k > beta_k.
        let series = mcmahon_power_series(n, bits);
        let mut tail = Float::new(bits);
        let mut tail_bound = Float::new(bits);
        for (i, e) in series.iter().enumerate() {
            let s = Float::with_val(bits, 2 * (n + i) as u32);
            let hz = hurwitz_zeta(&s, &shift, &ctx.scaled(-(2.0 * (n + i) as f64) * 8.0))?;
            let term = hz / Float::with_val(bits, (&pi_b).pow(2 * (n + i) as u32));
            if i == 0 {
                tail_bound = term.clone();
            }
            tail += Float::with_val(bits, &term * e);
        }
        let exact = table.q(n, n);
        let exact_f = Float::with_val(bits, &exact);
        let truncated = Float::with_val(bits, &sum * &scale);
        let corrected = Float::with_val(bits, &sum + &tail) * &scale;
        let rel = |v: &Float| (Float::with_val(bits, v - &exact_f) / &exact_f).abs().to_f64();
        let tail_rel = (Float::with_val(bits, &tail_bound * &scale) / &exact_f).to_f64();
        rows.push(DiagonalRow {
            n,
            rel_error_truncated: rel(&truncated),
            rel_error_corrected: rel(&corrected),
            tail_bound: tail_rel,
            exact,
            truncated,
            corrected,
        });
    }
    Ok(DiagonalReport { zeros, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: &QTable, n: usize) -> Vec<i64> {
        t.row(n).unwrap().iter().map(|c| c.to_i64().unwrap()).collect()
    }

    #[test]
    fn first_rows() {
        let t = QTable::build(7).unwrap();
        assert_eq!(row(&t, 1), [1]);
        assert_eq!(row(&t, 2), [1, 1]);
        assert_eq!(row(&t, 3), [4, 4, 4]);
        assert_eq!(row(&t, 4), [36, 33, 42, 33]);
        assert_eq!(t.q(5, 1), 576);
        assert_eq!(t.q(7, 7), 274800);
        assert_eq!(t.row(6).unwrap().iter().sum::<Integer>(), 86400);
        assert_eq!(t.q(3, 0), 0);
        assert_eq!(t.q(3, 4), 0);
    }

    #[test]
    fn extending_matches_fresh_build() {
        let mut t = QTable::build(3).unwrap();
        t.extend_to(12);
        assert_eq!(t, QTable::build(12).unwrap());
    }

    #[test]
    fn polynomial_route_small_cases() {
        let p = q_polynomials(3);
        assert_eq!(p[1].coeffs, [0, 0, 1, 0, 1].map(Integer::from));
        assert_eq!(p[2].coeffs, [0, 0, 4, 0, 4, 0, 4].map(Integer::from));
        assert_eq!(p[2].degree(), 6);
    }

    #[test]
    fn eval_at_small_points() {
        let t = QTable::build(30).unwrap();
        let ctx = PrecisionContext::with_digits(30);
        let x = Float::with_val(128, 1.5);
        let q1 = t.eval(1, &x, &ctx).unwrap();
        assert_eq!(q1, 2.25);
        let one = Float::with_val(64, 1);
        assert_eq!(t.eval(2, &one, &ctx).unwrap(), 2);
        assert!(matches!(t.eval(31, &one, &ctx), Err(Error::Capacity(_))));
    }

    #[test]
    fn riccati_holds_exactly() {
        let t = QTable::build(16).unwrap();
        for x in [1, 2] {
            assert!(t.riccati_residuals(&Rational::from(x)).iter().all(|r| *r == 0));
        }
    }
}
