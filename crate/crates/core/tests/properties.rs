//! Invariants checked on random inputs.

use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use zetasign::charfun::PsiEvaluator;
use zetasign::cli::{format_value, reparse_value};
use zetasign::density::parse_sigma;
use zetasign::ifunc::{i_rational, i_series};
use zetasign::mcverify::{McConfig, McSampler};
use zetasign::numerics::PrecisionContext;
use zetasign::qpoly::QTable;

fn fl(v: f64) -> Float {
    Float::with_val(192, v)
}

fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn i_is_even_bounded_and_one_at_zero(e in 0.51f64..4.0, x in 0.0f64..12.0) {
        let ctx = PrecisionContext::with_digits(20);
        let b = Float::with_val(192, fl(e).exp2());
        let p = i_series(&b, &fl(x), &ctx).unwrap();
        let m = i_series(&b, &fl(-x), &ctx).unwrap();
        prop_assert_eq!(&p, &m);
        prop_assert!(p.to_f64().abs() <= 1.0 + 1e-20);
        prop_assert_eq!(i_series(&b, &fl(0.0), &ctx).unwrap().to_f64(), 1.0);
    }

    #[test]
    fn exact_i_matches_the_series(num in 2u32..60, den in 1u32..20, m in 0i64..12) {
        prop_assume!(num > den);
        let b2 = Rational::from((num, den));
        let exact = i_rational(&b2, 2 * m).unwrap();
        let ctx = PrecisionContext::with_digits(30);
        let b = Float::with_val(192, Float::with_val(192, &b2).sqrt());
        let s = i_series(&b, &fl(2.0 * m as f64), &ctx).unwrap();
        let d = Float::with_val(192, &s - Float::with_val(192, &exact)).abs().to_f64();
        prop_assert!(d < 1e-28, "b^2 = {b2}, x = {}: {d:e}", 2 * m);
    }

    #[test]
    fn psi_is_even_and_bounded(sigma in 0.55f64..2.0, x in 0.0f64..6.0) {
        let ev = PsiEvaluator::new(&fl(sigma), 6.0, &PrecisionContext::with_digits(15)).unwrap();
        let a = ev.psi(&fl(x)).unwrap();
        let b = ev.psi(&fl(-x)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.to_f64().abs() <= 1.0 + 1e-15);
    }

    #[test]
    fn q_rows_sum_to_factorial_products(n in 1usize..70) {
        let t = QTable::build(n).unwrap();
        let sum: Integer = t.row(n).unwrap().iter().sum();
        let n32 = n as u32;
        prop_assert_eq!(sum, factorial(n32) * factorial(n32 - 1));
        prop_assert_eq!(t.q(n, 1), factorial(n32 - 1) * factorial(n32 - 1));
        prop_assert!(t.row(n).unwrap().iter().all(|c| *c > 0));
    }

    #[test]
    fn riccati_recurrence_holds(p in -7i32..8, q in 1i32..6) {
        let t = QTable::build(14).unwrap();
        let x = Rational::from((p, q));
        prop_assert!(t.riccati_residuals(&x).iter().all(|r| *r == 0));
    }

    #[test]
    fn printed_values_reparse_to_themselves(m in 1.0f64..10.0, e in -300i32..300, digits in 1u32..30) {
        let v = Float::with_val(256, Float::with_val(256, 10).pow(e)) * m;
        let s = format_value(&v, digits);
        let back = reparse_value(&s, 256).unwrap();
        prop_assert_eq!(format_value(&back, digits), s);
    }

    #[test]
    fn sigma_text_sums_parts(a in 0.5f64..2.0, k in 1i32..15) {
        let text = format!("{a}+1e-{k}");
        let s = parse_sigma(&text, 256).unwrap();
        let want = Float::with_val(256, Float::parse(format!("{a}")).unwrap())
            + Float::with_val(256, Float::parse(format!("1e-{k}")).unwrap());
        prop_assert_eq!(s, Float::with_val(256, want));
    }

    #[test]
    fn draws_stay_within_the_support(sigma in 1.05f64..2.5, seed in any::<u64>(), sample in any::<u64>()) {
        let s = McSampler::new(&McConfig::new(sigma, 1, 2000, seed).unwrap()).unwrap();
        let v = s.draw(sample);
        prop_assert!(v.abs() <= s.max_abs() * (1.0 + 1e-12));
        prop_assert_eq!(v, s.draw(sample));
    }
}
