use rug::ops::Pow;
use rug::Float;
use zetasign::ifunc::i_series;
use zetasign::numerics::{
    bessel_j0, bessel_j0_zero, integrate, integrate_singular, pi, zeta_real, PrecisionContext,
};
use zetasign::primes::prime_zeta;

fn abs_diff(a: &Float, b: &Float) -> f64 {
    Float::with_val(512, a - b).abs().to_f64()
}

#[test]
fn zeta_at_six_fifths_against_dirichlet_sum() {
    // sum_{n<N} n^-s plus the tail int_N^inf + f(N)/2 - f'(N)/12, whose
    // remainder is below f'''(N)/720 ~ 1e-26 at N = 10^6.
    let bits = 256;
    let s = Float::with_val(bits, 1.2);
    let big_n = 1_000_000u32;
    let neg = Float::with_val(bits, -&s);
    let mut sum = Float::new(bits);
    for n in 1..big_n {
        sum += Float::with_val(bits, Float::with_val(bits, n).pow(&neg));
    }
    let nf = Float::with_val(bits, big_n);
    let f_n = Float::with_val(bits, (&nf).pow(&neg));
    sum += Float::with_val(bits, &f_n * &nf) / Float::with_val(bits, &s - 1u32);
    sum += Float::with_val(bits, &f_n / 2u32);
    sum += Float::with_val(bits, &f_n * &s) / &nf / 12u32;
    let ctx = PrecisionContext::with_digits(50);
    let z = zeta_real(&s, &ctx).unwrap();
    assert!(abs_diff(&z, &sum) < 1e-24);
    // Full 50 digits against MPFR.
    let want = Float::with_val(bits, s.zeta_ref());
    assert!(abs_diff(&z, &want) < 1e-50);
}

#[test]
fn j0_basics() {
    let ctx = PrecisionContext::with_digits(30);
    let bits = ctx.working_bits();
    assert_eq!(bessel_j0(&Float::new(bits), &ctx).unwrap(), 1);
    let z1 = bessel_j0_zero(1, &ctx).unwrap();
    assert!(bessel_j0(&z1, &ctx).unwrap().abs().to_f64() < 1e-20);
    let z2 = bessel_j0_zero(2, &ctx).unwrap().to_f64();
    assert!((z2 - 5.5200781103).abs() < 1e-9);
    for k in 1..=20 {
        let a = bessel_j0_zero(k, &ctx).unwrap();
        let b = bessel_j0_zero(k + 1, &ctx).unwrap();
        assert!(Float::with_val(bits, &b - &a) > 3);
    }
    // (1/pi) int_0^pi cos(sin t) dt
    let p = pi(bits);
    let (v, _) = integrate(
        |t| Ok(Float::with_val(bits, t.sin_ref()).cos()),
        &Float::new(bits),
        &p,
        &ctx.scaled(-4.0),
    )
    .unwrap();
    let j1 = bessel_j0(&Float::with_val(bits, 1), &ctx).unwrap();
    assert!(abs_diff(&(v / &p), &j1) < 1e-30);
}

#[test]
fn quadrature_normalizations() {
    let ctx = PrecisionContext::with_digits(30);
    let bits = ctx.working_bits();
    let (v, _) = integrate_singular(
        |_, da, db| {
            // 1 - t^2 = (1 - t)(1 + t) with 1 - t = db and 1 + t = 2 - db.
            let far = Float::with_val(bits, 2u32 - Float::with_val(bits, db));
            let _ = da;
            Ok(Float::with_val(bits, db * &far).sqrt().recip())
        },
        &Float::new(bits),
        &Float::with_val(bits, 1),
        &ctx,
    )
    .unwrap();
    let half_pi = pi(bits) / 2u32;
    assert!(abs_diff(&v, &half_pi) < 1e-30);
    let (one, _) = integrate(|_| Ok(Float::with_val(bits, 1)), &Float::new(bits), &half_pi, &ctx).unwrap();
    assert!(abs_diff(&(one / &half_pi), &Float::with_val(bits, 1)) < 1e-30);
}

#[test]
fn error_control_is_self_consistent() {
    // Results at target eps and eps/100 differ by less than eps.
    let eps = 1e-20;
    let coarse = PrecisionContext::with_digits(20);
    let fine = coarse.scaled(-(100f64).log2());
    let s = Float::with_val(128, 2.7);
    let pairs = [
        (zeta_real(&s, &coarse).unwrap(), zeta_real(&s, &fine).unwrap()),
        (prime_zeta(&s, &coarse).unwrap(), prime_zeta(&s, &fine).unwrap()),
        (
            bessel_j0(&Float::with_val(128, 13.5), &coarse).unwrap(),
            bessel_j0(&Float::with_val(128, 13.5), &fine).unwrap(),
        ),
        (
            i_series(&Float::with_val(128, 1.7), &Float::with_val(128, 23.0), &coarse).unwrap(),
            i_series(&Float::with_val(128, 1.7), &Float::with_val(128, 23.0), &fine).unwrap(),
        ),
    ];
    for (i, (a, b)) in pairs.iter().enumerate() {
        assert!(abs_diff(a, b) < eps, "pair {i}");
    }
}
