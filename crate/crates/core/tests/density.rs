use rug::Float;
use zetasign::density::{
    density, density_ak, density_d, density_d_integral, density_dminus, density_significant, m_form, parse_sigma,
    DensityKind, DensityOptions, RhoTilde, SumMethod, SumParams,
};
use zetasign::numerics::PrecisionContext;
use zetasign::primes::support_length;
use zetasign::Error;

fn sig(text: &str) -> Float {
    parse_sigma(text, 256).unwrap()
}

fn parse(text: &str) -> Float {
    Float::with_val(256, Float::parse(text).unwrap())
}

fn rel(a: &Float, b: &Float) -> f64 {
    (Float::with_val(256, a - b) / b).abs().to_f64()
}

fn diff(a: &Float, b: &Float) -> f64 {
    Float::with_val(256, a - b).abs().to_f64()
}

fn total(r: &zetasign::density::DensityResult) -> f64 {
    r.budget.total().to_f64()
}

#[test]
fn reference_values_at_one_and_four_fifths() {
    let ctx = PrecisionContext::with_digits(30);
    let opts = DensityOptions::default();
    for (s, want) in [("1.0", "3.7886623606688718671e-7"), ("0.8", "5.1401888600187247641e-3")] {
        let r = density_significant(&sig(s), DensityKind::D, 20, &ctx, &opts).unwrap();
        assert_eq!(r.method, SumMethod::LimitSum);
        assert!(rel(&r.value, &parse(want)) < 1e-19, "sigma = {s}: {}", r.value.to_string_radix(10, Some(22)));
    }
}

#[test]
fn forced_zeros_above_the_thresholds() {
    let ctx = PrecisionContext::with_digits(35);
    let r = density_d(&sig("1.25"), &ctx).unwrap();
    assert_eq!(r.method, SumMethod::Forced);
    assert!(r.value.is_zero());
    // L(1.1) < 3 pi / 2, so every window past the first is empty.
    let a1 = density_ak(&sig("1.1"), 1, None, &ctx).unwrap();
    assert_eq!(a1.method, SumMethod::Forced);
    let ctx = PrecisionContext::with_digits(25);
    let d = density_d(&sig("1.1"), &ctx).unwrap();
    let dm = density_dminus(&sig("1.1"), &ctx).unwrap();
    assert_eq!(d.value, dm.value);
    let dp = density(&sig("1.25"), DensityKind::DPlus, &ctx, &DensityOptions::default()).unwrap();
    assert_eq!(dp.value, 1);
}

#[test]
fn first_window_is_d() {
    let ctx = PrecisionContext::with_digits(22);
    for s in ["1.0", "1.05"] {
        let d = density_d(&sig(s), &ctx).unwrap();
        let a0 = density_ak(&sig(s), 0, None, &ctx).unwrap();
        assert!(diff(&d.value, &a0.value) <= total(&d) + total(&a0));
    }
}

#[test]
fn alternating_windows_reassemble_the_gap() {
    // d - d_- at 0.6 from its own summation and from separate a_k.
    let ctx = PrecisionContext::with_digits(16);
    let s = sig("0.6");
    let gap = density(&s, DensityKind::Gap, &ctx, &DensityOptions::default()).unwrap();
    let mut acc = Float::new(256);
    let mut err = total(&gap);
    for k in 1..=4u32 {
        let a = density_ak(&s, k, None, &ctx).unwrap();
        assert!(a.value > -total(&a), "a_{k} = {}", a.value.to_f64());
        if k % 2 == 1 {
            acc += &a.value;
        } else {
            acc -= &a.value;
        }
        err += total(&a);
    }
    let a1 = density_ak(&s, 1, None, &ctx).unwrap();
    assert!(a1.value > 1e-11);
    assert!(diff(&acc, &gap.value) <= err, "{} vs {}", acc.to_f64(), gap.value.to_f64());
    assert!(rel(&gap.value, &parse("8.073328981e-11")) < 1e-9);
}

#[test]
fn decreasing_in_sigma_and_ordered() {
    let ctx = PrecisionContext::with_digits(15);
    let opts = DensityOptions::default();
    let mut prev: Option<Float> = None;
    for s in ["0.6", "0.7", "0.8", "0.9", "1.0", "1.1"] {
        let d = density(&sig(s), DensityKind::D, &ctx, &opts).unwrap();
        let dm = density(&sig(s), DensityKind::DMinus, &ctx, &opts).unwrap();
        let dp = density(&sig(s), DensityKind::DPlus, &ctx, &opts).unwrap();
        let slack = total(&d) + total(&dm);
        assert!(dm.value > -slack && Float::with_val(256, &dm.value - &d.value) <= slack && d.value <= 1.0 + slack, "sigma = {s}");
        let one = Float::with_val(256, &dp.value + &dm.value);
        assert!((one.to_f64() - 1.0).abs() <= total(&dp) + total(&dm) + 1e-30);
        if let Some(p) = &prev {
            assert!(d.value < *p, "sigma = {s}");
        }
        prev = Some(d.value);
    }
}

#[test]
fn grid_parameter_does_not_matter_past_the_support() {
    let ctx = PrecisionContext::with_digits(25);
    for s in ["1.5", "1.05"] {
        let a = m_form(&sig(s), &SumParams::new(4.0).unwrap(), 0, &ctx).unwrap();
        let b = m_form(&sig(s), &SumParams::new(6.0).unwrap(), 0, &ctx).unwrap();
        let slack = a[0].1.total().to_f64() + b[0].1.total().to_f64();
        assert!(diff(&a[0].0, &b[0].0) <= slack, "sigma = {s}");
    }
    // And d(1.5) really is zero numerically.
    let a = m_form(&sig("1.5"), &SumParams::new(4.0).unwrap(), 0, &ctx).unwrap();
    assert!(a[0].0.to_f64().abs() <= a[0].1.total().to_f64());
}

#[test]
fn grid_parameter_too_small_is_rejected() {
    let ctx = PrecisionContext::with_digits(15);
    let opts = DensityOptions { m: Some(2.5), ..DensityOptions::default() };
    let err = density(&sig("1.05"), DensityKind::D, &ctx, &opts).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
    assert!(matches!(density_d(&sig("0.5"), &ctx), Err(Error::Domain(_))));
}

#[test]
fn limit_sum_cap_reports_history() {
    let ctx = PrecisionContext::with_digits(20);
    let opts = DensityOptions { max_m: 8.0, ..DensityOptions::default() };
    match density(&sig("0.6"), DensityKind::D, &ctx, &opts) {
        Err(Error::Convergence(msg)) => assert!(msg.contains("m=4") && msg.contains("m=8"), "{msg}"),
        other => panic!("expected a convergence error, got {other:?}"),
    }
}

#[test]
fn integral_form_agrees_with_sum() {
    let ctx = PrecisionContext::with_digits(15);
    for s in ["1.0", "1.05"] {
        let a = density_d(&sig(s), &ctx).unwrap();
        let b = density_d_integral(&sig(s), &ctx).unwrap();
        assert_eq!(b.method, SumMethod::Integral);
        assert!(diff(&a.value, &b.value) <= total(&a) + total(&b), "sigma = {s}: {} vs {}", a.value.to_f64(), b.value.to_f64());
    }
}

#[test]
fn periodized_density_mass_symmetry_and_window() {
    let ctx = PrecisionContext::with_digits(15);
    let s = sig("1.5");
    let l = support_length(&s, &ctx).unwrap().to_f64();
    let rho = RhoTilde::new(&s, 2.0 * l, &ctx).unwrap();
    assert!(rho.is_exact());
    let mass = rho.integral(-2.0 * l, 2.0 * l).to_f64();
    assert!((mass - 1.0).abs() <= 2.0 * rho.budget() + 1e-14);
    for x in [0.1, 0.4, 0.7, 1.3] {
        let d = Float::with_val(256, rho.value(x) - rho.value(-x)).abs().to_f64();
        assert!(d <= 1e-14, "x = {x}");
        assert!(rho.value(x).to_f64() >= -rho.budget());
    }
    // Past L the density vanishes.
    assert!(rho.value(1.5 * l).to_f64().abs() <= rho.budget() + 1e-14);

    let s = sig("1.05");
    let l = support_length(&s, &ctx).unwrap().to_f64();
    let rho = RhoTilde::new(&s, 1.1 * l, &ctx).unwrap();
    let half = std::f64::consts::FRAC_PI_2;
    let outside = Float::with_val(256, 1.0) - rho.integral(-half, half);
    let d = density_d(&s, &ctx).unwrap();
    assert!(diff(&outside, &d.value) <= 2.0 * rho.budget() + total(&d));
}

#[test]
fn cancellation_raises_working_precision() {
    // d(1.1) ~ 6e-22 from O(1) terms: 15 digits need psi far past 36 digits.
    let ctx = PrecisionContext::with_digits(20);
    let r = density_significant(&sig("1.1"), DensityKind::D, 15, &ctx, &DensityOptions::default()).unwrap();
    assert!(f64::from(r.psi_bits) / std::f64::consts::LOG2_10 > 36.0);
    assert!(rel(&r.value, &parse("6.3088749952505014038e-22")) < 1e-15);
}
