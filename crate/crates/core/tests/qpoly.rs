use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use zetasign::numerics::PrecisionContext;
use zetasign::qpoly::{check_diagonal_bessel, q_polynomials, QTable};

#[test]
fn identities_hold_to_fifty() {
    let t = QTable::build(50).unwrap();
    t.verify_identities().unwrap();
}

#[test]
fn two_recurrences_agree_to_forty() {
    let t = QTable::build(40).unwrap();
    for p in q_polynomials(40) {
        assert_eq!(p.degree(), 2 * p.n);
        assert_eq!(p.coeffs[0], 0);
        for (d, c) in p.coeffs.iter().enumerate() {
            if d % 2 == 1 {
                assert_eq!(*c, 0);
            } else {
                assert_eq!(*c, t.q(p.n, d / 2), "n = {}, k = {}", p.n, d / 2);
            }
        }
    }
}

#[test]
fn diagonal_sequence() {
    let t = QTable::build(7).unwrap();
    let diag: Vec<Integer> = (1..=7).map(|n| t.q(n, n)).collect();
    assert_eq!(diag, [1, 1, 4, 33, 456, 9460, 274800].map(Integer::from));
}

#[test]
fn values_at_one_are_row_sums() {
    let t = QTable::build(30).unwrap();
    let ctx = PrecisionContext::with_digits(20);
    let one = Float::with_val(64, 1);
    for n in 1..=30u32 {
        let want = Integer::from(Integer::factorial(n)) * Integer::from(Integer::factorial(n - 1));
        let got = t.eval(n as usize, &one, &ctx).unwrap();
        let rel = (Float::with_val(256, &got - &want) / Float::with_val(256, &want)).abs().to_f64();
        assert!(rel < 1e-20, "n = {n}");
    }
}

#[test]
fn growth_bound() {
    let t = QTable::build(30).unwrap();
    for x in ["1/10", "1/2", "1", "2", "10"] {
        let x: Rational = x.parse().unwrap();
        let x2 = Rational::from(x.square_ref());
        let m2 = if x2 > 1 { x2.clone() } else { Rational::from(1) };
        for n in 1..=30usize {
            let q = t.eval_exact(n, &x2);
            let f = Integer::from(Integer::factorial(n as u32)) * Integer::from(Integer::factorial(n as u32 - 1));
            let bound = Rational::from(f) * Rational::from((&m2).pow(n as i32));
            assert!(q <= bound, "x = {x}, n = {n}");
        }
    }
}

#[test]
fn riccati_recurrence_to_fifteen() {
    let t = QTable::build(16).unwrap();
    for x in [1, 2] {
        let r = t.riccati_residuals(&Rational::from(x));
        assert_eq!(r.len(), 16);
        assert!(r.iter().all(|v| *v == 0));
    }
}

#[test]
fn diagonal_from_bessel_zeros() {
    let t = QTable::build(10).unwrap();
    let ctx = PrecisionContext::with_digits(40);
    let report = check_diagonal_bessel(&t, 10, 40, &ctx).unwrap();
    assert!(report.within_tail_bounds());
    for r in &report.rows {
        assert!(r.rel_error_corrected < 1e-20, "n = {}: {:e}", r.n, r.rel_error_corrected);
    }
    // Exact for n = 1 (sum of j^-2 is 1/4) up to the tail.
    assert!(report.rows[0].rel_error_corrected < 1e-20);
}
