use rug::{Integer, Rational};

/// Tangent numbers `T_1..=T_n` (1, 2, 16, 272, ...) by an in-place
/// integer-only recurrence.
pub fn tangent_numbers(n: usize) -> Vec<Integer> {
    if n == 0 {
        return Vec::new();
    }
    let mut t = vec![Integer::new(); n + 1];
    t[1] = Integer::from(1);
    for k in 2..=n {
        t[k] = Integer::from(&t[k - 1] * (k as u64 - 1));
    }
    for k in 2..=n {
        for j in k..=n {
            let prev = Integer::from(&t[j - 1] * (j - k) as u64);
            t[j] *= (j - k + 2) as u64;
            t[j] += prev;
        }
    }
    t.remove(0);
    t
}

/// `B_2, B_4, ..., B_{2n}` as exact rationals.
pub fn bernoulli_even(n: usize) -> Vec<Rational> {
    tangent_numbers(n)
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let k = i as u32 + 1;
            let four_k = Integer::from(1) << (2 * k);
            let den = Integer::from(&four_k - 1u32) * &four_k;
            let num = t * (2 * k);
            let r = Rational::from((num, den));
            if k % 2 == 0 {
                -r
            } else {
                r
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_tangent_numbers() {
        let t: Vec<u64> = tangent_numbers(6).iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(t, vec![1, 2, 16, 272, 7936, 353792]);
    }

    #[test]
    fn first_bernoulli_numbers() {
        let b = bernoulli_even(6);
        let expect = [(1, 6), (-1, 30), (1, 42), (-1, 30), (5, 66), (-691, 2730)];
        for (got, (n, d)) in b.iter().zip(expect) {
            assert_eq!(*got, Rational::from((n, d)));
        }
    }
}
