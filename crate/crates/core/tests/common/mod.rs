//! Brute-force oracles in exact rational arithmetic.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use numvar::Dyadic;

pub fn phase_to_rational(a: u128) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::one() << 128usize)
}

pub fn dyadic_to_rational(s: Dyadic) -> BigRational {
    BigRational::new(BigInt::from(s.numerator()), BigInt::one() << 64usize)
}

pub fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

/// `#{x : (x - y + S/2) mod 1 < S}`, the arc `[y - S/2, y + S/2)`.
pub fn count_arc(points: &[BigRational], s: &BigRational, y: &BigRational) -> usize {
    if *s >= BigRational::one() {
        return points.len();
    }
    let half = s / BigInt::from(2);
    points.iter().filter(|x| frac(&(*x - y + &half)) < *s).count()
}

/// `int_0^1 S_N(S, y)^2 dy - N^2 S^2` over the exact elementary intervals.
pub fn variance_rational(phases: &[u128], s: Dyadic) -> BigRational {
    let points: Vec<BigRational> = phases.iter().map(|&a| phase_to_rational(a)).collect();
    let s = dyadic_to_rational(s);
    let half = &s / BigInt::from(2);
    let mut cuts: Vec<BigRational> = vec![BigRational::zero(), BigRational::one()];
    for x in &points {
        cuts.push(frac(&(x - &half)));
        cuts.push(frac(&(x + &half)));
    }
    cuts.sort();
    cuts.dedup();
    let mut integral = BigRational::zero();
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]) / BigInt::from(2);
        let c = BigInt::from(count_arc(&points, &s, &mid));
        integral += (&w[1] - &w[0]) * BigRational::from_integer(&c * &c);
    }
    let ns = BigRational::from_integer(BigInt::from(points.len())) * &s;
    integral - &ns * &ns
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}
