mod common;

use ethnum::U256;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use numvar::baselines::rng_stream;
use numvar::dyadic::{decompose, y_statistic, PlateauKernel, MAX_LEVEL};
use numvar::{continued_fraction_convergents, dilate_mod1, verify_decomposition, Alpha, Dyadic};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rational_dilation_is_exact(p in 0u128..1000, q in 1u128..1000, x in -1_000_000i64..1_000_000) {
        let alpha = Alpha::from_ratio(p, q).unwrap();
        let got = dilate_mod1(&[x], alpha).unwrap().as_slice()[0];
        // exact value of (p x mod q) / q in units of 2^-128
        let r = (p as i128 * x as i128).rem_euclid(q as i128) as u128;
        let exact = BigRational::new(BigInt::from(r) << 128usize, BigInt::from(q));
        let diff = (BigRational::from_integer(BigInt::from(got)) - exact).abs();
        // A = floor(p 2^128 / q) is off by < 1 unit, scaled by |x|, plus wraparound at 0
        let near = diff <= BigRational::from_integer(BigInt::from(x.unsigned_abs() + 1));
        let wrapped = (BigRational::from_integer(BigInt::from(1) << 128usize) - &diff)
            <= BigRational::from_integer(BigInt::from(x.unsigned_abs() + 1));
        prop_assert!(near || wrapped);
    }

    #[test]
    fn convergents_satisfy_dirichlet(a in any::<u128>()) {
        let conv = continued_fraction_convergents(Alpha(a), 40);
        let one = U256::ONE << 128u32;
        let mut last_q = 0;
        for &(p, q) in &conv.pairs {
            prop_assert!(q > last_q);
            last_q = q;
            let qa = U256::from(q) * U256::from(a);
            let pp = U256::from(p) * one;
            let dist = if qa > pp { qa - pp } else { pp - qa };
            // q |q alpha - p| < 1
            prop_assert!(U256::from(q) * dist < one);
        }
    }

    #[test]
    fn dilation_ignores_term_order(mut terms in prop::collection::vec(any::<i64>(), 1..50), a in any::<u128>(), seed in any::<u64>()) {
        let before = dilate_mod1(&terms, Alpha(a)).unwrap();
        let mut rng = rng_stream(seed, "shuffle", 0);
        for i in (1..terms.len()).rev() {
            terms.swap(i, rng.random_range(0..=i));
        }
        let after = dilate_mod1(&terms, Alpha(a)).unwrap();
        prop_assert!(after.as_slice().windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(before, after);
    }

    #[test]
    fn expansion_invariants(k in 0u128..=(1u128 << 64)) {
        let s = Dyadic::new(k).unwrap();
        let e = decompose(s, MAX_LEVEL).unwrap();
        prop_assert_eq!(e.represented(), s);
        for (v, (&d, &c)) in e.digits.iter().zip(&e.coeffs).enumerate() {
            prop_assert!(v == 0 && c == 0 || c < (1u128 << v));
            if d == 1 {
                // (c_v + 1) 2^-v <= 2S, compared in units of 2^-64
                prop_assert!((c + 1) << (64 - v) <= 2 * k);
            }
        }
        // S^2 = sum d_v (2 c_v + 1) 4^-v in exact rationals
        let mut sum = BigRational::from_integer(BigInt::from(0));
        for kern in e.kernels() {
            sum += BigRational::new(BigInt::from(2 * kern.c() + 1), BigInt::from(1) << (2 * kern.v() as usize));
        }
        let sr = common::dyadic_to_rational(s);
        prop_assert_eq!(sum, &sr * &sr);
    }

    #[test]
    fn pointwise_reconstruction(k in 0u128..=(1u128 << 64), x in -1.0f64..1.0) {
        let (l, r) = verify_decomposition(Dyadic::new(k).unwrap(), x);
        prop_assert!((l - r).abs() <= 1e-12, "{} vs {}", l, r);
    }
}

#[test]
fn plateau_slopes_are_unit() {
    for (v, c) in [(0u32, 0u128), (3, 0), (4, 2), (5, 6), (6, 14), (10, 700)] {
        let k = PlateauKernel::new(v, c).unwrap();
        let h = (-(v as f64)).exp2();
        let flat = c as f64 * h;
        assert_eq!(k.eval(0.0), h);
        let eps = h / 64.0;
        for t in [0.25, 0.5, 0.75] {
            let x = flat + t * h;
            let slope = (k.eval(x + eps) - k.eval(x - eps)) / (2.0 * eps);
            assert!((slope + 1.0).abs() < 1e-9, "({v},{c}) slope {slope}");
            let slope = (k.eval(-x + eps) - k.eval(-x - eps)) / (2.0 * eps);
            assert!((slope - 1.0).abs() < 1e-9);
        }
        assert_eq!(k.eval(flat + h), 0.0);
        assert_eq!(k.eval(-(flat + h) - eps), 0.0);
    }
}

#[test]
fn fourier_matches_quadrature() {
    let nodes = 1usize << 16;
    for (v, c) in [(0u32, 0u128), (3, 0), (4, 2), (5, 6), (6, 14)] {
        let k = PlateauKernel::new(v, c).unwrap();
        let half = (c + 1) as f64 * (-(v as f64)).exp2();
        let h = 2.0 * half / nodes as f64;
        for j in (-32i64..=32).filter(|&j| j != 0) {
            let mut acc = 0.0;
            for i in 0..=nodes {
                let x = -half + i as f64 * h;
                let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
                acc += w * k.eval(x) * (2.0 * std::f64::consts::PI * j as f64 * x).cos();
            }
            let quad = acc * h;
            let exact = k.fourier(j).unwrap();
            assert!((quad - exact).abs() < 1e-6, "({v},{c}) j={j}: {quad} vs {exact}");
        }
    }
}

#[test]
fn fourier_is_stable_for_large_arguments() {
    let k = PlateauKernel::new(60, (1u128 << 59) + 3).unwrap();
    let big = 1i64 << 62;
    assert_eq!(k.fourier(big).unwrap(), k.fourier(-big).unwrap());
    assert!(k.fourier(big).unwrap().is_finite());
}

#[test]
fn y_statistic_has_mean_zero() {
    let terms: Vec<i64> = (1..=50).map(|k| k * k).collect();
    for (v, c) in [(5u32, 3u128), (2, 1), (0, 0)] {
        let k = PlateauKernel::new(v, c).unwrap();
        let samples: Vec<f64> = (0..10_000u64)
            .map(|i| y_statistic(&terms, 50, k, Alpha::random(&mut rng_stream(13, "ymean", i))).unwrap())
            .collect();
        let m = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / m;
        let var = samples.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        assert!(mean.abs() <= 3.0 * se + 1e-15, "({v},{c}): mean {mean}, se {se}");
    }
}
