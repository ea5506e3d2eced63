//! Integer sequences, the dilation parameter, and point sets on the circle.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ethnum::U256;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::frac_to_f64;

/// Which integer sequence `(x_n)` to generate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceSpec {
    /// `x_n = p(n)` with coefficients listed constant term first.
    Polynomial(Vec<i64>),
    /// `x_n = n`.
    Linear,
    /// `x_n = base^n`.
    Lacunary(u64),
    /// A stored list; `x_n` is the `n`-th entry.
    Explicit(Vec<i64>),
}

impl SequenceSpec {
    pub fn polynomial(coeffs: Vec<i64>) -> Result<Self> {
        match coeffs.iter().rposition(|&c| c != 0) {
            Some(deg) if deg >= 1 && deg + 1 == coeffs.len() => Ok(SequenceSpec::Polynomial(coeffs)),
            Some(0) | None => Err(Error::domain("polynomial degree must be at least 1")),
            Some(_) => Err(Error::domain("leading polynomial coefficient must be nonzero")),
        }
    }

    pub fn lacunary(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::domain(format!("lacunary base {base} < 2")));
        }
        Ok(SequenceSpec::Lacunary(base))
    }

    /// Polynomial degree, when the sequence is polynomial (linear counts as 1).
    pub fn degree(&self) -> Option<usize> {
        match self {
            SequenceSpec::Polynomial(c) => Some(c.len() - 1),
            SequenceSpec::Linear => Some(1),
            _ => None,
        }
    }

    /// Parse `poly:c0,c1,...`, `linear`, `lacunary:b` or `explicit:@file`.
    pub fn parse_with_base(s: &str, base_dir: Option<&Path>) -> Result<Self> {
        let s = s.trim();
        if s == "linear" {
            return Ok(SequenceSpec::Linear);
        }
        if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs = rest
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::parse(format!("bad coefficient '{c}' in '{s}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            return SequenceSpec::polynomial(coeffs);
        }
        if let Some(rest) = s.strip_prefix("lacunary:") {
            let b = rest
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::parse(format!("bad lacunary base in '{s}'")))?;
            return SequenceSpec::lacunary(b);
        }
        if let Some(rest) = s.strip_prefix("explicit:@") {
            let mut path = Path::new(rest.trim()).to_path_buf();
            if let (Some(dir), true) = (base_dir, path.is_relative()) {
                path = dir.join(path);
            }
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let values = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| {
                    l.parse::<i64>()
                        .map_err(|_| Error::parse(format!("bad integer '{l}' in {}", path.display())))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(SequenceSpec::Explicit(values));
        }
        Err(Error::parse(format!(
            "unknown sequence '{s}' (expected poly:..., linear, lacunary:b, explicit:@file)"
        )))
    }
}

impl FromStr for SequenceSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SequenceSpec::parse_with_base(s, None)
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(i64::to_string).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            SequenceSpec::Linear => write!(f, "linear"),
            SequenceSpec::Lacunary(b) => write!(f, "lacunary:{b}"),
            SequenceSpec::Explicit(v) => write!(f, "explicit:<{} terms>", v.len()),
        }
    }
}

/// Evaluate `p(n)` exactly; `None` if the value leaves `i64`.
pub(crate) fn eval_poly_i64(coeffs: &[i64], n: i64) -> Option<i64> {
    let mut acc: i128 = 0;
    for &c in coeffs.iter().rev() {
        acc = acc.checked_mul(n as i128)?.checked_add(c as i128)?;
    }
    i64::try_from(acc).ok()
}

/// The first `n` terms `[x_1, ..., x_n]`.
pub fn generate_terms(spec: &SequenceSpec, n: usize) -> Result<Vec<i64>> {
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    match spec {
        SequenceSpec::Polynomial(coeffs) => (1..=n)
            .map(|k| eval_poly_i64(coeffs, k as i64).ok_or(Error::TermOverflow { index: k }))
            .collect(),
        SequenceSpec::Linear => Ok((1..=n as i64).collect()),
        SequenceSpec::Lacunary(base) => {
            let mut out = Vec::with_capacity(n);
            let mut cur: i64 = 1;
            for k in 1..=n {
                cur = i64::try_from(*base)
                    .ok()
                    .and_then(|b| cur.checked_mul(b))
                    .ok_or(Error::TermOverflow { index: k })?;
                out.push(cur);
            }
            Ok(out)
        }
        SequenceSpec::Explicit(values) => {
            if n > values.len() {
                return Err(Error::Length {
                    requested: n,
                    available: values.len(),
                });
            }
            Ok(values[..n].to_vec())
        }
    }
}

/// Dilation parameter `alpha = A / 2^128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alpha(pub u128);

impl Alpha {
    /// `floor(p * 2^128 / q)` for `p/q` reduced modulo one.
    pub fn from_ratio(p: u128, q: u128) -> Result<Self> {
        if q == 0 {
            return Err(Error::domain("alpha denominator is zero"));
        }
        let p = p % q;
        let a = (U256::from(p) << 128u32) / U256::from(q);
        Ok(Alpha(a.as_u128()))
    }

    /// Fractional part of `(b + sqrt(d)) / c` for non-square `d`, via an
    /// integer square root of the scaled radicand (one ulp accuracy).
    pub fn quadratic(b: i64, d: u64, c: u64) -> Result<Self> {
        if c == 0 {
            return Err(Error::domain("quadratic alpha: zero denominator"));
        }
        let one = BigUint::one() << 128usize;
        let root = (BigUint::from(d) << 256usize).sqrt(); // floor(sqrt(d) * 2^128)
        let shift = BigUint::from(b.unsigned_abs()) << 128usize;
        let c_big = BigUint::from(c);
        // numerator in units of 2^-128, reduced into [0, c * 2^128)
        let modulus = &c_big * &one;
        let numer = if b >= 0 {
            (root + shift) % &modulus
        } else {
            let shift = shift % &modulus;
            (root + &modulus - shift) % &modulus
        };
        let a = numer / c_big;
        Ok(Alpha(a.to_u128().expect("reduced below 2^128")))
    }

    /// `(sqrt(5) - 1) / 2`.
    pub fn golden() -> Self {
        Alpha::quadratic(-1, 5, 2).expect("valid constant")
    }

    /// `sqrt(2) - 1`.
    pub fn sqrt2_minus_1() -> Self {
        Alpha::quadratic(-1, 2, 1).expect("valid constant")
    }

    /// Uniform draw over all 128-bit numerators.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let hi = rng.next_u64() as u128;
        let lo = rng.next_u64() as u128;
        Alpha((hi << 64) | lo)
    }

    pub fn to_f64(self) -> f64 {
        frac_to_f64(self.0)
    }

    /// 32 lowercase hex digits of `A`.
    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s.len() != 32 {
            return Err(Error::parse(format!("alpha hex '{s}' must have 32 digits")));
        }
        u128::from_str_radix(s, 16)
            .map(Alpha)
            .map_err(|_| Error::parse(format!("bad alpha hex '{s}'")))
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// `rat:p/q`, `golden`, `sqrt2m1` or `hex:<32 hex digits>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "golden" => return Ok(Alpha::golden()),
            "sqrt2m1" => return Ok(Alpha::sqrt2_minus_1()),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("rat:") {
            let (p, q) = rest
                .split_once('/')
                .ok_or_else(|| Error::parse(format!("expected rat:p/q, got '{s}'")))?;
            let p: u128 = p.trim().parse().map_err(|_| Error::parse(format!("bad numerator in '{s}'")))?;
            let q: u128 = q.trim().parse().map_err(|_| Error::parse(format!("bad denominator in '{s}'")))?;
            return Alpha::from_ratio(p, q);
        }
        if let Some(rest) = s.strip_prefix("hex:") {
            return Alpha::from_hex(rest.trim());
        }
        Err(Error::parse(format!(
            "unknown alpha '{s}' (expected rat:p/q, golden, sqrt2m1, hex:...)"
        )))
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "hex:{}", self.to_hex())
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Alpha::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Sorted phases on the circle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointSet {
    points: Vec<u128>,
}

impl PointSet {
    pub fn from_phases(mut points: Vec<u128>) -> Self {
        points.sort_unstable();
        PointSet { points }
    }

    /// Points given as reals, reduced modulo one (test and binding convenience).
    pub fn from_f64(values: &[f64]) -> Self {
        PointSet::from_phases(values.iter().map(|&x| crate::fixed::frac_from_f64(x)).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[u128] {
        &self.points
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.points.iter().map(|&a| frac_to_f64(a)).collect()
    }

    /// Every point shifted by `offset` modulo one.
    pub fn rotated(&self, offset: u128) -> PointSet {
        PointSet::from_phases(self.points.iter().map(|a| a.wrapping_add(offset)).collect())
    }
}

/// `{A * x_n mod 2^128}`, sorted. Negative terms wrap in two's complement,
/// which is the same residue as the signed product.
pub fn dilate_mod1(terms: &[i64], alpha: Alpha) -> Result<PointSet> {
    if terms.is_empty() {
        return Err(Error::EmptyInput("dilate_mod1 needs at least one term"));
    }
    Ok(PointSet::from_phases(
        terms
            .iter()
            .map(|&x| alpha.0.wrapping_mul(x as i128 as u128))
            .collect(),
    ))
}

/// Convergents `p/q` of `alpha`, with `q` strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Convergents {
    pub pairs: Vec<(u128, u128)>,
    /// Set when the expansion of `A / 2^128` ran out (or hit the precision
    /// cap) before `count` convergents were produced.
    pub truncated: bool,
}

/// Denominators beyond this are not trusted: `A / 2^128` only pins `alpha`
/// to `2^-128`, so convergents with `q^2` near `2^128` are artifacts.
pub const MAX_CONVERGENT_DENOMINATOR: u128 = 1u128 << 62;

pub fn continued_fraction_convergents(alpha: Alpha, count: usize) -> Convergents {
    let mut pairs: Vec<(u128, u128)> = Vec::with_capacity(count);
    if count == 0 {
        return Convergents { pairs, truncated: false };
    }
    // alpha = num / den with den = 2^128
    let mut num = U256::from(alpha.0);
    let mut den = U256::ONE << 128;
    // (p_{k-2}, q_{k-2}) = (0, 1), (p_{k-1}, q_{k-1}) = (1, 0)
    let (mut p2, mut q2) = (U256::ZERO, U256::ONE);
    let (mut p1, mut q1) = (U256::ONE, U256::ZERO);
    let mut truncated = false;
    loop {
        // partial quotient of num/den, then continue on den/(num mod den)
        let a = num / den;
        let r = num % den;
        let p: U256 = a * p1 + p2;
        let q: U256 = a * q1 + q2;
        if q > U256::from(MAX_CONVERGENT_DENOMINATOR) {
            truncated = true;
            break;
        }
        let pair = (p.as_u128(), q.as_u128());
        match pairs.last_mut() {
            Some(last) if last.1 == pair.1 => *last = pair,
            _ => pairs.push(pair),
        }
        if pairs.len() == count && r != U256::ZERO {
            break;
        }
        if r == U256::ZERO {
            truncated = pairs.len() < count;
            break;
        }
        p2 = p1;
        q2 = q1;
        p1 = p;
        q1 = q;
        num = den;
        den = r;
    }
    Convergents { pairs, truncated }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_examples() {
        let sq = SequenceSpec::polynomial(vec![0, 0, 1]).unwrap();
        assert_eq!(generate_terms(&sq, 4).unwrap(), vec![1, 4, 9, 16]);
        assert_eq!(generate_terms(&SequenceSpec::Linear, 3).unwrap(), vec![1, 2, 3]);
        let lac = SequenceSpec::lacunary(2).unwrap();
        assert_eq!(generate_terms(&lac, 5).unwrap(), vec![2, 4, 8, 16, 32]);
    }

    #[test]
    fn generate_errors() {
        let lac = SequenceSpec::lacunary(2).unwrap();
        assert_eq!(generate_terms(&lac, 70), Err(Error::TermOverflow { index: 63 }));
        let cubic = SequenceSpec::polynomial(vec![0, 0, 0, 1]).unwrap();
        // 2097151^3 < 2^63 <= 2097152^3
        assert!(generate_terms(&cubic, 2_097_151).is_ok());
        assert_eq!(
            generate_terms(&cubic, 2_097_152),
            Err(Error::TermOverflow { index: 2_097_152 })
        );
        let ex = SequenceSpec::Explicit(vec![3, 1, 4]);
        assert_eq!(
            generate_terms(&ex, 4),
            Err(Error::Length { requested: 4, available: 3 })
        );
        assert!(SequenceSpec::polynomial(vec![5]).is_err());
        assert!(SequenceSpec::polynomial(vec![1, 2, 0]).is_err());
        assert!(SequenceSpec::lacunary(1).is_err());
    }

    #[test]
    fn parse_specs() {
        assert_eq!(
            "poly:0,0,1".parse::<SequenceSpec>().unwrap(),
            SequenceSpec::Polynomial(vec![0, 0, 1])
        );
        assert_eq!("linear".parse::<SequenceSpec>().unwrap(), SequenceSpec::Linear);
        assert_eq!("lacunary:3".parse::<SequenceSpec>().unwrap(), SequenceSpec::Lacunary(3));
        assert!("cubic".parse::<SequenceSpec>().is_err());

        let dir = std::env::temp_dir().join(format!("numvar-explicit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("terms.txt"), "5\n-2\n\n7\n").unwrap();
        let spec = SequenceSpec::parse_with_base("explicit:@terms.txt", Some(&dir)).unwrap();
        assert_eq!(spec, SequenceSpec::Explicit(vec![5, -2, 7]));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn alpha_constructors() {
        assert_eq!(Alpha::from_ratio(1, 4).unwrap().0, 1u128 << 126);
        assert_eq!(Alpha::from_ratio(5, 4).unwrap().0, 1u128 << 126);
        assert_eq!("rat:1/2".parse::<Alpha>().unwrap().0, 1u128 << 127);
        let g = Alpha::golden();
        assert!((g.to_f64() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        let s = Alpha::sqrt2_minus_1();
        assert!((s.to_f64() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let hex = g.to_hex();
        assert_eq!(hex.len(), 32);
        assert_eq!(format!("hex:{hex}").parse::<Alpha>().unwrap(), g);
        assert_eq!(Alpha::from_ratio(1, 4).unwrap().to_hex(), "40000000000000000000000000000000");
    }

    #[test]
    fn golden_is_exact_to_one_ulp() {
        // A = floor(2^128 (sqrt 5 - 1) / 2) satisfies (2A + 2^129)^2 <= 5 * 2^256 < (2A + 2 + 2^129)^2
        let a = BigUint::from(Alpha::golden().0);
        let two128 = BigUint::one() << 128usize;
        let lo = (&a * 2u32) + &two128;
        let hi = &lo + 2u32;
        let target = BigUint::from(5u32) << 256usize;
        assert!(&lo * &lo <= target);
        assert!(&hi * &hi > target);
    }

    #[test]
    fn dilate_examples() {
        let quarter = Alpha::from_ratio(1, 4).unwrap();
        let ps = dilate_mod1(&[1, 2, 3], quarter).unwrap();
        assert_eq!(ps.to_f64(), vec![0.25, 0.5, 0.75]);
        let ps = dilate_mod1(&[3], Alpha(1u128 << 126)).unwrap();
        assert_eq!(ps.as_slice(), &[3u128 << 126]);
        let ps = dilate_mod1(&[-1], quarter).unwrap();
        assert_eq!(ps.as_slice(), &[3u128 << 126]);
        assert!(dilate_mod1(&[], quarter).is_err());
    }

    #[test]
    fn convergent_examples() {
        let g = continued_fraction_convergents(Alpha::golden(), 6);
        let qs: Vec<u128> = g.pairs.iter().map(|p| p.1).collect();
        assert_eq!(qs, vec![1, 2, 3, 5, 8, 13]);
        assert!(!g.truncated);

        // A = floor(2^128/3): after 1/3 the next partial quotient is ~2^126,
        // beyond the trusted precision
        let third = continued_fraction_convergents(Alpha::from_ratio(1, 3).unwrap(), 5);
        assert_eq!(third.pairs, vec![(0, 1), (1, 3)]);
        assert!(third.truncated);

        let s = continued_fraction_convergents(Alpha::sqrt2_minus_1(), 4);
        let qs: Vec<u128> = s.pairs.iter().map(|p| p.1).collect();
        assert_eq!(qs, vec![1, 2, 5, 12]);
    }

    #[test]
    fn convergents_of_exact_dyadic_terminate() {
        let c = continued_fraction_convergents(Alpha(3u128 << 126), 10);
        // 3/4 = [0; 1, 3]; 0/1 and 1/1 share q = 1 and the later one is kept
        assert_eq!(c.pairs, vec![(1, 1), (3, 4)]);
        assert!(c.truncated);
    }
}
