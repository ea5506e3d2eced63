//! Fixed-point representations shared by every statistic.
//!
//! Phases on the circle are `u128` fractions: the value `a` stands for
//! `a / 2^128` in `[0, 1)`, so addition and subtraction modulo one are the
//! wrapping integer operations. Interval lengths are [`Dyadic`] rationals
//! `k / 2^64` with `0 <= k <= 2^64`, which keeps half-lengths and arc
//! endpoints exact in the phase representation.

use std::fmt;
use std::str::FromStr;

use ethnum::{I256, U256};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `2^-128` as an `f64`.
pub(crate) const TWO_POW_NEG_128: f64 = 1.0 / 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

const ONE_NUM: u128 = 1u128 << 64;

/// Convert a phase to `f64` (rounded to 53 bits).
#[inline]
pub fn frac_to_f64(a: u128) -> f64 {
    // top 64 bits are enough for a correctly scaled 53-bit mantissa
    (a >> 64) as f64 * (1.0 / 18_446_744_073_709_551_616.0)
        + (a as u64) as f64 * TWO_POW_NEG_128
}

/// Convert `x` to a phase, reducing modulo one first. Exact whenever `x`
/// is a finite double with at most 128 fractional bits (all finite `f64`
/// values in `[0, 1)` with exponent >= -75 qualify).
pub fn frac_from_f64(x: f64) -> u128 {
    let r = x - x.floor();
    if !(r.is_finite()) || r <= 0.0 {
        return 0;
    }
    let scaled = r * 18_446_744_073_709_551_616.0; // r * 2^64 in [0, 2^64)
    let hi = scaled.floor();
    let lo = (scaled - hi) * 18_446_744_073_709_551_616.0;
    ((hi as u128) << 64) | (lo as u128)
}

/// Interval length `S = k / 2^64` with `0 <= S <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dyadic {
    num: u128,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0 };
    pub const ONE: Dyadic = Dyadic { num: ONE_NUM };
    pub const HALF: Dyadic = Dyadic { num: ONE_NUM >> 1 };

    /// `S = num / 2^64`.
    pub fn new(num: u128) -> Result<Self> {
        if num > ONE_NUM {
            return Err(Error::domain(format!("S = {num}/2^64 exceeds 1")));
        }
        Ok(Dyadic { num })
    }

    /// `S = p / q` with `q` a power of two no larger than `2^64`.
    pub fn from_ratio(p: u128, q: u128) -> Result<Self> {
        if q == 0 || !q.is_power_of_two() || q > ONE_NUM {
            return Err(Error::domain(format!(
                "S = {p}/{q} is not a dyadic rational with denominator <= 2^64"
            )));
        }
        if p > q {
            return Err(Error::domain(format!("S = {p}/{q} exceeds 1")));
        }
        Ok(Dyadic {
            num: p * (ONE_NUM / q),
        })
    }

    /// `S = 2^-v`, `v <= 64`.
    pub fn pow2_inv(v: u32) -> Result<Self> {
        if v > 64 {
            return Err(Error::domain(format!("2^-{v} needs more than 64 binary digits")));
        }
        Ok(Dyadic { num: ONE_NUM >> v })
    }

    /// Exact conversion; fails unless `x` is a multiple of `2^-64` in `[0, 1]`.
    pub fn from_f64_exact(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("S = {x} outside [0, 1]")));
        }
        let scaled = x * 18_446_744_073_709_551_616.0;
        if scaled.fract() != 0.0 {
            return Err(Error::domain(format!("S = {x} is not a multiple of 2^-64")));
        }
        Ok(Dyadic { num: scaled as u128 })
    }

    /// Largest dyadic `k / 2^64 <= x`, clamped into `[0, 1]`.
    pub fn floor_f64(x: f64) -> Self {
        if x.is_nan() || x <= 0.0 {
            return Dyadic::ZERO;
        }
        if x >= 1.0 {
            return Dyadic::ONE;
        }
        let hi = (x * 18_446_744_073_709_551_616.0).floor();
        Dyadic { num: hi as u128 }
    }

    /// Numerator over `2^64`.
    #[inline]
    pub fn numerator(self) -> u128 {
        self.num
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    #[inline]
    pub fn is_one(self) -> bool {
        self.num == ONE_NUM
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.num as f64 / 18_446_744_073_709_551_616.0
    }

    /// `S` in phase units (`S * 2^128`), defined for `S < 1`.
    #[inline]
    pub fn phase(self) -> Option<u128> {
        if self.is_one() {
            None
        } else {
            Some(self.num << 64)
        }
    }

    /// `S / 2` in phase units; always representable.
    #[inline]
    pub fn half_phase(self) -> u128 {
        self.num << 63
    }

    /// `(p, q)` in lowest terms with `q` a power of two.
    pub fn reduced(self) -> (u128, u128) {
        if self.num == 0 {
            return (0, 1);
        }
        let tz = self.num.trailing_zeros().min(64);
        (self.num >> tz, ONE_NUM >> tz)
    }

    /// Number of binary digits after the point (`0` for `S` in `{0, 1}`).
    pub fn digits(self) -> u32 {
        let (_, q) = self.reduced();
        q.trailing_zeros()
    }

    /// `S^2` in units of `2^-128`.
    pub(crate) fn square_units(self) -> U256 {
        U256::from(self.num) * U256::from(self.num)
    }

    /// `S` in units of `2^-128` as a wide integer (valid for `S = 1` too).
    pub(crate) fn units(self) -> U256 {
        U256::from(self.num) << 64
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, q) = self.reduced();
        write!(f, "{p}/{q}")
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `p/q`, `2^-v`, `0` and `1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(v) = s.strip_prefix("2^-") {
            let v: u32 = v
                .parse()
                .map_err(|_| Error::parse(format!("bad exponent in '{s}'")))?;
            return Dyadic::pow2_inv(v);
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: u128 = p
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("bad numerator in '{s}'")))?;
            let q: u128 = q
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("bad denominator in '{s}'")))?;
            return Dyadic::from_ratio(p, q);
        }
        match s {
            "0" => Ok(Dyadic::ZERO),
            "1" => Ok(Dyadic::ONE),
            _ => Err(Error::parse(format!(
                "'{s}' is not a dyadic length (use p/q or 2^-v)"
            ))),
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Signed wide value in units of `2^-128`, converted to `f64` once at the end.
#[inline]
pub(crate) fn units_to_f64(v: I256) -> f64 {
    v.as_f64() * TWO_POW_NEG_128
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reduce() {
        let s: Dyadic = "15/64".parse().unwrap();
        assert_eq!(s.reduced(), (15, 64));
        assert_eq!(s.to_string(), "15/64");
        assert_eq!(s.digits(), 6);
        let t: Dyadic = "2^-5".parse().unwrap();
        assert_eq!(t, Dyadic::from_ratio(1, 32).unwrap());
        assert_eq!(Dyadic::ONE.reduced(), (1, 1));
        assert_eq!(Dyadic::ZERO.reduced(), (0, 1));
        assert!("3/5".parse::<Dyadic>().is_err());
        assert!("5/4".parse::<Dyadic>().is_err());
        assert!("2^-65".parse::<Dyadic>().is_err());
    }

    #[test]
    fn phase_units() {
        let quarter = Dyadic::from_ratio(1, 4).unwrap();
        assert_eq!(quarter.phase(), Some(1u128 << 126));
        assert_eq!(quarter.half_phase(), 1u128 << 125);
        assert_eq!(Dyadic::ONE.phase(), None);
        assert_eq!(Dyadic::ONE.half_phase(), 1u128 << 127);
    }

    #[test]
    fn f64_roundtrip() {
        for &x in &[0.0, 0.1, 0.25, 0.9, 0.999_999_999_9] {
            assert_eq!(frac_to_f64(frac_from_f64(x)), x);
        }
        assert_eq!(frac_from_f64(0.75), 3u128 << 126);
        assert_eq!(frac_from_f64(-0.25), 3u128 << 126);
        assert_eq!(Dyadic::from_f64_exact(0.4).unwrap().to_f64(), 0.4);
        assert!(Dyadic::from_f64_exact(1e-30).is_err());
        assert_eq!(Dyadic::floor_f64(2.0), Dyadic::ONE);
    }
}
