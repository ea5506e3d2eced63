//! Dyadic decomposition of the tent kernel into plateau functions.
//!
//! For `S = sum_v d_v 2^-v` the tent `psi_{S/2}` splits as
//! `sum_v d_v f_{v, c_v}` with `c_v = sum_{u < v} 2^{v-u} d_u`, where
//! `f_{v,c}` is a truncated pyramid of height `2^-v`, flat radius `c 2^-v`
//! and unit slopes.

use std::f64::consts::PI;

use ethnum::{I256, U256};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{units_to_f64, Dyadic};
use crate::points::Alpha;
use crate::variance::TentKernel;

/// Largest level supported by the 64-digit representation of `S`.
pub const MAX_LEVEL: u32 = 64;

/// `f_{v,c}`: height `2^-v`, plateau `|x| <= c 2^-v`, support `|x| <= (c+1) 2^-v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlateauKernel {
    v: u32,
    c: u128,
}

impl PlateauKernel {
    pub fn new(v: u32, c: u128) -> Result<Self> {
        if v > MAX_LEVEL {
            return Err(Error::domain(format!("level v = {v} exceeds {MAX_LEVEL}")));
        }
        if c >> v != 0 {
            return Err(Error::domain(format!("c = {c} not below 2^{v}")));
        }
        Ok(PlateauKernel { v, c })
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn c(&self) -> u128 {
        self.c
    }

    fn height(&self) -> f64 {
        (-(self.v as f64)).exp2()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.height();
        let ax = x.abs();
        let flat = self.c as f64 * h;
        if ax <= flat {
            h
        } else if ax < flat + h {
            h - (ax - flat)
        } else {
            0.0
        }
    }

    /// `int f_{v,c} = (2c + 1) 2^{-2v}`.
    pub fn mean(&self) -> f64 {
        (2 * self.c + 1) as f64 * (-2.0 * self.v as f64).exp2()
    }

    /// Fourier coefficient
    /// `sin(pi (2c+1) j / 2^v) / (j pi) * sin(pi j / 2^v) / (j pi)`.
    pub fn fourier(&self, j: i64) -> Result<f64> {
        if j == 0 {
            return Err(Error::domain("j = 0: the zeroth coefficient is the mean"));
        }
        let a = sin_pi_dyadic((2 * self.c + 1).wrapping_mul(j as i128 as u128), self.v);
        let b = sin_pi_dyadic(j as i128 as u128, self.v);
        let jp = j as f64 * PI;
        Ok(a * b / (jp * jp))
    }

    /// `sum_j f(t + j)` for a phase `t`, in units of `2^-128`.
    fn periodized_units(&self, t: u128) -> U256 {
        if t == 0 {
            // f(1) = 0 since the support never exceeds [-1, 1]
            return self.units_at(0);
        }
        self.units_at(t) + self.units_at(t.wrapping_neg())
    }

    /// `f(t)` for `t` in `[0, 1)` given as a phase; `t = 0` maps to `f(0)`.
    fn units_at(&self, t: u128) -> U256 {
        let h = U256::ONE << (128 - self.v);
        let flat = U256::from(self.c) * h;
        let t = U256::from(t);
        if t <= flat {
            h
        } else if t < flat + h {
            flat + h - t
        } else {
            U256::ZERO
        }
    }

    /// `2 (2c + 1) 2^{-2v}` in units of `2^-128`.
    fn twice_mean_units(&self) -> U256 {
        U256::from(2 * self.c + 1) << (129 - 2 * self.v)
    }
}

/// `sin(pi m / 2^v)` with `m` reduced modulo `2^{v+1}` before scaling.
fn sin_pi_dyadic(m: u128, v: u32) -> f64 {
    let bits = v + 1;
    let m = if bits >= 128 { m } else { m & ((1u128 << bits) - 1) };
    // r = m / 2^v in [0, 2), shifted to [-1, 1)
    let mut r = m as f64 * (-(v as f64)).exp2();
    if r >= 1.0 {
        r -= 2.0;
    }
    (r * PI).sin()
}

/// Binary digits of `S` and the plateau offsets `c_v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicExpansion {
    pub s: Dyadic,
    /// `d_v` for `v = 0..=v_max`.
    pub digits: Vec<u8>,
    /// `c_v` for `v = 0..=v_max`.
    pub coeffs: Vec<u128>,
    /// Set when digits beyond `v_max` were dropped.
    pub truncated: bool,
}

impl DyadicExpansion {
    /// Levels with `d_v = 1`, paired with their kernels.
    pub fn kernels(&self) -> Vec<PlateauKernel> {
        self.digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 1)
            .map(|(v, _)| PlateauKernel {
                v: v as u32,
                c: self.coeffs[v],
            })
            .collect()
    }

    /// `sum_v d_v f_{v,c_v}(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.kernels().iter().map(|k| k.eval(x)).sum()
    }

    /// Checks `sum_v d_v (2c_v + 1) 2^{-2v} = S^2` exactly.
    pub fn scalar_identity_holds(&self) -> bool {
        let lhs = self
            .kernels()
            .iter()
            .fold(U256::ZERO, |acc, k| acc + (U256::from(2 * k.c + 1) << (128 - 2 * k.v)));
        lhs == self.represented().square_units()
    }

    /// The dyadic value actually represented by the retained digits.
    pub fn represented(&self) -> Dyadic {
        let num = self
            .digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 1)
            .fold(0u128, |acc, (v, _)| acc + (1u128 << (64 - v)));
        Dyadic::new(num).expect("retained digits never exceed S")
    }
}

/// Binary expansion of `S` up to level `v_max` (at most 64).
pub fn decompose(s: Dyadic, v_max: u32) -> Result<DyadicExpansion> {
    if v_max > MAX_LEVEL {
        return Err(Error::domain(format!("v_max = {v_max} exceeds {MAX_LEVEL}")));
    }
    let num = s.numerator();
    let top = s.digits().max(if s.is_one() { 0 } else { 1 });
    let last = top.min(v_max);
    let mut digits = Vec::with_capacity(last as usize + 1);
    let mut coeffs = Vec::with_capacity(last as usize + 1);
    let mut c = 0u128;
    for v in 0..=last {
        // bit of 2^-v in num / 2^64
        let d = ((num >> (64 - v)) & 1) as u8;
        coeffs.push(c);
        digits.push(d);
        c = 2 * (c + d as u128);
    }
    let truncated = last < s.digits();
    Ok(DyadicExpansion {
        s,
        digits,
        coeffs,
        truncated,
    })
}

/// `(psi_{S/2}(x), sum_v d_v f_{v,c_v}(x))`.
pub fn verify_decomposition(s: Dyadic, x: f64) -> (f64, f64) {
    let exp = decompose(s, MAX_LEVEL).expect("64 levels always suffice");
    (TentKernel::new(s).eval(x), exp.eval(x))
}

/// Exact `Y_{n,v,c}(alpha)` in units of `2^-128`, with `n` one-based.
pub fn y_statistic_exact(terms: &[i64], n: usize, kernel: PlateauKernel, alpha: Alpha) -> Result<I256> {
    if n == 0 || n > terms.len() {
        return Err(Error::domain(format!(
            "index n = {n} outside 1..={}",
            terms.len()
        )));
    }
    let phase = |x: i64| alpha.0.wrapping_mul(x as i128 as u128);
    let xn = phase(terms[n - 1]);
    let mut sum = U256::ZERO;
    for &xm in &terms[..n - 1] {
        sum += kernel.periodized_units(xn.wrapping_sub(phase(xm)));
    }
    let centre = U256::from((n - 1) as u128) * kernel.twice_mean_units();
    Ok((sum << 1u32).as_i256() - centre.as_i256())
}

/// `Y_{n,v,c}(alpha) = 2 sum_{m<n} sum_j f(alpha x_n - alpha x_m + j) - 2 (n-1)(2c+1) 2^{-2v}`.
pub fn y_statistic(terms: &[i64], n: usize, kernel: PlateauKernel, alpha: Alpha) -> Result<f64> {
    y_statistic_exact(terms, n, kernel, alpha).map(units_to_f64)
}

/// `sum_{n <= N} Y_{n,v,c}(alpha)` over the first `N` terms, exact.
pub fn y_partial_sum_exact(terms: &[i64], kernel: PlateauKernel, alpha: Alpha) -> I256 {
    let phases: Vec<u128> = terms
        .iter()
        .map(|&x| alpha.0.wrapping_mul(x as i128 as u128))
        .collect();
    let mut sum = U256::ZERO;
    for (n, &xn) in phases.iter().enumerate() {
        for &xm in &phases[..n] {
            sum += kernel.periodized_units(xn.wrapping_sub(xm));
        }
    }
    let n = phases.len() as u128;
    let pairs = U256::from(n * n.saturating_sub(1) / 2);
    (sum << 1u32).as_i256() - (pairs * kernel.twice_mean_units()).as_i256()
}

/// `sum_{n <= N} Y_{n,v,c}(alpha)` as an `f64`.
pub fn y_partial_sum(terms: &[i64], kernel: PlateauKernel, alpha: Alpha) -> f64 {
    units_to_f64(y_partial_sum_exact(terms, kernel, alpha))
}
