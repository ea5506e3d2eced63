//! Representation numbers, additive energy, divisor sums, GCD sums and
//! difference-set divisibility.

use std::collections::HashMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Budget, Error, Result};
use crate::points::eval_poly_i64;

/// `u -> Rep_{N1,N2}(u)`: pairs `m < n` with `N1 <= n <= N2` and `|x_n - x_m| = u > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RepTable {
    window: (usize, usize),
    counts: Vec<(u64, u64)>,
}

impl RepTable {
    fn from_map(window: (usize, usize), map: HashMap<u64, u64>) -> Self {
        let mut counts: Vec<(u64, u64)> = map.into_iter().collect();
        counts.sort_unstable();
        RepTable { window, counts }
    }

    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    /// `(u, Rep(u))` sorted by `u`.
    pub fn entries(&self) -> &[(u64, u64)] {
        &self.counts
    }

    pub fn get(&self, u: u64) -> u64 {
        self.counts
            .binary_search_by_key(&u, |&(k, _)| k)
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    /// Number of distinct `u`.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `sum_u Rep(u)`.
    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&(_, r)| r as u128).sum()
    }

    /// Table for `(N1, N3)` from tables for `(N1, N2)` and `(N2 + 1, N3)`.
    pub fn merge(&self, next: &RepTable) -> Result<RepTable> {
        if next.window.0 != self.window.1 + 1 {
            return Err(Error::domain(format!(
                "windows {:?} and {:?} are not adjacent",
                self.window, next.window
            )));
        }
        let mut map: HashMap<u64, u64> = self.counts.iter().copied().collect();
        for &(u, r) in &next.counts {
            *map.entry(u).or_default() += r;
        }
        Ok(RepTable::from_map((self.window.0, next.window.1), map))
    }
}

fn window_pairs(n1: usize, n2: usize) -> u128 {
    // sum_{n = n1}^{n2} (n - 1)
    let (a, b) = (n1 as u128, n2 as u128);
    b * (b - 1) / 2 - (a - 1) * a.saturating_sub(2) / 2
}

fn check_window(len: usize, n1: usize, n2: usize) -> Result<()> {
    if n1 == 0 || n1 > n2 {
        return Err(Error::domain(format!("window ({n1}, {n2}) needs 1 <= N1 <= N2")));
    }
    if n2 > len {
        return Err(Error::Length {
            requested: n2,
            available: len,
        });
    }
    Ok(())
}

/// `Rep_{N1,N2}` by hashing all pairs (indices one-based).
pub fn rep_table(terms: &[i64], n1: usize, n2: usize, budget: &Budget) -> Result<RepTable> {
    check_window(terms.len(), n1, n2)?;
    budget.check_pairs(
        "rep_table",
        window_pairs(n1, n2),
        Some("use rep_energy_sorted or rep_quadratic_divisor for quadratic sequences"),
    )?;
    let mut map: HashMap<u64, u64> = HashMap::new();
    for n in (n1 - 1)..n2 {
        let xn = terms[n] as i128;
        for &xm in &terms[..n] {
            let u = (xn - xm as i128).unsigned_abs() as u64;
            if u > 0 {
                *map.entry(u).or_default() += 1;
            }
        }
    }
    Ok(RepTable::from_map((n1, n2), map))
}

/// `E(N1, N2) = sum_u Rep(u)^2`.
pub fn energy_window(table: &RepTable) -> u128 {
    table.counts.iter().map(|&(_, r)| (r as u128) * (r as u128)).sum()
}

/// `E(N1, N2)` for nondecreasing terms, counting differences into dense
/// blocks of consecutive `u` values instead of a hash map.
pub fn rep_energy_sorted(terms: &[i64], n1: usize, n2: usize, budget: &Budget) -> Result<u128> {
    const BLOCK: u64 = 1 << 22;
    check_window(terms.len(), n1, n2)?;
    let xs = &terms[..n2];
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("terms must be nondecreasing".into()));
    }
    budget.check_pairs("rep_energy_sorted", window_pairs(n1, n2), None)?;
    let block = BLOCK.min((xs[n2 - 1] as i128 - xs[0] as i128) as u64 + 1);
    budget.check_memory("rep_energy_sorted", block as u128 * 4)?;
    let span = (xs[n2 - 1] as i128 - xs[0] as i128) as u64;
    let mut counts = vec![0u32; block as usize];
    let mut energy = 0u128;
    let mut lo = 1u64;
    while lo <= span {
        let hi = lo.saturating_add(block);
        counts.iter_mut().for_each(|c| *c = 0);
        for n in (n1 - 1)..n2 {
            let xn = xs[n] as i128;
            // m < n with lo <= xn - xm < hi, a contiguous run since xs is sorted
            let start = xs[..n].partition_point(|&x| xn - (x as i128) >= hi as i128);
            let end = xs[..n].partition_point(|&x| xn - (x as i128) >= lo as i128);
            for &xm in &xs[start..end] {
                counts[((xn - xm as i128) as u64 - lo) as usize] += 1;
            }
        }
        energy += counts.iter().map(|&c| (c as u128) * (c as u128)).sum::<u128>();
        if hi == u64::MAX {
            break;
        }
        lo = hi;
    }
    Ok(energy)
}

/// `E_N`: quadruples with `x_{n1} - x_{n2} = x_{n3} - x_{n4}` among the first `N` terms.
pub fn additive_energy(terms: &[i64], n: usize, budget: &Budget) -> Result<u128> {
    if n > terms.len() {
        return Err(Error::Length {
            requested: n,
            available: terms.len(),
        });
    }
    budget.check_pairs("additive_energy", (n as u128) * (n as u128), None)?;
    let xs = &terms[..n];
    let mut d: HashMap<i128, u64> = HashMap::new();
    for &a in xs {
        for &b in xs {
            *d.entry(a as i128 - b as i128).or_default() += 1;
        }
    }
    Ok(d.values().map(|&c| (c as u128) * (c as u128)).sum())
}

/// Signed divisors `e` of `u`, each giving at most one solution of
/// `u = (x - y)(a(x + y) + b)`.
fn quadratic_solutions(a: i64, b: i64, u: u64, mut accept: impl FnMut(i128, i128)) {
    let (a, b, u) = (a as i128, b as i128, u as i128);
    let mut try_divisor = |e: i128| {
        for e in [e, -e] {
            let t = u / e - b;
            if t % a != 0 {
                continue;
            }
            let s = t / a;
            if (s - e).rem_euclid(2) != 0 {
                continue;
            }
            let x = (s + e) / 2;
            let y = (s - e) / 2;
            if x >= 1 && y >= 1 {
                accept(x, y);
            }
        }
    };
    let mut e = 1i128;
    while e * e <= u {
        if u % e == 0 {
            try_divisor(e);
            if e * e != u {
                try_divisor(u / e);
            }
        }
        e += 1;
    }
}

/// `Rep_{1,N}(u)` for `p(x) = a x^2 + b x + const` by divisor enumeration.
pub fn rep_quadratic_divisor(a: i64, b: i64, u: u64, n: u64) -> Result<u64> {
    if a == 0 {
        return Err(Error::domain("leading coefficient a must be nonzero"));
    }
    if u == 0 {
        return Err(Error::domain("u must be positive"));
    }
    let mut count = 0;
    quadratic_solutions(a, b, u, |x, y| {
        if x <= n as i128 && y <= n as i128 {
            count += 1;
        }
    });
    Ok(count)
}

/// `r(u) = #{(x, y) : x, y >= 1, p(x) - p(y) = u}` with no upper range limit.
pub fn rep_quadratic_unbounded(a: i64, b: i64, u: u64) -> Result<u64> {
    rep_quadratic_divisor(a, b, u, u64::MAX)
}

/// `tau(n)` for `n <= x`; index 0 is unused.
pub fn divisor_counts(x: usize, budget: &Budget) -> Result<Vec<u16>> {
    budget.check_memory("divisor_counts", (x as u128 + 1) * 2)?;
    let mut tau = vec![0u16; x + 1];
    for d in 1..=x {
        for m in (d..=x).step_by(d) {
            tau[m] += 1;
        }
    }
    Ok(tau)
}

/// `sum_{n <= x} tau(n)^beta`.
pub fn tau_moment_sum(x: usize, beta: u32, budget: &Budget) -> Result<u128> {
    if x == 0 || beta == 0 {
        return Err(Error::domain("x and beta must be positive"));
    }
    let tau = divisor_counts(x, budget)?;
    tau[1..].iter().try_fold(0u128, |acc, &t| {
        (t as u128)
            .checked_pow(beta)
            .and_then(|p| acc.checked_add(p))
            .ok_or_else(|| Error::domain(format!("tau moment overflows 128 bits at beta = {beta}")))
    })
}

/// Euler phi for `n <= x`.
pub fn totients(x: usize) -> Vec<u64> {
    let mut phi: Vec<u64> = (0..=x as u64).collect();
    for p in 2..=x {
        if phi[p] == p as u64 {
            for m in (p..=x).step_by(p) {
                phi[m] -= phi[m] / p as u64;
            }
        }
    }
    phi
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `sum_{n <= x} sum_{m < n} (m, n) / n`.
pub fn gcd_average(x: usize, budget: &Budget) -> Result<f64> {
    if x == 0 {
        return Err(Error::domain("x must be positive"));
    }
    budget.check_memory("gcd_average", (x as u128 + 1) * 16)?;
    let phi = totients(x);
    // pillai[n] = sum_{m <= n} (m, n) = sum_{d | n} d phi(n / d)
    let mut pillai = vec![0u64; x + 1];
    for d in 1..=x {
        for (k, m) in (d..=x).step_by(d).enumerate() {
            pillai[m] += d as u64 * phi[k + 1];
        }
    }
    let mut acc = CompensatedSum::default();
    for (n, &g) in pillai.iter().enumerate().skip(2) {
        acc.add((g - n as u64) as f64 / n as f64);
    }
    Ok(acc.value())
}

/// Weight of a GCD sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GcdVariant {
    /// `(u1, u2) / sqrt(u1 u2)`.
    Half,
    /// `(u1, u2) / max(u1, u2)`.
    OneOverMax,
    /// `(u1, u2)^2 / (u1 u2)`.
    Squared,
}

impl std::str::FromStr for GcdVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(GcdVariant::Half),
            "one_over_max" | "one-over-max" => Ok(GcdVariant::OneOverMax),
            "squared" => Ok(GcdVariant::Squared),
            _ => Err(Error::parse(format!("unknown gcd variant '{s}'"))),
        }
    }
}

impl GcdVariant {
    /// Weight for coprime parts `a = u1 / g`, `b = u2 / g`.
    fn reduced_weight(self, a: u64, b: u64) -> f64 {
        match self {
            GcdVariant::Half => 1.0 / ((a as f64) * (b as f64)).sqrt(),
            GcdVariant::OneOverMax => 1.0 / a.max(b) as f64,
            GcdVariant::Squared => 1.0 / ((a as f64) * (b as f64)),
        }
    }
}

/// How [`gcd_sum_with`] evaluates the double sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GcdRoute {
    /// Pick whichever of the two routes is estimated cheaper.
    #[default]
    Auto,
    /// All ordered pairs with a binary gcd each.
    Direct,
    /// Divisor grouping (unfiltered) or coprime-ratio enumeration (filtered).
    Grouped,
}

/// Prime factorization by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut k = 0;
            while n.is_multiple_of(p) {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Divisors of `n` with `phi(d)` and Jordan's `J_2(d)`.
fn divisors_with_totients(n: u64) -> Vec<(u64, u64, u128)> {
    let mut out = vec![(1u64, 1u64, 1u128)];
    for (p, k) in factorize(n) {
        let len = out.len();
        let mut pk = 1u64;
        for _ in 0..k {
            pk *= p;
            let phi = pk / p * (p - 1);
            let j2 = (pk as u128 / p as u128).pow(2) * ((p as u128).pow(2) - 1);
            for i in 0..len {
                let (d, f, j) = out[i];
                out.push((d * pk, f * phi, j * j2));
            }
        }
    }
    out
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = divisors_with_totients(n).into_iter().map(|(d, _, _)| d).collect();
    out.sort_unstable();
    out
}

fn isqrt_cost(u: u64) -> u128 {
    (u as f64).sqrt() as u128 + 1
}

/// Estimated work for each route: `(direct, grouped)`.
fn gcd_costs(entries: &[(u64, u64)], filter: Option<u64>) -> (u128, u128) {
    let k = entries.len() as u128;
    let direct = k * k;
    let per_u: u128 = match filter {
        None => 64,
        Some(t) => {
            let t = t as f64;
            (t * (t.ln() + 1.0)).min(k as f64) as u128 + 1
        }
    };
    let grouped = entries.iter().map(|&(u, _)| isqrt_cost(u) + per_u).sum();
    (direct, grouped)
}

/// GCD sum over a [`RepTable`] with automatic route choice.
pub fn gcd_sum(table: &RepTable, variant: GcdVariant, filter: Option<u64>, budget: &Budget) -> Result<f64> {
    gcd_sum_with(table.entries(), variant, filter, GcdRoute::Auto, budget)
}

/// `sum_{u1, u2} R(u1) R(u2) w(u1, u2) 1(u1 u2 / (u1, u2)^2 <= T)` over
/// weighted values `(u, R(u))` with distinct positive `u`.
pub fn gcd_sum_with(
    entries: &[(u64, u64)],
    variant: GcdVariant,
    filter: Option<u64>,
    route: GcdRoute,
    budget: &Budget,
) -> Result<f64> {
    if entries.iter().any(|&(u, _)| u == 0) {
        return Err(Error::domain("gcd sums need positive values"));
    }
    let (direct, grouped) = gcd_costs(entries, filter);
    let (route, cost) = match route {
        GcdRoute::Direct => (GcdRoute::Direct, direct),
        GcdRoute::Grouped => (GcdRoute::Grouped, grouped),
        GcdRoute::Auto if direct <= grouped => (GcdRoute::Direct, direct),
        GcdRoute::Auto => (GcdRoute::Grouped, grouped),
    };
    budget.check_pairs("gcd_sum", cost, Some("estimated gcd evaluations"))?;
    Ok(match (route, filter) {
        (GcdRoute::Direct, _) => gcd_sum_direct(entries, variant, filter),
        (_, None) => gcd_sum_grouped(entries, variant),
        (_, Some(t)) => gcd_sum_ratios(entries, variant, t),
    })
}

fn gcd_sum_direct(entries: &[(u64, u64)], variant: GcdVariant, filter: Option<u64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for &(u1, r1) in entries {
        for &(u2, r2) in entries {
            let g = u1.gcd(&u2);
            let (a, b) = (u1 / g, u2 / g);
            if let Some(t) = filter {
                if (a as u128) * (b as u128) > t as u128 {
                    continue;
                }
            }
            acc.add((r1 * r2) as f64 * variant.reduced_weight(a, b));
        }
    }
    acc.value()
}

fn gcd_sum_grouped(entries: &[(u64, u64)], variant: GcdVariant) -> f64 {
    match variant {
        GcdVariant::OneOverMax => {
            // ascending u: pairs with max = u contribute (1/u) sum_{d | u} phi(d) C_d
            let mut sorted = entries.to_vec();
            sorted.sort_unstable();
            let mut below: HashMap<u64, u64> = HashMap::new();
            let mut acc = CompensatedSum::default();
            for &(u, r) in &sorted {
                let divs = divisors_with_totients(u);
                let inner: u128 = divs
                    .iter()
                    .map(|&(d, phi, _)| phi as u128 * *below.get(&d).unwrap_or(&0) as u128)
                    .sum();
                acc.add(2.0 * r as f64 * inner as f64 / u as f64);
                acc.add((r as f64) * (r as f64));
                for (d, _, _) in divs {
                    *below.entry(d).or_default() += r;
                }
            }
            acc.value()
        }
        GcdVariant::Half | GcdVariant::Squared => {
            // gcd = sum_{d | g} phi(d) and gcd^2 = sum_{d | g} J_2(d)
            let mut by_d: HashMap<u64, (f64, CompensatedSum)> = HashMap::new();
            for &(u, r) in entries {
                let scale = match variant {
                    GcdVariant::Half => (u as f64).sqrt(),
                    _ => u as f64,
                };
                for (d, phi, j2) in divisors_with_totients(u) {
                    let w = if variant == GcdVariant::Half { phi as f64 } else { j2 as f64 };
                    by_d.entry(d).or_insert((w, CompensatedSum::default())).1.add(r as f64 / scale);
                }
            }
            let mut keys: Vec<u64> = by_d.keys().copied().collect();
            keys.sort_unstable();
            let mut acc = CompensatedSum::default();
            for d in keys {
                let (w, s) = by_d[&d];
                let s = s.value();
                acc.add(w * s * s);
            }
            acc.value()
        }
    }
}

fn gcd_sum_ratios(entries: &[(u64, u64)], variant: GcdVariant, t: u64) -> f64 {
    // u1 = g a, u2 = g b with (a, b) = 1 and a b <= T
    let lookup: HashMap<u64, u64> = entries.iter().copied().collect();
    let mut acc = CompensatedSum::default();
    for &(u1, r1) in entries {
        for a in divisors(u1) {
            if a > t {
                break;
            }
            let g = u1 / a;
            for b in 1..=(t / a) {
                if a.gcd(&b) != 1 {
                    continue;
                }
                let Some(u2) = g.checked_mul(b) else { break };
                if let Some(&r2) = lookup.get(&u2) {
                    acc.add((r1 * r2) as f64 * variant.reduced_weight(a, b));
                }
            }
        }
    }
    acc.value()
}

/// `{p(m) - p(n) : 1 <= m != n <= N}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DifferenceSet {
    values: Vec<i128>,
}

impl DifferenceSet {
    /// Sorted distinct differences.
    pub fn values(&self) -> &[i128] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, x: i128) -> bool {
        self.values.binary_search(&x).is_ok()
    }

    /// Positive elements as unit-weight entries for [`gcd_sum_with`].
    pub fn positive_entries(&self) -> Result<Vec<(u64, u64)>> {
        self.values
            .iter()
            .filter(|&&x| x > 0)
            .map(|&x| {
                u64::try_from(x)
                    .map(|u| (u, 1))
                    .map_err(|_| Error::domain(format!("difference {x} exceeds 64 bits")))
            })
            .collect()
    }

    /// Number of elements divisible by `ell`.
    pub fn count_divisible(&self, ell: u64) -> usize {
        let ell = ell as i128;
        self.values.iter().filter(|&&x| x % ell == 0).count()
    }
}

/// Difference set of the polynomial `p` (constant term first) over `1..=N`.
pub fn difference_set(coeffs: &[i64], n: usize, budget: &Budget) -> Result<DifferenceSet> {
    budget.check_pairs("difference_set", (n as u128) * (n as u128), None)?;
    let values: Vec<i128> = (1..=n as i64)
        .map(|k| {
            eval_poly_i64(coeffs, k)
                .map(i128::from)
                .ok_or(Error::TermOverflow { index: k as usize })
        })
        .collect::<Result<_>>()?;
    let mut diffs = Vec::with_capacity(n * n.saturating_sub(1));
    for (i, &a) in values.iter().enumerate() {
        for (j, &b) in values.iter().enumerate() {
            if i != j {
                diffs.push(a - b);
            }
        }
    }
    diffs.sort_unstable();
    diffs.dedup();
    Ok(DifferenceSet { values: diffs })
}

/// Drops the constant term and divides by the content of the remaining coefficients.
pub fn normalize_polynomial(coeffs: &[i64]) -> Result<Vec<i64>> {
    let mut out = coeffs.to_vec();
    if let Some(c) = out.first_mut() {
        *c = 0;
    }
    let content = out.iter().fold(0i64, |g, &c| g.gcd(&c));
    if content == 0 {
        return Err(Error::domain("polynomial is constant"));
    }
    Ok(out.into_iter().map(|c| c / content).collect())
}

/// Outcome of the radical divisibility bound for one modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisibilityCheck {
    pub ell: u64,
    pub count: usize,
    pub rad: u64,
    pub omega: u32,
    pub bound: f64,
    pub ok: bool,
}

/// `rad(n)` and `omega(n)`.
pub fn radical(n: u64) -> (u64, u32) {
    let f = factorize(n);
    (f.iter().map(|&(p, _)| p).product(), f.len() as u32)
}

/// Counts elements of `D` divisible by `ell` against `(N + rad)^2 d^omega / rad`.
pub fn divisibility_bound_check(set: &DifferenceSet, ell: u64, degree: u32, n: usize) -> Result<DivisibilityCheck> {
    if ell <= 1 {
        return Err(Error::domain(format!("ell = {ell} must exceed 1")));
    }
    let count = set.count_divisible(ell);
    let (rad, omega) = radical(ell);
    let lhs = count as u128 * rad as u128;
    let rhs = (n as u128 + rad as u128).pow(2) * (degree as u128).pow(omega);
    Ok(DivisibilityCheck {
        ell,
        count,
        rad,
        omega,
        bound: rhs as f64 / rad as f64,
        ok: lhs <= rhs,
    })
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

/// `#{x mod q : p(x) = 0 mod q}` by evaluating every residue.
pub fn congruence_solution_count(coeffs: &[i64], q: u64) -> Result<u64> {
    if !is_prime(q) {
        return Err(Error::domain(format!("q = {q} is not prime")));
    }
    let q = q as i128;
    let reduced: Vec<i128> = coeffs.iter().map(|&c| (c as i128).rem_euclid(q)).collect();
    if reduced.iter().all(|&c| c == 0) {
        return Err(Error::Precondition(format!(
            "every coefficient is divisible by {q}"
        )));
    }
    let count = (0..q)
        .filter(|&x| reduced.iter().rev().fold(0i128, |acc, &c| (acc * x + c) % q) == 0)
        .count();
    Ok(count as u64)
}

/// Second moment of `Rep_{1,N}` restricted to `Rep >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U2Mass {
    pub mass: u128,
    /// `log(mass) / log(N)`, absent when either logarithm is degenerate.
    pub exponent: Option<f64>,
}

pub fn sparse_u2_mass(terms: &[i64], n: usize, budget: &Budget) -> Result<U2Mass> {
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    let table = rep_table(terms, 1, n, budget)?;
    let mass: u128 = table
        .entries()
        .iter()
        .filter(|&&(_, r)| r >= 2)
        .map(|&(_, r)| (r as u128) * (r as u128))
        .sum();
    let exponent = (mass > 0 && n > 1).then(|| (mass as f64).ln() / (n as f64).ln());
    Ok(U2Mass { mass, exponent })
}
