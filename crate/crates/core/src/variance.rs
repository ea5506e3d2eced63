//! Counting function and number variance.
//!
//! `S_N(S, y)` counts points in the arc `[y - S/2, y + S/2)` (mod 1), and
//! `V(N, S) = int_0^1 S_N(S, y)^2 dy - N^2 S^2`. Two independent routes
//! compute `V`, both in exact integer arithmetic on the phase grid:
//!
//! * [`variance_pairwise`]: `V = NS - N^2 S^2 + I_off` with the off-diagonal
//!   sum of the periodized tent kernel over all pairs, evaluated by a
//!   sorted circular sliding window with prefix sums.
//! * [`variance_sweep`]: integrates the step function `S_N(S, .)^2`
//!   directly from the sorted arc endpoints.
//!
//! Since every endpoint is a multiple of `2^-128` and `S` is a multiple of
//! `2^-64`, both routes produce the same integer in units of `2^-128`.

use ethnum::{I256, U256};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{units_to_f64, Dyadic};
use crate::points::{Alpha, PointSet};

/// `psi_{S/2}(t) = max(S - |t|, 0)`, the self-convolution of the indicator
/// of `[-S/2, S/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TentKernel {
    pub s: Dyadic,
}

impl TentKernel {
    pub fn new(s: Dyadic) -> Self {
        TentKernel { s }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.s.to_f64() - t.abs()).max(0.0)
    }

    /// `sum_j psi(t + j)`; for `t` in `[0, 1)` only `j in {-1, 0}` can contribute.
    #[inline]
    pub fn periodized(&self, t: f64) -> f64 {
        let t = t - t.floor();
        self.eval(t) + self.eval(t - 1.0)
    }

    /// `||psi||_1 = S^2`.
    pub fn l1_norm(&self) -> f64 {
        let s = self.s.to_f64();
        s * s
    }

    /// `||psi||_2^2 = 2 S^3 / 3`.
    pub fn l2_norm_sq(&self) -> f64 {
        let s = self.s.to_f64();
        2.0 * s * s * s / 3.0
    }

    /// `||psi||_inf = psi(0) = S`.
    pub fn sup_norm(&self) -> f64 {
        self.s.to_f64()
    }
}

/// `sum_j psi_{S/2}(t + j)` for `t` in `[0, 1)`.
pub fn periodized_tent(s: Dyadic, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [0, 1)")));
    }
    Ok(TentKernel::new(s).periodized(t))
}

/// `S_N(S, y)`: number of points in `[y - S/2, y + S/2)` modulo one.
pub fn counting_function(points: &PointSet, s: Dyadic, y: u128) -> usize {
    let pts = points.as_slice();
    if pts.is_empty() || s.is_zero() {
        return 0;
    }
    if s.is_one() {
        return pts.len();
    }
    let h = s.half_phase();
    let lo = y.wrapping_sub(h);
    let hi = y.wrapping_add(h);
    let below = |v: u128| pts.partition_point(|&p| p < v);
    if lo < hi {
        below(hi) - below(lo)
    } else {
        // arc wraps through 0: [lo, 1) u [0, hi)
        pts.len() - below(lo) + below(hi)
    }
}

/// Exact number variance in units of `2^-128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactVariance(pub I256);

impl ExactVariance {
    pub fn to_f64(self) -> f64 {
        units_to_f64(self.0)
    }
}

/// `N S - N^2 S^2` in units of `2^-128`.
fn diagonal_units(n: usize, s: Dyadic) -> I256 {
    let n = U256::from(n as u128);
    let ns = n * s.units();
    let nk = n * U256::from(s.numerator());
    ns.as_i256() - (nk * nk).as_i256()
}

/// Sorted points unrolled onto `[0, 2)` (`y_{i+N} = y_i + 1`) with prefix sums.
///
/// Each unordered pair `{i, j}` appears once as a forward gap `y_j - y_i`
/// and once as `1 - (y_j - y_i)`; the periodized kernel of the pair is the
/// sum of `max(S - gap, 0)` over both, so
/// `I_off = 2 sum_i sum_{k=1}^{N-1} max(S - (y_{i+k} - y_i), 0)`.
/// The gaps grow with `k`, so each inner sum is a prefix of length `K_i`
/// whose end index is nondecreasing in `i`.
struct Unrolled {
    ext: Vec<U256>,
    prefix: Vec<U256>,
}

impl Unrolled {
    fn new(pts: &[u128]) -> Self {
        let n = pts.len();
        let one = U256::ONE << 128u32;
        let ext: Vec<U256> = pts
            .iter()
            .map(|&p| U256::from(p))
            .chain(pts.iter().map(|&p| U256::from(p) + one))
            .collect();
        let mut prefix = Vec::with_capacity(2 * n + 1);
        let mut acc = U256::ZERO;
        prefix.push(acc);
        for &e in &ext {
            acc += e;
            prefix.push(acc);
        }
        Unrolled { ext, prefix }
    }

    /// `I_off` in units of `2^-128`, for `0 < S < 1`.
    fn off_diagonal(&self, s_phase: u128) -> U256 {
        let n = self.ext.len() / 2;
        let s = U256::from(s_phase);
        let mut total = U256::ZERO;
        let mut end = 0usize; // last index inside the window of i
        for i in 0..n {
            let yi = self.ext[i];
            end = end.max(i);
            while end + 1 < i + n && self.ext[end + 1] - yi < s {
                end += 1;
            }
            let k = U256::from((end - i) as u128);
            if end > i {
                // sum_{j=i+1}^{end} (S - (y_j - y_i))
                let gaps = self.prefix[end + 1] - self.prefix[i + 1] - k * yi;
                total += k * s - gaps;
            }
        }
        total << 1u32
    }
}

fn pairwise_with(unrolled: Option<&Unrolled>, n: usize, s: Dyadic) -> ExactVariance {
    match (unrolled, s.phase()) {
        // S = 1: the periodized kernel is identically 1, so I_off = N(N-1)
        (Some(u), Some(phase)) if phase > 0 => {
            ExactVariance(diagonal_units(n, s) + u.off_diagonal(phase).as_i256())
        }
        _ => ExactVariance(I256::ZERO),
    }
}

/// Number variance via the pairwise kernel formula, exact.
pub fn variance_pairwise_exact(points: &PointSet, s: Dyadic) -> ExactVariance {
    if points.is_empty() || s.is_zero() || s.is_one() {
        return ExactVariance(I256::ZERO);
    }
    let unrolled = Unrolled::new(points.as_slice());
    pairwise_with(Some(&unrolled), points.len(), s)
}

/// [`variance_pairwise_exact`] for several lengths, sharing the sorted prefix sums.
pub fn variance_pairwise_many(points: &PointSet, lengths: &[Dyadic]) -> Vec<ExactVariance> {
    let unrolled = (!points.is_empty()).then(|| Unrolled::new(points.as_slice()));
    lengths
        .iter()
        .map(|&s| pairwise_with(unrolled.as_ref(), points.len(), s))
        .collect()
}

/// `V(N, S)` via `NS - N^2 S^2 + I_off`.
pub fn variance_pairwise(points: &PointSet, s: Dyadic) -> f64 {
    variance_pairwise_exact(points, s).to_f64()
}

/// Number variance by integrating `S_N(S, y)^2` over `y`, exact.
pub fn variance_sweep_exact(points: &PointSet, s: Dyadic) -> ExactVariance {
    let pts = points.as_slice();
    let n = pts.len();
    if n == 0 {
        return ExactVariance(I256::ZERO);
    }
    let h = s.half_phase();
    // y lies in (x - h, x + h]: opens at x - h, closes at x + h
    let mut events: Vec<(u128, i8)> = Vec::with_capacity(2 * n);
    for &x in pts {
        events.push((x.wrapping_sub(h), 1));
        events.push((x.wrapping_add(h), -1));
    }
    // closes before opens at equal coordinates
    events.sort_unstable();
    let mut count = counting_function(points, s, 0) as i64;
    let mut integral = U256::ZERO;
    let mut prev = U256::ZERO;
    for &(pos, delta) in &events {
        let pos = U256::from(pos);
        if pos > prev {
            let c2 = (count * count) as u128;
            integral += (pos - prev) * U256::from(c2);
            prev = pos;
        }
        count += delta as i64;
    }
    let one = U256::ONE << 128;
    let c2 = (count * count) as u128;
    integral += (one - prev) * U256::from(c2);
    let nk = U256::from(n as u128) * U256::from(s.numerator());
    ExactVariance(integral.as_i256() - (nk * nk).as_i256())
}

/// `V(N, S)` by direct integration over the window position.
pub fn variance_sweep(points: &PointSet, s: Dyadic) -> f64 {
    variance_sweep_exact(points, s).to_f64()
}

/// Where the points of a variance record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaTag {
    Fixed { alpha: Alpha },
    Random { seed: u64, replicate: u64 },
}

impl AlphaTag {
    /// Column value used in CSV output.
    pub fn label(&self) -> String {
        match self {
            AlphaTag::Fixed { alpha } => alpha.to_hex(),
            AlphaTag::Random { seed, replicate } => format!("random:{seed}:{replicate}"),
        }
    }

    pub fn parse_label(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("random:") {
            let (seed, rep) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(format!("bad random tag '{s}'")))?;
            let seed = seed.parse().map_err(|_| Error::parse(format!("bad seed in '{s}'")))?;
            let replicate = rep.parse().map_err(|_| Error::parse(format!("bad replicate in '{s}'")))?;
            return Ok(AlphaTag::Random { seed, replicate });
        }
        Ok(AlphaTag::Fixed {
            alpha: Alpha::from_hex(s)?,
        })
    }
}

/// One `(N, S, alpha, V)` observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRecord {
    pub n: usize,
    pub s: Dyadic,
    pub alpha: AlphaTag,
    pub v: f64,
    /// `V / (N S)`, absent when `S = 0`.
    pub ratio: Option<f64>,
}

impl VarianceRecord {
    pub fn new(n: usize, s: Dyadic, alpha: AlphaTag, v: f64) -> Self {
        let ns = n as f64 * s.to_f64();
        let ratio = if ns > 0.0 { Some(v / ns) } else { None };
        VarianceRecord { n, s, alpha, v, ratio }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dy(p: u128, q: u128) -> Dyadic {
        Dyadic::from_ratio(p, q).unwrap()
    }

    #[test]
    fn tent_examples() {
        assert_eq!(periodized_tent(dy(1, 2), 0.0).unwrap(), 0.5);
        assert_eq!(periodized_tent(dy(1, 4), 0.25).unwrap(), 0.0);
        assert_eq!(periodized_tent(dy(1, 2), 0.25).unwrap(), 0.25);
        // S > 1/2: both images contribute
        assert_eq!(periodized_tent(dy(3, 4), 0.5).unwrap(), 0.5);
        assert!(periodized_tent(dy(1, 2), 1.0).is_err());
        let k = TentKernel::new(dy(1, 2));
        assert_eq!(k.sup_norm(), k.eval(0.0));
    }

    #[test]
    fn counting_examples() {
        let pts = PointSet::from_f64(&[0.1, 0.2, 0.9]);
        let s = Dyadic::from_f64_exact(0.4).unwrap();
        // arc [-0.2, 0.2): holds 0.9 and 0.1, the right endpoint 0.2 is open
        assert_eq!(counting_function(&pts, s, 0), 2);
        let one = PointSet::from_f64(&[0.5]);
        for y in [0u128, 1 << 100, u128::MAX] {
            assert_eq!(counting_function(&one, Dyadic::ONE, y), 1);
        }
        assert_eq!(counting_function(&PointSet::default(), dy(1, 2), 0), 0);
        // left endpoint is closed
        let edge = PointSet::from_f64(&[0.75]);
        assert_eq!(counting_function(&edge, dy(1, 2), 1u128 << 127), 0);
        assert_eq!(counting_function(&edge, dy(1, 2), 0), 1);
    }

    #[test]
    fn pairwise_examples() {
        let single = PointSet::from_f64(&[0.3]);
        assert_eq!(variance_pairwise(&single, dy(1, 4)), 3.0 / 16.0);
        let spaced = PointSet::from_f64(&[0.0, 0.5]);
        assert_eq!(variance_pairwise(&spaced, dy(1, 2)), 0.0);
        let coincident = PointSet::from_f64(&[0.0, 0.0]);
        assert_eq!(variance_pairwise(&coincident, dy(1, 2)), 1.0);
    }

    #[test]
    fn sweep_examples() {
        let single = PointSet::from_f64(&[0.3]);
        assert_eq!(variance_sweep(&single, dy(1, 4)), 3.0 / 16.0);
        let spaced = PointSet::from_f64(&[0.0, 0.5]);
        assert_eq!(variance_sweep(&spaced, dy(1, 2)), 0.0);
        // S_N is 100 on half the circle and 0 elsewhere: 5000 - (200/4)^2
        let mut v = vec![0.0; 100];
        v.extend(std::iter::repeat_n(0.5, 100));
        let two_clusters = PointSet::from_f64(&v);
        assert_eq!(variance_sweep(&two_clusters, dy(1, 4)), 2500.0);
        assert_eq!(variance_pairwise(&two_clusters, dy(1, 4)), 2500.0);
    }

    #[test]
    fn degenerate_lengths() {
        let pts = PointSet::from_f64(&[0.1, 0.1, 0.35, 0.8]);
        for s in [Dyadic::ZERO, Dyadic::ONE] {
            assert_eq!(variance_pairwise_exact(&pts, s).0, I256::ZERO);
            assert_eq!(variance_sweep_exact(&pts, s).0, I256::ZERO);
        }
    }

    #[test]
    fn record_ratio() {
        let tag = AlphaTag::Fixed { alpha: Alpha(0) };
        assert_eq!(VarianceRecord::new(4, Dyadic::ZERO, tag, 0.0).ratio, None);
        assert_eq!(VarianceRecord::new(1, dy(1, 4), tag, 0.1875).ratio, Some(0.75));
        let t = AlphaTag::Random { seed: 7, replicate: 3 };
        assert_eq!(AlphaTag::parse_label(&t.label()).unwrap(), t);
    }
}
