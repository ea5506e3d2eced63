//! Random-point and Kronecker baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Budget, Error, Result};
use crate::fixed::Dyadic;
use crate::points::{continued_fraction_convergents, dilate_mod1, Alpha, PointSet};
use crate::variance::{variance_pairwise, variance_pairwise_many, AlphaTag, VarianceRecord};

/// Default bridge grid size.
pub const DEFAULT_BRIDGE_GRID: usize = 1 << 14;

/// Deterministic ChaCha stream keyed by `(seed, domain)` and selected by `stream`.
pub fn rng_stream(seed: u64, domain: &str, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let tag = domain.as_bytes();
    let len = tag.len().min(24);
    key[8..8 + len].copy_from_slice(&tag[..len]);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Standard normal draw by inverse CDF on a 53-bit uniform in `(0, 1)`.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R, normal: &Normal) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0);
    normal.inverse_cdf(u)
}

/// Reproducible i.i.d. uniform points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSample {
    pub seed: u64,
    pub replicate: u64,
    pub points: PointSet,
}

impl RandomSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `N` uniform points from stream 0 of `seed`.
pub fn sample_uniform(n: usize, seed: u64) -> RandomSample {
    sample_uniform_replicate(n, seed, 0)
}

/// `N` uniform points from the given replicate stream of `seed`.
pub fn sample_uniform_replicate(n: usize, seed: u64, replicate: u64) -> RandomSample {
    let mut rng = rng_stream(seed, "uniform", replicate);
    let points = (0..n).map(|_| rng.random::<u128>()).collect();
    RandomSample {
        seed,
        replicate,
        points: PointSet::from_phases(points),
    }
}

/// Brownian bridge sampled at `t_k = k / M`, `k = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgePath {
    values: Vec<f64>,
}

impl BridgePath {
    /// Grid size `M`.
    pub fn grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `B(k / M)`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }
}

/// Bridge path number `index` for `seed` on a grid of `M` cells.
pub fn bridge_path(m: usize, seed: u64, index: u64) -> Result<BridgePath> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::domain(format!("grid size M = {m} must be a power of two >= 2")));
    }
    let normal = Normal::standard();
    let mut rng = rng_stream(seed, "bridge", index);
    let step = (1.0 / m as f64).sqrt();
    let mut w = Vec::with_capacity(m + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for _ in 0..m {
        acc += step * standard_normal(&mut rng, &normal);
        w.push(acc);
    }
    let w1 = acc;
    let mut values: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(k, &wk)| wk - (k as f64 / m as f64) * w1)
        .collect();
    values[0] = 0.0;
    values[m] = 0.0;
    Ok(BridgePath { values })
}

/// `N / M sum_k (B(t_k + S mod 1) - B(t_k))^2`.
pub fn bridge_functional(path: &BridgePath, s: Dyadic, n: usize) -> Result<f64> {
    let m = path.grid();
    // S M = num M / 2^64 must be an integer
    let scaled = s.numerator() * m as u128;
    if !scaled.is_multiple_of(1u128 << 64) {
        return Err(Error::domain(format!(
            "S = {s} is not a multiple of the grid spacing; finest admissible S is 1/{m}"
        )));
    }
    let shift = (scaled >> 64) as usize % m;
    let b = &path.values;
    let sum: f64 = (0..m)
        .map(|k| {
            let d = b[(k + shift) % m] - b[k];
            d * d
        })
        .sum();
    Ok(n as f64 * sum / m as f64)
}

/// `E[V(N, S)] = N S (1 - S)` for i.i.d. uniform points.
pub fn expected_random_variance(n: usize, s: Dyadic) -> f64 {
    let s = s.to_f64();
    n as f64 * s * (1.0 - s)
}

/// Summary of replicate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub stddev: f64,
    pub std_error: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                stddev: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = if count > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        let stddev = var.sqrt();
        Summary {
            count,
            mean,
            stddev,
            std_error: stddev / (count as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomExperiment {
    pub n: usize,
    pub s: Dyadic,
    pub records: Vec<VarianceRecord>,
    pub summary: Summary,
    /// `N S (1 - S)`.
    pub expected: f64,
}

/// Estimated kernel pairs for one `(N, S)` cell: `N (N - 1) / 2 * min(1, 2S)`.
pub fn pair_estimate(n: usize, s: Dyadic) -> u128 {
    let pairs = (n as u128) * (n as u128).saturating_sub(1) / 2;
    let twice = (s.numerator() * 2).min(1u128 << 64);
    ((pairs as f64) * (twice as f64 / 18_446_744_073_709_551_616.0)).ceil() as u128
}

/// `V(N, S)` over fresh uniform samples, one per replicate.
pub fn random_variance_experiment(
    n: usize,
    s: Dyadic,
    replicates: u64,
    seed: u64,
    budget: &Budget,
) -> Result<RandomExperiment> {
    budget.check_pairs("random_variance_experiment", pair_estimate(n, s), None)?;
    let records: Vec<VarianceRecord> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let sample = sample_uniform_replicate(n, seed, r);
            let v = variance_pairwise(&sample.points, s);
            VarianceRecord::new(n, s, AlphaTag::Random { seed, replicate: r }, v)
        })
        .collect();
    let values: Vec<f64> = records.iter().map(|r| r.v).collect();
    Ok(RandomExperiment {
        n,
        s,
        summary: Summary::of(&values),
        records,
        expected: expected_random_variance(n, s),
    })
}

/// One row of the exploratory scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Record {
    pub n: usize,
    pub s: Dyadic,
    pub clamped: bool,
    /// `max_r V / (N S)`, absent when `S = 0`.
    pub max_ratio: Option<f64>,
    pub replicates: u64,
}

/// `S = min(1/2, a / ln ln N)` rounded down to the dyadic grid, with the clamp flag.
pub fn prop2_length(n: usize, a: f64) -> (Dyadic, bool) {
    if a <= 0.0 {
        return (Dyadic::ZERO, false);
    }
    let lnln = (n as f64).ln().ln();
    if lnln.is_nan() || lnln <= 2.0 * a {
        return (Dyadic::HALF, true);
    }
    (Dyadic::floor_f64(a / lnln), false)
}

/// For each `N`, the largest `V / (N S)` over uniform replicates at `S = a / ln ln N`.
pub fn prop2_exceedance_scan(
    n_list: &[usize],
    a: f64,
    replicates: u64,
    seed: u64,
    budget: &Budget,
) -> Result<Vec<Prop2Record>> {
    n_list
        .iter()
        .map(|&n| {
            let (s, clamped) = prop2_length(n, a);
            let max_ratio = if s.is_zero() || n == 0 {
                None
            } else {
                let exp = random_variance_experiment(n, s, replicates, seed, budget)?;
                exp.records
                    .iter()
                    .filter_map(|r| r.ratio)
                    .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
            };
            Ok(Prop2Record {
                n,
                s,
                clamped,
                max_ratio,
                replicates,
            })
        })
        .collect()
}

/// `V(N, S, alpha)` for the linear sequence `x_n = n`.
pub fn kronecker_variance(alpha: Alpha, n: usize, s: Dyadic) -> Result<f64> {
    let terms: Vec<i64> = (1..=n as i64).collect();
    let points = dilate_mod1(&terms, alpha)?;
    Ok(variance_pairwise(&points, s))
}

/// Variance profile at one convergent denominator `N = q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerRecord {
    pub n: usize,
    pub p: u128,
    pub values: Vec<f64>,
    pub max_v: f64,
    pub s_at_max: Dyadic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerReport {
    pub alpha: Alpha,
    pub s_grid: Vec<Dyadic>,
    pub records: Vec<KroneckerRecord>,
    /// Set when the continued fraction ended before reaching `max_n`.
    pub truncated: bool,
}

/// `max_S V(q, S, alpha)` for every convergent denominator `q <= max_n`.
pub fn kronecker_experiment(alpha: Alpha, s_grid: &[Dyadic], max_n: usize) -> Result<KroneckerReport> {
    if s_grid.is_empty() {
        return Err(Error::EmptyInput("S grid"));
    }
    let conv = continued_fraction_convergents(alpha, 256);
    let mut records = Vec::new();
    let mut reached = false;
    for &(p, q) in &conv.pairs {
        if q > max_n as u128 {
            reached = true;
            break;
        }
        let n = q as usize;
        let terms: Vec<i64> = (1..=n as i64).collect();
        let points = dilate_mod1(&terms, alpha)?;
        let values: Vec<f64> = variance_pairwise_many(&points, s_grid)
            .into_iter()
            .map(|v| v.to_f64())
            .collect();
        let (imax, &max_v) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        records.push(KroneckerRecord {
            n,
            p,
            values,
            max_v,
            s_at_max: s_grid[imax],
        });
    }
    Ok(KroneckerReport {
        alpha,
        s_grid: s_grid.to_vec(),
        records,
        truncated: conv.truncated && !reached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dy(p: u128, q: u128) -> Dyadic {
        Dyadic::from_ratio(p, q).unwrap()
    }

    #[test]
    fn uniform_sampling() {
        assert_eq!(sample_uniform(50, 9), sample_uniform(50, 9));
        assert_ne!(sample_uniform(50, 9), sample_uniform(50, 10));
        assert_ne!(sample_uniform_replicate(50, 9, 1).points, sample_uniform(50, 9).points);
        assert!(sample_uniform(0, 1).is_empty());
        let n = 100_000;
        let s = sample_uniform(n, 2024);
        let mean = s.points.to_f64().iter().sum::<f64>() / n as f64;
        let tol = 3.0 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < tol, "mean {mean}");
    }

    #[test]
    fn bridge_endpoints_and_functional() {
        let p = bridge_path(64, 3, 0).unwrap();
        assert_eq!((p.at(0), p.at(64)), (0.0, 0.0));
        assert_eq!(bridge_functional(&p, Dyadic::ZERO, 10).unwrap(), 0.0);
        assert_eq!(bridge_functional(&p, Dyadic::ONE, 10).unwrap(), 0.0);
        assert!(bridge_functional(&p, dy(1, 128), 10).is_err());
        assert!(bridge_path(48, 1, 0).is_err());
        assert_eq!(bridge_path(64, 3, 0).unwrap(), p);
    }

    #[test]
    fn random_experiment_edges() {
        let b = Budget::default();
        let one = random_variance_experiment(1, dy(1, 4), 5, 1, &b).unwrap();
        assert!(one.records.iter().all(|r| r.v == 0.1875));
        let zero = random_variance_experiment(40, Dyadic::ZERO, 5, 1, &b).unwrap();
        assert!(zero.records.iter().all(|r| r.v == 0.0 && r.ratio.is_none()));
    }

    #[test]
    fn prop2_lengths() {
        assert_eq!(prop2_length(1000, 0.0), (Dyadic::ZERO, false));
        assert_eq!(prop2_length(1000, 35.0), (Dyadic::HALF, true));
        let (s, clamped) = prop2_length(1 << 40, 0.5);
        assert!(!clamped && s.to_f64() < 0.5);
        let rows = prop2_exceedance_scan(&[100], 0.0, 2, 1, &Budget::default()).unwrap();
        assert_eq!(rows[0].max_ratio, None);
    }

    #[test]
    fn kronecker_examples() {
        let half = Alpha::from_ratio(1, 2).unwrap();
        assert_eq!(kronecker_variance(half, 100, dy(1, 4)).unwrap(), 625.0);
        for s in [dy(1, 64), dy(1, 2), dy(63, 64)] {
            let v = kronecker_variance(Alpha::golden(), 1, s).unwrap();
            let x = s.to_f64();
            assert_eq!(v, x - x * x);
        }
        let grid: Vec<Dyadic> = (1..64).map(|k| dy(k, 64)).collect();
        let rep = kronecker_experiment(Alpha::golden(), &grid, 100).unwrap();
        let ns: Vec<usize> = rep.records.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    }
}
