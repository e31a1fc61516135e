//! Path-space machinery of the walk family: decimation, exact path weights,
//! the skeleton law, a recursive exact sampler for the excursion depth
//! R_N - 2^N, and a truncated brute-force enumeration for small levels.
//!
//! The structural fact everything rests on: a level-(N+1) positive-exit walk
//! decimates to a level-1 skeleton (0, ε₁, 0, ..., 0, 1, 2) whose 2m legs
//! are independent level-N positive-exit walks (after recentering and sign
//! flip), and the weight multiplies accordingly. Only the minimum of the
//! path matters for the range, which is what the depth recursion tracks.

use crate::error::{Error, Result};
use crate::mobius::x_param;
use crate::rng::sample_rng;
use rand::Rng;
use std::collections::BTreeMap;

/// A nearest-neighbor lattice path started at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePath {
    pub points: Vec<i64>,
}

impl LatticePath {
    pub fn new(points: Vec<i64>) -> Result<LatticePath> {
        if points.first() != Some(&0) {
            return Err(Error::Domain("path must start at 0".into()));
        }
        for w in points.windows(2) {
            if (w[1] - w[0]).abs() != 1 {
                return Err(Error::Domain(format!(
                    "step {} -> {} is not nearest-neighbor",
                    w[0], w[1]
                )));
            }
        }
        Ok(LatticePath { points })
    }

    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The level-1 skeleton (0, ε₁, 0, ..., 0, ε_{m-1}, 0, 1, 2): m pairs, the
/// last always (+1, exit), signs of the first m-1 free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub pairs: u64,
    pub signs: Vec<i8>,
}

impl Skeleton {
    pub fn to_path(&self) -> LatticePath {
        let mut points = Vec::with_capacity(2 * self.pairs as usize + 1);
        points.push(0);
        for s in &self.signs {
            points.push(*s as i64);
            points.push(0);
        }
        points.push(1);
        points.push(2);
        LatticePath { points }
    }
}

/// Monte Carlo counts of the excursion depth R_N - 2^N at one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthHistogram {
    pub level: u32,
    /// depth -> count, zero counts omitted
    pub counts: BTreeMap<u64, u64>,
    pub total: u64,
    pub seed: u64,
}

impl DepthHistogram {
    /// Pools two histograms of the same level (keeps the left seed; used for
    /// merging worker shards of one run).
    pub fn merged(mut self, other: &DepthHistogram) -> Result<DepthHistogram> {
        if self.level != other.level {
            return Err(Error::Domain(format!(
                "cannot merge levels {} and {}",
                self.level, other.level
            )));
        }
        for (d, c) in &other.counts {
            *self.counts.entry(*d).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(self)
    }
}

/// Coarse path of successive first hits of new points of 2^M·Z, divided by
/// 2^M ("new" = different from the previously recorded one). M = 0 is the
/// identity; paths never crossing the coarse lattice collapse to (0).
pub fn decimate(path: &LatticePath, m: u32) -> LatticePath {
    if m == 0 {
        return path.clone();
    }
    let step = 1i64 << m;
    let mut points = vec![0i64];
    let mut current = 0i64;
    for &p in &path.points[1..] {
        if p % step == 0 && p != current {
            points.push(p / step);
            current = p;
        }
    }
    LatticePath { points }
}

/// Hitting times backing `decimate`, kept separate so the weight recursion
/// can slice the fine path into legs.
fn coarse_times(path: &LatticePath, m: u32) -> Vec<usize> {
    let step = 1i64 << m;
    let mut times = vec![0usize];
    let mut current = 0i64;
    for (t, &p) in path.points.iter().enumerate().skip(1) {
        if p % step == 0 && p != current {
            times.push(t);
            current = p;
        }
    }
    times
}

fn check_positive_exit(n: u32, path: &LatticePath) -> Result<()> {
    let bound = 1i64 << n;
    let last = path.points.len() - 1;
    for (t, &p) in path.points.iter().enumerate() {
        if t < last && p.abs() >= bound {
            return Err(Error::Domain(format!(
                "path hits ±2^{n} at time {t} before its end"
            )));
        }
    }
    if path.points[last] != bound {
        return Err(Error::Domain(format!(
            "path must end at +2^{n}, ends at {}",
            path.points[last]
        )));
    }
    Ok(())
}

/// Exact probability of a single level-N positive-exit path, by recursive
/// decomposition into the skeleton and its legs. Base level: a skeleton of
/// length L has weight u^{L-2}·x_u^{L-1} (with 0^0 = 1, so the u = 0 law is
/// the point mass on the straight path).
pub fn path_weight(u: f64, n: u32, path: &LatticePath) -> Result<f64> {
    if !(u >= 0.0) || n == 0 {
        return Err(Error::Domain("path_weight needs u ≥ 0 and N ≥ 1".into()));
    }
    check_positive_exit(n, path)?;
    if n == 1 {
        let l = path.len() as i32;
        let x = x_param(u);
        // 0^0 = 1 convention: the L = 2 path carries weight x_u at every u
        let uw = if l == 2 { 1.0 } else { u.powi(l - 2) };
        return Ok(uw * x.powi(l - 1));
    }
    let times = coarse_times(path, n - 1);
    let scale = 1i64 << (n - 1);
    let coarse: Vec<i64> = times.iter().map(|&t| path.points[t] / scale).collect();
    let mut weight = path_weight(u, 1, &LatticePath::new(coarse)?)?;
    for legs in times.windows(2) {
        let (t0, t1) = (legs[0], legs[1]);
        let base = path.points[t0];
        let sign = (path.points[t1] - base).signum();
        let leg: Vec<i64> = path.points[t0..=t1]
            .iter()
            .map(|&p| sign * (p - base))
            .collect();
        weight *= path_weight(u, n - 1, &LatticePath::new(leg)?)?;
    }
    Ok(weight)
}

/// Geometric pair count with success x_u, by per-trial Bernoulli draws
/// (exact law, no transcendentals, fixed stream layout).
fn sample_pairs(x: f64, rng: &mut impl Rng) -> u64 {
    let mut m = 1u64;
    while rng.random::<f64>() >= x {
        m += 1;
    }
    m
}

/// One skeleton from the level-1 law: P(pairs = j) = x_u(1-x_u)^{j-1},
/// signs independent uniform.
pub fn sample_skeleton(u: f64, rng: &mut impl Rng) -> Skeleton {
    let pairs = sample_pairs(x_param(u), rng);
    let signs = (1..pairs)
        .map(|_| if rng.random::<bool>() { 1i8 } else { -1 })
        .collect();
    Skeleton { pairs, signs }
}

pub const MAX_SAMPLE_LEVEL: u32 = 20;

/// Exact draw of the excursion depth D_N (so R_N = 2^N + D_N).
///
/// Recursion over the skeleton: each of the m-1 oscillation pairs hides one
/// independent level-(N-1) sub-walk — below 0 directly for an up pair, or
/// beyond -2^{N-1} for a down pair (whose recovery leg dips further) — and
/// the final exit pair hides one more. The depth is the maximum dip:
/// D_N = max(upᵢ: D⁽ⁱ⁾, downᵢ: 2^{N-1} + D⁽ⁱ⁾, final: D⁽ᵐ⁾) with all D⁽ⁱ⁾
/// independent level-(N-1) depths and D_0 = 0.
pub fn sample_depth(u: f64, n: u32, rng: &mut impl Rng) -> Result<u64> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("sample_depth needs u ≥ 0, got {u}")));
    }
    if n > MAX_SAMPLE_LEVEL {
        return Err(Error::SizeGuard {
            what: "sample level",
            got: n as u64,
            limit: MAX_SAMPLE_LEVEL as u64,
        });
    }
    Ok(depth_rec(x_param(u), n, rng))
}

fn depth_rec(x: f64, n: u32, rng: &mut impl Rng) -> u64 {
    if n == 0 {
        return 0;
    }
    let m = sample_pairs(x, rng);
    let mut depth = 0u64;
    for _ in 1..m {
        let down = !rng.random::<bool>();
        let sub = depth_rec(x, n - 1, rng);
        let dip = if down { (1u64 << (n - 1)) + sub } else { sub };
        depth = depth.max(dip);
    }
    depth.max(depth_rec(x, n - 1, rng))
}

pub const DEFAULT_BUDGET: f64 = 1e9;

/// `simulate_ranges` with the default recursion budget of 10⁹ expected calls.
pub fn simulate_ranges(
    u: f64,
    n: u32,
    count: u64,
    seed: u64,
    workers: usize,
) -> Result<DepthHistogram> {
    simulate_ranges_budgeted(u, n, count, seed, workers, DEFAULT_BUDGET)
}

/// Histogram of `count` independent depths, deterministic in
/// (u, n, count, seed) and identical for every worker count: sample i always
/// draws from the stream keyed (seed, i), workers only partition the index
/// range. The budget guards count·(1/x_u)^N, the expected recursion size.
pub fn simulate_ranges_budgeted(
    u: f64,
    n: u32,
    count: u64,
    seed: u64,
    workers: usize,
    budget: f64,
) -> Result<DepthHistogram> {
    if count == 0 {
        return Err(Error::Domain("simulate_ranges needs count ≥ 1".into()));
    }
    if workers == 0 {
        return Err(Error::Domain("simulate_ranges needs workers ≥ 1".into()));
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("simulate_ranges needs u ≥ 0, got {u}")));
    }
    if n > MAX_SAMPLE_LEVEL {
        return Err(Error::SizeGuard {
            what: "sample level",
            got: n as u64,
            limit: MAX_SAMPLE_LEVEL as u64,
        });
    }
    let x = x_param(u);
    let estimate = count as f64 * (1.0 / x).powi(n as i32);
    if estimate > budget {
        return Err(Error::Budget { estimate, budget });
    }

    let workers = workers.min(count as usize).max(1);
    let chunk = count.div_ceil(workers as u64);
    let mut shards: Vec<BTreeMap<u64, u64>> = Vec::with_capacity(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = w as u64 * chunk;
                let hi = (lo + chunk).min(count);
                scope.spawn(move || {
                    let mut local: BTreeMap<u64, u64> = BTreeMap::new();
                    for i in lo..hi {
                        let mut rng = sample_rng(seed, i);
                        let d = depth_rec(x, n, &mut rng);
                        *local.entry(d).or_insert(0) += 1;
                    }
                    local
                })
            })
            .collect();
        for h in handles {
            shards.push(h.join().expect("sampler thread panicked"));
        }
    });

    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for shard in shards {
        for (d, c) in shard {
            *counts.entry(d).or_insert(0) += c;
        }
    }
    Ok(DepthHistogram {
        level: n,
        counts,
        total: count,
        seed,
    })
}

/// Truncated exact enumeration of the depth law at N ∈ {1, 2}: sums the
/// weights of every skeleton/leg combination with at most m_max pairs per
/// hierarchy level. Returns (cdf over depths 0..2^N-1, tail_bound) where
/// tail_bound is exactly the un-enumerated mass 1 - cdf[2^N - 1].
///
/// Level 1 is the geometric sum over skeletons directly; level 2 aggregates
/// legs through the same pair structure the sampler uses — each of the m-1
/// oscillation pairs contributes a depth-constrained leg and an
/// unconstrained one, the exit pair likewise:
/// G₂(k) = Σ_m u^{2m-2} x^{2m-1} [(G₁(k) + G₁(k-2))·T]^{m-1} · G₁(k)·T
/// with T the truncated total level-1 mass and G₁ clamped to [0, T].
pub fn enumerate_exact(u: f64, n: u32, m_max: u32) -> Result<(Vec<f64>, f64)> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("enumerate_exact needs u ≥ 0, got {u}")));
    }
    if !(1..=2).contains(&n) {
        return Err(Error::Domain(format!(
            "enumerate_exact supports N in {{1, 2}}, got {n}"
        )));
    }
    if m_max == 0 {
        return Err(Error::Domain("enumerate_exact needs m_max ≥ 1".into()));
    }
    let x = x_param(u);
    let uux = u * u * x * x;

    // level 1: the straight skeleton has depth 0 and weight u^{2m-2}x^{2m-1}
    // once per m; the other 2^{m-1} - 1 sign words have depth 1
    let mut g1 = [0.0f64; 2];
    let mut w_straight = x; // u^{2m-2} x^{2m-1} at m = 1
    let mut w_total = x; // times 2^{m-1}
    for _ in 0..m_max {
        g1[0] += w_straight;
        g1[1] += w_total;
        w_straight *= uux;
        w_total *= 2.0 * uux;
    }
    if n == 1 {
        let tail = 1.0 - g1[1];
        return Ok((g1.to_vec(), tail));
    }

    let t1 = g1[1];
    let level1 = |k: i64| -> f64 {
        match k {
            i64::MIN..=-1 => 0.0,
            0 => g1[0],
            _ => g1[1],
        }
    };
    let mut g2 = vec![0.0f64; 4];
    for (k, slot) in g2.iter_mut().enumerate() {
        let constrained = level1(k as i64) * t1;
        let pair = (level1(k as i64) + level1(k as i64 - 2)) * t1;
        let mut skel = x; // u^{2m-2} x^{2m-1}
        let mut pair_pow = 1.0; // pair^{m-1}
        for _ in 0..m_max {
            *slot += skel * pair_pow * constrained;
            skel *= uux;
            pair_pow *= pair;
        }
    }
    let tail = 1.0 - g2[3];
    Ok((g2, tail))
}
