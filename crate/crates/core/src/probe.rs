//! Monte Carlo probes of (ε, n)-closeness, D-sets, good pairs and the Ω₁
//! event for skew products over a Markov shift with a toral fiber.
//!
//! Points carry explicit finite symbol arrays so that two orbits can be
//! compared coordinate by coordinate. The metric on Σ × 𝕋ⁿ is the maximum of
//! the symbolic distance 2^{−j} (j the smallest |k| with ω_k ≠ ω′_k) and the
//! Euclidean distance on the torus.

use crate::base::{BaseSystem, MarkovShift};
use crate::cocycle::{norm, Cocycle, CocycleWalk, SymbolCocycle};
use crate::error::{invalid, Error, Result};
use crate::fiber::{FiberAction, ToralZdAction};
use crate::parallel::fold;
use crate::rng::{derive_seed, stream, Rng};
use crate::skew::SkewSystem;
use crate::stats::Frequency;
use crate::torus::TorusPoint;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessParams {
    pub epsilon: f64,
    pub n: u64,
}

impl ClosenessParams {
    pub fn new(epsilon: f64, n: u64) -> Result<Self> {
        if !(epsilon > 0.0) || n == 0 {
            return invalid("closeness needs epsilon > 0 and n >= 1");
        }
        Ok(Self { epsilon, n })
    }
}

/// A point (ω, y) with ω stored as `symbols`, where `symbols[origin]` is ω_0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePoint {
    pub symbols: Vec<u8>,
    pub origin: usize,
    pub y: TorusPoint,
}

impl ProbePoint {
    /// A stationary sequence ω_{−past..future} together with a uniform y.
    pub fn sample(shift: &MarkovShift, past: usize, future: usize, fiber_dim: usize, rng: &mut Rng) -> Self {
        let symbols = shift.sample_path(past + 1 + future, rng);
        Self { symbols, origin: past, y: TorusPoint::uniform(fiber_dim, rng) }
    }

    fn symbol(&self, k: i64) -> Option<u8> {
        let idx = self.origin as i64 + k;
        (idx >= 0).then(|| self.symbols.get(idx as usize).copied()).flatten()
    }

    fn future_len(&self) -> u64 {
        (self.symbols.len() - self.origin) as u64
    }
}

/// The pieces of a skew system that the probe works with.
#[derive(Debug, Clone, Copy)]
pub struct ProbeSystem<'a> {
    pub shift: &'a MarkovShift,
    pub cocycle: &'a SymbolCocycle,
    pub fiber: &'a ToralZdAction,
}

impl<'a> ProbeSystem<'a> {
    pub fn from_skew(sys: &'a SkewSystem) -> Result<Self> {
        match (&sys.base, &sys.cocycle, &sys.fiber) {
            (BaseSystem::Markov(shift), Cocycle::Symbol(cocycle), FiberAction::Toral(fiber)) => {
                Ok(Self { shift, cocycle, fiber })
            }
            _ => invalid("probes need a Markov base, a symbol cocycle and a toral fiber"),
        }
    }

    /// Diameter of Σ × 𝕋ⁿ under the max metric.
    pub fn diameter(&self) -> f64 {
        (0.5 * (self.fiber.dim() as f64).sqrt()).max(1.0)
    }

    fn check(&self, p: &ProbePoint, n: u64) -> Result<()> {
        if p.y.dim() != self.fiber.dim() {
            return invalid("fiber point has the wrong dimension");
        }
        if p.origin + 1 < self.cocycle.window || p.future_len() < n {
            return invalid(format!("symbol array too short for {n} steps"));
        }
        if p.symbols.iter().any(|&s| s as usize >= self.shift.alphabet()) {
            return invalid("symbol outside the alphabet");
        }
        Ok(())
    }

    /// Fiber orbit y_1, …, y_n.
    fn fiber_orbit(&self, p: &ProbePoint, n: u64) -> Result<Vec<TorusPoint>> {
        let w = self.cocycle.window;
        let mut y = p.y;
        let mut out = Vec::with_capacity(n as usize);
        for i in 0..n as usize {
            let pos = p.origin + i;
            let history = p.symbols[pos + 1 - w..=pos].iter().fold(0u128, |h, &s| (h << 8) | s as u128);
            y = self.fiber.apply(self.cocycle.value(self.cocycle.index(history)), &y)?;
            out.push(y);
        }
        Ok(out)
    }
}

/// Offsets k (relative to ω_0) where two symbol arrays disagree, in increasing order.
fn disagreements(a: &ProbePoint, b: &ProbePoint) -> Vec<i64> {
    let lo = -(a.origin.min(b.origin) as i64);
    let hi = a.future_len().min(b.future_len()) as i64;
    (lo..hi).filter(|&k| a.symbol(k) != b.symbol(k)).collect()
}

/// Symbolic distance between σ^i ω and σ^i ω′ given their disagreement set.
fn symbolic_distance(diff: &[i64], i: i64) -> f64 {
    let at = diff.partition_point(|&k| k < i);
    let gap = [at.checked_sub(1), Some(at)]
        .into_iter()
        .flatten()
        .filter_map(|j| diff.get(j))
        .map(|&k| (k - i).unsigned_abs())
        .min();
    gap.map_or(0.0, |g| 0.5f64.powi(g.min(1100) as i32))
}

fn close_count(sys: &ProbeSystem, params: &ClosenessParams, p: &ProbePoint, q: &ProbePoint) -> Result<u64> {
    let diff = disagreements(p, q);
    let yp = sys.fiber_orbit(p, params.n)?;
    let yq = sys.fiber_orbit(q, params.n)?;
    let mut count = 0;
    for (i, (a, b)) in yp.iter().zip(&yq).enumerate() {
        let d = symbolic_distance(&diff, i as i64 + 1).max(a.distance(b));
        count += u64::from(d <= params.epsilon);
    }
    Ok(count)
}

fn is_close_checked(sys: &ProbeSystem, params: &ClosenessParams, p: &ProbePoint, q: &ProbePoint) -> Result<bool> {
    Ok(close_count(sys, params, p, q)? as f64 >= (1.0 - params.epsilon) * params.n as f64)
}

/// (ε, n)-closeness: the orbits are within ε of each other at no fewer than
/// (1 − ε)n of the times 1, …, n.
pub fn is_close(params: &ClosenessParams, p: &ProbePoint, q: &ProbePoint, sys: &SkewSystem) -> Result<bool> {
    let probe = ProbeSystem::from_skew(sys)?;
    probe.check(p, params.n)?;
    probe.check(q, params.n)?;
    is_close_checked(&probe, params, p, q)
}

/// Draw ω_{−1}, ω_{−2}, … from the time-reversed chain so that the past is
/// distributed as the stationary past conditioned on ω_0.
fn resample_past(shift: &MarkovShift, omega: &ProbePoint, rng: &mut Rng) -> ProbePoint {
    let pi = shift.stationary();
    let p = shift.transition();
    let mut out = omega.clone();
    for idx in (0..omega.origin).rev() {
        let next = out.symbols[idx + 1] as usize;
        let weights: Vec<f64> = (0..pi.len()).map(|a| pi[a] * p[a][next]).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for (a, &w) in weights.iter().enumerate() {
            if u < w {
                pick = a;
                break;
            }
            u -= w;
        }
        out.symbols[idx] = pick as u8;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DSetEstimate {
    pub epsilon: f64,
    pub n: u64,
    pub candidates: u64,
    /// ν-frequency of y for which some candidate ω′ certifies closeness.
    pub estimate: Frequency,
    /// Always true: only finitely many ω′ are tried.
    pub lower_bound: bool,
}

/// Lower estimate of ν{y : (ω, y) and (ω′, y′) are (ε, n)-close for some ω′}.
///
/// The candidates are ω itself followed by `candidates − 1` copies of ω with
/// the past resampled given ω_0. They are drawn once per call.
#[allow(clippy::too_many_arguments)]
pub fn d_set_measure(
    sys: &SkewSystem,
    omega: &ProbePoint,
    y_prime: &TorusPoint,
    params: &ClosenessParams,
    samples: u64,
    candidates: u64,
    seed: u64,
    workers: usize,
) -> Result<DSetEstimate> {
    let probe = ProbeSystem::from_skew(sys)?;
    probe.check(omega, params.n)?;
    if samples == 0 || candidates == 0 {
        return invalid("samples and candidates must be positive");
    }
    let mut rng = stream(derive_seed(seed, "dset-candidates"), 0);
    let pool: Vec<ProbePoint> = (0..candidates)
        .map(|c| {
            let mut w = if c == 0 { omega.clone() } else { resample_past(probe.shift, omega, &mut rng) };
            w.y = *y_prime;
            w
        })
        .collect();
    let dim = probe.fiber.dim();
    let hits = fold(
        workers,
        samples,
        || 0u64,
        |acc, i| {
            let mut rng = stream(seed, i);
            let mut p = omega.clone();
            p.y = TorusPoint::uniform(dim, &mut rng);
            for q in &pool {
                if is_close_checked(&probe, params, &p, q)? {
                    *acc += 1;
                    break;
                }
            }
            Ok(())
        },
        |a, b| a + b,
    )?;
    Ok(DSetEstimate {
        epsilon: params.epsilon,
        n: params.n,
        candidates,
        estimate: Frequency::new(hits, samples),
        lower_bound: true,
    })
}

fn require_zero_mean(tau: &Cocycle, base: &BaseSystem) -> Result<Vec<f64>> {
    let mean = tau.mean(base)?;
    if mean.iter().any(|m| m.abs() > 1e-12) {
        return Err(Error::NotZeroMean { mean });
    }
    Ok(mean)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Omega1Report {
    pub n1: u64,
    pub exponent: f64,
    pub threshold: f64,
    pub estimate: Frequency,
}

/// Default exponent in ‖τ_{n₁}‖ ≥ n₁^{exponent}.
pub const OMEGA1_EXPONENT: f64 = 0.4;

/// μ(‖τ_{n₁}‖ ≥ n₁^{exponent}).
pub fn omega1_frequency(
    tau: &Cocycle,
    base: &BaseSystem,
    n1: u64,
    exponent: f64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Omega1Report> {
    require_zero_mean(tau, base)?;
    if n1 == 0 || samples == 0 || !exponent.is_finite() {
        return invalid("n1 and samples must be positive and the exponent finite");
    }
    let threshold = (n1 as f64).powf(exponent);
    let hits = fold(
        workers,
        samples,
        || 0u64,
        |acc, i| {
            let x = base.sample(&mut stream(seed, i));
            let sum = match tau.fast_sum(base, &x, n1) {
                Some(s) => s,
                None => {
                    let mut walk = CocycleWalk::new(tau, base, x);
                    for _ in 0..n1 {
                        walk.advance();
                    }
                    walk.sum()
                }
            };
            *acc += u64::from(norm(&sum) >= threshold);
            Ok(())
        },
        |a, b| a + b,
    )?;
    Ok(Omega1Report { n1, exponent, threshold, estimate: Frequency::new(hits, samples) })
}

/// Parameters of the good-pair count at level k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodPairParams {
    pub k: u32,
    pub n_prev: u64,
    /// Pairs are drawn from [0, grid_size)².
    pub grid_size: u64,
    /// Lower bound on ‖τ_{(j−i)n}‖/√((j−i)n).
    pub lower: f64,
    /// Upper bound on sup_{r≤n} ‖τ_r‖/√n for each of the two blocks.
    pub upper: f64,
}

impl GoodPairParams {
    /// Thresholds k^{−20}/2 and 2k^{20}.
    pub fn at_level(k: u32, n_prev: u64, grid_size: u64) -> Self {
        let kf = k as f64;
        Self { k, n_prev, grid_size, lower: 0.5 * kf.powi(-20), upper: 2.0 * kf.powi(20) }
    }

    /// Required majority fraction 1 − k^{−9}.
    pub fn majority(&self) -> f64 {
        1.0 - (self.k as f64).powi(-9)
    }

    /// log10 of the full-scale length n_k = (10k)^{100} n_{k−1}.
    pub fn log10_full_scale_n(&self) -> f64 {
        100.0 * (10.0 * self.k as f64).log10() + (self.n_prev as f64).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodPairReport {
    pub params: GoodPairParams,
    pub pairs_per_sample: u64,
    /// Fraction of pairs i < j meeting the lower bound.
    pub lower_fraction: Frequency,
    /// Fraction of blocks meeting the upper bound.
    pub upper_fraction: Frequency,
    /// Fraction of pairs meeting both.
    pub good_fraction: Frequency,
    pub majority: f64,
    /// Share of ω whose lower-bound fraction exceeds the majority.
    pub lower_majority: Frequency,
    /// Share of ω whose upper-bound fraction exceeds the majority.
    pub upper_majority: Frequency,
    pub log10_full_scale_n: f64,
    /// Good pairs per sampled ω.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Default)]
struct PairTally {
    lower: u64,
    upper: u64,
    good: u64,
    lower_major: u64,
    upper_major: u64,
    counts: Vec<u64>,
}

impl PairTally {
    fn merge(mut self, other: Self) -> Self {
        self.lower += other.lower;
        self.upper += other.upper;
        self.good += other.good;
        self.lower_major += other.lower_major;
        self.upper_major += other.upper_major;
        self.counts.extend(other.counts);
        self
    }
}

/// Count the pairs (i, j), i < j < grid_size, for which the block sums
/// ‖τ_{(j−i)n}(σ^{in} ω)‖ are large and the two blocks at i and j have
/// bounded partial sums.
pub fn good_pair_count(
    tau: &Cocycle,
    base: &BaseSystem,
    params: &GoodPairParams,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<GoodPairReport> {
    let GoodPairParams { n_prev: m, grid_size: g, lower, upper, .. } = *params;
    if m == 0 || g < 2 || samples == 0 || params.k == 0 {
        return invalid("good pairs need k >= 1, n_prev >= 1, grid_size >= 2 and samples >= 1");
    }
    if !(lower >= 0.0) || !(upper >= 0.0) {
        return invalid("thresholds must be nonnegative");
    }
    tau.check_base(base)?;
    let d = tau.dim();
    let len = (g * m) as usize;
    let pairs = g * (g - 1) / 2;
    let majority = params.majority();
    let tally = fold(
        workers,
        samples,
        PairTally::default,
        |acc, s| {
            let mut walk = CocycleWalk::new(tau, base, base.sample(&mut stream(seed, s)));
            let mut path = vec![0.0; (len + 1) * d];
            for t in 1..=len {
                walk.advance();
                walk.sum_into(&mut path[t * d..(t + 1) * d]);
            }
            let at = |t: usize| &path[t * d..(t + 1) * d];
            let diff = |a: usize, b: usize| -> f64 {
                let v: Vec<f64> = at(b).iter().zip(at(a)).map(|(x, y)| x - y).collect();
                norm(&v)
            };
            let block_ok: Vec<bool> = (0..g as usize)
                .map(|v| {
                    let start = v * m as usize;
                    (1..=m as usize).map(|r| diff(start, start + r)).fold(0.0, f64::max) <= upper * (m as f64).sqrt()
                })
                .collect();
            let (mut low, mut good) = (0u64, 0u64);
            for i in 0..g as usize {
                for j in i + 1..g as usize {
                    let span = ((j - i) as u64 * m) as f64;
                    let ok = diff(i * m as usize, j * m as usize) >= lower * span.sqrt();
                    low += u64::from(ok);
                    good += u64::from(ok && block_ok[i] && block_ok[j]);
                }
            }
            let up = block_ok.iter().filter(|&&b| b).count() as u64;
            acc.lower += low;
            acc.upper += up;
            acc.good += good;
            acc.lower_major += u64::from(low as f64 > majority * pairs as f64);
            acc.upper_major += u64::from(up as f64 > majority * g as f64);
            acc.counts.push(good);
            Ok(())
        },
        PairTally::merge,
    )?;
    Ok(GoodPairReport {
        params: *params,
        pairs_per_sample: pairs,
        lower_fraction: Frequency::new(tally.lower, pairs * samples),
        upper_fraction: Frequency::new(tally.upper, g * samples),
        good_fraction: Frequency::new(tally.good, pairs * samples),
        majority,
        lower_majority: Frequency::new(tally.lower_major, samples),
        upper_majority: Frequency::new(tally.upper_major, samples),
        log10_full_scale_n: params.log10_full_scale_n(),
        counts: tally.counts,
    })
}
